// Copyright 2026 isax authors. Apache 2.0 License.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "isax/grid.hpp"

namespace isax {

// A single (x, u) pair with optional ground-truth source concatenation.
struct LabeledSample {
  std::vector<double> x;
  long u = 0;
  std::optional<std::vector<double>> s_true;
};

// Column-packed dataset of (x, u) pairs: X is N x nd, labels are 1-based.
struct SampleSet {
  ValueGrid X;
  std::vector<long> u;
  std::optional<ValueGrid> S;  // ground-truth sources, N x nd

  long size() const { return static_cast<long>(u.size()); }
  long width() const { return X.size() == 0 ? 0 : X.cols(); }
  long num_labels() const;  // count of distinct labels
};

// Framed sequences (each T x F) with optional per-sequence class labels
// (e.g. a speaker analog) used by the pooled probe.
struct SequenceSet {
  std::vector<ValueGrid> sequences;
  std::vector<long> seq_labels;  // empty or one per sequence

  long size() const { return static_cast<long>(sequences.size()); }
  long width() const { return sequences.empty() ? 0 : sequences.front().cols(); }
};

// One JSON object per line: {"x": [...], "u": int, "s": [...]} with "s"
// optional.
void write_jsonl(const SampleSet& data, const std::string& path);
SampleSet read_jsonl(const std::string& path);

// One JSON object per line: {"frames": [[...], ...], "label": int} with
// "label" optional.
void write_sequences_jsonl(const SequenceSet& data, const std::string& path);
SequenceSet read_sequences_jsonl(const std::string& path);

}  // namespace isax
