// Copyright 2026 isax authors. Apache 2.0 License.
#pragma once

#include <string>
#include <vector>

#include "isax/data.hpp"
#include "isax/objectives.hpp"

namespace isax {

struct RunRecord {
  long step = 0;
  double loss_total = 0.0;
  double loss_apc = 0.0;
  double loss_nce = 0.0;
  double loss_hsic = 0.0;
  double wall_ms = 0.0;
};

struct RunLog {
  std::vector<RunRecord> records;
  bool aborted = false;
  std::string abort_reason;
  std::vector<std::string> warnings;

  // Deterministic serialization: every field except wall-clock timing, which
  // can never be bit-identical across runs.
  std::string canonical_json() const;
  // Full JSON-lines dump, one record per line, timing included.
  void write_jsonl(const std::string& path) const;
};

// Model pieces assembled from a TrainingConfig.
struct ModelBundle {
  SubspaceEncoder enc;
  DiscriminatorBank bank;
  PredictorHead head;
  bool has_bank = false;
  bool has_head = false;
  Objective objective = Objective::nce_hsic;
  long num_labels = 0;
  long tau = 0;
  long gamma = 0;
};

ModelBundle build_model(const TrainingConfig& cfg, long input_width, long num_labels);
void init_model(const ModelBundle& model, ParamStore& store, Rng& rng);

// Checkpoint = architecture descriptor + the parameter document.
void save_checkpoint(const ModelBundle& model, const ParamStore& store,
                     const std::string& path);
struct Checkpoint {
  ModelBundle model;
  ParamStore params;
};
Checkpoint load_checkpoint(const std::string& path);

// Each sample in `u` receives exactly `negatives_per_positive` labels drawn
// uniformly from the other distinct labels present in the batch. Throws
// SpecError when the batch has fewer than two distinct labels.
std::vector<long> make_pairs(const std::vector<long>& u, long negatives_per_positive,
                             Rng& rng);

struct TrainOptions {
  std::string runlog_path;      // empty = keep in memory only
  std::string checkpoint_stem;  // empty = no checkpoint files
};

struct TrainResult {
  ParamStore params;
  RunLog log;
  ModelBundle model;
};

// Shuffled mini-batch training of the configured objective. Deterministic
// given (config, dataset): data order, initialization and negative sampling
// all derive from config.seed. A non-finite loss aborts the run and the
// returned parameters are the last finite ones.
TrainResult train(const TrainingConfig& cfg, const SampleSet& data,
                  const TrainOptions& opts = {});
TrainResult train(const TrainingConfig& cfg, const SequenceSet& data,
                  const TrainOptions& opts = {});

struct AuditEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::string worst_param;
  bool pass = false;
};

struct AuditReport {
  std::vector<AuditEntry> entries;
  bool pass = false;
};

// Finite-difference audit of every loss component and the fused objective on
// a tiny built-in fixture (n=2, d=2, N=8). Bandwidths and negative pairs are
// frozen inside each probe so the differentiated function is exactly the
// one being re-evaluated.
AuditReport gradient_audit(double tolerance = 1e-4, std::uint64_t seed = 7);

}  // namespace isax
