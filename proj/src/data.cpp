// Copyright 2026 isax authors. Apache 2.0 License.
#include "isax/data.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "isax/error.hpp"

namespace isax {

using nlohmann::json;

long SampleSet::num_labels() const {
  std::set<long> distinct(u.begin(), u.end());
  return static_cast<long>(distinct.size());
}

void write_jsonl(const SampleSet& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  const long N = data.size();
  const long w = data.width();
  for (long i = 0; i < N; ++i) {
    json rec;
    std::vector<double> x(static_cast<std::size_t>(w));
    for (long c = 0; c < w; ++c) x[static_cast<std::size_t>(c)] = data.X.at(i, c);
    rec["x"] = std::move(x);
    rec["u"] = data.u[static_cast<std::size_t>(i)];
    if (data.S) {
      std::vector<double> s(static_cast<std::size_t>(w));
      for (long c = 0; c < w; ++c) s[static_cast<std::size_t>(c)] = data.S->at(i, c);
      rec["s"] = std::move(s);
    }
    out << rec.dump() << "\n";
  }
  if (!out) throw Error("write failure: " + path);
}

SampleSet read_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path);
  std::vector<std::vector<double>> xs, ss;
  std::vector<long> us;
  bool any_s = false;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw Error("bad dataset record at line " + std::to_string(lineno) + ": " + e.what());
    }
    xs.push_back(rec.at("x").get<std::vector<double>>());
    us.push_back(rec.at("u").get<long>());
    if (rec.contains("s")) {
      ss.push_back(rec.at("s").get<std::vector<double>>());
      any_s = true;
    } else {
      ss.emplace_back();
    }
  }
  if (xs.empty()) throw Error("empty dataset: " + path);
  const long N = static_cast<long>(xs.size());
  const long w = static_cast<long>(xs.front().size());
  SampleSet data;
  data.X = ValueGrid::matrix(N, w);
  data.u = std::move(us);
  for (long i = 0; i < N; ++i) {
    if (static_cast<long>(xs[static_cast<std::size_t>(i)].size()) != w)
      throw Error("ragged x rows in dataset: " + path);
    for (long c = 0; c < w; ++c) data.X.at(i, c) = xs[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
  }
  if (any_s) {
    ValueGrid S = ValueGrid::matrix(N, w);
    for (long i = 0; i < N; ++i) {
      const auto& row = ss[static_cast<std::size_t>(i)];
      if (static_cast<long>(row.size()) != w)
        throw Error("dataset mixes records with and without ground-truth sources: " + path);
      for (long c = 0; c < w; ++c) S.at(i, c) = row[static_cast<std::size_t>(c)];
    }
    data.S = std::move(S);
  }
  return data;
}

void write_sequences_jsonl(const SequenceSet& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  for (long i = 0; i < data.size(); ++i) {
    const ValueGrid& seq = data.sequences[static_cast<std::size_t>(i)];
    json frames = json::array();
    for (long t = 0; t < seq.rows(); ++t) {
      std::vector<double> frame(static_cast<std::size_t>(seq.cols()));
      for (long c = 0; c < seq.cols(); ++c) frame[static_cast<std::size_t>(c)] = seq.at(t, c);
      frames.push_back(std::move(frame));
    }
    json rec;
    rec["frames"] = std::move(frames);
    if (!data.seq_labels.empty()) rec["label"] = data.seq_labels[static_cast<std::size_t>(i)];
    out << rec.dump() << "\n";
  }
  if (!out) throw Error("write failure: " + path);
}

SequenceSet read_sequences_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path);
  SequenceSet data;
  std::string line;
  long lineno = 0;
  bool any_label = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw Error("bad sequence record at line " + std::to_string(lineno) + ": " + e.what());
    }
    const auto& frames = rec.at("frames");
    if (frames.empty()) throw Error("empty sequence at line " + std::to_string(lineno));
    const long T = static_cast<long>(frames.size());
    const long F = static_cast<long>(frames.front().size());
    ValueGrid seq = ValueGrid::matrix(T, F);
    for (long t = 0; t < T; ++t) {
      const auto row = frames.at(static_cast<std::size_t>(t)).get<std::vector<double>>();
      if (static_cast<long>(row.size()) != F)
        throw Error("ragged frames at line " + std::to_string(lineno));
      for (long c = 0; c < F; ++c) seq.at(t, c) = row[static_cast<std::size_t>(c)];
    }
    data.sequences.push_back(std::move(seq));
    if (rec.contains("label")) {
      data.seq_labels.push_back(rec.at("label").get<long>());
      any_label = true;
    } else {
      data.seq_labels.push_back(0);
    }
  }
  if (data.sequences.empty()) throw Error("empty sequence dataset: " + path);
  if (!any_label) data.seq_labels.clear();
  return data;
}

}  // namespace isax
