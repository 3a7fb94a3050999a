// Copyright 2026 isax authors. Apache 2.0 License.
#include "isax/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "isax/error.hpp"
#include "isax/hsic.hpp"
#include "isax/synthgen.hpp"

namespace isax {

using nlohmann::json;

namespace {

json record_json(const RunRecord& r, bool with_timing) {
  json j;
  j["step"] = r.step;
  j["loss_total"] = r.loss_total;
  j["loss_apc"] = r.loss_apc;
  j["loss_nce"] = r.loss_nce;
  j["loss_hsic"] = r.loss_hsic;
  if (with_timing) j["wall_ms"] = r.wall_ms;
  return j;
}

}  // namespace

std::string RunLog::canonical_json() const {
  json doc;
  doc["aborted"] = aborted;
  doc["abort_reason"] = abort_reason;
  doc["warnings"] = warnings;
  json recs = json::array();
  for (const RunRecord& r : records) recs.push_back(record_json(r, false));
  doc["records"] = std::move(recs);
  return doc.dump();
}

void RunLog::write_jsonl(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  for (const RunRecord& r : records) out << record_json(r, true).dump() << "\n";
  if (aborted) out << json{{"aborted", true}, {"reason", abort_reason}}.dump() << "\n";
  if (!out) throw Error("write failure: " + path);
}

ModelBundle build_model(const TrainingConfig& cfg, long input_width, long num_labels) {
  cfg.validate();
  ModelBundle model;
  model.objective = cfg.objective;
  model.num_labels = num_labels;
  model.tau = cfg.tau;
  model.gamma = cfg.gamma;

  model.enc.n = cfg.n;
  model.enc.d = cfg.d;
  model.enc.input_width = input_width;
  model.enc.kind = cfg.objective == Objective::nce_hsic ? BackboneKind::feed_forward
                                                        : BackboneKind::recurrent;
  model.enc.hidden_widths =
      cfg.encoder_hidden.empty() ? std::vector<long>{cfg.n * cfg.d} : cfg.encoder_hidden;
  model.enc.recurrent_layers = cfg.recurrent_layers;

  if (cfg.objective != Objective::apc) {
    model.bank.n = cfg.n;
    model.bank.d = cfg.d;
    model.bank.p = num_labels;
    model.bank.widths = cfg.psi_hidden;
    model.has_bank = true;
  }
  if (cfg.objective != Objective::nce_hsic) {
    model.head.hidden_width = cfg.n * cfg.d;
    model.head.feature_width = input_width;
    model.has_head = true;
  }
  return model;
}

void init_model(const ModelBundle& model, ParamStore& store, Rng& rng) {
  model.enc.init(store, rng);
  if (model.has_bank) model.bank.init(store, rng);
  if (model.has_head) model.head.init(store, rng);
}

namespace {

const char* backbone_name(BackboneKind k) {
  return k == BackboneKind::feed_forward ? "feed_forward" : "recurrent";
}

const char* objective_name(Objective o) {
  switch (o) {
    case Objective::nce_hsic: return "nce_hsic";
    case Objective::apc: return "apc";
    default: return "anh";
  }
}

Objective objective_from_name(const std::string& s) {
  if (s == "nce_hsic") return Objective::nce_hsic;
  if (s == "apc") return Objective::apc;
  if (s == "anh") return Objective::anh;
  throw Error("unknown objective in checkpoint: " + s);
}

}  // namespace

void save_checkpoint(const ModelBundle& model, const ParamStore& store,
                     const std::string& path) {
  json arch;
  arch["objective"] = objective_name(model.objective);
  arch["backbone"] = backbone_name(model.enc.kind);
  arch["n"] = model.enc.n;
  arch["d"] = model.enc.d;
  arch["input_width"] = model.enc.input_width;
  arch["encoder_hidden"] = model.enc.hidden_widths;
  arch["recurrent_layers"] = model.enc.recurrent_layers;
  arch["psi_hidden"] = model.bank.widths;
  arch["has_bank"] = model.has_bank;
  arch["has_head"] = model.has_head;
  arch["num_labels"] = model.num_labels;
  arch["tau"] = model.tau;
  arch["gamma"] = model.gamma;

  json doc;
  doc["version"] = 1;
  doc["arch"] = std::move(arch);
  doc["params"] = json::parse(store.to_json());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << doc.dump();
  if (!out) throw Error("write failure: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("checkpoint parse failure: ") + e.what());
  }
  if (doc.value("version", 0) != 1) throw Error("unsupported checkpoint version");
  const json& arch = doc.at("arch");

  Checkpoint ck;
  ck.model.objective = objective_from_name(arch.at("objective").get<std::string>());
  ck.model.enc.kind = arch.at("backbone").get<std::string>() == "recurrent"
                          ? BackboneKind::recurrent
                          : BackboneKind::feed_forward;
  ck.model.enc.n = arch.at("n").get<long>();
  ck.model.enc.d = arch.at("d").get<long>();
  ck.model.enc.input_width = arch.at("input_width").get<long>();
  ck.model.enc.hidden_widths = arch.at("encoder_hidden").get<std::vector<long>>();
  ck.model.enc.recurrent_layers = arch.at("recurrent_layers").get<long>();
  ck.model.has_bank = arch.at("has_bank").get<bool>();
  ck.model.has_head = arch.at("has_head").get<bool>();
  ck.model.num_labels = arch.at("num_labels").get<long>();
  ck.model.tau = arch.at("tau").get<long>();
  ck.model.gamma = arch.value("gamma", 30L);
  ck.model.bank.n = ck.model.enc.n;
  ck.model.bank.d = ck.model.enc.d;
  ck.model.bank.p = ck.model.num_labels;
  ck.model.bank.widths = arch.at("psi_hidden").get<std::vector<long>>();
  ck.model.head.hidden_width = ck.model.enc.n * ck.model.enc.d;
  ck.model.head.feature_width = ck.model.enc.input_width;
  ck.params = ParamStore::from_json(doc.at("params").dump());
  return ck;
}

std::vector<long> make_pairs(const std::vector<long>& u, long negatives_per_positive,
                             Rng& rng) {
  if (negatives_per_positive < 1)
    throw SpecError("make_pairs: needs at least one negative per positive");
  std::set<long> distinct_set(u.begin(), u.end());
  if (distinct_set.size() < 2)
    throw SpecError("make_pairs: batch has a single distinct auxiliary value");
  std::vector<long> distinct(distinct_set.begin(), distinct_set.end());
  const long D = static_cast<long>(distinct.size());
  std::vector<long> out;
  out.reserve(u.size() * static_cast<std::size_t>(negatives_per_positive));
  for (long pos : u) {
    for (long k = 0; k < negatives_per_positive; ++k) {
      // Uniform over the D-1 labels that differ from the positive.
      long idx = static_cast<long>(rng.index(static_cast<std::uint64_t>(D - 1)));
      long candidate = distinct[static_cast<std::size_t>(idx)];
      if (candidate == pos) candidate = distinct[static_cast<std::size_t>(D - 1)];
      out.push_back(candidate);
    }
  }
  return out;
}

namespace {

struct StepOutcome {
  double total = 0.0, apc = 0.0, nce = 0.0, hsic = 0.0;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Shared loop skeleton: per-epoch shuffling, step budget, NaN abort,
// checkpoint cadence.
template <typename StepFn>
TrainResult run_loop(const TrainingConfig& cfg, const ModelBundle& model, long num_items,
                     long batch_size, const TrainOptions& opts, StepFn&& step_fn) {
  TrainResult result;
  result.model = model;
  Rng init_rng = Rng(cfg.seed).split(0);
  Rng shuffle_rng = Rng(cfg.seed).split(1);
  Rng negative_rng = Rng(cfg.seed).split(2);

  init_model(model, result.params, init_rng);
  ParamStore last_good = result.params;

  long step = 0;
  bool stop = false;
  for (long epoch = 0; epoch < cfg.epochs && !stop; ++epoch) {
    std::vector<long> order(static_cast<std::size_t>(num_items));
    std::iota(order.begin(), order.end(), 0L);
    shuffle_rng.shuffle(order);
    for (long b0 = 0; b0 < num_items && !stop; b0 += batch_size) {
      const long b1 = std::min(num_items, b0 + batch_size);
      std::vector<long> batch(order.begin() + b0, order.begin() + b1);
      Stopwatch watch;
      StepOutcome outcome;
      try {
        bool used = step_fn(batch, negative_rng, result.params, outcome);
        if (!used) {
          result.log.warnings.push_back("skipped batch at step " + std::to_string(step + 1) +
                                        ": single distinct auxiliary value");
          continue;
        }
      } catch (const NumericError& e) {
        result.log.aborted = true;
        result.log.abort_reason = e.what();
        result.params = last_good;
        stop = true;
        break;
      }
      ++step;
      RunRecord rec;
      rec.step = step;
      rec.loss_total = outcome.total;
      rec.loss_apc = outcome.apc;
      rec.loss_nce = outcome.nce;
      rec.loss_hsic = outcome.hsic;
      rec.wall_ms = watch.ms();
      result.log.records.push_back(rec);
      last_good = result.params;
      if (!opts.checkpoint_stem.empty() && cfg.checkpoint_every > 0 &&
          step % cfg.checkpoint_every == 0)
        save_checkpoint(model, result.params, opts.checkpoint_stem + "_step" +
                                                  std::to_string(step) + ".json");
      if (cfg.max_steps > 0 && step >= cfg.max_steps) stop = true;
    }
  }
  if (!opts.checkpoint_stem.empty())
    save_checkpoint(model, result.params, opts.checkpoint_stem + "_final.json");
  if (!opts.runlog_path.empty()) result.log.write_jsonl(opts.runlog_path);
  return result;
}

}  // namespace

TrainResult train(const TrainingConfig& cfg, const SampleSet& data, const TrainOptions& opts) {
  cfg.validate();
  if (cfg.objective != Objective::nce_hsic)
    throw ConfigError("sample datasets train the nce_hsic objective; sequences train apc/anh");
  if (data.size() == 0) throw SpecError("train: empty dataset");
  long num_labels = 0;
  for (long v : data.u) num_labels = std::max(num_labels, v);
  ModelBundle model = build_model(cfg, data.width(), num_labels);

  auto step_fn = [&](const std::vector<long>& batch, Rng& neg_rng, ParamStore& store,
                     StepOutcome& outcome) -> bool {
    const long B = static_cast<long>(batch.size());
    ValueGrid X = ValueGrid::matrix(B, data.width());
    std::vector<long> u(static_cast<std::size_t>(B));
    for (long i = 0; i < B; ++i) {
      const long src = batch[static_cast<std::size_t>(i)];
      for (long c = 0; c < data.width(); ++c) X.at(i, c) = data.X.at(src, c);
      u[static_cast<std::size_t>(i)] = data.u[static_cast<std::size_t>(src)];
    }
    std::vector<long> negatives;
    try {
      negatives = make_pairs(u, cfg.negatives_per_positive, neg_rng);
    } catch (const SpecError&) {
      return false;  // single distinct label; skip the batch
    }
    Tape tape;
    ParamBinding binding(tape, store);
    Var x = tape.input(std::move(X));
    NceHsicResult loss = nce_hsic_loss(tape, binding, model.enc, model.bank, x, u,
                                       negatives, num_labels, cfg.lambda,
                                       cfg.loss_variant, cfg.score_clamp);
    if (!std::isfinite(tape.scalar_value(loss.total)))
      throw NumericError("non-finite training loss");
    store.zero_grads();
    tape.backward(loss.total);
    binding.accumulate_grads();
    adam_step(store, cfg.adam);
    outcome.total = tape.scalar_value(loss.total);
    outcome.nce = tape.scalar_value(loss.nce);
    outcome.hsic = loss.hsic.valid() ? tape.scalar_value(loss.hsic) : 0.0;
    return true;
  };

  return run_loop(cfg, model, data.size(), cfg.batch_size, opts, step_fn);
}

TrainResult train(const TrainingConfig& cfg, const SequenceSet& data, const TrainOptions& opts) {
  cfg.validate();
  if (cfg.objective == Objective::nce_hsic)
    throw ConfigError("the nce_hsic objective trains on sample datasets, not sequences");
  if (data.size() == 0) throw SpecError("train: empty dataset");
  long max_T = 0;
  for (const ValueGrid& seq : data.sequences) max_T = std::max(max_T, seq.rows());
  const long num_labels = (max_T + cfg.gamma - 1) / cfg.gamma;
  ModelBundle model = build_model(cfg, data.width(), num_labels);

  auto step_fn = [&](const std::vector<long>& batch, Rng& neg_rng, ParamStore& store,
                     StepOutcome& outcome) -> bool {
    Tape tape;
    ParamBinding binding(tape, store);
    std::vector<Var> seqs;
    std::vector<long> lengths;
    for (long idx : batch) {
      const ValueGrid& seq = data.sequences[static_cast<std::size_t>(idx)];
      seqs.push_back(tape.input(seq));
      lengths.push_back(seq.rows());
    }
    std::vector<long> negatives;
    if (cfg.objective == Objective::anh) {
      std::vector<long> labels = pooled_frame_labels(lengths, cfg.gamma);
      try {
        negatives = make_pairs(labels, cfg.negatives_per_positive, neg_rng);
      } catch (const SpecError&) {
        return false;
      }
    }
    TrainingConfig step_cfg = cfg;
    if (cfg.objective == Objective::apc) step_cfg.beta = 0.0;
    AnhResult loss = anh_loss(tape, binding, model.enc, model.bank, model.head, seqs,
                              step_cfg, negatives);
    if (!std::isfinite(tape.scalar_value(loss.total)))
      throw NumericError("non-finite training loss");
    store.zero_grads();
    tape.backward(loss.total);
    binding.accumulate_grads();
    adam_step(store, cfg.adam);
    outcome.total = tape.scalar_value(loss.total);
    outcome.apc = tape.scalar_value(loss.apc);
    outcome.nce = loss.nce.valid() ? tape.scalar_value(loss.nce) : 0.0;
    outcome.hsic = loss.hsic.valid() ? tape.scalar_value(loss.hsic) : 0.0;
    return true;
  };

  return run_loop(cfg, model, data.size(), cfg.seq_batch_size, opts, step_fn);
}

namespace {

struct AuditFixture {
  ParamStore store;
  SubspaceEncoder ff_enc;       // feed-forward pieces
  DiscriminatorBank bank;
  SubspaceEncoder rec_enc;      // recurrent pieces
  DiscriminatorBank seq_bank;
  PredictorHead head;
  ValueGrid X;                  // N x nd samples
  std::vector<long> u;
  std::vector<long> negatives;
  ValueGrid sequence;           // T x nd
  std::vector<long> frame_negatives;
  std::vector<double> ff_bandwidths;
  std::vector<double> seq_bandwidths;
  TrainingConfig cfg;
};

AuditFixture build_audit_fixture(std::uint64_t seed) {
  AuditFixture fx;
  const long n = 2, d = 2, N = 8;
  Rng rng(seed);

  fx.cfg.n = n;
  fx.cfg.d = d;
  fx.cfg.tau = 2;
  fx.cfg.gamma = 2;
  fx.cfg.lambda = 0.02;
  fx.cfg.beta = 0.1;
  fx.cfg.negatives_per_positive = 2;
  fx.cfg.score_clamp = 30.0;

  GaussianSegmentSpec spec = GaussianSegmentSpec::random(n, d, 4, rng);
  std::vector<long> labels = assign_auxiliary(N, 2);  // 4 segments of length 2
  ValueGrid S = sample_sources(spec, labels, rng);
  MixingFunction mix = make_mixing(n * d, 2, 10.0, rng);
  fx.X = mix.apply(S);
  fx.u = labels;

  fx.ff_enc.n = n;
  fx.ff_enc.d = d;
  fx.ff_enc.input_width = n * d;
  fx.ff_enc.hidden_widths = {6};
  fx.bank.n = n;
  fx.bank.d = d;
  fx.bank.p = 4;
  fx.bank.widths = {8, 8, 8};
  fx.ff_enc.prefix = "ffenc";
  fx.bank.prefix = "ffpsi";
  fx.ff_enc.init(fx.store, rng);
  fx.bank.init(fx.store, rng);

  fx.rec_enc.n = n;
  fx.rec_enc.d = d;
  fx.rec_enc.input_width = n * d;
  fx.rec_enc.kind = BackboneKind::recurrent;
  fx.rec_enc.prefix = "recenc";
  fx.seq_bank = fx.bank;
  fx.seq_bank.prefix = "recpsi";
  fx.head.hidden_width = n * d;
  fx.head.feature_width = n * d;
  fx.rec_enc.init(fx.store, rng);
  fx.seq_bank.init(fx.store, rng);
  fx.head.init(fx.store, rng);

  fx.sequence = fx.X;  // reuse the 8 frames as one sequence
  Rng neg_rng = rng.split(11);
  fx.negatives = make_pairs(fx.u, fx.cfg.negatives_per_positive, neg_rng);
  fx.frame_negatives = make_pairs(pooled_frame_labels({N}, fx.cfg.gamma),
                                  fx.cfg.negatives_per_positive, neg_rng);

  // Freeze HSIC bandwidths at the initial parameters so every probe
  // differentiates the same function.
  auto freeze = [&](const SubspaceEncoder& enc, const ValueGrid& input) {
    Tape tape;
    ParamBinding binding(tape, fx.store);
    Var x = tape.input(input);
    Var y = enc.encode(tape, binding, x);
    std::vector<double> out;
    for (long i = 0; i < n; ++i)
      out.push_back(median_bandwidth(tape.value(enc.subspace(tape, y, i))));
    return out;
  };
  fx.ff_bandwidths = freeze(fx.ff_enc, fx.X);
  fx.seq_bandwidths = freeze(fx.rec_enc, fx.sequence);
  return fx;
}

}  // namespace

AuditReport gradient_audit(double tolerance, std::uint64_t seed) {
  AuditFixture fx = build_audit_fixture(seed);
  Rng coord_rng(seed + 1);
  AuditReport report;
  report.pass = true;

  auto run_check = [&](const std::string& name, const std::function<double()>& loss_fn) {
    FiniteDiffReport fd = finite_diff_check(loss_fn, fx.store, 1e-5, 80, coord_rng);
    AuditEntry entry;
    entry.name = name;
    entry.max_rel_error = fd.max_rel_error;
    entry.worst_param = fd.worst_param;
    entry.pass = fd.max_rel_error <= tolerance;
    report.pass = report.pass && entry.pass;
    report.entries.push_back(entry);
  };

  run_check("apc_loss", [&]() {
    Tape tape;
    ParamBinding binding(tape, fx.store);
    Var seq = tape.input(fx.sequence);
    Var preds = predict_ahead(tape, binding, fx.rec_enc, fx.head, seq, fx.cfg.tau);
    Var loss = apc_loss(tape, preds, seq, fx.cfg.tau);
    tape.backward(loss);
    binding.accumulate_grads();
    return tape.scalar_value(loss);
  });

  run_check("nce_loss_difference", [&]() {
    Tape tape;
    ParamBinding binding(tape, fx.store);
    Var x = tape.input(fx.X);
    NceResult res = nce_loss(tape, binding, fx.ff_enc, fx.bank, x, fx.u, fx.negatives, 4,
                             LossVariant::paper_difference, fx.cfg.score_clamp);
    tape.backward(res.loss);
    binding.accumulate_grads();
    return tape.scalar_value(res.loss);
  });

  run_check("nce_loss_logistic", [&]() {
    Tape tape;
    ParamBinding binding(tape, fx.store);
    Var x = tape.input(fx.X);
    NceResult res = nce_loss(tape, binding, fx.ff_enc, fx.bank, x, fx.u, fx.negatives, 4,
                             LossVariant::logistic, 0.0);
    tape.backward(res.loss);
    binding.accumulate_grads();
    return tape.scalar_value(res.loss);
  });

  run_check("hsic_penalty", [&]() {
    Tape tape;
    ParamBinding binding(tape, fx.store);
    Var x = tape.input(fx.X);
    Var y = fx.ff_enc.encode(tape, binding, x);
    std::vector<Var> subs;
    for (long i = 0; i < fx.ff_enc.n; ++i) subs.push_back(fx.ff_enc.subspace(tape, y, i));
    Var loss = hsic_penalty_var(tape, subs, fx.ff_bandwidths);
    tape.backward(loss);
    binding.accumulate_grads();
    return tape.scalar_value(loss);
  });

  run_check("anh_loss", [&]() {
    Tape tape;
    ParamBinding binding(tape, fx.store);
    std::vector<Var> seqs = {tape.input(fx.sequence)};
    AnhResult res = anh_loss(tape, binding, fx.rec_enc, fx.seq_bank, fx.head, seqs, fx.cfg,
                             fx.frame_negatives, fx.seq_bandwidths);
    tape.backward(res.total);
    binding.accumulate_grads();
    return tape.scalar_value(res.total);
  });

  return report;
}

}  // namespace isax
