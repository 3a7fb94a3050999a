// Copyright 2026 isax authors. Apache 2.0 License.
#include "isax/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "isax/data.hpp"
#include "isax/error.hpp"
#include "isax/eval.hpp"
#include "isax/hsic.hpp"
#include "isax/speechio.hpp"
#include "isax/synthgen.hpp"
#include "isax/toml_lite.hpp"
#include "isax/trainer.hpp"

namespace isax::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kVersion = "isax " ISAX_VERSION_STRING;

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

int cmd_synth(const std::string& config_path, const std::string& out_override) {
  TomlTable cfg = parse_toml_file(config_path);
  const std::string mode = cfg.get_string("synth.mode", "samples");
  const long n = cfg.get_int("synth.n");
  const long d = cfg.get_int("synth.d");
  const long segments = cfg.get_int("synth.segments");
  const long depth = cfg.get_int("synth.mixing_depth", 2);
  const double kappa = cfg.get_double("synth.kappa_max", 10.0);
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("synth.seed", 1));
  const double mu_lo = cfg.get_double("synth.mu_lo", -3.0);
  const double mu_hi = cfg.get_double("synth.mu_hi", 3.0);
  const double var_lo = cfg.get_double("synth.var_lo", 0.1);
  const double var_hi = cfg.get_double("synth.var_hi", 2.0);
  std::string outdir = cfg.get_string("synth.outdir", "synth_out");
  long samples = 0, num_sequences = 0, frames = 0, gamma = 0;
  if (mode == "samples") {
    samples = cfg.get_int("synth.samples");
  } else if (mode == "sequences") {
    num_sequences = cfg.get_int("synth.num_sequences");
    frames = cfg.get_int("synth.frames_per_sequence");
    gamma = cfg.get_int("synth.gamma", 30);
  } else {
    throw ConfigError("synth.mode must be 'samples' or 'sequences'");
  }
  cfg.require_all_consumed("synth config");
  if (!out_override.empty()) outdir = out_override;
  fs::create_directories(outdir);

  Rng root(seed);
  Rng spec_rng = root.split(0);
  Rng mix_rng = root.split(1);
  Rng sample_rng = root.split(2);
  Rng probe_rng = root.split(3);

  GaussianSegmentSpec spec =
      GaussianSegmentSpec::random(n, d, segments, spec_rng, mu_lo, mu_hi, var_lo, var_hi);
  MixingFunction mix = make_mixing(n * d, depth, kappa, mix_rng);

  // Probe the separability condition of the generated spec.
  ConditionalSourceModel model = gaussian_model(spec);
  long separable_hits = 0;
  const long probes = 20;
  if (segments >= 2 * n * d + 1) {
    for (long t = 0; t < probes; ++t) {
      ValueGrid s({n * d});
      ValueGrid z({d});
      for (long i = 0; i < s.size(); ++i) s.at(i) = probe_rng.normal();
      for (long i = 0; i < z.size(); ++i) z.at(i) = probe_rng.normal();
      std::vector<long> u_list;
      std::vector<long> all(static_cast<std::size_t>(segments));
      for (long j = 0; j < segments; ++j) all[static_cast<std::size_t>(j)] = j + 1;
      probe_rng.shuffle(all);
      u_list.assign(all.begin(), all.begin() + 2 * n * d + 1);
      if (check_separability(model, s, z, u_list, 1e-8).separable) ++separable_hits;
    }
  }

  json meta;
  meta["version"] = kVersion;
  meta["mode"] = mode;
  meta["n"] = n;
  meta["d"] = d;
  meta["segments"] = segments;
  meta["mixing_depth"] = depth;
  meta["kappa_max"] = kappa;
  meta["seed"] = seed;
  meta["mu_range"] = {mu_lo, mu_hi};
  meta["var_range"] = {var_lo, var_hi};
  meta["separability_probes"] = probes;
  meta["separability_hits"] = separable_hits;

  if (mode == "samples") {
    const long per_segment = (samples + segments - 1) / segments;
    std::vector<long> labels = assign_auxiliary(samples, per_segment);
    ValueGrid S = sample_sources(spec, labels, sample_rng);
    SampleSet data;
    data.X = mix.apply(S);
    data.S = S;
    data.u = labels;
    write_jsonl(data, (fs::path(outdir) / "dataset.jsonl").string());
    meta["samples"] = samples;
    meta["samples_per_segment"] = per_segment;
  } else {
    SequenceSet data;
    for (long q = 0; q < num_sequences; ++q) {
      std::vector<long> labels = assign_auxiliary(frames, gamma);
      for (long& l : labels) l = ((l - 1) % segments) + 1;  // wrap into the spec's labels
      ValueGrid S = sample_sources(spec, labels, sample_rng);
      data.sequences.push_back(mix.apply(S));
    }
    write_sequences_jsonl(data, (fs::path(outdir) / "dataset.jsonl").string());
    meta["num_sequences"] = num_sequences;
    meta["frames_per_sequence"] = frames;
    meta["gamma"] = gamma;
  }

  std::ofstream mf((fs::path(outdir) / "metadata.json").string(), std::ios::binary);
  mf << meta.dump(2) << "\n";
  std::cout << "wrote " << outdir << "/dataset.jsonl (" << mode << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

TrainingConfig training_config_from(const TomlTable& cfg) {
  TrainingConfig tc;
  const std::string objective = cfg.get_string("train.objective", "nce_hsic");
  if (objective == "nce_hsic") tc.objective = Objective::nce_hsic;
  else if (objective == "apc") tc.objective = Objective::apc;
  else if (objective == "anh") tc.objective = Objective::anh;
  else throw ConfigError("train.objective must be nce_hsic, apc or anh");
  tc.lambda = cfg.get_double("train.lambda", 0.02);
  tc.beta = cfg.get_double("train.beta", 0.1);
  tc.tau = cfg.get_int("train.tau", 5);
  tc.gamma = cfg.get_int("train.gamma", 30);
  tc.n = cfg.get_int("train.n", 4);
  tc.d = cfg.get_int("train.d", 4);
  tc.negatives_per_positive = cfg.get_int("train.negatives", 5);
  tc.adam.lr = cfg.get_double("train.lr", 1e-3);
  tc.adam.beta1 = cfg.get_double("train.adam_beta1", 0.9);
  tc.adam.beta2 = cfg.get_double("train.adam_beta2", 0.999);
  tc.adam.eps = cfg.get_double("train.adam_eps", 1e-8);
  tc.seed = static_cast<std::uint64_t>(cfg.get_int("train.seed", 1));
  const std::string variant = cfg.get_string("train.loss_variant", "paper_difference");
  if (variant == "paper_difference") tc.loss_variant = LossVariant::paper_difference;
  else if (variant == "logistic") tc.loss_variant = LossVariant::logistic;
  else throw ConfigError("train.loss_variant must be paper_difference or logistic");
  tc.epochs = cfg.get_int("train.epochs", 20);
  tc.batch_size = cfg.get_int("train.batch_size", 256);
  tc.seq_batch_size = cfg.get_int("train.seq_batch_size", 8);
  tc.max_steps = cfg.get_int("train.max_steps", 0);
  tc.checkpoint_every = cfg.get_int("train.checkpoint_every", 500);
  tc.score_clamp = cfg.get_double("train.score_clamp", 30.0);
  tc.encoder_hidden = cfg.get_int_array("train.encoder_hidden", {});
  tc.recurrent_layers = cfg.get_int("train.recurrent_layers", 1);
  tc.psi_hidden = cfg.get_int_array("train.psi_hidden", {64, 64, 64});
  return tc;
}

int cmd_train(const std::string& config_path, const std::string& out_override) {
  TomlTable cfg = parse_toml_file(config_path);
  const std::string data_path = cfg.get_string("train.data");
  const std::string data_kind = cfg.get_string("train.data_kind", "samples");
  std::string outdir = cfg.get_string("train.outdir", "train_out");
  TrainingConfig tc = training_config_from(cfg);
  cfg.require_all_consumed("train config");
  tc.validate();
  if (!out_override.empty()) outdir = out_override;
  fs::create_directories(outdir);

  TrainOptions opts;
  opts.runlog_path = (fs::path(outdir) / "runlog.jsonl").string();
  opts.checkpoint_stem = (fs::path(outdir) / "checkpoint").string();

  TrainResult result;
  if (data_kind == "samples") {
    result = train(tc, read_jsonl(data_path), opts);
  } else if (data_kind == "sequences") {
    result = train(tc, read_sequences_jsonl(data_path), opts);
  } else {
    throw ConfigError("train.data_kind must be 'samples' or 'sequences'");
  }
  if (result.log.aborted) {
    std::cerr << "training aborted: " << result.log.abort_reason << "\n";
    return 1;
  }
  std::cout << "trained " << result.log.records.size() << " steps; final loss "
            << (result.log.records.empty() ? 0.0 : result.log.records.back().loss_total)
            << "; checkpoints under " << outdir << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

ValueGrid encode_samples(const ModelBundle& model, ParamStore& store, const ValueGrid& X) {
  Tape tape;
  ParamBinding binding(tape, store);
  Var x = tape.input(X);
  Var y = model.enc.encode(tape, binding, x);
  return tape.value(y);
}

// Deterministic subsample of rows for the O(N^2) HSIC metric.
ValueGrid subsample_rows(const ValueGrid& Y, long cap) {
  if (Y.rows() <= cap) return Y;
  const double stride = static_cast<double>(Y.rows()) / static_cast<double>(cap);
  ValueGrid out = ValueGrid::matrix(cap, Y.cols());
  for (long i = 0; i < cap; ++i) {
    const long src = static_cast<long>(static_cast<double>(i) * stride);
    for (long c = 0; c < Y.cols(); ++c) out.at(i, c) = Y.at(src, c);
  }
  return out;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& data_path,
             const std::string& data_kind, const std::string& out_path,
             std::uint64_t seed, long hsic_cap) {
  Checkpoint ck = load_checkpoint(checkpoint_path);
  json metrics;
  metrics["version"] = kVersion;
  metrics["checkpoint"] = checkpoint_path;
  metrics["data"] = data_path;

  if (data_kind == "samples") {
    SampleSet data = read_jsonl(data_path);
    ValueGrid Y = encode_samples(ck.model, ck.params, data.X);
    const long n = ck.model.enc.n, d = ck.model.enc.d;
    std::vector<ValueGrid> subs = split_subspaces(Y, n, d);

    metrics["pearson_independence"] = pairwise_abs_pearson(subs);

    std::vector<HsicEstimate> pairs;
    std::vector<ValueGrid> capped;
    for (const ValueGrid& s : subs) capped.push_back(subsample_rows(s, hsic_cap));
    const double penalty = hsic_penalty(capped, &pairs);
    metrics["per_pair_hsic"] = json::array();
    for (const HsicEstimate& est : pairs)
      metrics["per_pair_hsic"].push_back({{"j", est.j}, {"k", est.k}, {"value", est.value}});
    metrics["hsic_penalty"] = penalty;

    long classes = 0;
    for (long u : data.u) classes = std::max(classes, u);
    std::vector<long> labels0;
    for (long u : data.u) labels0.push_back(u - 1);
    metrics["probe_accuracy"] = linear_probe(Y, labels0, classes, seed);

    if (data.S) {
      std::vector<ValueGrid> true_subs = split_subspaces(*data.S, n, d);
      MatchReport report = match_subspaces(subs, true_subs);
      // Baseline: the same architecture with fresh random parameters.
      ParamStore random_store;
      Rng rng(seed);
      init_model(ck.model, random_store, rng);
      ValueGrid Yr = encode_samples(ck.model, random_store, data.X);
      MatchReport base = match_subspaces(split_subspaces(Yr, n, d), true_subs);
      report.baseline_score = base.matched_score;
      metrics["matched_score"] = report.matched_score;
      metrics["baseline_score"] = report.baseline_score;
      metrics["ridge_used"] = report.ridge_used;
      json perm = json::array();
      for (long v : report.permutation) perm.push_back(v);
      metrics["permutation"] = std::move(perm);
    } else {
      metrics["matched_score"] = nullptr;
    }
  } else if (data_kind == "sequences") {
    SequenceSet data = read_sequences_jsonl(data_path);
    // Frame features from the recurrent encoder, pooled metrics per sequence.
    std::vector<ValueGrid> encoded;
    for (const ValueGrid& seq : data.sequences) {
      Tape tape;
      ParamBinding binding(tape, ck.params);
      Var s = tape.input(seq);
      encoded.push_back(tape.value(ck.model.enc.encode(tape, binding, s)));
    }
    ValueGrid all = encoded.front();
    {
      long total = 0;
      for (const ValueGrid& e : encoded) total += e.rows();
      ValueGrid stacked = ValueGrid::matrix(total, encoded.front().cols());
      long r0 = 0;
      for (const ValueGrid& e : encoded) {
        for (long r = 0; r < e.rows(); ++r)
          for (long c = 0; c < e.cols(); ++c) stacked.at(r0 + r, c) = e.at(r, c);
        r0 += e.rows();
      }
      all = std::move(stacked);
    }
    const long n = ck.model.enc.n, d = ck.model.enc.d;
    std::vector<ValueGrid> subs = split_subspaces(all, n, d);
    metrics["pearson_independence"] = pairwise_abs_pearson(subs);
    std::vector<HsicEstimate> pairs;
    std::vector<ValueGrid> capped;
    for (const ValueGrid& s : subs) capped.push_back(subsample_rows(s, hsic_cap));
    metrics["hsic_penalty"] = hsic_penalty(capped, &pairs);
    metrics["per_pair_hsic"] = json::array();
    for (const HsicEstimate& est : pairs)
      metrics["per_pair_hsic"].push_back({{"j", est.j}, {"k", est.k}, {"value", est.value}});
    if (!data.seq_labels.empty()) {
      metrics["probe_accuracy"] = pooled_probe(encoded, data.seq_labels, seed);
    } else {
      metrics["probe_accuracy"] = nullptr;
    }
    metrics["matched_score"] = nullptr;
  } else {
    throw ConfigError("--data-kind must be 'samples' or 'sequences'");
  }

  if (out_path.empty()) {
    std::cout << metrics.dump(2) << "\n";
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + out_path);
    out << metrics.dump(2) << "\n";
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// hsic-test
// ---------------------------------------------------------------------------

ValueGrid read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    for (char& c : line)
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (row.empty()) continue;
    if (!rows.empty() && rows.front().size() != row.size())
      throw Error("ragged CSV at line " + std::to_string(lineno) + " in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error("empty CSV: " + path);
  ValueGrid out = ValueGrid::matrix(static_cast<long>(rows.size()),
                                    static_cast<long>(rows.front().size()));
  for (long r = 0; r < out.rows(); ++r)
    for (long c = 0; c < out.cols(); ++c)
      out.at(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return out;
}

int cmd_hsic_test(const std::string& path_x, const std::string& path_y, long permutations,
                  std::uint64_t seed) {
  ValueGrid X = read_csv_matrix(path_x);
  ValueGrid Y = read_csv_matrix(path_y);
  const double sx = median_bandwidth(X);
  const double sy = median_bandwidth(Y);
  HsicEstimate est = hsic_biased(X, Y, sx, sy);
  Rng rng(seed);
  const double p = permutation_pvalue(X, Y, permutations, rng);
  json out;
  out["hsic"] = est.value;
  out["p_value"] = p;
  out["bandwidths"] = {sx, sy};
  out["n"] = est.n;
  out["permutations"] = permutations;
  std::cout << out.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// gradcheck / featurize
// ---------------------------------------------------------------------------

int cmd_gradcheck(double tolerance, std::uint64_t seed) {
  AuditReport report = gradient_audit(tolerance, seed);
  for (const AuditEntry& e : report.entries)
    std::cout << (e.pass ? "PASS " : "FAIL ") << e.name
              << "  max_rel_error=" << e.max_rel_error
              << (e.pass ? "" : ("  worst=" + e.worst_param)) << "\n";
  std::cout << (report.pass ? "gradient audit passed" : "gradient audit FAILED") << "\n";
  return report.pass ? 0 : 1;
}

int cmd_featurize(const std::string& wav_path, const std::string& out_path,
                  const std::string& format, double window_ms, double hop_ms, long mels) {
  AudioClip clip = read_wav(wav_path);
  LmsSequence lms = log_mel(clip, window_ms, hop_ms, mels);
  if (format == "binary") {
    write_lms_binary(lms, out_path);
  } else if (format == "jsonl") {
    SequenceSet seqs;
    seqs.sequences.push_back(lms.frames);
    write_sequences_jsonl(seqs, out_path);
  } else {
    throw ConfigError("--format must be 'jsonl' or 'binary'");
  }
  std::cout << "wrote " << out_path << " (" << lms.frames.rows() << " frames x "
            << lms.frames.cols() << " mels)\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"nonlinear independent subspace analysis with auxiliary variables"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(0, 1);

  std::string config_path, out_override;
  auto* synth = app.add_subcommand("synth", "generate a synthetic ground-truth dataset");
  synth->add_option("--config", config_path, "TOML config")->required();
  synth->add_option("--out", out_override, "override the output directory");

  std::string train_config, train_out;
  auto* train_cmd = app.add_subcommand("train", "train an objective on a dataset");
  train_cmd->add_option("--config", train_config, "TOML config")->required();
  train_cmd->add_option("--out", train_out, "override the output directory");

  std::string eval_ck, eval_data, eval_kind = "samples", eval_out;
  std::uint64_t eval_seed = 1;
  long hsic_cap = 1024;
  auto* eval_cmd = app.add_subcommand("eval", "compute metrics for a checkpoint");
  eval_cmd->add_option("--checkpoint", eval_ck, "checkpoint JSON")->required();
  eval_cmd->add_option("--data", eval_data, "dataset JSONL")->required();
  eval_cmd->add_option("--data-kind", eval_kind, "'samples' or 'sequences'");
  eval_cmd->add_option("--out", eval_out, "metrics JSON path (stdout if omitted)");
  eval_cmd->add_option("--seed", eval_seed, "probe/baseline seed");
  eval_cmd->add_option("--hsic-samples", hsic_cap, "row cap for the HSIC metric");

  std::string hsic_x, hsic_y;
  long permutations = 99;
  std::uint64_t hsic_seed = 1;
  auto* hsic_cmd = app.add_subcommand("hsic-test", "independence test on two CSV matrices");
  hsic_cmd->add_option("--x", hsic_x, "CSV matrix, rows = samples")->required();
  hsic_cmd->add_option("--y", hsic_y, "CSV matrix, rows = samples")->required();
  hsic_cmd->add_option("--permutations", permutations, "permutation count (default 99)");
  hsic_cmd->add_option("--seed", hsic_seed, "permutation seed");

  double tolerance = 1e-4;
  std::uint64_t grad_seed = 7;
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference audit of every loss");
  grad_cmd->add_option("--tolerance", tolerance, "max relative error (default 1e-4)");
  grad_cmd->add_option("--seed", grad_seed, "fixture seed");

  std::string wav_path, feat_out, feat_format = "jsonl";
  double window_ms = 25.0, hop_ms = 10.0;
  long mels = 80;
  auto* feat_cmd = app.add_subcommand("featurize", "WAV to log Mel spectrogram");
  feat_cmd->add_option("--wav", wav_path, "input PCM16 WAV")->required();
  feat_cmd->add_option("--out", feat_out, "output path")->required();
  feat_cmd->add_option("--format", feat_format, "'jsonl' or 'binary'");
  feat_cmd->add_option("--window-ms", window_ms, "window length (default 25)");
  feat_cmd->add_option("--hop-ms", hop_ms, "hop length (default 10)");
  feat_cmd->add_option("--mels", mels, "mel bins (default 80)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(config_path, out_override);
    if (train_cmd->parsed()) return cmd_train(train_config, train_out);
    if (eval_cmd->parsed())
      return cmd_eval(eval_ck, eval_data, eval_kind, eval_out, eval_seed, hsic_cap);
    if (hsic_cmd->parsed()) return cmd_hsic_test(hsic_x, hsic_y, permutations, hsic_seed);
    if (grad_cmd->parsed()) return cmd_gradcheck(tolerance, grad_seed);
    if (feat_cmd->parsed())
      return cmd_featurize(wav_path, feat_out, feat_format, window_ms, hop_ms, mels);
    std::cout << app.help() << "\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace isax::cli
