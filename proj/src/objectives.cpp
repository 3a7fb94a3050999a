// Copyright 2026 isax authors. Apache 2.0 License.
#include "isax/objectives.hpp"

#include <algorithm>

#include "isax/error.hpp"
#include "isax/hsic.hpp"
#include "isax/synthgen.hpp"

namespace isax {

void TrainingConfig::validate() const {
  if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (beta < 0.0) throw ConfigError("beta must be >= 0");
  if (tau < 1) throw ConfigError("tau must be >= 1");
  if (gamma < 1) throw ConfigError("gamma must be >= 1");
  if (n < 1 || d < 1) throw ConfigError("n and d must be positive");
  if (negatives_per_positive < 1) throw ConfigError("negatives_per_positive must be >= 1");
  if (epochs < 0 || batch_size < 1 || seq_batch_size < 1)
    throw ConfigError("bad batching configuration");
  if (adam.lr <= 0.0) throw ConfigError("learning rate must be positive");
  if (score_clamp < 0.0) throw ConfigError("score clamp must be >= 0");
}

namespace {

// Shared score plumbing for both variants: returns clamped r for one
// auxiliary assignment.
Var scores_for(Tape& tape, ParamBinding& params, const SubspaceEncoder& enc,
               const DiscriminatorBank& bank, Var y, const std::vector<long>& labels,
               long num_labels, bool clamp, double bound) {
  Var u = tape.input(one_hot(labels, num_labels));
  Var r = regression_score_from_y(tape, params, enc, bank, y, u);
  if (clamp && bound > 0.0) r = tape.clamp(r, -bound, bound);
  return r;
}

}  // namespace

NceResult nce_loss_from_y(Tape& tape, ParamBinding& params, const SubspaceEncoder& enc,
                          const DiscriminatorBank& bank, Var y,
                          const std::vector<long>& u_pos, const std::vector<long>& negatives,
                          long num_labels, LossVariant variant, double score_clamp) {
  const long N = static_cast<long>(u_pos.size());
  if (N < 1) throw SpecError("nce_loss: empty batch");
  if (tape.value(y).rows() != N) throw DimError("nce_loss: batch/label count mismatch");
  if (negatives.size() % u_pos.size() != 0)
    throw SpecError("nce_loss: negatives are not a multiple of the batch size");
  const long K = static_cast<long>(negatives.size() / u_pos.size());
  if (K < 1) throw SpecError("nce_loss: each sample needs at least one negative");
  for (long i = 0; i < N; ++i)
    for (long k = 0; k < K; ++k)
      if (negatives[static_cast<std::size_t>(i * K + k)] == u_pos[static_cast<std::size_t>(i)])
        throw SpecError("nce_loss: negative equals the positive auxiliary value at row " +
                        std::to_string(i));

  const bool clamp = variant == LossVariant::paper_difference;
  Var r_pos = scores_for(tape, params, enc, bank, y, u_pos, num_labels, clamp, score_clamp);

  NceResult out;
  out.y = y;
  if (variant == LossVariant::paper_difference) {
    Var neg_sum{};
    for (long k = 0; k < K; ++k) {
      std::vector<long> col(static_cast<std::size_t>(N));
      for (long i = 0; i < N; ++i) col[static_cast<std::size_t>(i)] = negatives[static_cast<std::size_t>(i * K + k)];
      Var r_neg = scores_for(tape, params, enc, bank, y, col, num_labels, clamp, score_clamp);
      neg_sum = neg_sum.valid() ? tape.add(neg_sum, r_neg) : r_neg;
    }
    Var neg_mean = tape.scale(neg_sum, 1.0 / static_cast<double>(K));
    out.loss = tape.mean(tape.sub(neg_mean, r_pos));
  } else {
    Var acc{};
    for (long k = 0; k < K; ++k) {
      std::vector<long> col(static_cast<std::size_t>(N));
      for (long i = 0; i < N; ++i) col[static_cast<std::size_t>(i)] = negatives[static_cast<std::size_t>(i * K + k)];
      Var r_neg = scores_for(tape, params, enc, bank, y, col, num_labels, false, 0.0);
      Var sp = tape.softplus(r_neg);
      acc = acc.valid() ? tape.add(acc, sp) : sp;
    }
    Var neg_term = tape.scale(acc, 1.0 / static_cast<double>(K));
    Var pos_term = tape.softplus(tape.scale(r_pos, -1.0));
    out.loss = tape.mean(tape.add(neg_term, pos_term));
  }
  return out;
}

NceResult nce_loss(Tape& tape, ParamBinding& params, const SubspaceEncoder& enc,
                   const DiscriminatorBank& bank, Var x,
                   const std::vector<long>& u_pos, const std::vector<long>& negatives,
                   long num_labels, LossVariant variant, double score_clamp) {
  Var y = enc.encode(tape, params, x);
  return nce_loss_from_y(tape, params, enc, bank, y, u_pos, negatives, num_labels,
                         variant, score_clamp);
}

NceHsicResult nce_hsic_loss(Tape& tape, ParamBinding& params, const SubspaceEncoder& enc,
                            const DiscriminatorBank& bank, Var x,
                            const std::vector<long>& u_pos, const std::vector<long>& negatives,
                            long num_labels, double lambda, LossVariant variant,
                            double score_clamp,
                            const std::optional<std::vector<double>>& fixed_bandwidths) {
  if (lambda < 0.0) throw SpecError("nce_hsic_loss: lambda must be >= 0");
  NceResult nce = nce_loss(tape, params, enc, bank, x, u_pos, negatives, num_labels,
                           variant, score_clamp);
  NceHsicResult out;
  out.nce = nce.loss;
  out.y = nce.y;
  if (lambda == 0.0 || enc.n == 1) {
    out.total = nce.loss;  // reduces to the plain NCE loss exactly
    return out;
  }
  std::vector<Var> subs;
  subs.reserve(static_cast<std::size_t>(enc.n));
  for (long i = 0; i < enc.n; ++i) subs.push_back(enc.subspace(tape, nce.y, i));
  out.hsic = hsic_penalty_var(tape, subs, fixed_bandwidths);
  out.total = tape.add(nce.loss, tape.scale(out.hsic, lambda));
  return out;
}

Var apc_loss(Tape& tape, Var predictions, Var sequence, long tau) {
  const ValueGrid& pred = tape.value(predictions);
  const ValueGrid& seq = tape.value(sequence);
  if (tau < 1) throw SpecError("apc_loss: lookahead must be >= 1");
  if (seq.rows() <= tau)
    throw SpecError("apc_loss: sequence of length " + std::to_string(seq.rows()) +
                    " too short for lookahead " + std::to_string(tau));
  if (pred.rows() != seq.rows() - tau || pred.cols() != seq.cols())
    throw SpecError("apc_loss: prediction framing mismatch, " + pred.shape_str() +
                    " vs sequence " + seq.shape_str());
  Var targets = tape.slice_rows(sequence, tau, seq.rows());
  return tape.sum(tape.abs(tape.sub(predictions, targets)));
}

std::vector<long> pooled_frame_labels(const std::vector<long>& lengths, long gamma) {
  std::vector<long> labels;
  for (long T : lengths) {
    std::vector<long> one = assign_auxiliary(T, gamma);
    labels.insert(labels.end(), one.begin(), one.end());
  }
  return labels;
}

AnhResult anh_loss(Tape& tape, ParamBinding& params, const SubspaceEncoder& enc,
                   const DiscriminatorBank& bank, const PredictorHead& head,
                   const std::vector<Var>& sequences, const TrainingConfig& cfg,
                   const std::vector<long>& frame_negatives,
                   const std::optional<std::vector<double>>& fixed_bandwidths) {
  if (enc.kind != BackboneKind::recurrent)
    throw SpecError("anh_loss: requires a recurrent backbone");
  if (sequences.empty()) throw SpecError("anh_loss: empty batch");
  const long B = static_cast<long>(sequences.size());

  std::vector<Var> hiddens;
  std::vector<long> lengths;
  Var apc_sum{};
  for (Var seq : sequences) {
    const long T = tape.value(seq).rows();
    if (T <= cfg.tau)
      throw SpecError("anh_loss: sequence of length " + std::to_string(T) +
                      " rejected for lookahead " + std::to_string(cfg.tau));
    Var hidden = enc.encode(tape, params, seq);
    Var preds = head.apply(tape, params, tape.slice_rows(hidden, 0, T - cfg.tau));
    Var term = apc_loss(tape, preds, seq, cfg.tau);
    apc_sum = apc_sum.valid() ? tape.add(apc_sum, term) : term;
    hiddens.push_back(hidden);
    lengths.push_back(T);
  }

  AnhResult out;
  out.apc = tape.scale(apc_sum, 1.0 / static_cast<double>(B));
  if (cfg.beta == 0.0) {
    out.total = out.apc;  // pure APC objective
    return out;
  }

  Var pooled = tape.concat_rows(hiddens);
  out.y = pooled;
  std::vector<long> labels = pooled_frame_labels(lengths, cfg.gamma);
  // One-hot width is the bank's label space, which covers the longest
  // sequence in the dataset; batches of short sequences use a prefix of it.
  const long num_labels = bank.p;
  if (*std::max_element(labels.begin(), labels.end()) > num_labels)
    throw SpecError("anh_loss: segment label exceeds the discriminator label space");

  NceResult nce = nce_loss_from_y(tape, params, enc, bank, pooled, labels, frame_negatives,
                                  num_labels, cfg.loss_variant, cfg.score_clamp);
  out.nce = nce.loss;
  Var lnh = nce.loss;
  if (cfg.lambda > 0.0 && enc.n > 1) {
    std::vector<Var> subs;
    for (long i = 0; i < enc.n; ++i) subs.push_back(enc.subspace(tape, pooled, i));
    out.hsic = hsic_penalty_var(tape, subs, fixed_bandwidths);
    lnh = tape.add(lnh, tape.scale(out.hsic, cfg.lambda));
  }
  out.total = tape.add(out.apc, tape.scale(lnh, cfg.beta));
  return out;
}

}  // namespace isax
