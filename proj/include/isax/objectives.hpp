// Copyright 2026 isax authors. Apache 2.0 License.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "isax/encoder.hpp"
#include "isax/optim.hpp"

namespace isax {

enum class LossVariant { paper_difference, logistic };
enum class Objective { nce_hsic, apc, anh };

struct TrainingConfig {
  double lambda = 0.02;  // HSIC weight inside L_nh
  double beta = 0.1;     // L_nh weight inside L_anh
  long tau = 5;          // lookahead steps
  long gamma = 30;       // segment length
  long n = 4;
  long d = 4;
  long negatives_per_positive = 5;
  AdamConfig adam;
  std::uint64_t seed = 1;
  LossVariant loss_variant = LossVariant::paper_difference;
  Objective objective = Objective::nce_hsic;

  long epochs = 20;
  long batch_size = 256;     // samples per step (contrastive training)
  long seq_batch_size = 8;   // sequences per step (APC / ANH)
  long max_steps = 0;        // 0 means no cap beyond epochs
  long checkpoint_every = 500;
  double score_clamp = 30.0; // |r| bound under the difference variant

  std::vector<long> encoder_hidden = {};   // feed-forward hidden widths; default nd
  long recurrent_layers = 1;
  std::vector<long> psi_hidden = {64, 64, 64};

  void validate() const;
};

struct NceResult {
  Var loss;
  Var y;  // encoded batch, kept for the HSIC penalty
};

// Paper-difference variant: mean_l [ mean over negatives of r(x, u~) -
// r(x, u) ]. Logistic variant: mean_l [ mean_k softplus(r(x, u~_k)) +
// softplus(-r(x, u)) ].
//
// `negatives` is row-major N x K (1-based labels); every entry must differ
// from its row's positive label. `score_clamp` > 0 bounds |r| under the
// difference variant only.
NceResult nce_loss(Tape& tape, ParamBinding& params, const SubspaceEncoder& enc,
                   const DiscriminatorBank& bank, Var x,
                   const std::vector<long>& u_pos, const std::vector<long>& negatives,
                   long num_labels, LossVariant variant, double score_clamp);

// Same, starting from an already-encoded y (used by the ANH objective).
NceResult nce_loss_from_y(Tape& tape, ParamBinding& params, const SubspaceEncoder& enc,
                          const DiscriminatorBank& bank, Var y,
                          const std::vector<long>& u_pos, const std::vector<long>& negatives,
                          long num_labels, LossVariant variant, double score_clamp);

struct NceHsicResult {
  Var total;
  Var nce;
  Var hsic;  // invalid when lambda == 0 or n == 1 (term skipped exactly)
  Var y;
};

// L_nh = nce + lambda * sum_{j<k} H_jk over the batch's subspace outputs.
NceHsicResult nce_hsic_loss(Tape& tape, ParamBinding& params, const SubspaceEncoder& enc,
                            const DiscriminatorBank& bank, Var x,
                            const std::vector<long>& u_pos, const std::vector<long>& negatives,
                            long num_labels, double lambda, LossVariant variant,
                            double score_clamp,
                            const std::optional<std::vector<double>>& fixed_bandwidths = std::nullopt);

// Sum over prediction positions of the feature-summed L1 distance between
// p_hat_t and x_{t+tau}.
Var apc_loss(Tape& tape, Var predictions, Var sequence, long tau);

// Per-frame labels of a pooled batch: assign_auxiliary applied to each
// sequence, concatenated in order.
std::vector<long> pooled_frame_labels(const std::vector<long>& lengths, long gamma);

struct AnhResult {
  Var total;
  Var apc;   // mean APC loss over sequences
  Var nce;
  Var hsic;  // invalid when skipped
  Var y;     // pooled hidden frames, N x (n*d)
};

// L_anh = (1/B) sum_b L_apc(x_b) + beta * L_nh, with L_nh computed on the
// pooled hidden-state frames and their segment labels. `frame_negatives`
// is row-major (total frames) x K aligned with the pooled frame order.
AnhResult anh_loss(Tape& tape, ParamBinding& params, const SubspaceEncoder& enc,
                   const DiscriminatorBank& bank, const PredictorHead& head,
                   const std::vector<Var>& sequences, const TrainingConfig& cfg,
                   const std::vector<long>& frame_negatives,
                   const std::optional<std::vector<double>>& fixed_bandwidths = std::nullopt);

}  // namespace isax
