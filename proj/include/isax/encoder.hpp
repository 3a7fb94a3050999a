// Copyright 2026 isax authors. Apache 2.0 License.
#pragma once

#include <string>
#include <vector>

#include "isax/net.hpp"
#include "isax/params.hpp"
#include "isax/rng.hpp"
#include "isax/tape.hpp"

namespace isax {

enum class BackboneKind { feed_forward, recurrent };

// Learned h with n contiguous d-dimensional subspaces: subspace i occupies
// output columns [i*d, (i+1)*d).
struct SubspaceEncoder {
  long n = 0;
  long d = 0;
  long input_width = 0;
  BackboneKind kind = BackboneKind::feed_forward;
  std::vector<long> hidden_widths;  // feed-forward hidden layers
  long recurrent_layers = 1;
  std::string prefix = "enc";

  long output_width() const { return n * d; }

  MlpSpec mlp_spec() const;
  GruSpec gru_spec() const;

  void init(ParamStore& store, Rng& rng) const;

  // x: N x input_width (feed-forward) or T x input_width (recurrent).
  // Returns the full y, N x (n*d); slices via subspace().
  Var encode(Tape& tape, ParamBinding& params, Var x) const;
  Var subspace(Tape& tape, Var y, long i) const;
};

// n independent discriminators psi_i : R^d x R^p -> R; the auxiliary value
// arrives one-hot and is concatenated with the subspace at the first layer.
struct DiscriminatorBank {
  long n = 0;
  long d = 0;
  long p = 0;                              // one-hot width
  std::vector<long> widths = {64, 64, 64}; // hidden layers; output layer is appended
  std::string prefix = "psi";

  MlpSpec mlp_spec() const;
  void init(ParamStore& store, Rng& rng) const;

  // y_i: N x d, u_onehot: N x p. Returns N x 1 scores.
  Var score(Tape& tape, ParamBinding& params, long i, Var y_i, Var u_onehot) const;
};

// r(x, u) = sum_i psi_i(h_i(x), u). Returns N x 1.
Var regression_score(Tape& tape, ParamBinding& params, const SubspaceEncoder& enc,
                     const DiscriminatorBank& bank, Var x, Var u_onehot);

// Same sum but over already-encoded y (saves re-encoding when several
// auxiliary assignments share one x batch).
Var regression_score_from_y(Tape& tape, ParamBinding& params, const SubspaceEncoder& enc,
                            const DiscriminatorBank& bank, Var y, Var u_onehot);

// Affine map from backbone hidden state to the observation width.
struct PredictorHead {
  long hidden_width = 0;
  long feature_width = 0;
  std::string prefix = "head";

  void init(ParamStore& store, Rng& rng) const;
  Var apply(Tape& tape, ParamBinding& params, Var hidden) const;
};

// p_hat_t = head(hidden_t) for t = 1..T-tau, to be compared against
// x_{t+tau}. Requires a recurrent backbone and T > tau >= 1.
Var predict_ahead(Tape& tape, ParamBinding& params, const SubspaceEncoder& enc,
                  const PredictorHead& head, Var sequence, long tau);

// One-hot rows for 1-based labels.
ValueGrid one_hot(const std::vector<long>& labels, long num_classes);

}  // namespace isax
