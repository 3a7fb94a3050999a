// Copyright 2026 isax authors. Apache 2.0 License.
#pragma once

#include <string>
#include <vector>

#include "isax/params.hpp"
#include "isax/rng.hpp"
#include "isax/tape.hpp"

namespace isax {

// Negative-side slope shared by every hidden nonlinearity in the artifact
// (also reused by the synthetic mixing functions).
inline constexpr double kLeakySlope = 0.2;

// Feed-forward stack: affine layers with a leaky rectifier after all but the
// last. Empty `widths` means the identity map.
struct MlpSpec {
  long input_width = 0;
  std::vector<long> widths;  // one entry per affine layer; last = output width
  long output_width() const { return widths.empty() ? input_width : widths.back(); }
};

// Single gated recurrent cell (update/reset gating), stackable.
struct GruSpec {
  long input_width = 0;
  long hidden_width = 0;
  long layers = 1;
};

// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
ValueGrid glorot_uniform(long fan_in, long fan_out, Rng& rng);

void init_mlp(ParamStore& store, const std::string& prefix, const MlpSpec& spec, Rng& rng);
void init_gru(ParamStore& store, const std::string& prefix, const GruSpec& spec, Rng& rng);

// input: N x input_width. Returns N x output_width.
Var mlp_forward(Tape& tape, ParamBinding& params, const std::string& prefix,
                const MlpSpec& spec, Var input);

// sequence: T x input_width. Returns hidden states of the last layer, T x H.
// State at step t depends only on frames 1..t.
Var recurrent_forward(Tape& tape, ParamBinding& params, const std::string& prefix,
                      const GruSpec& spec, Var sequence);

}  // namespace isax
