// Copyright 2026 isax authors. Apache 2.0 License.
#pragma once

#include <functional>
#include <string>

#include "isax/params.hpp"
#include "isax/rng.hpp"

namespace isax {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One adaptive-moment update over every parameter in the store, using the
// gradients currently held in the store. Increments the step counter.
// Throws NumericError naming the parameter if a gradient is non-finite.
void adam_step(ParamStore& store, const AdamConfig& cfg);

struct FiniteDiffReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  long worst_index = -1;
  long coords_checked = 0;
};

// Compares analytic gradients against central finite differences at
// `samples` randomly chosen parameter coordinates.
//
// `loss_fn` must be pure and deterministic: each call re-evaluates the loss
// at the store's current parameter values, and leaves d loss / d params in
// the store's gradient buffers (zeroed first). Nondeterminism across two
// probe calls raises CheckError. h must lie in [1e-7, 1e-3].
FiniteDiffReport finite_diff_check(const std::function<double()>& loss_fn,
                                   ParamStore& store, double h, long samples,
                                   Rng& rng);

}  // namespace isax
