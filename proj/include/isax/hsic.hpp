// Copyright 2026 isax authors. Apache 2.0 License.
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "isax/grid.hpp"
#include "isax/rng.hpp"
#include "isax/tape.hpp"

namespace isax {

struct HsicEstimate {
  double value = 0.0;
  int j = -1, k = -1;      // subspace pair, when applicable
  long n = 0;              // sample count
  double sigma_j = 0.0;
  double sigma_k = 0.0;
};

// K[p,q] = exp(-||y_p - y_q||^2 / (2 sigma^2)) for rows of Y (N x d).
ValueGrid rbf_gram(const ValueGrid& Y, double sigma);

// Median of the N(N-1)/2 pairwise Euclidean distances; 1.0 if that median
// is zero (all points coincident).
double median_bandwidth(const ValueGrid& Y);

// H K H with H = I - (1/N) 11^T, computed via row/column means.
ValueGrid center(const ValueGrid& K);

// Biased empirical statistic (1/N^2) tr(K_f H K_g H).
HsicEstimate hsic_biased(const ValueGrid& Yj, const ValueGrid& Yk,
                         double sigma_j, double sigma_k);

// Sum over unordered subspace pairs j < k, median bandwidth per subspace.
double hsic_penalty(std::span<const ValueGrid> subspaces,
                    std::vector<HsicEstimate>* pair_estimates = nullptr);

// p = (1 + #{b : H_b >= H_observed}) / (B + 1) under uniform row
// permutations of Yk. Requires B >= 19.
double permutation_pvalue(const ValueGrid& Yj, const ValueGrid& Yk, long B, Rng& rng);

// --- differentiable versions over a tape ---

Var rbf_gram_var(Tape& tape, Var Y, double sigma);
Var center_var(Tape& tape, Var K);
Var hsic_biased_var(Tape& tape, Var Yj, Var Yk, double sigma_j, double sigma_k);

// Bandwidths default to the median heuristic on the current values of each
// subspace (recomputed per call, constant for gradient purposes). Pass
// `fixed_bandwidths` to pin them, e.g. while finite-difference checking.
Var hsic_penalty_var(Tape& tape, std::span<const Var> subspaces,
                     const std::optional<std::vector<double>>& fixed_bandwidths = std::nullopt);

}  // namespace isax
