// Copyright 2026 isax authors. Apache 2.0 License.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "isax/grid.hpp"

namespace isax {

// Mean over unordered subspace pairs of the mean absolute Pearson
// correlation across all dimension pairs. Constant dimensions (variance
// <= 1e-12) are dropped; `dropped_dims` counts them when provided.
double pairwise_abs_pearson(std::span<const ValueGrid> subspaces,
                            long* dropped_dims = nullptr);

struct MatchReport {
  std::vector<long> permutation;   // learned subspace i matches source permutation[i]
  ValueGrid affinity;              // n x n mean canonical correlations
  double matched_score = 0.0;      // mean affinity along the assignment
  double baseline_score = -1.0;    // filled by callers that evaluate a random encoder
  bool ridge_used = false;         // regularized CCA was needed somewhere
};

// Affinity[i][j] = mean canonical correlation between learned subspace i and
// true source j; the assignment maximizes the summed affinity (exhaustive
// for n <= 6, Hungarian beyond).
MatchReport match_subspaces(std::span<const ValueGrid> learned,
                            std::span<const ValueGrid> true_sources);

// Mean of the d canonical correlations between X and Y (N x d each).
double mean_canonical_correlation(const ValueGrid& X, const ValueGrid& Y,
                                  bool* ridge_used = nullptr);

// Maximum-affinity assignment: returns the permutation and its total.
// Exhaustive for n <= 6, Jonker-style augmenting-path solver otherwise.
std::vector<long> max_assignment(const ValueGrid& affinity, double* total = nullptr);

// Multinomial logistic probe trained full-batch to gradient-norm < 1e-5 or
// 5000 steps; accuracy on a deterministic held-out 20% split. Labels are
// 0-based class indices.
double linear_probe(const ValueGrid& features, const std::vector<long>& labels,
                    long classes, std::uint64_t seed);

// Mean-pool each sequence over time, classify with a shared-covariance
// linear discriminant (ridge 1e-3); held-out accuracy on a 20% split.
double pooled_probe(std::span<const ValueGrid> sequences, const std::vector<long>& labels,
                    std::uint64_t seed);

struct AblationDelta {
  std::uint64_t seed = 0;
  double metric_a = 0.0;
  double metric_b = 0.0;
  double delta = 0.0;  // a - b
};

struct AblationReport {
  std::vector<AblationDelta> per_seed;
  double mean_delta = 0.0;
};

// Pairs per-seed metric values of two runs (a vs b) and reports deltas.
// Seeds must match one-to-one.
AblationReport ablation_compare(const std::vector<std::pair<std::uint64_t, double>>& run_a,
                                const std::vector<std::pair<std::uint64_t, double>>& run_b);

// Splits a matrix's columns into n contiguous d-wide blocks.
std::vector<ValueGrid> split_subspaces(const ValueGrid& Y, long n, long d);

}  // namespace isax
