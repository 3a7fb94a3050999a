// Copyright 2026 isax authors. Apache 2.0 License.
#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "isax/grid.hpp"
#include "isax/rng.hpp"

namespace isax {

inline constexpr double kMinSegmentVariance = 1e-4;

// Per-segment, per-source Gaussian parameters: source block i under segment
// label j is N(mu_i(j), diag sigma2_i(j)). Labels are 1-based.
struct GaussianSegmentSpec {
  long n = 0;  // number of sources
  long d = 0;  // dimensions per source
  long num_segments = 0;
  // Flattened [segment][source][dim].
  std::vector<double> mu;
  std::vector<double> sigma2;

  double mean(long segment, long source, long dim) const;
  double variance(long segment, long source, long dim) const;
  void set(long segment, long source, long dim, double mean, double variance);

  bool has_label(long label) const { return label >= 1 && label <= num_segments; }
  void validate() const;  // variances >= kMinSegmentVariance, shapes consistent

  // I.i.d.-random per-segment parameters: means uniform in mu_range,
  // variances uniform in var_range.
  static GaussianSegmentSpec random(long n, long d, long segments, Rng& rng,
                                    double mu_lo = -3.0, double mu_hi = 3.0,
                                    double var_lo = 0.1, double var_hi = 2.0);
};

// Conditional energy-based source family: density of source i given
// auxiliary label u is proportional to exp(phi_i(s)^T eta_i(u)), normalized
// by Z_i(u). The derivative callbacks feed the separability check.
struct ConditionalSourceModel {
  long n = 0;
  long d = 0;
  long m = 0;  // sufficient-statistic dimension per source
  std::function<ValueGrid(const ValueGrid& s)> phi;                    // d -> m
  std::function<ValueGrid(long source, long label)> eta;               // -> m
  std::function<double(long source, long label)> log_normalizer;
  std::function<ValueGrid(const ValueGrid& s)> grad_phi;               // m x d
  // (second-derivative tensor) x_3 z, an m x d matrix.
  std::function<ValueGrid(const ValueGrid& s, const ValueGrid& z)> hess_phi_z;
};

// Gaussian instantiation: phi(s) = (s, s*s), m = 2d, analytic normalizer.
ConditionalSourceModel gaussian_model(const GaussianSegmentSpec& spec);

// Invertible nonlinear mixing: L square layers, leaky rectifier between all
// but the last (last layer linear).
struct MixingFunction {
  long dim = 0;
  double slope = 0.2;
  std::vector<ValueGrid> weights;       // L matrices, dim x dim
  std::vector<ValueGrid> inverse_weights;

  long depth() const { return static_cast<long>(weights.size()); }
  // s: length-dim vector or N x dim batch of rows.
  ValueGrid apply(const ValueGrid& s) const;
  ValueGrid invert(const ValueGrid& x) const;
};

// Random layers with singular values rescaled into [1/sqrt(k), sqrt(k)].
MixingFunction make_mixing(long nd, long depth, double kappa_max, Rng& rng);

// Frame t (1-based) receives label ceil(t / gamma).
std::vector<long> assign_auxiliary(long T, long gamma);

// Sources drawn independently across blocks and steps; returns T x (n*d).
ValueGrid sample_sources(const GaussianSegmentSpec& spec,
                         const std::vector<long>& labels, Rng& rng);

struct SeparabilityReport {
  bool separable = false;
  std::vector<double> singular_values;  // descending
};

// Builds the 2nd x 2nd matrix of auxiliary-difference directions pushed
// through the statistics' first/second derivatives at (s, z); separable iff
// the smallest singular value exceeds tol times the largest.
SeparabilityReport check_separability(const ConditionalSourceModel& model,
                                      const ValueGrid& s, const ValueGrid& z,
                                      const std::vector<long>& u_list, double tol);

}  // namespace isax
