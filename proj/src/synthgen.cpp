// Copyright 2026 isax authors. Apache 2.0 License.
#include "isax/synthgen.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>

#include "isax/error.hpp"

namespace isax {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

EMat to_eigen(const ValueGrid& g) {
  return Eigen::Map<const EMat>(g.data().data(), g.rows(), g.cols());
}

ValueGrid from_eigen(const EMat& m) {
  ValueGrid g = ValueGrid::matrix(m.rows(), m.cols());
  Eigen::Map<EMat>(g.data().data(), m.rows(), m.cols()) = m;
  return g;
}

double leaky(double x, double slope) { return x > 0.0 ? x : slope * x; }
double leaky_inverse(double y, double slope) { return y > 0.0 ? y : y / slope; }

}  // namespace

double GaussianSegmentSpec::mean(long segment, long source, long dim) const {
  return mu[static_cast<std::size_t>(((segment - 1) * n + source) * d + dim)];
}

double GaussianSegmentSpec::variance(long segment, long source, long dim) const {
  return sigma2[static_cast<std::size_t>(((segment - 1) * n + source) * d + dim)];
}

void GaussianSegmentSpec::set(long segment, long source, long dim, double mean_v,
                              double variance_v) {
  const std::size_t idx = static_cast<std::size_t>(((segment - 1) * n + source) * d + dim);
  mu[idx] = mean_v;
  sigma2[idx] = variance_v;
}

void GaussianSegmentSpec::validate() const {
  if (n < 1 || d < 1 || num_segments < 1)
    throw SpecError("segment spec: n, d and segment count must be positive");
  const std::size_t expect = static_cast<std::size_t>(num_segments * n * d);
  if (mu.size() != expect || sigma2.size() != expect)
    throw SpecError("segment spec: parameter arrays do not match n*d*segments");
  for (double v : sigma2)
    if (!(v >= kMinSegmentVariance))
      throw SpecError("segment spec: variance below the 1e-4 floor");
}

GaussianSegmentSpec GaussianSegmentSpec::random(long n, long d, long segments, Rng& rng,
                                                double mu_lo, double mu_hi,
                                                double var_lo, double var_hi) {
  GaussianSegmentSpec spec;
  spec.n = n;
  spec.d = d;
  spec.num_segments = segments;
  spec.mu.resize(static_cast<std::size_t>(segments * n * d));
  spec.sigma2.resize(spec.mu.size());
  for (std::size_t i = 0; i < spec.mu.size(); ++i) {
    spec.mu[i] = rng.uniform(mu_lo, mu_hi);
    spec.sigma2[i] = rng.uniform(var_lo, var_hi);
  }
  spec.validate();
  return spec;
}

ConditionalSourceModel gaussian_model(const GaussianSegmentSpec& spec) {
  spec.validate();
  ConditionalSourceModel model;
  model.n = spec.n;
  model.d = spec.d;
  model.m = 2 * spec.d;
  const long d = spec.d;

  model.phi = [d](const ValueGrid& s) {
    if (s.size() != d) throw DimError("phi: source block has wrong dimension");
    ValueGrid out({2 * d});
    for (long a = 0; a < d; ++a) {
      out.at(a) = s.at(a);
      out.at(d + a) = s.at(a) * s.at(a);
    }
    return out;
  };
  model.eta = [spec, d](long source, long label) {
    if (!spec.has_label(label)) throw SpecError("eta: unknown segment label");
    ValueGrid out({2 * d});
    for (long a = 0; a < d; ++a) {
      const double var = spec.variance(label, source, a);
      out.at(a) = spec.mean(label, source, a) / var;
      out.at(d + a) = -0.5 / var;
    }
    return out;
  };
  model.log_normalizer = [spec, d](long source, long label) {
    if (!spec.has_label(label)) throw SpecError("log_normalizer: unknown segment label");
    double lz = 0.0;
    for (long a = 0; a < d; ++a) {
      const double var = spec.variance(label, source, a);
      const double mean = spec.mean(label, source, a);
      lz += 0.5 * mean * mean / var + 0.5 * std::log(2.0 * M_PI * var);
    }
    return lz;
  };
  model.grad_phi = [d](const ValueGrid& s) {
    ValueGrid out = ValueGrid::matrix(2 * d, d);
    for (long a = 0; a < d; ++a) {
      out.at(a, a) = 1.0;
      out.at(d + a, a) = 2.0 * s.at(a);
    }
    return out;
  };
  model.hess_phi_z = [d](const ValueGrid& s, const ValueGrid& z) {
    (void)s;  // second derivatives of (s, s*s) are constant in s
    ValueGrid out = ValueGrid::matrix(2 * d, d);
    for (long a = 0; a < d; ++a) out.at(d + a, a) = 2.0 * z.at(a);
    return out;
  };
  return model;
}

ValueGrid MixingFunction::apply(const ValueGrid& s) const {
  if (s.cols() != dim) throw DimError("mixing apply: dimension mismatch " + s.shape_str());
  if (depth() == 0) return s;
  EMat a = to_eigen(s);
  for (long l = 0; l < depth(); ++l) {
    a = a * to_eigen(weights[static_cast<std::size_t>(l)]).transpose();
    if (l + 1 < depth())
      a = a.unaryExpr([this](double x) { return leaky(x, slope); });
  }
  ValueGrid out = from_eigen(a);
  if (s.rank() == 1) return ValueGrid({s.size()}, out.data());
  return out;
}

ValueGrid MixingFunction::invert(const ValueGrid& x) const {
  if (x.cols() != dim) throw DimError("mixing invert: dimension mismatch " + x.shape_str());
  if (depth() == 0) return x;
  EMat a = to_eigen(x);
  for (long l = depth() - 1; l >= 0; --l) {
    a = a * to_eigen(inverse_weights[static_cast<std::size_t>(l)]).transpose();
    if (l > 0)
      a = a.unaryExpr([this](double y) { return leaky_inverse(y, slope); });
  }
  ValueGrid out = from_eigen(a);
  if (x.rank() == 1) return ValueGrid({x.size()}, out.data());
  return out;
}

MixingFunction make_mixing(long nd, long depth, double kappa_max, Rng& rng) {
  if (nd <= 0) throw DimError("make_mixing: dimension must be positive");
  if (depth < 0) throw SpecError("make_mixing: depth must be non-negative");
  if (kappa_max < 1.0) throw SpecError("make_mixing: kappa_max must be >= 1");
  MixingFunction f;
  f.dim = nd;
  const double lo = 1.0 / std::sqrt(kappa_max);
  const double hi = std::sqrt(kappa_max);
  for (long l = 0; l < depth; ++l) {
    EMat raw(nd, nd);
    for (long i = 0; i < nd; ++i)
      for (long j = 0; j < nd; ++j) raw(i, j) = rng.normal();
    Eigen::JacobiSVD<EMat> svd(raw, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::VectorXd sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    const double smax = sv(0);
    for (long i = 0; i < sv.size(); ++i)
      sv(i) = (smax - smin > 1e-12)
                  ? lo + (hi - lo) * (sv(i) - smin) / (smax - smin)
                  : 1.0;
    EMat w = svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
    f.weights.push_back(from_eigen(w));
    f.inverse_weights.push_back(from_eigen(w.inverse()));
  }
  return f;
}

std::vector<long> assign_auxiliary(long T, long gamma) {
  if (T < 1) throw SpecError("assign_auxiliary: T must be >= 1");
  if (gamma < 1) throw SpecError("assign_auxiliary: segment length must be >= 1");
  std::vector<long> labels(static_cast<std::size_t>(T));
  for (long t = 1; t <= T; ++t)
    labels[static_cast<std::size_t>(t - 1)] = (t + gamma - 1) / gamma;
  return labels;
}

ValueGrid sample_sources(const GaussianSegmentSpec& spec,
                         const std::vector<long>& labels, Rng& rng) {
  spec.validate();
  for (long u : labels)
    if (!spec.has_label(u))
      throw SpecError("sample_sources: label " + std::to_string(u) + " not in spec");
  const long T = static_cast<long>(labels.size());
  ValueGrid out = ValueGrid::matrix(T, spec.n * spec.d);
  for (long t = 0; t < T; ++t) {
    const long u = labels[static_cast<std::size_t>(t)];
    for (long i = 0; i < spec.n; ++i)
      for (long a = 0; a < spec.d; ++a)
        out.at(t, i * spec.d + a) =
            rng.normal(spec.mean(u, i, a), std::sqrt(spec.variance(u, i, a)));
  }
  return out;
}

SeparabilityReport check_separability(const ConditionalSourceModel& model,
                                      const ValueGrid& s, const ValueGrid& z,
                                      const std::vector<long>& u_list, double tol) {
  const long n = model.n, d = model.d, m = model.m;
  if (s.size() != n * d) throw DimError("check_separability: s must have length n*d");
  if (z.size() != d) throw DimError("check_separability: z must have length d");
  bool z_nonzero = false;
  for (long a = 0; a < d; ++a) z_nonzero |= (z.at(a) != 0.0);
  if (!z_nonzero) throw SpecError("check_separability: z must be nonzero");
  if (static_cast<long>(u_list.size()) != 2 * n * d + 1)
    throw SpecError("check_separability: needs exactly 2nd+1 auxiliary values, got " +
                    std::to_string(u_list.size()));

  // Per-source derivative blocks at s_i, shared across l.
  std::vector<ValueGrid> grads, hess;
  for (long i = 0; i < n; ++i) {
    ValueGrid si({d});
    for (long a = 0; a < d; ++a) si.at(a) = s.at(i * d + a);
    grads.push_back(model.grad_phi(si));       // m x d
    hess.push_back(model.hess_phi_z(si, z));   // m x d
  }

  const long rows = 2 * n * d;
  EMat M(rows, rows);
  const long u0 = u_list[0];
  for (long l = 1; l <= rows; ++l) {
    long col0 = 0;
    for (long i = 0; i < n; ++i) {
      ValueGrid zeta = model.eta(i, u_list[static_cast<std::size_t>(l)]);
      const ValueGrid base = model.eta(i, u0);
      for (long r = 0; r < m; ++r) zeta.at(r) -= base.at(r);
      // First block: grad_phi^T zeta, second block: (hess x_3 z)^T zeta.
      for (long a = 0; a < d; ++a) {
        double g = 0.0, hzv = 0.0;
        for (long r = 0; r < m; ++r) {
          g += grads[static_cast<std::size_t>(i)].at(r, a) * zeta.at(r);
          hzv += hess[static_cast<std::size_t>(i)].at(r, a) * zeta.at(r);
        }
        M(l - 1, col0 + a) = g;
        M(l - 1, col0 + d + a) = hzv;
      }
      col0 += 2 * d;
    }
  }

  Eigen::JacobiSVD<EMat> svd(M);
  SeparabilityReport report;
  report.singular_values.resize(static_cast<std::size_t>(rows));
  for (long i = 0; i < rows; ++i)
    report.singular_values[static_cast<std::size_t>(i)] = svd.singularValues()(i);
  const double smax = report.singular_values.front();
  const double smin = report.singular_values.back();
  report.separable = smax > 0.0 && smin > tol * smax;
  return report;
}

}  // namespace isax
