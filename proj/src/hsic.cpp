// Copyright 2026 isax authors. Apache 2.0 License.
#include "isax/hsic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "isax/error.hpp"

namespace isax {

namespace {

void require_samples(const ValueGrid& Y, const char* op) {
  if (Y.rank() != 2 || Y.rows() < 2)
    throw SpecError(std::string(op) + ": needs an N x d grid with N >= 2, got " + Y.shape_str());
}

double sq_dist(const ValueGrid& Y, long p, long q) {
  double s = 0.0;
  for (long c = 0; c < Y.cols(); ++c) {
    const double diff = Y.at(p, c) - Y.at(q, c);
    s += diff * diff;
  }
  return s;
}

}  // namespace

ValueGrid rbf_gram(const ValueGrid& Y, double sigma) {
  require_samples(Y, "rbf_gram");
  if (sigma <= 0.0) throw SpecError("rbf_gram: bandwidth must be positive");
  const long N = Y.rows();
  const double inv = -1.0 / (2.0 * sigma * sigma);
  ValueGrid K = ValueGrid::matrix(N, N);
  for (long p = 0; p < N; ++p) {
    K.at(p, p) = 1.0;
    for (long q = p + 1; q < N; ++q) {
      const double v = std::exp(inv * sq_dist(Y, p, q));
      K.at(p, q) = v;
      K.at(q, p) = v;
    }
  }
  return K;
}

double median_bandwidth(const ValueGrid& Y) {
  require_samples(Y, "median_bandwidth");
  const long N = Y.rows();
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(N * (N - 1) / 2));
  for (long p = 0; p < N; ++p)
    for (long q = p + 1; q < N; ++q) dists.push_back(std::sqrt(sq_dist(Y, p, q)));
  std::sort(dists.begin(), dists.end());
  const std::size_t M = dists.size();
  const double med = (M % 2 == 1) ? dists[M / 2] : 0.5 * (dists[M / 2 - 1] + dists[M / 2]);
  return med > 0.0 ? med : 1.0;
}

ValueGrid center(const ValueGrid& K) {
  if (K.rank() != 2 || K.rows() != K.cols())
    throw DimError("center: expected a square matrix, got " + K.shape_str());
  const long N = K.rows();
  std::vector<double> row_mean(static_cast<std::size_t>(N), 0.0);
  std::vector<double> col_mean(static_cast<std::size_t>(N), 0.0);
  double total = 0.0;
  for (long p = 0; p < N; ++p)
    for (long q = 0; q < N; ++q) {
      row_mean[p] += K.at(p, q);
      col_mean[q] += K.at(p, q);
      total += K.at(p, q);
    }
  for (long i = 0; i < N; ++i) {
    row_mean[i] /= static_cast<double>(N);
    col_mean[i] /= static_cast<double>(N);
  }
  total /= static_cast<double>(N) * static_cast<double>(N);
  ValueGrid out = ValueGrid::matrix(N, N);
  for (long p = 0; p < N; ++p)
    for (long q = 0; q < N; ++q)
      out.at(p, q) = K.at(p, q) - row_mean[p] - col_mean[q] + total;
  return out;
}

HsicEstimate hsic_biased(const ValueGrid& Yj, const ValueGrid& Yk,
                         double sigma_j, double sigma_k) {
  require_samples(Yj, "hsic_biased");
  require_samples(Yk, "hsic_biased");
  if (Yj.rows() != Yk.rows())
    throw SpecError("hsic_biased: sample counts differ (" + std::to_string(Yj.rows()) +
                    " vs " + std::to_string(Yk.rows()) + ")");
  const long N = Yj.rows();
  // tr(Kf H Kg H) = sum((H Kf H) .* (H Kg H)) since H is idempotent; centering
  // both sides makes the statistic exactly symmetric in its arguments.
  const ValueGrid Cf = center(rbf_gram(Yj, sigma_j));
  const ValueGrid Cg = center(rbf_gram(Yk, sigma_k));
  double tr = 0.0;
  for (long i = 0; i < Cf.size(); ++i) tr += Cf.at(i) * Cg.at(i);
  HsicEstimate est;
  est.value = tr / (static_cast<double>(N) * static_cast<double>(N));
  est.n = N;
  est.sigma_j = sigma_j;
  est.sigma_k = sigma_k;
  return est;
}

double hsic_penalty(std::span<const ValueGrid> subspaces,
                    std::vector<HsicEstimate>* pair_estimates) {
  const int n = static_cast<int>(subspaces.size());
  if (n < 1) throw SpecError("hsic_penalty: needs at least one subspace");
  for (int i = 1; i < n; ++i)
    if (subspaces[i].rows() != subspaces[0].rows())
      throw SpecError("hsic_penalty: subspaces disagree on sample count");
  if (n == 1) return 0.0;
  std::vector<double> sigma(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) sigma[i] = median_bandwidth(subspaces[i]);
  double total = 0.0;
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      HsicEstimate est = hsic_biased(subspaces[j], subspaces[k], sigma[j], sigma[k]);
      est.j = j;
      est.k = k;
      total += est.value;
      if (pair_estimates) pair_estimates->push_back(est);
    }
  return total;
}

double permutation_pvalue(const ValueGrid& Yj, const ValueGrid& Yk, long B, Rng& rng) {
  if (B < 19) throw SpecError("permutation_pvalue: needs at least 19 permutations");
  require_samples(Yj, "permutation_pvalue");
  require_samples(Yk, "permutation_pvalue");
  if (Yj.rows() != Yk.rows()) throw SpecError("permutation_pvalue: sample counts differ");
  const long N = Yj.rows();
  const double sj = median_bandwidth(Yj);
  const double sk = median_bandwidth(Yk);
  const ValueGrid Cf = center(rbf_gram(Yj, sj));
  const ValueGrid Cg = center(rbf_gram(Yk, sk));

  const double nn = static_cast<double>(N) * static_cast<double>(N);
  double observed = 0.0;
  for (long i = 0; i < Cf.size(); ++i) observed += Cf.at(i) * Cg.at(i);
  observed /= nn;

  // Permuting the rows of Yk conjugates its Gram by the permutation, and
  // centering commutes with that conjugation, so each permuted statistic is
  // a reindexed inner product of the two centered Grams.
  std::vector<long> perm(static_cast<std::size_t>(N));
  std::iota(perm.begin(), perm.end(), 0L);
  long exceed = 0;
  for (long b = 0; b < B; ++b) {
    rng.shuffle(perm);
    double stat = 0.0;
    for (long p = 0; p < N; ++p)
      for (long q = 0; q < N; ++q) stat += Cf.at(p, q) * Cg.at(perm[p], perm[q]);
    stat /= nn;
    if (stat >= observed) ++exceed;
  }
  return static_cast<double>(1 + exceed) / static_cast<double>(B + 1);
}

Var rbf_gram_var(Tape& tape, Var Y, double sigma) {
  const ValueGrid& v = tape.value(Y);
  require_samples(v, "rbf_gram_var");
  if (sigma <= 0.0) throw SpecError("rbf_gram_var: bandwidth must be positive");
  // ||y_p - y_q||^2 = r_p + r_q - 2 y_p . y_q
  Var rsq = tape.row_sum(tape.mul(Y, Y));                 // N x 1
  Var cross = tape.matmul(Y, tape.transpose(Y));          // N x N
  Var d2 = tape.sub_colvec(tape.scale(cross, -2.0), tape.scale(rsq, -1.0));
  d2 = tape.sub_rowvec(d2, tape.scale(tape.transpose(rsq), -1.0));
  return tape.exp(tape.scale(d2, -1.0 / (2.0 * sigma * sigma)));
}

Var center_var(Tape& tape, Var K) {
  const ValueGrid& v = tape.value(K);
  if (v.rank() != 2 || v.rows() != v.cols())
    throw DimError("center_var: expected a square matrix, got " + v.shape_str());
  Var rm = tape.row_mean(K);   // N x 1
  Var cm = tape.col_mean(K);   // 1 x N
  Var total = tape.mean(K);    // 1 x 1
  Var out = tape.sub_colvec(K, rm);
  out = tape.sub_rowvec(out, cm);
  return tape.add_scalar_var(out, total);
}

Var hsic_biased_var(Tape& tape, Var Yj, Var Yk, double sigma_j, double sigma_k) {
  const long N = tape.value(Yj).rows();
  if (N != tape.value(Yk).rows())
    throw SpecError("hsic_biased_var: sample counts differ");
  Var Cf = center_var(tape, rbf_gram_var(tape, Yj, sigma_j));
  Var Cg = center_var(tape, rbf_gram_var(tape, Yk, sigma_k));
  Var tr = tape.sum(tape.mul(Cf, Cg));
  return tape.scale(tr, 1.0 / (static_cast<double>(N) * static_cast<double>(N)));
}

Var hsic_penalty_var(Tape& tape, std::span<const Var> subspaces,
                     const std::optional<std::vector<double>>& fixed_bandwidths) {
  const int n = static_cast<int>(subspaces.size());
  if (n < 1) throw SpecError("hsic_penalty_var: needs at least one subspace");
  if (n == 1) return tape.input(ValueGrid::scalar(0.0));
  std::vector<double> sigma(static_cast<std::size_t>(n));
  if (fixed_bandwidths) {
    if (static_cast<int>(fixed_bandwidths->size()) != n)
      throw SpecError("hsic_penalty_var: one bandwidth per subspace required");
    sigma = *fixed_bandwidths;
  } else {
    for (int i = 0; i < n; ++i) sigma[i] = median_bandwidth(tape.value(subspaces[i]));
  }
  Var total{};
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      Var term = hsic_biased_var(tape, subspaces[j], subspaces[k], sigma[j], sigma[k]);
      total = total.valid() ? tape.add(total, term) : term;
    }
  return total;
}

}  // namespace isax
