// Copyright 2026 isax authors. Apache 2.0 License.
#include "isax/eval.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "isax/error.hpp"
#include "isax/rng.hpp"

namespace isax {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

EMat centered(const ValueGrid& Y) {
  EMat M = Eigen::Map<const EMat>(Y.data().data(), Y.rows(), Y.cols());
  Eigen::RowVectorXd mean = M.colwise().mean();
  M.rowwise() -= mean;
  return M;
}

// Inverse square root of a symmetric PSD matrix, with a ridge when the
// spectrum is (near-)degenerate.
EMat inv_sqrt_psd(const EMat& S, bool* ridge_used) {
  Eigen::SelfAdjointEigenSolver<EMat> es(S);
  Eigen::VectorXd ev = es.eigenvalues();
  const double floor = 1e-10 * std::max(1.0, ev.maxCoeff());
  EMat work = S;
  if (ev.minCoeff() < floor) {
    work += 1e-6 * EMat::Identity(S.rows(), S.cols());
    if (ridge_used) *ridge_used = true;
    es.compute(work);
    ev = es.eigenvalues();
  }
  Eigen::VectorXd inv(ev.size());
  for (long i = 0; i < ev.size(); ++i) inv(i) = 1.0 / std::sqrt(std::max(ev(i), 1e-300));
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double pairwise_abs_pearson(std::span<const ValueGrid> subspaces, long* dropped_dims) {
  const int n = static_cast<int>(subspaces.size());
  if (n < 2) throw SpecError("pairwise_abs_pearson: needs at least two subspaces");
  const long N = subspaces[0].rows();
  if (N < 3) throw SpecError("pairwise_abs_pearson: needs N >= 3 samples");

  // Standardize columns, remembering which are (numerically) constant.
  std::vector<EMat> std_cols;
  std::vector<std::vector<bool>> live;
  long dropped = 0;
  for (const ValueGrid& Y : subspaces) {
    if (Y.rows() != N) throw SpecError("pairwise_abs_pearson: sample counts differ");
    EMat M = centered(Y);
    std::vector<bool> ok(static_cast<std::size_t>(M.cols()), true);
    for (long c = 0; c < M.cols(); ++c) {
      const double var = M.col(c).squaredNorm() / static_cast<double>(N);
      if (var <= 1e-12) {
        ok[static_cast<std::size_t>(c)] = false;
        ++dropped;
      } else {
        M.col(c) /= std::sqrt(var * static_cast<double>(N));
      }
    }
    std_cols.push_back(std::move(M));
    live.push_back(std::move(ok));
  }
  if (dropped_dims) *dropped_dims = dropped;

  double pair_sum = 0.0;
  long pair_count = 0;
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      double acc = 0.0;
      long dims = 0;
      for (long a = 0; a < std_cols[j].cols(); ++a) {
        if (!live[j][static_cast<std::size_t>(a)]) continue;
        for (long b = 0; b < std_cols[k].cols(); ++b) {
          if (!live[k][static_cast<std::size_t>(b)]) continue;
          const double corr = std_cols[j].col(a).dot(std_cols[k].col(b));
          acc += std::min(1.0, std::fabs(corr));
          ++dims;
        }
      }
      if (dims == 0)
        throw NumericError("pairwise_abs_pearson: a subspace pair has no varying dimensions");
      pair_sum += acc / static_cast<double>(dims);
      ++pair_count;
    }
  return pair_sum / static_cast<double>(pair_count);
}

double mean_canonical_correlation(const ValueGrid& X, const ValueGrid& Y, bool* ridge_used) {
  if (X.rows() != Y.rows()) throw SpecError("canonical correlation: sample counts differ");
  const double N = static_cast<double>(X.rows());
  EMat Xc = centered(X);
  EMat Yc = centered(Y);
  EMat Sxx = (Xc.transpose() * Xc) / N;
  EMat Syy = (Yc.transpose() * Yc) / N;
  EMat Sxy = (Xc.transpose() * Yc) / N;
  EMat Wx = inv_sqrt_psd(Sxx, ridge_used);
  EMat Wy = inv_sqrt_psd(Syy, ridge_used);
  Eigen::JacobiSVD<EMat> svd(Wx * Sxy * Wy);
  double mean = 0.0;
  const long d = svd.singularValues().size();
  for (long i = 0; i < d; ++i)
    mean += std::min(1.0, svd.singularValues()(i));
  return mean / static_cast<double>(d);
}

std::vector<long> max_assignment(const ValueGrid& affinity, double* total) {
  const long n = affinity.rows();
  if (affinity.cols() != n) throw DimError("max_assignment: square matrix required");
  std::vector<long> best(static_cast<std::size_t>(n));
  if (n <= 6) {
    std::vector<long> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0L);
    double best_sum = -std::numeric_limits<double>::infinity();
    do {
      double s = 0.0;
      for (long i = 0; i < n; ++i) s += affinity.at(i, perm[static_cast<std::size_t>(i)]);
      if (s > best_sum) {
        best_sum = s;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (total) *total = best_sum;
    return best;
  }

  // Augmenting-path assignment on costs = -affinity (O(n^3)).
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<double> v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<long> way(static_cast<std::size_t>(n + 1), 0);
  std::vector<long> p(static_cast<std::size_t>(n + 1), 0);
  auto cost = [&](long i, long j) { return -affinity.at(i - 1, j - 1); };
  for (long i = 1; i <= n; ++i) {
    p[0] = i;
    long j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1),
                             std::numeric_limits<double>::infinity());
    std::vector<bool> used(static_cast<std::size_t>(n + 1), false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const long i0 = p[static_cast<std::size_t>(j0)];
      long j1 = 0;
      double delta = std::numeric_limits<double>::infinity();
      for (long j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0, j) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (long j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const long j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<long> out(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (long j = 1; j <= n; ++j) {
    out[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
    sum += affinity.at(p[static_cast<std::size_t>(j)] - 1, j - 1);
  }
  if (total) *total = sum;
  return out;
}

MatchReport match_subspaces(std::span<const ValueGrid> learned,
                            std::span<const ValueGrid> true_sources) {
  const long n = static_cast<long>(learned.size());
  if (n == 0 || static_cast<long>(true_sources.size()) != n)
    throw SpecError("match_subspaces: subspace counts differ");
  const long d = learned[0].cols();
  for (const ValueGrid& g : learned)
    if (g.cols() != d) throw SpecError("match_subspaces: unequal subspace dimensions are not supported");
  for (const ValueGrid& g : true_sources)
    if (g.cols() != d) throw SpecError("match_subspaces: unequal subspace dimensions are not supported");

  MatchReport report;
  report.affinity = ValueGrid::matrix(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      report.affinity.at(i, j) =
          mean_canonical_correlation(learned[static_cast<std::size_t>(i)],
                                     true_sources[static_cast<std::size_t>(j)],
                                     &report.ridge_used);
  double total = 0.0;
  report.permutation = max_assignment(report.affinity, &total);
  report.matched_score = total / static_cast<double>(n);
  return report;
}

namespace {

// Deterministic 80/20 split; retries once if a class is missing from the
// training side.
struct Split {
  std::vector<long> train;
  std::vector<long> held;
};

Split make_split(long N, const std::vector<long>& labels, std::uint64_t seed) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::vector<long> order(static_cast<std::size_t>(N));
    std::iota(order.begin(), order.end(), 0L);
    Rng rng(seed + static_cast<std::uint64_t>(attempt) * 0x9e3779b9ULL);
    rng.shuffle(order);
    const long cut = std::max<long>(1, (N * 8) / 10);
    Split split;
    split.train.assign(order.begin(), order.begin() + cut);
    split.held.assign(order.begin() + cut, order.end());
    std::set<long> train_classes, all_classes;
    for (long i : split.train) train_classes.insert(labels[static_cast<std::size_t>(i)]);
    for (long l : labels) all_classes.insert(l);
    if (train_classes == all_classes && !split.held.empty()) return split;
  }
  throw SpecError("probe split: a class is absent from the training split");
}

}  // namespace

double linear_probe(const ValueGrid& features, const std::vector<long>& labels,
                    long classes, std::uint64_t seed) {
  const long N = features.rows();
  const long D = features.cols();
  if (classes < 2) throw SpecError("linear_probe: needs at least two classes");
  if (static_cast<long>(labels.size()) != N) throw SpecError("linear_probe: label count mismatch");
  for (long l : labels)
    if (l < 0 || l >= classes) throw SpecError("linear_probe: label out of range");

  Split split = make_split(N, labels, seed);
  const long Ntr = static_cast<long>(split.train.size());

  EMat X(Ntr, D);
  std::vector<long> y(static_cast<std::size_t>(Ntr));
  for (long i = 0; i < Ntr; ++i) {
    const long src = split.train[static_cast<std::size_t>(i)];
    for (long c = 0; c < D; ++c) X(i, c) = features.at(src, c);
    y[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(src)];
  }

  // Upper bound on the softmax-loss curvature gives a safe step size.
  const double lmax = (X.transpose() * X).eigenvalues().real().maxCoeff() / static_cast<double>(Ntr);
  const double lr = 1.0 / (0.5 * lmax + 1e-8);

  EMat W = EMat::Zero(D, classes);
  Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(classes);
  for (long step = 0; step < 5000; ++step) {
    EMat logits = X * W;
    logits.rowwise() += b;
    EMat probs(Ntr, classes);
    for (long i = 0; i < Ntr; ++i) {
      const double m = logits.row(i).maxCoeff();
      double z = 0.0;
      for (long c = 0; c < classes; ++c) {
        probs(i, c) = std::exp(logits(i, c) - m);
        z += probs(i, c);
      }
      probs.row(i) /= z;
      probs(i, y[static_cast<std::size_t>(i)]) -= 1.0;
    }
    probs /= static_cast<double>(Ntr);
    EMat gw = X.transpose() * probs;
    Eigen::RowVectorXd gb = probs.colwise().sum();
    const double gnorm = std::sqrt(gw.squaredNorm() + gb.squaredNorm());
    if (gnorm < 1e-5) break;
    W -= lr * gw;
    b -= lr * gb;
  }

  long correct = 0;
  for (long idx : split.held) {
    Eigen::RowVectorXd x(D);
    for (long c = 0; c < D; ++c) x(c) = features.at(idx, c);
    Eigen::RowVectorXd scores = x * W + b;
    long arg = 0;
    scores.maxCoeff(&arg);
    if (arg == labels[static_cast<std::size_t>(idx)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(split.held.size());
}

double pooled_probe(std::span<const ValueGrid> sequences, const std::vector<long>& labels,
                    std::uint64_t seed) {
  const long M = static_cast<long>(sequences.size());
  if (M < 4) throw SpecError("pooled_probe: needs at least four sequences");
  if (static_cast<long>(labels.size()) != M) throw SpecError("pooled_probe: label count mismatch");
  std::map<long, long> class_counts;
  for (long l : labels) ++class_counts[l];
  if (class_counts.size() < 2) throw SpecError("pooled_probe: needs at least two classes");
  for (const auto& [cls, count] : class_counts)
    if (count < 2) throw SpecError("pooled_probe: every class needs at least two sequences");

  const long D = sequences[0].cols();
  EMat pooled(M, D);
  for (long i = 0; i < M; ++i) {
    const ValueGrid& seq = sequences[static_cast<std::size_t>(i)];
    if (seq.cols() != D) throw SpecError("pooled_probe: feature widths differ");
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(D);
    for (long t = 0; t < seq.rows(); ++t)
      for (long c = 0; c < D; ++c) mean(c) += seq.at(t, c);
    pooled.row(i) = mean / static_cast<double>(seq.rows());
  }

  // Remap labels to 0..C-1 in sorted order.
  std::vector<long> class_ids;
  for (const auto& [cls, count] : class_counts) class_ids.push_back(cls);
  auto class_index = [&](long label) {
    return static_cast<long>(std::lower_bound(class_ids.begin(), class_ids.end(), label) -
                             class_ids.begin());
  };
  const long C = static_cast<long>(class_ids.size());

  Split split = make_split(M, labels, seed);

  // Class means and shared within-class covariance on the training part.
  EMat means = EMat::Zero(C, D);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(C);
  for (long idx : split.train) {
    const long c = class_index(labels[static_cast<std::size_t>(idx)]);
    means.row(c) += pooled.row(idx);
    counts(c) += 1.0;
  }
  for (long c = 0; c < C; ++c) means.row(c) /= counts(c);
  EMat cov = EMat::Zero(D, D);
  for (long idx : split.train) {
    const long c = class_index(labels[static_cast<std::size_t>(idx)]);
    Eigen::RowVectorXd r = pooled.row(idx) - means.row(c);
    cov += r.transpose() * r;
  }
  cov /= static_cast<double>(split.train.size());
  cov += 1e-3 * EMat::Identity(D, D);
  Eigen::LDLT<EMat> solver(cov);
  if (solver.info() != Eigen::Success || !solver.isPositive())
    throw NumericError("pooled_probe: singular pooled covariance even after ridge");

  long correct = 0;
  for (long idx : split.held) {
    double best = -std::numeric_limits<double>::infinity();
    long arg = -1;
    for (long c = 0; c < C; ++c) {
      Eigen::VectorXd mu = means.row(c).transpose();
      Eigen::VectorXd alpha = solver.solve(mu);
      const double prior = std::log(counts(c) / static_cast<double>(split.train.size()));
      const double score = pooled.row(idx).dot(alpha) - 0.5 * mu.dot(alpha) + prior;
      if (score > best) {
        best = score;
        arg = c;
      }
    }
    if (arg == class_index(labels[static_cast<std::size_t>(idx)])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(split.held.size());
}

AblationReport ablation_compare(const std::vector<std::pair<std::uint64_t, double>>& run_a,
                                const std::vector<std::pair<std::uint64_t, double>>& run_b) {
  if (run_a.size() != run_b.size() || run_a.empty())
    throw SpecError("ablation_compare: runs must pair one seed to one seed");
  std::map<std::uint64_t, double> b_by_seed;
  for (const auto& [seed, value] : run_b) b_by_seed[seed] = value;
  AblationReport report;
  for (const auto& [seed, value_a] : run_a) {
    auto it = b_by_seed.find(seed);
    if (it == b_by_seed.end())
      throw SpecError("ablation_compare: unpaired seed " + std::to_string(seed));
    AblationDelta delta;
    delta.seed = seed;
    delta.metric_a = value_a;
    delta.metric_b = it->second;
    delta.delta = value_a - it->second;
    report.per_seed.push_back(delta);
    report.mean_delta += delta.delta;
  }
  report.mean_delta /= static_cast<double>(report.per_seed.size());
  return report;
}

std::vector<ValueGrid> split_subspaces(const ValueGrid& Y, long n, long d) {
  if (Y.cols() != n * d) throw DimError("split_subspaces: width != n*d");
  std::vector<ValueGrid> out;
  for (long i = 0; i < n; ++i) {
    ValueGrid block = ValueGrid::matrix(Y.rows(), d);
    for (long r = 0; r < Y.rows(); ++r)
      for (long c = 0; c < d; ++c) block.at(r, c) = Y.at(r, i * d + c);
    out.push_back(std::move(block));
  }
  return out;
}

}  // namespace isax
