#include <doctest.h>

#include <cmath>

#include "isax/error.hpp"
#include "isax/eval.hpp"
#include "isax/rng.hpp"
#include "testutil.hpp"

using namespace isax;

TEST_CASE("pairwise_abs_pearson: a copied subspace scores 1") {
  Rng rng(1);
  ValueGrid a = testutil::random_matrix(200, 1, rng);
  std::vector<ValueGrid> subs = {a, a};
  CHECK(pairwise_abs_pearson(subs) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pairwise_abs_pearson: independent normals sit at the null scale") {
  Rng rng(2);
  ValueGrid a = testutil::random_matrix(10000, 2, rng);
  ValueGrid b = testutil::random_matrix(10000, 2, rng);
  std::vector<ValueGrid> subs = {a, b};
  CHECK(pairwise_abs_pearson(subs) < 0.03);
}

TEST_CASE("pairwise_abs_pearson: invariant to per-dimension affine rescaling") {
  Rng rng(3);
  ValueGrid a = testutil::random_matrix(300, 2, rng);
  ValueGrid b = testutil::random_matrix(300, 2, rng);
  std::vector<ValueGrid> subs = {a, b};
  const double base = pairwise_abs_pearson(subs);
  ValueGrid a2 = a;
  for (long r = 0; r < 300; ++r) {
    a2.at(r, 0) = 5.0 * a2.at(r, 0) - 3.0;
    a2.at(r, 1) = -0.25 * a2.at(r, 1) + 11.0;
  }
  std::vector<ValueGrid> subs2 = {a2, b};
  CHECK(pairwise_abs_pearson(subs2) == doctest::Approx(base).epsilon(1e-10));
  CHECK(base >= 0.0);
  CHECK(base <= 1.0);
}

TEST_CASE("pairwise_abs_pearson: constant dimensions are dropped, all-constant errors") {
  Rng rng(4);
  ValueGrid a = testutil::random_matrix(50, 2, rng);
  for (long r = 0; r < 50; ++r) a.at(r, 1) = 7.0;  // constant dim
  ValueGrid b = testutil::random_matrix(50, 2, rng);
  std::vector<ValueGrid> subs = {a, b};
  long dropped = 0;
  (void)pairwise_abs_pearson(subs, &dropped);
  CHECK(dropped == 1);

  ValueGrid c = ValueGrid::matrix(50, 2);
  c.fill(1.0);
  std::vector<ValueGrid> degenerate = {c, c};
  CHECK_THROWS(pairwise_abs_pearson(degenerate));
}

TEST_CASE("match_subspaces: permuted copy recovers the permutation with score 1") {
  Rng rng(5);
  std::vector<ValueGrid> sources;
  for (int i = 0; i < 3; ++i) sources.push_back(testutil::random_matrix(500, 2, rng));
  std::vector<ValueGrid> learned = {sources[2], sources[0], sources[1]};
  MatchReport report = match_subspaces(learned, sources);
  CHECK(report.matched_score == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(report.permutation == std::vector<long>{2, 0, 1});
}

TEST_CASE("match_subspaces: invariant to per-subspace invertible linear maps") {
  Rng rng(6);
  std::vector<ValueGrid> sources;
  for (int i = 0; i < 2; ++i) sources.push_back(testutil::random_matrix(800, 2, rng));
  // learned_i = A_i source_i + b_i with well-conditioned A_i.
  std::vector<ValueGrid> learned;
  const double A0[4] = {2.0, 0.5, -0.3, 1.5};
  const double A1[4] = {0.8, -1.1, 0.4, 0.9};
  for (int i = 0; i < 2; ++i) {
    const double* A = i == 0 ? A0 : A1;
    ValueGrid g = ValueGrid::matrix(800, 2);
    for (long r = 0; r < 800; ++r) {
      g.at(r, 0) = A[0] * sources[i].at(r, 0) + A[1] * sources[i].at(r, 1) + 3.0;
      g.at(r, 1) = A[2] * sources[i].at(r, 0) + A[3] * sources[i].at(r, 1) - 1.0;
    }
    learned.push_back(std::move(g));
  }
  MatchReport report = match_subspaces(learned, sources);
  CHECK(report.matched_score == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(report.permutation == std::vector<long>{0, 1});

  // Joint row permutation leaves the score unchanged.
  std::vector<long> perm(800);
  for (long i = 0; i < 800; ++i) perm[static_cast<std::size_t>(i)] = i;
  rng.shuffle(perm);
  std::vector<ValueGrid> learned_perm, sources_perm;
  for (int i = 0; i < 2; ++i) {
    ValueGrid lp = ValueGrid::matrix(800, 2), sp = ValueGrid::matrix(800, 2);
    for (long r = 0; r < 800; ++r)
      for (long c = 0; c < 2; ++c) {
        lp.at(r, c) = learned[i].at(perm[static_cast<std::size_t>(r)], c);
        sp.at(r, c) = sources[i].at(perm[static_cast<std::size_t>(r)], c);
      }
    learned_perm.push_back(std::move(lp));
    sources_perm.push_back(std::move(sp));
  }
  MatchReport report2 = match_subspaces(learned_perm, sources_perm);
  CHECK(report2.matched_score == doctest::Approx(report.matched_score).epsilon(1e-6));
}

TEST_CASE("match_subspaces: independent noise scores below the null threshold") {
  Rng rng(7);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<ValueGrid> sources, learned;
    for (int i = 0; i < 2; ++i) {
      sources.push_back(testutil::random_matrix(10000, 2, rng));
      learned.push_back(testutil::random_matrix(10000, 2, rng));
    }
    worst = std::max(worst, match_subspaces(learned, sources).matched_score);
  }
  CHECK(worst < 0.25);
}

TEST_CASE("match_subspaces: no transposition improves the assignment") {
  Rng rng(8);
  std::vector<ValueGrid> sources, learned;
  for (int i = 0; i < 4; ++i) {
    sources.push_back(testutil::random_matrix(300, 2, rng));
    ValueGrid mix = ValueGrid::matrix(300, 2);
    // Mix each source with noise so affinities are nontrivial.
    ValueGrid noise = testutil::random_matrix(300, 2, rng);
    for (long r = 0; r < 300; ++r)
      for (long c = 0; c < 2; ++c) mix.at(r, c) = sources[i].at(r, c) + 0.8 * noise.at(r, c);
    learned.push_back(std::move(mix));
  }
  MatchReport report = match_subspaces(learned, sources);
  auto total = [&](const std::vector<long>& perm) {
    double s = 0.0;
    for (long i = 0; i < 4; ++i) s += report.affinity.at(i, perm[static_cast<std::size_t>(i)]);
    return s;
  };
  const double best = total(report.permutation);
  for (long a = 0; a < 4; ++a)
    for (long b = a + 1; b < 4; ++b) {
      std::vector<long> swapped = report.permutation;
      std::swap(swapped[static_cast<std::size_t>(a)], swapped[static_cast<std::size_t>(b)]);
      CHECK(total(swapped) <= best + 1e-12);
    }
}

TEST_CASE("max_assignment: augmenting-path solver agrees with exhaustive search") {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const long n = 5;
    ValueGrid affinity = ValueGrid::matrix(n, n);
    for (long i = 0; i < affinity.size(); ++i) affinity.at(i) = rng.u01();
    double exhaustive_total = 0.0;
    std::vector<long> exhaustive = max_assignment(affinity, &exhaustive_total);

    // Embed the same matrix into n=7 (exceeds the exhaustive cutoff) with a
    // diagonal block that forces the extra rows to map to the extra columns.
    ValueGrid big = ValueGrid::matrix(7, 7);
    for (long i = 0; i < 7; ++i)
      for (long j = 0; j < 7; ++j) {
        if (i < n && j < n) big.at(i, j) = affinity.at(i, j);
        else if (i >= n && j >= n) big.at(i, j) = (i == j) ? 100.0 : 0.0;
        else big.at(i, j) = -100.0;
      }
    double big_total = 0.0;
    std::vector<long> solved = max_assignment(big, &big_total);
    CHECK(big_total == doctest::Approx(exhaustive_total + 200.0).epsilon(1e-12));
    for (long i = 0; i < n; ++i) CHECK(solved[static_cast<std::size_t>(i)] == exhaustive[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("linear_probe: separable blobs reach 0.99") {
  Rng rng(10);
  const long N = 400;
  ValueGrid X = ValueGrid::matrix(N, 2);
  std::vector<long> labels(static_cast<std::size_t>(N));
  for (long i = 0; i < N; ++i) {
    const long cls = i % 2;
    labels[static_cast<std::size_t>(i)] = cls;
    X.at(i, 0) = rng.normal() * 0.3 + (cls == 0 ? -4.0 : 4.0);
    X.at(i, 1) = rng.normal() * 0.3;
  }
  CHECK(linear_probe(X, labels, 2, 1) >= 0.99);
}

TEST_CASE("linear_probe: one-hot features classify perfectly") {
  const long N = 90, C = 3;
  ValueGrid X = ValueGrid::matrix(N, C);
  std::vector<long> labels(static_cast<std::size_t>(N));
  for (long i = 0; i < N; ++i) {
    labels[static_cast<std::size_t>(i)] = i % C;
    X.at(i, i % C) = 1.0;
  }
  CHECK(linear_probe(X, labels, C, 2) == doctest::Approx(1.0));
}

TEST_CASE("linear_probe: shuffled labels sit at chance level") {
  Rng rng(11);
  const long N = 600, C = 3;
  ValueGrid X = testutil::random_matrix(N, 4, rng);
  std::vector<long> labels(static_cast<std::size_t>(N));
  for (long i = 0; i < N; ++i) labels[static_cast<std::size_t>(i)] = static_cast<long>(rng.index(C));
  const double acc = linear_probe(X, labels, C, 3);
  const double chance = 1.0 / C;
  const double sigma = std::sqrt(chance * (1 - chance) / (0.2 * N));
  CHECK(std::fabs(acc - chance) < 3.0 * sigma);
}

TEST_CASE("linear_probe: deterministic given the seed") {
  Rng rng(12);
  ValueGrid X = testutil::random_matrix(100, 3, rng);
  std::vector<long> labels(100);
  for (long i = 0; i < 100; ++i) labels[static_cast<std::size_t>(i)] = i % 2;
  CHECK(linear_probe(X, labels, 2, 42) == linear_probe(X, labels, 2, 42));
}

TEST_CASE("pooled_probe: disjoint pooled means give accuracy 1") {
  Rng rng(13);
  std::vector<ValueGrid> sequences;
  std::vector<long> labels;
  for (int i = 0; i < 20; ++i) {
    const long cls = i % 2;
    ValueGrid seq = ValueGrid::matrix(15, 3);
    for (long t = 0; t < 15; ++t)
      for (long c = 0; c < 3; ++c)
        seq.at(t, c) = 0.01 * rng.normal() + (cls == 0 ? -2.0 : 2.0);
    sequences.push_back(std::move(seq));
    labels.push_back(cls);
  }
  CHECK(pooled_probe(sequences, labels, 1) == doctest::Approx(1.0));
}

TEST_CASE("pooled_probe: identical class distributions sit near chance") {
  Rng rng(14);
  std::vector<ValueGrid> sequences;
  std::vector<long> labels;
  for (int i = 0; i < 60; ++i) {
    sequences.push_back(testutil::random_matrix(10, 2, rng));
    labels.push_back(i % 2);
  }
  const double acc = pooled_probe(sequences, labels, 2);
  CHECK(acc >= 0.0);
  CHECK(acc <= 0.95);  // anything near-perfect would mean leakage
}

TEST_CASE("pooled_probe: class with fewer than two sequences raises") {
  Rng rng(15);
  std::vector<ValueGrid> sequences;
  for (int i = 0; i < 5; ++i) sequences.push_back(testutil::random_matrix(6, 2, rng));
  std::vector<long> labels = {0, 0, 0, 0, 1};
  CHECK_THROWS_AS(pooled_probe(sequences, labels, 1), SpecError);
}

TEST_CASE("ablation_compare: identical runs have delta zero; unpaired seeds raise") {
  std::vector<std::pair<std::uint64_t, double>> a = {{1, 0.5}, {2, 0.25}, {3, 0.75}};
  AblationReport report = ablation_compare(a, a);
  CHECK(report.mean_delta == 0.0);
  for (const AblationDelta& d : report.per_seed) CHECK(d.delta == 0.0);

  std::vector<std::pair<std::uint64_t, double>> b = {{1, 0.5}, {2, 0.25}, {9, 0.75}};
  CHECK_THROWS_AS(ablation_compare(a, b), SpecError);
}

TEST_CASE("ablation_compare: signed deltas with paired seeds") {
  std::vector<std::pair<std::uint64_t, double>> lam = {{1, 0.10}, {2, 0.20}};
  std::vector<std::pair<std::uint64_t, double>> base = {{1, 0.30}, {2, 0.25}};
  AblationReport report = ablation_compare(lam, base);
  CHECK(report.mean_delta == doctest::Approx((-0.20 - 0.05) / 2.0));
}

TEST_CASE("split_subspaces: blocks reassemble the original matrix") {
  Rng rng(16);
  ValueGrid Y = testutil::random_matrix(7, 6, rng);
  std::vector<ValueGrid> subs = split_subspaces(Y, 3, 2);
  REQUIRE(subs.size() == 3);
  for (long i = 0; i < 3; ++i)
    for (long r = 0; r < 7; ++r)
      for (long c = 0; c < 2; ++c) CHECK(subs[static_cast<std::size_t>(i)].at(r, c) == Y.at(r, i * 2 + c));
  CHECK_THROWS_AS(split_subspaces(Y, 4, 2), DimError);
}
