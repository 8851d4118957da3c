#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "gmrf/features.hpp"
#include "gmrf/scene.hpp"

namespace gmrf {
namespace {

constexpr int kBlock = 19;  // mean, var, 16 bins, edge

TEST(ExtractFeatures, ConstantImage) {
  const auto f = extract_features(Image(10, 12, 1, 200));
  ASSERT_EQ(f.size(), static_cast<std::size_t>(feature_length()));
  for (int b = 0; b < 4; ++b) {
    EXPECT_NEAR(f[b * kBlock], 200.0 / 255.0, 1e-12);
    EXPECT_NEAR(f[b * kBlock + 1], 0.0, 1e-12);
    for (int k = 0; k < 16; ++k) EXPECT_EQ(f[b * kBlock + 2 + k], k == 200 / 16 ? 1.0 : 0.0);
    EXPECT_EQ(f[b * kBlock + 18], 0.0);
  }
}

TEST(ExtractFeatures, ShiftingAConstantImageOnlyMovesTheMeans) {
  const auto a = extract_features(Image(8, 8, 1, 161));
  const auto b = extract_features(Image(8, 8, 1, 170));  // same 16-level bin
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i % kBlock == 0) {
      EXPECT_NE(a[i], b[i]);
    } else {
      EXPECT_EQ(a[i], b[i]);
    }
  }
}

TEST(ExtractFeatures, ZeroImage) {
  const auto f = extract_features(Image(8, 8, 1, 0));
  for (int b = 0; b < 4; ++b) {
    EXPECT_EQ(f[b * kBlock], 0.0);
    EXPECT_EQ(f[b * kBlock + 18], 0.0);
  }
}

TEST(ExtractFeatures, CheckerboardIsAllEdges) {
  Image img(12, 10, 1);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 12; ++x) img.at(x, y) = (x + y) % 2 ? 255 : 0;
  const auto f = extract_features(img);
  for (int b = 0; b < 4; ++b) EXPECT_EQ(f[b * kBlock + 18], 1.0);
}

TEST(ExtractFeatures, HistogramsAreNormalizedAndEdgesBounded) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto f = extract_features(gen_scene(trial % 5, 20, 2, static_cast<std::uint64_t>(trial)));
    for (int b = 0; b < 4; ++b) {
      const double s = std::accumulate(f.begin() + b * kBlock + 2, f.begin() + b * kBlock + 18, 0.0);
      EXPECT_NEAR(s, 1.0, 1e-9);
      EXPECT_GE(f[b * kBlock + 18], 0.0);
      EXPECT_LE(f[b * kBlock + 18], 1.0);
    }
  }
}

TEST(ExtractFeatures, RejectsSmallImages) { EXPECT_THROW(extract_features(Image(7, 8)), InvalidArgument); }

TEST(ExtractFeatures, SceneClassesAreSeparable) {
  std::vector<std::vector<std::vector<double>>> by_class(kSceneClassCount);
  for (int c = 0; c < kSceneClassCount; ++c)
    for (int s = 0; s < 12; ++s) by_class[c].push_back(extract_features(gen_scene(c, 32, 1, static_cast<std::uint64_t>(s))));
  auto dist = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  };
  double intra = 0.0, inter = 0.0;
  int n_intra = 0, n_inter = 0;
  for (int c = 0; c < kSceneClassCount; ++c)
    for (int d = 0; d < kSceneClassCount; ++d)
      for (std::size_t i = 0; i < by_class[c].size(); ++i)
        for (std::size_t j = 0; j < by_class[d].size(); ++j) {
          if (c == d && i >= j) continue;
          const double v = dist(by_class[c][i], by_class[d][j]);
          if (c == d) {
            intra += v, ++n_intra;
          } else {
            inter += v, ++n_inter;
          }
        }
  EXPECT_GT(inter / n_inter, intra / n_intra);
}

TEST(FeaturesCsv, HeaderNamesEveryComponent) {
  std::ostringstream out;
  write_features_csv(out, {extract_features(Image(8, 8, 1, 3))});
  const std::string text = out.str();
  const std::string header = text.substr(0, text.find('\n'));
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), feature_length() - 1);
  EXPECT_EQ(header.rfind("b0_mean,b0_var,b0_hist0", 0), 0u);
}

TEST(SolveProjection, IdentityReturnsRhs) {
  const std::vector<double> x = {1.5, -2.0, 3.25};
  EXPECT_EQ(solve_projection({Matrix::identity(3), x}), x);
}

TEST(SolveProjection, VandermondeRoundTrip) {
  const Matrix z = {{1, 1, 1}, {1, 2, 3}, {1, 4, 9}};  // rows: node^k, k = 0..2
  const std::vector<double> h = {0.5, -1.25, 2.0};
  const auto x = z * h;
  const auto back = solve_projection({z, x});
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(back[i], h[i], 1e-9);
}

TEST(SolveProjection, DuplicatedRowIsSingular) {
  const Matrix z = {{1, 2, 3}, {4, 5, 6}, {1, 2, 3}};
  EXPECT_THROW(solve_projection({z, {1, 2, 3}}), NumericalError);
}

TEST(SolveProjection, ResidualBoundOnRandomWellConditionedSystems) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + trial % 9;
    Matrix z(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) z(i, j) = u(rng) + (i == j ? 3.0 : 0.0);  // diagonally dominant
    std::vector<double> x(n);
    for (double& v : x) v = 10.0 * u(rng);
    const auto h = solve_projection({z, x});
    const auto zx = z * h;
    double res = 0.0, xmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) res = std::max(res, std::abs(zx[i] - x[i])), xmax = std::max(xmax, std::abs(x[i]));
    EXPECT_LE(res, 1e-8 * (1.0 + xmax));
  }
}

Matrix columns(const std::vector<std::vector<double>>& cols) {
  Matrix m(cols[0].size(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < cols[j].size(); ++i) m(i, j) = cols[j][i];
  return m;
}

TEST(ClusterAndSelect, ScaledCopiesCollapseToOneCluster) {
  const std::vector<double> base = {0.3, 1.7, -0.2, 2.9, 0.8};
  std::vector<std::vector<double>> cols;
  for (double s : {1.0, 2.5, 0.1, 7.0}) {
    std::vector<double> c;
    for (double v : base) c.push_back(s * v + 3.0);
    cols.push_back(c);
  }
  for (double theta : {0.0, 0.5, 1.0}) {
    const auto r = cluster_and_select(columns(cols), theta);
    ASSERT_EQ(r.clusters.size(), 1u);
    EXPECT_EQ(r.selected, (std::vector<int>{0}));
  }
}

TEST(ClusterAndSelect, UncorrelatedFeaturesStaySeparate) {
  const auto r = cluster_and_select(columns({{1, -1, 1, -1}, {1, 1, -1, -1}}), 0.5);
  EXPECT_EQ(r.clusters.size(), 2u);
  EXPECT_EQ(r.selected, (std::vector<int>{0, 1}));
}

TEST(ClusterAndSelect, HighThresholdMergesNothing) {
  const auto r = cluster_and_select(columns({{1, 2, 3, 5}, {2, 1, 4, 3}, {0, 1, 0, 2}}), 0.999);
  EXPECT_EQ(r.clusters.size(), 3u);
  EXPECT_EQ(r.selected.size(), 3u);
}

TEST(ClusterAndSelect, ZeroVarianceFeatureIsRejected) {
  EXPECT_THROW(cluster_and_select(columns({{1, 2, 3}, {4, 4, 4}}), 0.5), InvalidArgument);
}

TEST(ClusterAndSelect, PartitionIsInvariantToColumnOrder) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    // Three latent factors, each observed through a few noisy copies.
    std::vector<std::vector<double>> cols(7, std::vector<double>(30));
    for (int i = 0; i < 30; ++i) {
      const double f[3] = {n01(rng), n01(rng), n01(rng)};
      for (int j = 0; j < 7; ++j) cols[j][i] = f[j % 3] + 0.3 * n01(rng);
    }
    const auto r = cluster_and_select(columns(cols), 0.6);
    std::vector<int> perm = {6, 3, 0, 5, 1, 4, 2};
    std::vector<std::vector<double>> shuffled;
    for (int p : perm) shuffled.push_back(cols[p]);
    const auto s = cluster_and_select(columns(shuffled), 0.6);
    // Map the shuffled clusters back to original indices and compare as sets.
    std::vector<std::vector<int>> mapped;
    for (const auto& c : s.clusters) {
      std::vector<int> m;
      for (int i : c) m.push_back(perm[i]);
      std::sort(m.begin(), m.end());
      mapped.push_back(m);
    }
    std::sort(mapped.begin(), mapped.end());
    auto original = r.clusters;
    std::sort(original.begin(), original.end());
    EXPECT_EQ(mapped, original);

    std::vector<int> seen;
    for (const auto& c : r.clusters) seen.insert(seen.end(), c.begin(), c.end());
    std::sort(seen.begin(), seen.end());
    EXPECT_EQ(seen, (std::vector<int>{0, 1, 2, 3, 4, 5, 6}));
    ASSERT_EQ(r.selected.size(), r.clusters.size());
    for (std::size_t k = 0; k < r.clusters.size(); ++k)
      EXPECT_NE(std::find(r.clusters[k].begin(), r.clusters[k].end(), r.selected[k]), r.clusters[k].end());
  }
}

// Grid search over w1 in steps of 0.01 for two criteria.
double grid_oracle(const ScoreTable& t) {
  double best = -INFINITY;
  for (int k = 0; k <= 100; ++k) {
    const std::vector<double> w = {k / 100.0, 1.0 - k / 100.0};
    best = std::max(best, weight_objective(t, w));
  }
  return best;
}

ScoreTable random_table(std::mt19937_64& rng, std::size_t n, std::size_t m) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix s(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) s(i, j) = u(rng) * (1.0 + j);
  return ScoreTable::from_scores(s);
}

TEST(OptimizeWeights, SingleCriterion) {
  const auto t = ScoreTable::from_scores(Matrix{{1.0}, {3.0}, {2.0}});
  const auto r = optimize_weights(t);
  EXPECT_EQ(r.weights, (std::vector<double>{1.0}));
  EXPECT_NEAR(r.objective, (0.0 + 2.0 + 1.0) / 2.0, 1e-12);
}

TEST(OptimizeWeights, IdenticalCriteriaKeepUniformWeights) {
  const auto t = ScoreTable::from_scores(Matrix{{1, 1}, {4, 4}, {2, 2}});
  const auto r = optimize_weights(t);
  EXPECT_EQ(r.weights, (std::vector<double>{0.5, 0.5}));
}

TEST(OptimizeWeights, DominantCriterionWins) {
  // Normalized scores: criterion 0 -> (1, 0.9, 0.8, 0), criterion 1 -> (1, 0.1, 0.2, 0).
  const auto t = ScoreTable::from_scores(Matrix{{10, 5}, {9, 1}, {8, 1.8}, {0, 0}});
  const auto r = optimize_weights(t);
  EXPECT_NEAR(r.weights[0], 1.0, 0.02);
  EXPECT_NEAR(r.objective, grid_oracle(t), 1e-3);
}

TEST(OptimizeWeights, MatchesGridOracleAndStaysOnSimplex) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = random_table(rng, 6 + trial % 5, 2);
    const auto r = optimize_weights(t);
    EXPECT_NEAR(r.objective, grid_oracle(t), 1e-3);
    EXPECT_NEAR(r.weights[0] + r.weights[1], 1.0, 1e-9);
    EXPECT_GE(std::min(r.weights[0], r.weights[1]), 0.0);
    EXPECT_GE(r.objective, weight_objective(t, std::vector<double>{0.5, 0.5}));
  }
}

TEST(OptimizeWeights, InvariantUnderPerCriterionAffineRescaling) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> scale(0.5, 1000.0), shift(-50.0, 50.0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto t = random_table(rng, 8, 3);
    Matrix s = t.scores;
    for (std::size_t j = 0; j < 3; ++j) {
      const double a = scale(rng), b = shift(rng);
      for (std::size_t i = 0; i < s.rows(); ++i) s(i, j) = a * s(i, j) + b;
    }
    EXPECT_NEAR(optimize_weights(ScoreTable::from_scores(s)).objective, optimize_weights(t).objective, 1e-6);
  }
}

TEST(OptimizeWeights, RejectsZeroRangeCriterion) {
  EXPECT_THROW(optimize_weights(ScoreTable::from_scores(Matrix{{1, 2}, {3, 2}})), InvalidArgument);
}

TEST(QpStep, UnconstrainedIdentityIsNegativeGradient) {
  QpSubproblem sub{{1.0, -2.0, 0.5}, Matrix::identity(3), {}, {}};
  const auto d = qp_step(sub, 0.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(d[i], -sub.g[i]);
}

TEST(QpStep, DampedZeroHessianIsNegativeGradient) {
  QpSubproblem sub{{3.0, -1.0}, Matrix(2, 2), {}, {}};
  const auto d = qp_step(sub, 1.0);
  EXPECT_DOUBLE_EQ(d[0], -3.0);
  EXPECT_DOUBLE_EQ(d[1], 1.0);
  EXPECT_THROW(qp_step(sub, 0.0), NumericalError);
}

TEST(QpStep, EqualityConstrainedMatchesClosedFormKkt) {
  // min g.d + |d|^2/2  s.t.  h + a.d = 0  =>  d = -g - nu a,  nu = (h - a.g) / (a.a)
  const std::vector<double> g = {1.0, 2.0}, a = {1.0, 1.0};
  const double h = 0.5;
  QpSubproblem sub{g, Matrix::identity(2), {}, {{h, a}}};
  const auto d = qp_step(sub, 0.0);
  const double nu = (h - dot(a, g)) / dot(a, a);
  EXPECT_NEAR(d[0], -g[0] - nu * a[0], 1e-12);
  EXPECT_NEAR(d[1], -g[1] - nu * a[1], 1e-12);
  EXPECT_NEAR(h + dot(a, d), 0.0, 1e-8);
}

TEST(QpStep, ViolatedInequalityBecomesActive) {
  // Unconstrained step is (-1, 0); the inequality d0 >= -0.25 cuts it off.
  QpSubproblem sub{{1.0, 0.0}, Matrix::identity(2), {{-0.25, {-1.0, 0.0}}}, {}};
  const auto d = qp_step(sub, 0.0);
  EXPECT_NEAR(d[0], -0.25, 1e-12);
  EXPECT_NEAR(d[1], 0.0, 1e-12);
  // An inactive inequality leaves the step alone.
  QpSubproblem loose{{1.0, 0.0}, Matrix::identity(2), {{-5.0, {-1.0, 0.0}}}, {}};
  EXPECT_NEAR(qp_step(loose, 0.0)[0], -1.0, 1e-12);
}

TEST(QpStep, InfeasibleAndSingularCasesAreErrors) {
  QpSubproblem dependent{{1.0, 1.0}, Matrix::identity(2), {}, {{0.0, {1.0, 1.0}}, {1.0, {2.0, 2.0}}}};
  EXPECT_THROW(qp_step(dependent, 0.0), NumericalError);
  // d0 = 0 is forced, but d0 >= 1 is also required.
  QpSubproblem infeasible{{0.0, 0.0}, Matrix::identity(2), {{1.0, {-1.0, 0.0}}, {1.0, {-1.0, 0.0}}},
                          {{0.0, {1.0, 0.0}}}};
  EXPECT_THROW(qp_step(infeasible, 0.0), NumericalError);
}

TEST(QpStep, RandomStepsSatisfyEqualitiesAndDescend) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + trial % 4;
    Matrix b(n, n), h(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) b(i, j) = u(rng);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) h(i, j) += b(k, i) * b(k, j);
        if (i == j) h(i, j) += 0.5;
      }
    std::vector<double> g(n);
    for (double& v : g) v = u(rng);
    QpSubproblem sub{g, h, {}, {}};
    const auto d = qp_step(sub, default_damping(h));
    EXPECT_LT(dot(g, d), 0.0);

    std::vector<double> a(n);
    for (double& v : a) v = u(rng);
    sub.equalities.push_back({0.3 * u(rng), a});
    const auto dc = qp_step(sub, default_damping(h));
    EXPECT_NEAR(sub.equalities[0].value + dot(a, dc), 0.0, 1e-8);
  }
}

}  // namespace
}  // namespace gmrf
