#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "gmrf/energy.hpp"
#include "gmrf/games.hpp"
#include "gmrf/smoothness.hpp"
#include "gmrf/solvers.hpp"
#include "oracles.hpp"

namespace gmrf {
namespace {

using testing::brute_force_min;
using testing::naive_energy;
using testing::random_labels;
using testing::random_model;

EnergyModel model_from(int w, int h, std::vector<std::vector<double>> rows, double beta,
                       PriorKind prior = PriorKind::kPotts) {
  CostTable c(rows.size(), static_cast<int>(rows[0].size()));
  for (std::size_t p = 0; p < rows.size(); ++p)
    for (std::size_t l = 0; l < rows[p].size(); ++l) c(p, static_cast<int>(l)) = rows[p][l];
  return EnergyModel(w, h, std::move(c), beta, prior);
}

std::vector<int> to_vector(const LabelField& f) { return {f.labels().begin(), f.labels().end()}; }

// Asserts that every zero-temperature row of a trace is no higher than its predecessor.
void expect_greedy_descent(const std::vector<TraceRow>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i].temperature != 0.0 || trace[i - 1].temperature != 0.0) continue;
    ASSERT_LE(trace[i].energy, trace[i - 1].energy);
  }
}

TEST(EnergyOf, DataOnlyWhenBetaIsZero) {
  const auto m = model_from(2, 1, {{1.0, 2.0}, {3.0, 5.0}}, 0.0);
  EXPECT_DOUBLE_EQ(energy_of(m, LabelField(2, 1, 2, std::vector<int>{1, 0})), 5.0);
}

TEST(EnergyOf, PottsPairTerm) {
  const auto m = model_from(2, 1, {{0.0, 0.0}, {0.0, 0.0}}, 1.5);
  EXPECT_DOUBLE_EQ(energy_of(m, LabelField(2, 1, 2, std::vector<int>{1, 1})), 0.0);
  EXPECT_DOUBLE_EQ(energy_of(m, LabelField(2, 1, 2, std::vector<int>{0, 1})), 1.5);
}

TEST(EnergyOf, MatchesNaiveReferenceOnRandomInstances) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto prior = trial % 2 ? PriorKind::kQuadratic : PriorKind::kPotts;
    const auto m = random_model(rng, 4, 4, 3, prior);
    const auto labels = random_labels(rng, 4, 4, 3);
    EXPECT_NEAR(energy_of(m, labels), naive_energy(m, to_vector(labels)), 1e-12);
  }
}

TEST(EnergyOf, RejectsMismatchedLabels) {
  const auto m = model_from(2, 1, {{0.0, 0.0}, {0.0, 0.0}}, 1.0);
  EXPECT_THROW(energy_of(m, LabelField(1, 2, 2)), InvalidArgument);
  EXPECT_THROW(energy_of(m, LabelField(2, 1, 3)), InvalidArgument);
}

TEST(EnergyModel, RejectsInvalidParameters) {
  CostTable c(2, 2);
  EXPECT_THROW(EnergyModel(2, 1, c, -1.0, PriorKind::kPotts), InvalidArgument);
  EXPECT_THROW(EnergyModel(3, 1, c, 1.0, PriorKind::kPotts), InvalidArgument);
  c(0, 0) = INFINITY;
  EXPECT_THROW(EnergyModel(2, 1, c, 1.0, PriorKind::kPotts), InvalidArgument);
}

TEST(BestResponseSweep, DecoupledPlayersReachArgminInOneSweep) {
  std::mt19937_64 rng(2);
  auto m = random_model(rng, 5, 4, 3);
  m = EnergyModel(5, 4, m.data_costs(), 0.0, PriorKind::kPotts);
  auto first = best_response_sweep(m, random_labels(rng, 5, 4, 3));
  EXPECT_EQ(first.labels, pointwise_argmin(m));
  EXPECT_EQ(best_response_sweep(m, first.labels).changed, 0);
}

TEST(BestResponseSweep, UniformCostsConstantLabelingIsStable) {
  CostTable c(9, 3, 0.25);
  const EnergyModel m(3, 3, c, 0.7, PriorKind::kPotts);
  EXPECT_EQ(best_response_sweep(m, LabelField(3, 3, 3, 2)).changed, 0);
}

TEST(BestResponseSweep, TwoPixelGameMatchesEnumeration) {
  const auto m = model_from(2, 1, {{0.0, 10.0}, {10.0, 0.0}}, 1.0);
  const auto r = best_response_sweep(m, LabelField(2, 1, 2, 0));
  EXPECT_EQ(to_vector(r.labels), (std::vector<int>{0, 1}));
  EXPECT_EQ(to_vector(exhaustive_oracle(m).labels), (std::vector<int>{0, 1}));
  EXPECT_DOUBLE_EQ(brute_force_min(m), 1.0);
}

TEST(BestResponseSweep, NeverIncreasesEnergyInEitherOrder) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = random_model(rng, 6, 5, 3, trial % 2 ? PriorKind::kQuadratic : PriorKind::kPotts);
    LabelField labels = random_labels(rng, 6, 5, 3);
    for (SweepOrder order : {SweepOrder::kRaster, SweepOrder::kCheckerboard}) {
      const double before = energy_of(m, labels);
      auto r = best_response_sweep(m, labels, order);
      const double after = energy_of(m, r.labels);
      ASSERT_LE(after, before);
      if (r.changed > 0) {
        ASSERT_LT(after, before);
      }
    }
  }
}

TEST(BestResponseSweep, TiesKeepCurrentThenPreferLowestIndex) {
  const auto m = model_from(1, 1, {{1.0, 0.5, 0.5, 0.5}}, 0.0);
  EXPECT_EQ(best_response_sweep(m, LabelField(1, 1, 4, 3)).labels[0], 3);
  EXPECT_EQ(best_response_sweep(m, LabelField(1, 1, 4, 0)).labels[0], 1);
}

TEST(SolveIcm, DecoupledPlayersConvergeInTwoSweeps) {
  std::mt19937_64 rng(4);
  const auto base = random_model(rng, 4, 4, 3);
  const EnergyModel m(4, 4, base.data_costs(), 0.0, PriorKind::kPotts);
  const auto r = solve_icm(m, random_labels(rng, 4, 4, 3));
  EXPECT_EQ(r.labels, pointwise_argmin(m));
  EXPECT_LE(r.trace.size() - 1, 2u);
  EXPECT_TRUE(r.converged);
}

TEST(SolveIcm, OutputIsNashAndBoundedByGlobalMinimum) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = random_model(rng, 3, 3, 2);
    GameConfig cfg;
    cfg.order = trial % 2 ? SweepOrder::kCheckerboard : SweepOrder::kRaster;
    const auto r = solve_icm(m, random_labels(rng, 3, 3, 2), cfg);
    ASSERT_TRUE(r.converged);
    ASSERT_TRUE(nash_check(m, r.labels).is_nash);
    expect_greedy_descent(r.trace);
    for (std::size_t i = 2; i < r.trace.size(); ++i) {
      if (r.trace[i].changed > 0) {
        ASSERT_LT(r.trace[i].energy, r.trace[i - 1].energy);
      }
    }
    ASSERT_GE(energy_of(m, r.labels), brute_force_min(m) - 1e-12);
  }
}

TEST(SiteDistribution, HotLimitIsUniform) {
  std::mt19937_64 rng(6);
  const auto m = random_model(rng, 3, 3, 4);
  const auto labels = random_labels(rng, 3, 3, 4);
  const auto probs = site_distribution(m, labels, 4, 1e12);
  std::vector<int> counts(4, 0);
  std::mt19937_64 draws(7);
  for (int i = 0; i < 10000; ++i) ++counts[static_cast<std::size_t>(sample_label(probs, draws))];
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - 2500.0) * (c - 2500.0) / 2500.0;
  EXPECT_LT(chi2, 16.27);  // chi-square, 3 dof, p = 0.001
}

TEST(SiteDistribution, ColdLimitIsGreedy) {
  std::mt19937_64 rng(8);
  const auto m = random_model(rng, 3, 3, 4);
  const auto labels = random_labels(rng, 3, 3, 4);
  for (std::size_t p = 0; p < 9; ++p) {
    const auto probs = site_distribution(m, labels, p, 1e-9);
    int argmin = 0;
    for (int l = 1; l < 4; ++l)
      if (m.local_energy(labels, p, l) < m.local_energy(labels, p, argmin)) argmin = l;
    double off = 0.0;
    for (int l = 0; l < 4; ++l)
      if (l != argmin) {
        off += probs[static_cast<std::size_t>(l)];
      }
    EXPECT_LT(off, 1e-6);
  }
}

TEST(SolveAnneal, FindsGlobalMinimumOnSmallInstances) {
  std::mt19937_64 rng(9);
  GameConfig cfg;
  cfg.max_sweeps = 60;
  int hits = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = random_model(rng, 3, 3, 2);
    cfg.seed = static_cast<std::uint64_t>(trial);
    const auto r = solve_anneal(m, LabelField(3, 3, 2, 0), cfg);
    ASSERT_TRUE(nash_check(m, r.labels).is_nash);
    expect_greedy_descent(r.trace);
    if (energy_of(m, r.labels) <= brute_force_min(m) + 1e-12) ++hits;
  }
  EXPECT_GE(hits, 95);
}

TEST(SolveAnneal, IsReproducibleForAFixedSeed) {
  std::mt19937_64 rng(10);
  const auto m = random_model(rng, 5, 5, 3);
  GameConfig cfg;
  cfg.seed = 77;
  const auto a = solve_anneal(m, LabelField(5, 5, 3, 0), cfg);
  const auto b = solve_anneal(m, LabelField(5, 5, 3, 0), cfg);
  EXPECT_EQ(a.labels, b.labels);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) EXPECT_EQ(a.trace[i].energy, b.trace[i].energy);
}

TEST(GameConfig, RejectsBadSchedule) {
  const auto m = model_from(1, 1, {{0.0, 1.0}}, 0.0);
  GameConfig cfg;
  cfg.schedule.decay = 1.0;
  EXPECT_THROW(solve_anneal(m, LabelField(1, 1, 2), cfg), InvalidArgument);
  cfg.schedule.decay = 0.5;
  cfg.schedule.t0 = 0.0;
  EXPECT_THROW(solve_anneal(m, LabelField(1, 1, 2), cfg), InvalidArgument);
}

TEST(NashCheck, SinglePixelAtArgmin) {
  const auto m = model_from(1, 1, {{0.3, 0.1, 0.2}}, 2.0);
  EXPECT_TRUE(nash_check(m, LabelField(1, 1, 3, 1)).is_nash);
  const auto bad = nash_check(m, LabelField(1, 1, 3, 0));
  ASSERT_FALSE(bad.is_nash);
  EXPECT_EQ(bad.witness->better_label, 1);
}

TEST(NashCheck, GlobalMinimizerIsNashAndFlipsAreCaught) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const auto m = random_model(rng, 3, 3, 2);
    const auto best = exhaustive_oracle(m);
    ASSERT_TRUE(nash_check(m, best.labels).is_nash);
    // Flip pixel 0 (first in raster order) to its other label; if that is
    // strictly worse, pixel 0 must be the reported witness.
    LabelField flipped = best.labels;
    flipped.set(0, 1 - flipped[0]);
    if (energy_of(m, flipped) > best.energy) {
      const auto r = nash_check(m, flipped);
      ASSERT_FALSE(r.is_nash);
      EXPECT_EQ(r.witness->pixel, 0u);
      EXPECT_EQ(r.witness->better_label, best.labels[0]);
    }
  }
}

TEST(NashCheck, ScalingCostsAndBetaPreservesEquilibria) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = random_model(rng, 3, 2, 2);
    CostTable scaled = m.data_costs();
    CostTable copy(scaled.sites(), scaled.labels());
    for (std::size_t p = 0; p < scaled.sites(); ++p)
      for (int l = 0; l < scaled.labels(); ++l) copy(p, l) = 2.5 * scaled(p, l);
    const EnergyModel s(3, 2, copy, 2.5 * m.beta(), m.prior());
    for (int code = 0; code < 64; ++code) {
      std::vector<int> v;
      for (int i = 0; i < 6; ++i) v.push_back((code >> i) & 1);
      const LabelField f(3, 2, 2, v);
      ASSERT_EQ(nash_check(m, f).is_nash, nash_check(s, f).is_nash);
    }
  }
}

TEST(ExhaustiveOracle, TrivialCases) {
  const auto one = model_from(1, 1, {{0.4, 0.2, 0.9}}, 1.0);
  EXPECT_EQ(exhaustive_oracle(one).labels[0], 1);
  EXPECT_DOUBLE_EQ(exhaustive_oracle(one).energy, 0.2);

  std::mt19937_64 rng(13);
  const auto base = random_model(rng, 3, 3, 3);
  const EnergyModel decoupled(3, 3, base.data_costs(), 0.0, PriorKind::kPotts);
  EXPECT_EQ(exhaustive_oracle(decoupled).labels, pointwise_argmin(decoupled));
}

TEST(ExhaustiveOracle, AgreesWithRecursiveEnumeration) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = random_model(rng, 3, 3, 2, trial % 2 ? PriorKind::kQuadratic : PriorKind::kPotts);
    const auto r = exhaustive_oracle(m);
    ASSERT_NEAR(r.energy, brute_force_min(m), 1e-12);
    ASSERT_DOUBLE_EQ(r.energy, energy_of(m, r.labels));
  }
}

TEST(ExhaustiveOracle, BreaksTiesLexicographically) {
  CostTable c(4, 2, 0.0);
  const EnergyModel m(2, 2, c, 0.0, PriorKind::kPotts);
  EXPECT_EQ(exhaustive_oracle(m).labels, LabelField(2, 2, 2, 0));
}

TEST(ExhaustiveOracle, RejectsLargeInstances) {
  CostTable c(21, 2, 0.0);
  const EnergyModel m(7, 3, c, 0.0, PriorKind::kPotts);
  EXPECT_THROW(exhaustive_oracle(m), InvalidArgument);
}

TEST(Ellipticity, ClosedFormCases) {
  EXPECT_TRUE(ellipticity_check(SmoothnessField::uniform(3, 3, {1, 0, 1}, 1.0)));
  auto indefinite = SmoothnessField::uniform(3, 3, {1, 0, 1}, 1e-6);
  indefinite.coeffs[4] = {1, 0, -1};
  EXPECT_FALSE(ellipticity_check(indefinite));
  EXPECT_TRUE(ellipticity_check(SmoothnessField::uniform(2, 2, {2, 1, 2}, 1.0)));
  EXPECT_FALSE(ellipticity_check(SmoothnessField::uniform(2, 2, {2, 1, 2}, 1.5)));
}

TEST(Ellipticity, AgreesWithQuadraticFormSampling) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Sym2 a{u(rng), u(rng), u(rng)};
    const double eps = std::abs(u(rng)) / 2.0 + 1e-3;
    // Minimum of xi^T a xi over the unit circle, sampled finely.
    double lo = INFINITY;
    for (int k = 0; k < 20000; ++k) {
      const double t = 2.0 * 3.14159265358979323846 * k / 20000.0;
      const double c = std::cos(t), s = std::sin(t);
      lo = std::min(lo, a.xx * c * c + 2 * a.xy * c * s + a.yy * s * s);
    }
    if (std::abs(lo - eps) < 1e-6) continue;
    EXPECT_EQ(ellipticity_check(SmoothnessField::uniform(1, 1, a, eps)), lo >= eps);
  }
}

TEST(SmoothnessResidual, AnnihilatesConstantAndLinearFields) {
  const int w = 7, h = 6;
  const auto field = SmoothnessField::uniform(w, h, {1.3, 0.4, 0.9}, 0.1);
  std::vector<double> constant(w * h, 4.2), linear(w * h), quadratic(w * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      linear[y * w + x] = 0.5 * x - 2.0 * y + 1.0;
      quadratic[y * w + x] = x * x;
    }
  for (double r : smoothness_residual(field, constant)) EXPECT_NEAR(r, 0.0, 1e-9);
  for (double r : smoothness_residual(field, linear)) EXPECT_NEAR(r, 0.0, 1e-9);

  const auto identity = SmoothnessField::uniform(w, h, {}, 0.5);
  const auto res = smoothness_residual(identity, quadratic);
  for (int y = 1; y + 1 < h; ++y)
    for (int x = 1; x + 1 < w; ++x) EXPECT_NEAR(res[y * w + x], 2.0, 1e-9);
}

TEST(SmoothnessResidual, IsLinearInTheField) {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int w = 6, h = 5;
  SmoothnessField f = SmoothnessField::uniform(w, h, {}, 0.1);
  for (Sym2& a : f.coeffs) a = {1.5 + u(rng) * 0.3, u(rng) * 0.3, 1.5 + u(rng) * 0.3};
  std::vector<double> a(w * h), b(w * h), sum(w * h);
  for (int i = 0; i < w * h; ++i) a[i] = u(rng), b[i] = u(rng), sum[i] = a[i] + b[i];
  const auto ra = smoothness_residual(f, a), rb = smoothness_residual(f, b), rs = smoothness_residual(f, sum);
  for (int i = 0; i < w * h; ++i) EXPECT_NEAR(rs[i], ra[i] + rb[i], 1e-9);
}

TEST(SmoothnessResidual, RejectsNonEllipticField) {
  auto f = SmoothnessField::uniform(3, 3, {1, 0, -1}, 0.1);
  EXPECT_THROW(smoothness_residual(f, std::vector<double>(9, 0.0)), InvalidArgument);
}

// Two vertical halves with intensities from well-separated Gaussians plus 10% salt.
struct TwoRegion {
  Image img;
  std::vector<int> truth;
};

TwoRegion two_region_image(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dark(60.0, 12.0), bright(190.0, 12.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TwoRegion out{Image(24, 24, 1), {}};
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 24; ++x) {
      const int cls = x < 12 ? 0 : 1;
      double v = cls ? bright(rng) : dark(rng);
      if (u(rng) < 0.1) v = 255.0;
      out.img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
      out.truth.push_back(cls);
    }
  return out;
}

TEST(SegmentationGame, PriorImprovesAccuracyUnderSaltNoise) {
  const TwoRegion scene = two_region_image(21);
  const GmmParams params = fit_gmm(normalized_intensities(scene.img), 2, 1e-8, 200).params;
  ASSERT_LT(params.means[0], params.means[1]);
  auto accuracy = [&](const LabelField& f) {
    int ok = 0;
    for (std::size_t p = 0; p < f.size(); ++p) ok += f[p] == scene.truth[p];
    return static_cast<double>(ok) / static_cast<double>(f.size());
  };
  const auto flat = build_segmentation_game(scene.img, params, 0.0, PriorKind::kPotts);
  const auto smooth = build_segmentation_game(scene.img, params, 1.0, PriorKind::kPotts);
  EXPECT_TRUE(flat.data_costs().all_finite());
  const LabelField ml = pointwise_argmin(flat);
  EXPECT_EQ(solve_icm(flat, ml).labels, ml);
  const auto r = solve_icm(smooth, ml);
  EXPECT_GE(accuracy(r.labels), accuracy(ml));
  // Isolated salt pixels flip once the prior outweighs their data-cost gap.
  const auto strong = build_segmentation_game(scene.img, params, 80.0, PriorKind::kPotts);
  EXPECT_GT(accuracy(solve_icm(strong, ml).labels), accuracy(ml) + 0.03);
  EXPECT_TRUE(nash_check(smooth, r.labels).is_nash);
}

Image textured(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> v(0, 255);
  Image img(size, size, 1);
  for (auto& p : img.pixels()) p = static_cast<std::uint8_t>(v(rng));
  return img;
}

Image shifted(const Image& fixed, int dx, int dy) {
  Image out(fixed.width(), fixed.height(), 1);
  for (int y = 0; y < fixed.height(); ++y)
    for (int x = 0; x < fixed.width(); ++x) out.at(x, y) = fixed.clamped(x - dx, y - dy);
  return out;
}

TEST(RegistrationGame, IdenticalImagesPreferZeroDisplacement) {
  const Image img = textured(10, 1);
  const auto set = DisplacementLabelSet::square(1);
  const auto m = build_registration_game(img, img, set, 0.0, SmoothnessField::uniform(10, 10));
  const int zero = set.index_of({0, 0});
  for (std::size_t p = 0; p < m.sites(); ++p) EXPECT_EQ(m.data(p, zero), 0.0);
}

TEST(RegistrationGame, RecoversIntegerShiftWithoutPrior) {
  const Image fixed = textured(16, 2);
  const Image moving = shifted(fixed, 1, 0);
  const auto set = DisplacementLabelSet::square(2);
  const auto m = build_registration_game(fixed, moving, set, 0.0, SmoothnessField::uniform(16, 16));
  const int truth = set.index_of({1, 0});
  const LabelField labels = pointwise_argmin(m);
  int unique = 0;
  for (int y = 2; y < 14; ++y)
    for (int x = 2; x < 14; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * 16 + x;
      EXPECT_EQ(m.data(p, truth), 0.0);
      EXPECT_EQ(m.data(p, labels[p]), 0.0);
      // Single-pixel differences can collide; where no other offset matches
      // exactly, the argmin is the true shift.
      bool others_positive = true;
      for (int l = 0; l < set.size(); ++l)
        if (l != truth && m.data(p, l) == 0.0) {
          others_positive = false;
        }
      if (others_positive) {
        ++unique;
        EXPECT_EQ(labels[p], truth);
      }
    }
  EXPECT_GT(unique, 100);
}

TEST(RegistrationGame, FlatImagesTieButSolverStillReachesNash) {
  const Image flat(8, 8, 1, 100);
  const auto set = DisplacementLabelSet::square(1);
  const auto m = build_registration_game(flat, flat, set, 0.5, SmoothnessField::uniform(8, 8));
  std::mt19937_64 rng(3);
  const auto r = solve_icm(m, random_labels(rng, 8, 8, set.size()));
  EXPECT_TRUE(nash_check(m, r.labels).is_nash);
}

TEST(RegistrationGame, RejectsMismatchedInputs) {
  const auto set = DisplacementLabelSet::square(1);
  EXPECT_THROW(build_registration_game(Image(4, 4), Image(5, 4), set, 0.5, SmoothnessField::uniform(4, 4)),
               InvalidArgument);
  EXPECT_THROW(build_registration_game(Image(4, 4), Image(4, 4), set, 0.5,
                                       SmoothnessField::uniform(4, 4, {1, 0, -1})),
               InvalidArgument);
}

TEST(RegistrationGame, PriorWeightsFollowTheSmoothnessField) {
  const Image img = textured(4, 3);
  const auto set = DisplacementLabelSet::square(1);
  const auto m = build_registration_game(img, img, set, 1.0, SmoothnessField::uniform(4, 4, {2.0, 0.0, 3.0}));
  std::vector<int> v(16, set.index_of({0, 0}));
  v[0] = set.index_of({1, 1});
  const LabelField f(4, 4, set.size(), v);
  EXPECT_NEAR(energy_of(m, f), naive_energy(m, v), 1e-12);
  // pixel 0 has one horizontal (weight 2) and one vertical (weight 3) edge, each ||(1,1)||^2 = 2
  EXPECT_NEAR(energy_of(m, f) - m.data(0, v[0]), 2.0 * 2.0 + 3.0 * 2.0, 1e-12);
}

}  // namespace
}  // namespace gmrf
