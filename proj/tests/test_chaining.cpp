#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <memory>
#include <vector>

#include "sudakov/chaining.hpp"
#include "sudakov/families.hpp"
#include "sudakov/minoration.hpp"

using namespace sudakov;

namespace {

// ||g||_r for a standard Gaussian g
double gaussian_norm(double r) {
  return std::sqrt(2.0) * std::exp((std::lgamma((r + 1.0) / 2.0) - std::lgamma(0.5)) / r);
}

struct Owned {
  std::unique_ptr<ProductMeasure> m;
  CubeSet cube;
};

Owned cube(const std::string& fam, std::size_t d, double p, std::uint64_t seed) {
  Owned o;
  o.m = std::make_unique<ProductMeasure>(family_measure(fam, d));
  RngStream rng(seed, 0);
  o.cube = generate_cube_set(*o.m, p, p, Constants{}, rng);
  return o;
}

std::vector<std::vector<double>> random_points(RngStream& rng, std::size_t count, std::size_t d,
                                               std::size_t max_support) {
  std::vector<std::vector<double>> pts;
  for (std::size_t a = 0; a < count; ++a) {
    std::vector<double> x(d, 0.0);
    const std::size_t s = 1 + rng.below(max_support);
    for (std::size_t c = 0; c < s; ++c) x[rng.below(d)] = rng.normal();
    pts.push_back(std::move(x));
  }
  return pts;
}

}  // namespace

TEST(DistanceFamily, SingletonIsZero) {
  auto m = family_measure("mixed", 15);
  PointSet T(m, {std::vector<double>(15, 0.3)});
  auto F = build_distance_family(T, {});
  for (std::size_t n = 0; n <= F.n_max; ++n) EXPECT_EQ(F.d(n, 0, 0), 0.0);
  EXPECT_EQ(gamma_functional(F).gamma, 0.0);
  EXPECT_EQ(gamma_exhaustive(F), 0.0);
  auto ts = two_sided_compare(T, F, 2000, RngStream(1, 0));
  EXPECT_TRUE(ts.degenerate);
  EXPECT_EQ(ts.ratio, 1.0);
  auto c = concentration_probe(T, 3.0, 2000, RngStream(1, 1));
  EXPECT_EQ(c.L_lower, 0.0);
  EXPECT_EQ(c.spread, 0.0);
}

TEST(DistanceFamily, TwoGaussianPointsClosedForm) {
  auto m = family_measure("gaussian", 4);
  PointSet T(m, {{0.0, 1.5, 0.0, 0.0}, {0.0, -0.5, 0.0, 0.0}});
  DistanceOptions o;
  o.n_max = 5;
  auto F = build_distance_family(T, o);
  for (std::size_t n = 0; n <= 5; ++n) {
    const double want = 2.0 * gaussian_norm(std::ldexp(1.0, static_cast<int>(n)));
    EXPECT_NEAR(F.d(n, 0, 1), want, 1e-9 * want) << n;
  }
  // levels above n_max double
  EXPECT_DOUBLE_EQ(F.d(7, 0, 1), 4.0 * F.d(5, 0, 1));
  auto g = gamma_functional(F);
  EXPECT_DOUBLE_EQ(g.gamma, F.d(0, 0, 1));
  EXPECT_EQ(g.tree.levels.size(), 2u);
}

TEST(DistanceFamily, McMatchesSurrogateForGaussian) {
  auto m = family_measure("gaussian", 3);
  PointSet T(m, {{0.0, 0.0, 0.0}, {0.6, 0.8, 0.0}});
  DistanceOptions o;
  o.n_max = 3;
  o.source = DistanceSource::mc;
  o.samples = 400000;
  o.rng = RngStream(2, 0);
  auto F = build_distance_family(T, o);
  for (std::size_t n = 0; n <= 3; ++n) {
    const double want = gaussian_norm(std::ldexp(1.0, static_cast<int>(n)));
    EXPECT_NEAR(F.d(n, 0, 1) / want, 1.0, 0.02) << n;
  }
}

TEST(DistanceFamily, McRefusesHighLevelsWithoutSamples) {
  auto m = family_measure("gaussian", 3);
  PointSet T(m, {{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}});
  DistanceOptions o;
  o.source = DistanceSource::mc;
  o.n_max = 5;
  o.samples = 100000;
  EXPECT_THROW(build_distance_family(T, o), ConfigError);
  o.n_max = 4;
  o.samples = 500;
  EXPECT_THROW(build_distance_family(T, o), ConfigError);
  EXPECT_THROW(distance_source_from_string("exact"), ConfigError);
}

TEST(DistanceFamily, DoublingAndTriangleAcrossFamilies) {
  std::uint64_t seed = 10;
  for (const auto& fam : standard_families()) {
    auto o = cube(fam, 64, 3.0, ++seed);
    auto F = build_distance_family(o.cube.set, {});
    auto rep = check_regularity(F);
    EXPECT_LE(rep.max_ratio, 2.0 * (1 + 1e-12)) << fam;
    EXPECT_TRUE(rep.doubling_ok) << fam;
    EXPECT_LE(rep.triangle_defect, 1e-9) << fam;
    EXPECT_GT(rep.eps_hat, 0.1) << fam;
  }
}

TEST(Regularity, GaussianRatioIsGammaRatio) {
  auto m = family_measure("gaussian", 8);
  PointSet T(m, {std::vector<double>(8, 0.0), {1, 0, 0, 0, 0, 0, 0, 0}, {0, 2, 0, 0, 0, 0, 0, 0}});
  DistanceOptions o;
  o.n_max = 4;
  auto F = build_distance_family(T, o);
  auto rep = check_regularity(F);
  // single-coordinate differences: ratios are ||g||_{2^{n+1}} / ||g||_{2^n}
  double lo = kInf, hi = 0.0;
  for (int n = 0; n < 4; ++n) {
    const double r = gaussian_norm(std::ldexp(1.0, n + 1)) / gaussian_norm(std::ldexp(1.0, n));
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  EXPECT_GE(rep.min_ratio, lo * (1 - 1e-9));
  EXPECT_LE(rep.max_ratio, 2.0);
  EXPECT_NEAR(rep.min_ratio, std::sqrt(std::numbers::pi / 2.0), 1e-9);  // n = 0 step
}

TEST(Regularity, UnboundedExponentDegradesGrowth) {
  auto mixed = cube("mixed", 32, 3.0, 20);
  auto p32 = cube("p32", 32, 3.0, 21);
  auto rm = check_regularity(build_distance_family(mixed.cube.set, {}));
  auto rp = check_regularity(build_distance_family(p32.cube.set, {}));
  EXPECT_GT(rm.eps_hat, 0.1);
  EXPECT_LT(rp.eps_hat, 0.5 * rm.eps_hat);
  EXPECT_FALSE(check_regularity(build_distance_family(p32.cube.set, {}), 0.1).lower_growth_ok);
}

TEST(Partition, InvariantsHoldForEveryTree) {
  RngStream rng(30, 0);
  auto m = family_measure("mixed", 30);
  for (int trial = 0; trial < 20; ++trial) {
    PointSet T(m, random_points(rng, 2 + rng.below(40), 30, 4));
    auto F = build_distance_family(T, {});
    auto g = gamma_functional(F);
    EXPECT_NO_THROW(validate_partition_tree(g.tree, T.size()));
    std::vector<std::size_t> all(T.size());
    std::iota(all.begin(), all.end(), 0);
    EXPECT_GE(g.gamma, F.diameter(0, all) * (1 - 1e-12));
    for (const auto& cell : g.tree.levels.back()) EXPECT_EQ(cell.size(), 1u);
  }
}

TEST(Partition, RejectsBrokenTrees) {
  PartitionTree t;
  t.levels = {{{0, 1, 2}}, {{0, 1}, {2}}};
  EXPECT_NO_THROW(validate_partition_tree(t, 3));
  t.levels = {{{0, 1}, {2}}};
  EXPECT_THROW(validate_partition_tree(t, 3), InvariantViolation);
  t.levels = {{{0, 1, 2}}, {{0, 1}}};
  EXPECT_THROW(validate_partition_tree(t, 3), InvariantViolation);
  t.levels = {{{0, 1, 2}}, {{0, 2}, {1}}, {{0, 1}, {2}}};
  EXPECT_THROW(validate_partition_tree(t, 3), InvariantViolation);
  EXPECT_EQ(admissible_cardinality(0), 1u);
  EXPECT_EQ(admissible_cardinality(1), 4u);
  EXPECT_EQ(admissible_cardinality(2), 16u);
  EXPECT_EQ(admissible_cardinality(3), 256u);
}

TEST(Gamma, GreedyWithinTwiceExhaustive) {
  RngStream rng(40, 0);
  for (const auto& fam : standard_families()) {
    auto m = family_measure(fam, 24);
    for (int trial = 0; trial < 25; ++trial) {
      PointSet T(m, random_points(rng, 2 + rng.below(5), 24, 3));
      auto F = build_distance_family(T, {});
      const double greedy = gamma_functional(F).gamma;
      const double exact = gamma_exhaustive(F);
      EXPECT_LE(exact, greedy * (1 + 1e-12)) << fam;
      EXPECT_LE(greedy, 2.0 * exact * (1 + 1e-12)) << fam;
    }
  }
}

TEST(Gamma, ExhaustiveMonotoneUnderDeletion) {
  RngStream rng(41, 0);
  auto m = family_measure("mixed", 24);
  for (int trial = 0; trial < 30; ++trial) {
    PointSet T(m, random_points(rng, 6, 24, 3));
    auto F = build_distance_family(T, {});
    auto full = gamma_exhaustive(F);
    for (std::size_t drop = 0; drop < 6; ++drop) {
      std::vector<std::size_t> keep;
      for (std::size_t a = 0; a < 6; ++a) if (a != drop) keep.push_back(a);
      auto sub = gamma_exhaustive(restrict_family(F, keep));
      EXPECT_LE(sub, full * (1 + 1e-12));
    }
  }
  EXPECT_THROW(gamma_exhaustive(build_distance_family(PointSet(m, random_points(rng, 7, 24, 2)), {})),
               DomainError);
}

TEST(GrowthProbe, OrthogonalGaussianFamilyPasses) {
  auto m = family_measure("gaussian", 32);
  std::vector<std::vector<double>> pts{std::vector<double>(32, 0.0)};
  for (std::size_t i = 0; i < 32; ++i) {
    std::vector<double> x(32, 0.0);
    x[i] = 1.0 + 0.05 * static_cast<double>(i);
    pts.push_back(x);
  }
  PointSet T(m, pts);
  auto F = build_distance_family(T, {});
  auto G = esup_functional(T, 20000, RngStream(50, 0));
  GrowthProbeOptions o;
  o.kappa = 4;
  o.trials = 300;
  RngStream rng(51, 0);
  auto rep = growth_condition_probe(F, G, o, rng);
  EXPECT_EQ(rep.r, 4.0);
  ASSERT_GT(rep.configurations, 0u) << rep.note;
  EXPECT_TRUE(std::isfinite(rep.K_min));
  o.K = rep.K_min;
  RngStream rng2(51, 0);
  auto again = growth_condition_probe(F, G, o, rng2);
  EXPECT_EQ(again.passed_at_K, again.configurations);
}

TEST(GrowthProbe, SingletonSetsReduceToMinoration) {
  auto o = cube("gaussian", 64, 3.0, 52);
  auto F = build_distance_family(o.cube.set, {});
  auto G = esup_functional(o.cube.set, 20000, RngStream(53, 0));
  GrowthProbeOptions opt;
  opt.singleton_H = true;
  opt.kappa = 3;
  opt.trials = 400;
  RngStream rng(54, 0);
  auto rep = growth_condition_probe(F, G, opt, rng);
  ASSERT_GT(rep.configurations, 0u) << rep.note;
  // G of a singleton is 0 for a centered process, so the premise is E sup of the centers
  EXPECT_NEAR(G({3}), 0.0, 0.05);
  EXPECT_TRUE(std::isfinite(rep.K_min));
}

TEST(GrowthProbe, KappaSweepAndDefaults) {
  EXPECT_EQ(default_kappa(0.0), 8u);
  EXPECT_EQ(default_kappa(1.0), 6u);
  EXPECT_EQ(default_kappa(0.25), static_cast<std::size_t>(std::ceil(std::log(64.0) / std::log(1.25))));
  auto o = cube("mixed", 64, 3.0, 55);
  auto F = build_distance_family(o.cube.set, {});
  auto G = esup_functional(o.cube.set, 10000, RngStream(56, 0));
  std::vector<double> kmins;
  for (std::size_t kappa : {3, 4, 6}) {
    GrowthProbeOptions opt;
    opt.kappa = kappa;
    opt.trials = 200;
    RngStream rng(57, 0);
    auto rep = growth_condition_probe(F, G, opt, rng);
    EXPECT_EQ(rep.r, std::ldexp(1.0, static_cast<int>(kappa) - 2));
    kmins.push_back(rep.configurations ? rep.K_min : 0.0);
  }
  // at the K that suffices for kappa = 6, kappa = 3 fails some configurations
  GrowthProbeOptions small;
  small.kappa = 3;
  small.trials = 200;
  small.K = kmins.back();
  RngStream rs(57, 0);
  auto fail = growth_condition_probe(F, G, small, rs);
  EXPECT_LT(fail.passed_at_K, fail.configurations);
  GrowthProbeOptions bad;
  bad.kappa = 2;
  RngStream rng(57, 1);
  EXPECT_THROW(growth_condition_probe(F, G, bad, rng), DomainError);
}

TEST(GrowthProbe, TooSmallSetReportsNote) {
  auto m = family_measure("gaussian", 4);
  PointSet T(m, {std::vector<double>(4, 0.0), {1, 0, 0, 0}});
  auto F = build_distance_family(T, {});
  auto G = esup_functional(T, 2000, RngStream(58, 0));
  RngStream rng(59, 0);
  auto rep = growth_condition_probe(F, G, {}, rng);
  EXPECT_EQ(rep.configurations, 0u);
  EXPECT_EQ(rep.note, "no admissible configuration found");
}

TEST(TwoSided, GaussianCubeBand) {
  auto o = cube("gaussian", 64, 3.0, 60);
  auto F = build_distance_family(o.cube.set, {});
  auto rep = two_sided_compare(o.cube.set, F, 20000, RngStream(61, 0));
  EXPECT_FALSE(rep.degenerate);
  EXPECT_GT(rep.ratio, 0.1);
  EXPECT_LT(rep.ratio, 1.0);  // gamma is an upper bound up to a constant above 1
  EXPECT_LE(rep.ratio_lo, rep.ratio);
  EXPECT_GE(rep.ratio_hi, rep.ratio);
}

TEST(Concentration, MonotoneInKAndFinite) {
  for (const std::string fam : {"gaussian", "exponential"}) {
    auto o = cube(fam, 64, 3.0, 70);
    auto rep = concentration_probe(o.cube.set, 3.0, 20000, RngStream(71, 0));
    EXPECT_GT(rep.spread, 0.0);
    EXPECT_TRUE(std::isfinite(rep.L_lower));
    EXPECT_LT(rep.L_lower, 2.0) << fam;
    for (std::size_t i = 1; i < rep.L_upper.size(); ++i) EXPECT_LE(rep.L_upper[i], rep.L_upper[i - 1]);
  }
}

TEST(Determinism, WorkerCountInvariance) {
  auto o = cube("mixed", 64, 3.0, 80);
  DistanceOptions mc;
  mc.source = DistanceSource::mc;
  mc.n_max = 3;
  mc.samples = 20000;
  mc.rng = RngStream(81, 0);
  worker_count() = 1;
  auto a = build_distance_family(o.cube.set, mc);
  auto ga = gamma_functional(build_distance_family(o.cube.set, {})).gamma;
  worker_count() = 8;
  auto b = build_distance_family(o.cube.set, mc);
  auto gb = gamma_functional(build_distance_family(o.cube.set, {})).gamma;
  worker_count() = 1;
  for (std::size_t n = 0; n <= 3; ++n) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = 0; j < a.size(); ++j) EXPECT_EQ(a.d(n, i, j), b.d(n, i, j));
    }
  }
  EXPECT_EQ(ga, gb);
}
