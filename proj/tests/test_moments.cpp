#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "sudakov/families.hpp"
#include "sudakov/moments.hpp"

using namespace sudakov;

namespace {

double gaussian_abs_moment_norm(double p) {
  return std::sqrt(2.0) * std::exp((std::lgamma((p + 1) / 2) - std::lgamma(0.5)) / p);
}

}  // namespace

TEST(ClosedForms, GluskinKwapien) {
  std::vector<double> e1{1.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(gluskin_kwapien(e1, 3.0), 3.0 + std::sqrt(3.0));
  std::vector<double> ones(4, 1.0);
  EXPECT_DOUBLE_EQ(gluskin_kwapien(ones, 4.0), 8.0);
  EXPECT_THROW(gluskin_kwapien(ones, 0.5), DomainError);
}

TEST(ClosedForms, Hitczenko) {
  std::vector<double> ones5(5, 1.0);
  EXPECT_DOUBLE_EQ(hitczenko(ones5, 6.0), 5.0);
  std::vector<double> e1{0.0, -1.0};
  EXPECT_DOUBLE_EQ(hitczenko(e1, 2.5), 1.0);
  std::vector<double> ones16(16, 1.0);
  EXPECT_NEAR(hitczenko(ones16, 4.0), 4.0 + 2.0 * std::sqrt(12.0), 1e-14);
}

TEST(ConeInnerMoment, BranchesAndDomain) {
  auto b1 = make_block(1, 1.7, Potential{});
  std::vector<double> t1{-2.5};
  EXPECT_DOUBLE_EQ(cone_inner_moment(b1, t1, 3.0), 2.5);
  auto b = make_block(8, 2.0, Potential{});
  std::vector<double> e1(8, 0.0);
  e1[0] = 1.0;
  EXPECT_NEAR(cone_inner_moment(b, e1, 2.0), 0.5, 1e-15);
  EXPECT_NEAR(cone_inner_moment(b, e1, 8.0), 1.0, 1e-15);
  std::vector<double> two(8, 0.0);
  two[0] = two[3] = 1.0;
  EXPECT_THROW(cone_inner_moment(b, two, 1.5), DomainError);
}

TEST(ConeInnerMoment, EuclideanSphereMonteCarlo) {
  // ||<V, e_1>||_2 = n^{-1/2} for V uniform on S^{n-1}; the surrogate is 0.5
  auto b = make_block(8, 2.0, Potential{});
  RngStream rng(5, 5);
  CompensatedSum s;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = sample_cone(b, rng)[0];
    s.add(v * v);
  }
  const double mc = std::sqrt(s.value() / n);
  EXPECT_NEAR(mc, 1.0 / std::sqrt(8.0), 0.003);
  std::vector<double> e1(8, 0.0);
  e1[0] = 1.0;
  const double ratio = mc / cone_inner_moment(b, e1, 2.0);
  EXPECT_GT(ratio, 0.5);
  EXPECT_LT(ratio, 1.0);
}

TEST(RadialMoments, ExactValues) {
  EXPECT_NEAR(rtilde_moment_exact(make_block(1, 2.0, Potential{}), 2.0), 1.0, 1e-14);
  EXPECT_NEAR(rtilde_moment_exact(make_block(4, 2.0, Potential{}), 2.0), 2.0, 1e-14);
  EXPECT_NEAR(r_moment(make_block(5, 1.0, Potential{1.0, 1.0}, 0.0), 1.0), 5.0, 1e-13);
  for (double p : {1.2, 2.0, 3.5}) {
    auto b = make_block(3, p, Potential{});
    b.potential.lambda = b.b;
    for (double r : {0.5, 1.0, 4.0, 30.0}) {
      EXPECT_NEAR(r_moment(b, r), rtilde_moment_exact(b, r), 1e-13 * r_moment(b, r));
    }
  }
}

TEST(RadialMoments, MonteCarloAgreement) {
  auto b = make_block(3, 1.5, Potential{});
  RngStream rng(6, 6);
  const int n = 200000;
  CompensatedSum s, s2;
  for (int i = 0; i < n; ++i) {
    const double r = sample_radius_tilde(b, rng);
    s.add(r * r * r);
    s2.add(r * r * r * r * r * r);
  }
  const double m3 = s.value() / n;
  const double se = std::sqrt((s2.value() / n - m3 * m3) / n);
  EXPECT_NEAR(m3, std::pow(rtilde_moment_exact(b, 3.0), 3.0), 3 * se);
}

TEST(RadialMoments, AlphaRegularity) {
  double worst = 0.0;
  for (std::size_t n = 1; n <= 64; ++n) {
    for (double pk : {1.1, 1.5, 2.0, 4.0}) {
      auto b = make_block(n, pk, Potential{}, 0.1);
      for (double p = 1; p <= 128; p *= 2) {
        for (double q = p * 2; q <= 128; q *= 2) {
          const double lhs = r_moment(b, q) / r_moment(b, p);
          const double rhs = std::pow((n + q) / (n + p), 1.0 / pk);
          worst = std::max(worst, lhs / rhs);
        }
      }
    }
  }
  EXPECT_LE(worst, 3.0);
}

TEST(MonteCarlo, GaussianClosedForm) {
  auto m = family_measure("gaussian", 3);
  ProcessSampler s(m, ProcessKind::X);
  std::vector<double> t{0.3, -1.2, 0.5};
  const double norm = lp_norm(t, 2.0);
  auto rep = mc_moment(s, t, {2.0, 4.0, 8.0}, 400000, RngStream(9, 0));
  for (std::size_t i = 0; i < rep.ps.size(); ++i) {
    const double expect = norm * gaussian_abs_moment_norm(rep.ps[i]);
    EXPECT_NEAR(rep.estimates[i].value, expect, 3 * rep.estimates[i].stderr_) << rep.ps[i];
  }
}

TEST(MonteCarlo, ExponentialClosedForm) {
  auto m = family_measure("gaussian", 1);
  ProcessSampler s(m, ProcessKind::exponential);
  std::vector<double> t{1.0};
  auto rep = mc_moment(s, t, {1.0, 2.0, 3.0}, 400000, RngStream(10, 0));
  for (std::size_t i = 0; i < rep.ps.size(); ++i) {
    const double p = rep.ps[i];
    EXPECT_NEAR(rep.estimates[i].value, std::exp(std::lgamma(p + 1) / p),
                3.5 * rep.estimates[i].stderr_);
  }
}

TEST(MonteCarlo, IsotropyUnitSecondMoment) {
  auto m = family_measure("mixed", 15);
  ProcessSampler s(m, ProcessKind::X);
  for (std::size_t i : {0u, 3u, 6u, 12u}) {
    std::vector<double> e(15, 0.0);
    e[i] = 1.0;
    auto est = mc_moment(s, e, 2.0, 200000, RngStream(11, i));
    EXPECT_NEAR(est.value, 1.0, 4 * est.stderr_);
  }
}

TEST(MonteCarlo, MonotoneAndHomogeneousOnSharedSamples) {
  auto m = family_measure("p1.5", 8);
  ProcessSampler s(m, ProcessKind::X);
  std::vector<double> t{1.0, 0.0, -2.0, 0.0, 0.0, 0.5, 0.0, 0.0};
  std::vector<double> ps{1.0, 2.0, 3.0, 5.0, 9.0};
  auto a = mc_moment(s, t, ps, 20000, RngStream(12, 0));
  for (std::size_t i = 1; i < ps.size(); ++i) {
    EXPECT_GE(a.estimates[i].value, a.estimates[i - 1].value);
  }
  std::vector<double> t3 = t;
  for (auto& x : t3) x *= 4.0;
  auto b = mc_moment(s, t3, ps, 20000, RngStream(12, 0));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    EXPECT_NEAR(b.estimates[i].value, 4.0 * a.estimates[i].value, 1e-12 * b.estimates[i].value);
  }
}

TEST(MonteCarlo, WorkerCountDoesNotChangeResult) {
  auto m = family_measure("mixed", 20);
  ProcessSampler s(m, ProcessKind::X);
  std::vector<double> t(20, 0.0);
  t[1] = 1.0;
  t[9] = -0.4;
  worker_count() = 1;
  auto a = mc_moment(s, t, 4.0, 50000, RngStream(13, 0));
  worker_count() = 8;
  auto b = mc_moment(s, t, 4.0, 50000, RngStream(13, 0));
  worker_count() = 1;
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.stderr_, b.stderr_);
}

TEST(MonteCarlo, PreconditionsAndWarnings) {
  auto m = family_measure("gaussian", 2);
  ProcessSampler s(m, ProcessKind::X);
  std::vector<double> t{1.0, 0.0};
  EXPECT_THROW(mc_moment(s, t, 2.0, 999, RngStream(1, 0)), ConfigError);
  EXPECT_THROW(mc_moment(s, t, 0.5, 1000, RngStream(1, 0)), DomainError);
  auto rep = mc_moment(s, t, {2.0, 24.0}, 1000, RngStream(1, 0));
  EXPECT_EQ(rep.warnings.size(), 1u);
}

TEST(MonteCarlo, LogConcaveMomentComparison) {
  RngStream gen(14, 0);
  const std::vector<double> ps{2, 3, 4, 6, 8, 12, 16};
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = random_instance(gen, 4);
    ProcessSampler s(inst.measure, ProcessKind::X);
    auto rep = mc_moment(s, inst.t, ps, 20000, RngStream(15, trial));
    for (std::size_t i = 0; i < ps.size(); ++i) {
      for (std::size_t j = i + 1; j < ps.size(); ++j) {
        const auto& lo = rep.estimates[i];
        const auto& hi = rep.estimates[j];
        EXPECT_LE(hi.value, ps[j] / ps[i] * lo.value + 5 * (hi.stderr_ + lo.stderr_));
      }
    }
  }
}

TEST(Surrogates, SingleBlockAllocationIsFullBudget) {
  auto m = family_measure("p1.5", 4);
  BlockVector t(m, {0.0, 2.0, 0.0, -1.0});
  const double p = 6.0;
  auto res = xt_moment_alloc(t, p);
  EXPECT_DOUBLE_EQ(res.allocation.r[0], p);
  const auto& b = m.block(0);
  std::vector<double> tk = t.block(0);
  const double expect = b.scale * r_moment(b, p) * cone_inner_moment(b, tk, p);
  EXPECT_NEAR(res.value, expect, 1e-12 * expect);
  EXPECT_TRUE(res.thin_support_flag);
}

TEST(Surrogates, SymmetricBlocksSplitEvenly) {
  auto m = family_measure("p1.5", 8);
  BlockVector t(m, {1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0});
  auto res = xt_moment_alloc(t, 10.0);
  auto oracle = alloc_bruteforce_oracle(t, 10.0, 2000, 3);
  EXPECT_NEAR(res.allocation.r[0], 5.0, 1e-4);
  EXPECT_NEAR(res.allocation.r[1], 5.0, 1e-4);
  EXPECT_NEAR(oracle.allocation.r[0], 5.0, 1e-3);
  EXPECT_NEAR(res.value, oracle.value, 1e-9 * res.value);
}

TEST(Surrogates, ThinSupportPrecondition) {
  auto m = family_measure("gaussian", 6);
  BlockVector t(m, {1, 1, 1, 1, 0, 0});
  EXPECT_THROW(xt_moment_alloc(t, 3.0), DomainError);
  EXPECT_THROW(y_moment_surrogate(t, 3.0), DomainError);
  EXPECT_NO_THROW(xt_moment_alloc(t, 4.0));
}

TEST(Surrogates, Homogeneity) {
  RngStream gen(16, 0);
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = random_instance(gen, 4);
    BlockVector t(inst.measure, inst.t);
    auto t3 = t.scaled(3.0);
    EXPECT_NEAR(xt_moment_alloc(t3, inst.p).value, 3.0 * xt_moment_alloc(t, inst.p).value,
                1e-10 * xt_moment_alloc(t3, inst.p).value);
    EXPECT_NEAR(y_moment_surrogate(t3, inst.p).value, 3.0 * y_moment_surrogate(t, inst.p).value,
                1e-10 * y_moment_surrogate(t3, inst.p).value);
  }
}

TEST(Surrogates, MonotoneInBudget) {
  RngStream gen(17, 0);
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = random_instance(gen, 3);
    BlockVector t(inst.measure, inst.t);
    double prev = 0.0;
    for (double p = inst.p; p < inst.p + 10; p += 1.0) {
      const double v = xt_moment_alloc(t, p).value;
      EXPECT_GE(v, prev * (1 - 1e-12));
      prev = v;
    }
  }
}

TEST(Surrogates, GaussianYSurrogateIsSqrtP) {
  auto m = family_measure("gaussian", 3);
  BlockVector t(m, {1.0, 0.0, 0.0});
  for (double p : {2.0, 5.0, 9.0}) {
    EXPECT_NEAR(y_moment_surrogate(t, p).value, std::sqrt(p), 1e-12);
    const double ratio = gaussian_abs_moment_norm(p) / std::sqrt(p);
    EXPECT_GT(ratio, 0.5);
    EXPECT_LT(ratio, 1.2);
  }
}

TEST(Surrogates, YAgainstXBand) {
  // the Y surrogate is below the X surrogate up to an absolute constant
  RngStream gen(18, 0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = random_instance(gen, 4);
    BlockVector t(inst.measure, inst.t);
    worst = std::max(worst, y_moment_surrogate(t, inst.p).value / xt_moment_alloc(t, inst.p).value);
  }
  EXPECT_LT(worst, 3.0);
}

TEST(Sweep, GaussianBandWithinFiveFold) {
  auto family = [](std::size_t, RngStream& rng) {
    MomentInstance mi{family_measure("gaussian", 16), std::vector<double>(16, 0.0)};
    for (std::size_t i = 0; i < 2; ++i) mi.t[rng.below(16)] = rng.normal();
    return mi;
  };
  auto bands = moment_ratio_sweep(family, {2, 4, 8}, 20, 20000, RngStream(19, 0));
  for (const auto& b : bands) {
    if (b.instances == 0) continue;
    EXPECT_GE(b.min_ratio, 0.2) << b.surrogate << " p=" << b.p;
    EXPECT_LE(b.max_ratio, 5.0) << b.surrogate << " p=" << b.p;
  }
}
