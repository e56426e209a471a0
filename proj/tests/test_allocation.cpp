#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "sudakov/allocation.hpp"
#include "sudakov/families.hpp"
#include "sudakov/moments.hpp"

using namespace sudakov;

namespace {

AllocTerm power_term(double w, double p, double m = 0.0) {
  AllocTerm t;
  t.kind = AllocTerm::Kind::power;
  t.weight = w;
  t.p = p;
  t.min_r = m;
  return t;
}

}  // namespace

TEST(MaximizeAllocation, SingleTermTakesEverything) {
  std::vector<AllocTerm> terms{power_term(2.0, 2.0)};
  auto res = maximize_allocation(terms, 5.0);
  EXPECT_DOUBLE_EQ(res.r[0], 5.0);
  EXPECT_NEAR(res.value, 2.0 * std::sqrt(5.0), 1e-14);
}

TEST(MaximizeAllocation, EqualPowerTermsSplitEvenly) {
  // w r^{1/2} + w (B - r)^{1/2} is maximised at r = B / 2
  std::vector<AllocTerm> terms{power_term(1.0, 2.0), power_term(1.0, 2.0)};
  auto res = maximize_allocation(terms, 8.0);
  EXPECT_NEAR(res.r[0], 4.0, 1e-7);
  EXPECT_NEAR(res.value, 4.0, 1e-12);
}

TEST(MaximizeAllocation, LagrangeSolutionForPowerTerms) {
  // sum w_k r_k^{1/2}: r_k proportional to w_k^2, value sqrt(B sum w^2)
  std::vector<AllocTerm> terms{power_term(1.0, 2.0), power_term(2.0, 2.0), power_term(3.0, 2.0)};
  auto res = maximize_allocation(terms, 14.0);
  EXPECT_NEAR(res.value, std::sqrt(14.0 * 14.0), 1e-9);
  EXPECT_NEAR(res.r[0], 1.0, 1e-4);
  EXPECT_NEAR(res.r[1], 4.0, 1e-4);
  EXPECT_NEAR(res.r[2], 9.0, 1e-4);
}

TEST(MaximizeAllocation, MinimumShareForcesDrop) {
  // second term needs r >= 3 but the budget is 4: dropping it wins
  std::vector<AllocTerm> terms{power_term(1.0, 1.2), power_term(0.1, 2.0, 3.0)};
  auto res = maximize_allocation(terms, 4.0);
  EXPECT_EQ(res.r[1], 0.0);
  EXPECT_DOUBLE_EQ(res.r[0], 4.0);
}

TEST(MaximizeAllocation, DeadTermsIgnored) {
  std::vector<AllocTerm> terms{power_term(0.0, 2.0), power_term(1.0, 2.0, 10.0), power_term(1.0, 3.0)};
  auto res = maximize_allocation(terms, 5.0);
  EXPECT_EQ(res.r[0], 0.0);
  EXPECT_EQ(res.r[1], 0.0);
  EXPECT_DOUBLE_EQ(res.r[2], 5.0);
}

TEST(MaximizeAllocation, MatchesOracleOnRandomInstances) {
  RngStream rng(2024, 1);
  for (int trial = 0; trial < 60; ++trial) {
    auto inst = random_instance(rng, 3);
    BlockVector t(inst.measure, inst.t);
    auto fast = xt_moment_alloc(t, inst.p);
    auto slow = alloc_bruteforce_oracle(t, inst.p, 400, 4);
    EXPECT_LE(std::abs(fast.value - slow.value), 1e-9 * slow.value)
        << "trial " << trial << " fast " << fast.value << " oracle " << slow.value;
    EXPECT_LE(fast.allocation.used(), inst.p * (1 + 1e-12));
  }
}

TEST(MaximizeAllocation, BeatsRandomFeasibleProbes) {
  RngStream rng(2025, 1);
  for (int trial = 0; trial < 40; ++trial) {
    auto inst = random_instance(rng, 4);
    BlockVector t(inst.measure, inst.t);
    auto terms = x_alloc_terms(t);
    auto best = xt_moment_alloc(t, inst.p);
    for (int probe = 0; probe < 200; ++probe) {
      std::vector<double> w(terms.size());
      double s = 0.0;
      for (auto& x : w) s += (x = rng.uniform() < 0.3 ? 0.0 : rng.gamma(1.0));
      if (s == 0) continue;
      std::vector<double> r(terms.size());
      bool ok = true;
      for (std::size_t k = 0; k < r.size(); ++k) {
        r[k] = inst.p * w[k] / s;
        if (r[k] > 0 && r[k] < terms[k].min_r) ok = false;
      }
      if (!ok) continue;
      EXPECT_GE(best.value * (1 + 1e-12), allocation_objective(terms, r));
    }
  }
}

TEST(AllocOracle, GridConvergence) {
  RngStream rng(77, 0);
  for (int trial = 0; trial < 10; ++trial) {
    auto inst = random_instance(rng, 3);
    BlockVector t(inst.measure, inst.t);
    const double fine = alloc_bruteforce_oracle(t, inst.p, 2000).value;
    const double coarse = alloc_bruteforce_oracle(t, inst.p, 1000).value;
    EXPECT_LE(std::abs(fine - coarse), 1e-6 * fine);
  }
}

TEST(AllocOracle, SingleBlockTakesFullBudget) {
  auto m = family_measure("p1.5", 4);
  BlockVector t(m, {1.0, 0.5, 0.0, 0.0});
  auto res = alloc_bruteforce_oracle(t, 5.0, 50);
  EXPECT_DOUBLE_EQ(res.allocation.r[0], 5.0);
  EXPECT_THROW(alloc_bruteforce_oracle(t, 1.5, 50), DomainError);
}

TEST(CappedPower, SaturatesAtCap) {
  AllocTerm t = power_term(1.0, 2.0);
  t.kind = AllocTerm::Kind::capped_power;
  t.cap = 2.0;
  EXPECT_DOUBLE_EQ(t(9.0), 2.0);
  EXPECT_DOUBLE_EQ(t.knee(), 4.0);
  std::vector<AllocTerm> terms{t, t};
  auto res = maximize_allocation(terms, 8.0);
  EXPECT_NEAR(res.value, 4.0, 1e-12);
}
