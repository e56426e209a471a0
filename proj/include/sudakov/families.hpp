#pragma once

// Named block families used by sweeps, and random (measure, t) instances for
// property tests.

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "sudakov/errors.hpp"
#include "sudakov/measure.hpp"
#include "sudakov/rng.hpp"

namespace sudakov {

/// Isotropic product measure of dimension d built from a named family:
///   gaussian     d blocks (n = 1, p = 2)
///   exponential  d blocks (n = 1, p = 1), cutoff disabled
///   p1.5         blocks (n = 4, p = 1.5)
///   mixed        cycle of (1, 2), (4, 1.5), (2, 3), (8, 2, gamma = 2)
///   p32          blocks (n = 2, p = 32), the unbounded-exponent probe
/// The last block is shortened when d is not a multiple of the pattern.
inline ProductMeasure family_measure(const std::string& family, std::size_t d) {
  if (d < 1) throw ConfigError("family_measure: d must be >= 1");
  struct Shape {
    std::size_t n;
    double p;
    double gamma;
  };
  std::vector<Shape> pattern;
  double eps = kDefaultEpsCutoff;
  if (family == "gaussian") {
    pattern = {{1, 2.0, 1.0}};
  } else if (family == "exponential") {
    pattern = {{1, 1.0, 1.0}};
    eps = 0.0;
  } else if (family == "p1.5") {
    pattern = {{4, 1.5, 1.0}};
  } else if (family == "mixed") {
    pattern = {{1, 2.0, 1.0}, {4, 1.5, 1.0}, {2, 3.0, 1.0}, {8, 2.0, 2.0}};
  } else if (family == "p32") {
    pattern = {{2, 32.0, 1.0}};
  } else {
    throw ConfigError("unknown block family '" + family + "'");
  }
  std::vector<BlockSpec> blocks;
  std::size_t used = 0;
  for (std::size_t s = 0; used < d; ++s) {
    const Shape& sh = pattern[s % pattern.size()];
    const std::size_t n = std::min(sh.n, d - used);
    blocks.push_back(isotropic_scale(make_block(n, sh.p, Potential{1.0, sh.gamma}, eps)));
    used += n;
  }
  return ProductMeasure(std::move(blocks), eps);
}

inline const std::vector<std::string>& standard_families() {
  static const std::vector<std::string> names = {"gaussian", "exponential", "p1.5", "mixed"};
  return names;
}

/// A random measure with 1..max_blocks blocks and a sparse t on it.
struct RandomInstance {
  ProductMeasure measure;
  std::vector<double> t;
  /// A moment exponent with p >= sum_k |I_k(t)|.
  double p = 2.0;
};

inline RandomInstance random_instance(RngStream& rng, std::size_t max_blocks,
                                      std::size_t max_block_dim = 6,
                                      std::size_t max_support = 3) {
  RandomInstance inst;
  const std::size_t m = 1 + rng.below(max_blocks);
  std::vector<BlockSpec> blocks;
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t n = 1 + rng.below(max_block_dim);
    const double p = 1.2 + 2.8 * rng.uniform();
    const double gamma = 1.0 + rng.below(3) * 0.5;
    const double lambda = 0.5 + 1.5 * rng.uniform();
    blocks.push_back(isotropic_scale(make_block(n, p, Potential{lambda, gamma})));
  }
  inst.measure = ProductMeasure(std::move(blocks));
  inst.t.assign(inst.measure.dim(), 0.0);
  std::size_t support = 0;
  while (support == 0) {
    for (std::size_t k = 0; k < m; ++k) {
      const auto& j = inst.measure.index_set(k);
      const std::size_t s = rng.below(std::min(j.size(), max_support) + 1);
      std::vector<std::size_t> pick(j.begin(), j.end());
      for (std::size_t a = 0; a < s; ++a) {
        std::swap(pick[a], pick[a + rng.below(pick.size() - a)]);
        double v = 0.0;
        while (v == 0.0) v = rng.normal();
        if (inst.t[pick[a]] == 0.0) ++support;
        inst.t[pick[a]] = v;
      }
    }
  }
  inst.p = std::max(2.0, static_cast<double>(support)) + 8.0 * rng.uniform();
  return inst;
}

}  // namespace sudakov
