#pragma once

// Distance families d_n(s, t) = ||X_t - X_s||_{2^n}, greedy admissible
// partition sequences and the functional gamma_X(T), the growth condition
// probe, and the empirical two-sided and concentration comparisons.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "sudakov/errors.hpp"
#include "sudakov/moments.hpp"
#include "sudakov/parallel.hpp"
#include "sudakov/pointset.hpp"
#include "sudakov/rng.hpp"
#include "sudakov/special.hpp"

namespace sudakov {

enum class DistanceSource { surrogate, mc };

inline DistanceSource distance_source_from_string(const std::string& s) {
  if (s == "surrogate" || s == "alloc") return DistanceSource::surrogate;
  if (s == "mc") return DistanceSource::mc;
  throw ConfigError("unknown distance method '" + s + "'");
}

inline std::string to_string(DistanceSource s) {
  return s == DistanceSource::surrogate ? "surrogate" : "mc";
}

/// Symmetric |T| x |T| matrix.
class DistMatrix {
 public:
  DistMatrix() = default;
  explicit DistMatrix(std::size_t n) : n_(n), v_(n * n, 0.0) {}
  std::size_t size() const { return n_; }
  double operator()(std::size_t a, std::size_t b) const { return v_[a * n_ + b]; }
  void set(std::size_t a, std::size_t b, double x) {
    v_[a * n_ + b] = x;
    v_[b * n_ + a] = x;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> v_;
};

/// d_0, ..., d_{n_max} on a finite set.
struct DistanceFamily {
  PointSet points;
  std::size_t n_max = 0;
  DistanceSource source = DistanceSource::surrogate;
  std::vector<DistMatrix> dist;
  /// Pair distances at level n obtained by doubling extrapolation from the
  /// first level whose budget 2^n covers the pair's support.
  std::vector<std::size_t> extrapolated;
  /// Pair distances lowered by the metric closure at level n.
  std::vector<std::size_t> closure_adjustments;
  /// Surrogate pair distances lowered to 2 d_{n-1} at level n, and the
  /// largest raw ratio d_{n+1} / d_n seen before that envelope.
  std::vector<std::size_t> doubling_clamps;
  double raw_max_ratio = 0.0;
  std::size_t samples = 0;

  std::size_t size() const { return points.size(); }

  /// d_n for any n >= 0; levels above n_max use d_n = 2^{n - n_max} d_{n_max},
  /// the largest value the doubling property allows.
  double d(std::size_t n, std::size_t a, std::size_t b) const {
    if (n <= n_max) return dist[n](a, b);
    return std::ldexp(dist[n_max](a, b), static_cast<int>(n - n_max));
  }

  /// Diameter of a subset in d_n.
  double diameter(std::size_t n, const std::vector<std::size_t>& cell) const {
    double m = 0.0;
    for (std::size_t x = 0; x < cell.size(); ++x) {
      for (std::size_t y = x + 1; y < cell.size(); ++y) m = std::max(m, d(n, cell[x], cell[y]));
    }
    return m;
  }
};

/// Default number of computed levels: floor(log2 p_max) + 2.
inline std::size_t default_n_max(const ProductMeasure& m) {
  return static_cast<std::size_t>(std::floor(std::log2(m.max_p()))) + 2;
}

namespace detail {
/// Replaces each level by its shortest-path metric; returns the number of
/// entries lowered. Pathwise comparison keeps d_{n+1} <= 2 d_n and
/// (1 + eps) d_n <= d_{n+1} intact.
inline std::size_t metric_closure(DistMatrix& m) {
  const std::size_t n = m.size();
  std::size_t changed = 0;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        const double via = m(a, k) + m(k, b);
        if (via < m(a, b) * (1.0 - 1e-15)) {
          m.set(a, b, via);
          ++changed;
        }
      }
    }
  }
  return changed;
}
}  // namespace detail

struct DistanceOptions {
  std::size_t n_max = 0;  // 0: default_n_max
  DistanceSource source = DistanceSource::surrogate;
  std::size_t samples = 1000000;
  RngStream rng{0, 0};
};

/// Builds d_0..d_{n_max}. The surrogate source evaluates xt_moment_alloc at
/// budget 2^n; where 2^n is below |supp(t - s)| the pair is extrapolated as
/// d_{n*} 2^{n - n*} from the first admissible level n*. The block surrogate
/// is not log-convex in the budget below a block's knee, so surrogate levels
/// are passed through the envelope d_{n+1} <- min(d_{n+1}, 2 d_n). Each level
/// is then closed to a metric. The MC source uses one sample batch for all
/// levels.
inline DistanceFamily build_distance_family(const PointSet& T, const DistanceOptions& opt) {
  DistanceFamily F;
  F.points = T;
  F.source = opt.source;
  F.n_max = opt.n_max ? opt.n_max : default_n_max(T.measure());
  const std::size_t L = F.n_max + 1;
  const std::size_t N = T.size();
  F.dist.assign(L, DistMatrix(N));
  F.extrapolated.assign(L, 0);
  F.closure_adjustments.assign(L, 0);
  F.doubling_clamps.assign(L, 0);
  if (opt.source == DistanceSource::mc) {
    if (std::ldexp(1.0, static_cast<int>(F.n_max)) > 16.0 && opt.samples < 1000000) {
      throw ConfigError("build_distance_family: the mc source needs >= 1e6 samples for 2^n > 16 (n_max = " +
                        std::to_string(F.n_max) + ", samples = " + std::to_string(opt.samples) + ")");
    }
    if (opt.samples < 1000) throw ConfigError("build_distance_family: at least 1000 samples");
    F.samples = opt.samples;
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t b = a + 1; b < N; ++b) pairs.emplace_back(a, b);
  }
  if (opt.source == DistanceSource::surrogate) {
    std::vector<std::vector<double>> vals(pairs.size(), std::vector<double>(L, 0.0));
    std::vector<std::size_t> first(pairs.size(), 0);
    parallel_for(pairs.size(), [&](std::size_t e) {
      const BlockVector diff = T.difference(pairs[e].first, pairs[e].second);
      const double support = static_cast<double>(diff.total_support());
      if (support == 0.0) return;
      std::size_t n0 = 0;
      while (std::ldexp(1.0, static_cast<int>(n0)) < support) ++n0;
      first[e] = n0;
      for (std::size_t n = n0; n < std::max(L, n0 + 1); ++n) {
        const double v = xt_moment_alloc(diff, std::ldexp(1.0, static_cast<int>(n))).value;
        if (n < L) vals[e][n] = v;
        if (n == n0) {
          // levels below n0 and, if needed, above n_max by doubling
          for (std::size_t m = 0; m < std::min(n0, L); ++m) {
            vals[e][m] = std::ldexp(v, static_cast<int>(m) - static_cast<int>(n0));
          }
        }
      }
    });
    for (std::size_t e = 0; e < pairs.size(); ++e) {
      for (std::size_t n = 0; n < L; ++n) {
        if (n > 0 && vals[e][n - 1] > 0.0) {
          F.raw_max_ratio = std::max(F.raw_max_ratio, vals[e][n] / vals[e][n - 1]);
          if (vals[e][n] > 2.0 * vals[e][n - 1]) {
            vals[e][n] = 2.0 * vals[e][n - 1];
            ++F.doubling_clamps[n];
          }
        }
        F.dist[n].set(pairs[e].first, pairs[e].second, vals[e][n]);
        if (n < first[e]) ++F.extrapolated[n];
      }
    }
  } else {
    const auto batch = project_samples(T, opt.samples, opt.rng);
    std::vector<std::vector<double>> vals(pairs.size(), std::vector<double>(L, 0.0));
    parallel_for(pairs.size(), [&](std::size_t e) {
      std::vector<double> diff(batch.n);
      for (std::size_t s = 0; s < batch.n; ++s) {
        diff[s] = batch(s, pairs[e].first) - batch(s, pairs[e].second);
      }
      for (std::size_t n = 0; n < L; ++n) {
        vals[e][n] = lp_norm_estimate(diff, std::ldexp(1.0, static_cast<int>(n)), 0).value;
      }
    });
    for (std::size_t e = 0; e < pairs.size(); ++e) {
      for (std::size_t n = 0; n < L; ++n) F.dist[n].set(pairs[e].first, pairs[e].second, vals[e][n]);
    }
  }
  for (std::size_t n = 0; n < L; ++n) F.closure_adjustments[n] = detail::metric_closure(F.dist[n]);
  return F;
}

/// The family restricted to the points `keep`, in that order. Distances are
/// those of the full family (closed over all of T), not rebuilt.
inline DistanceFamily restrict_family(const DistanceFamily& F, const std::vector<std::size_t>& keep) {
  DistanceFamily out = F;
  out.points = F.points.subset(keep);
  for (std::size_t n = 0; n < F.dist.size(); ++n) {
    DistMatrix m(keep.size());
    for (std::size_t a = 0; a < keep.size(); ++a) {
      for (std::size_t b = a + 1; b < keep.size(); ++b) m.set(a, b, F.dist[n](keep[a], keep[b]));
    }
    out.dist[n] = std::move(m);
  }
  return out;
}

/// Worst pairwise ratios d_{n+1}/d_n and the triangle-inequality defect.
struct RegularityReport {
  double max_ratio = 0.0;
  double min_ratio = kInf;
  /// min_ratio - 1: the empirical lower-growth constant.
  double eps_hat = 0.0;
  bool doubling_ok = true;
  bool lower_growth_ok = true;
  double triangle_defect = 0.0;
  std::size_t pairs = 0;
};

inline RegularityReport check_regularity(const DistanceFamily& F, double eps = 0.0) {
  RegularityReport rep;
  const std::size_t N = F.size();
  for (std::size_t n = 0; n + 1 <= F.n_max; ++n) {
    for (std::size_t a = 0; a < N; ++a) {
      for (std::size_t b = a + 1; b < N; ++b) {
        const double lo = F.dist[n](a, b);
        const double hi = F.dist[n + 1](a, b);
        if (lo <= 0.0) continue;
        const double ratio = hi / lo;
        rep.max_ratio = std::max(rep.max_ratio, ratio);
        rep.min_ratio = std::min(rep.min_ratio, ratio);
        ++rep.pairs;
      }
    }
  }
  for (std::size_t n = 0; n <= F.n_max; ++n) {
    for (std::size_t a = 0; a < N; ++a) {
      for (std::size_t b = 0; b < N; ++b) {
        for (std::size_t c = 0; c < N; ++c) {
          const double excess = F.dist[n](a, b) - F.dist[n](a, c) - F.dist[n](c, b);
          rep.triangle_defect = std::max(rep.triangle_defect, excess);
        }
      }
    }
  }
  if (rep.pairs == 0) {
    rep.min_ratio = 0.0;
    return rep;
  }
  rep.eps_hat = rep.min_ratio - 1.0;
  rep.doubling_ok = rep.max_ratio <= 2.0;
  rep.lower_growth_ok = rep.min_ratio >= 1.0 + eps;
  return rep;
}

/// Nested partitions A_0, A_1, ... with |A_n| <= N_n; cells hold point indices.
struct PartitionTree {
  std::vector<std::vector<std::vector<std::size_t>>> levels;
  /// Levels at or above this index used doubling-extrapolated distances.
  std::size_t remainder_from = 0;
};

/// N_n = 2^{2^n}, N_0 = 1; saturates at SIZE_MAX.
inline std::size_t admissible_cardinality(std::size_t n) {
  if (n == 0) return 1;
  const std::size_t e = std::size_t{1} << std::min<std::size_t>(n, 6);
  if (e >= 64) return std::numeric_limits<std::size_t>::max();
  return std::size_t{1} << e;
}

/// Checks refinement and cardinality; throws InvariantViolation.
inline void validate_partition_tree(const PartitionTree& tree, std::size_t n_points) {
  for (std::size_t n = 0; n < tree.levels.size(); ++n) {
    const auto& level = tree.levels[n];
    if (level.size() > admissible_cardinality(n)) {
      throw InvariantViolation("partition: |A_" + std::to_string(n) + "| = " +
                               std::to_string(level.size()) + " > N_n");
    }
    std::vector<std::size_t> owner(n_points, n_points);
    for (std::size_t c = 0; c < level.size(); ++c) {
      for (std::size_t a : level[c]) {
        if (owner[a] != n_points) throw InvariantViolation("partition: cells overlap");
        owner[a] = c;
      }
    }
    if (std::count(owner.begin(), owner.end(), n_points) != 0) {
      throw InvariantViolation("partition: A_" + std::to_string(n) + " does not cover T");
    }
    if (n == 0) continue;
    std::vector<std::size_t> parent(n_points);
    for (std::size_t c = 0; c < tree.levels[n - 1].size(); ++c) {
      for (std::size_t a : tree.levels[n - 1][c]) parent[a] = c;
    }
    for (const auto& cell : level) {
      for (std::size_t a : cell) {
        if (parent[a] != parent[cell.front()]) {
          throw InvariantViolation("partition: A_" + std::to_string(n) + " does not refine A_" +
                                   std::to_string(n - 1));
        }
      }
    }
  }
}

namespace detail {
/// Farthest-point clustering of `cell` into at most k clusters in d_n.
inline std::vector<std::vector<std::size_t>> farthest_point_split(const DistanceFamily& F,
                                                                  std::size_t n,
                                                                  const std::vector<std::size_t>& cell,
                                                                  std::size_t k) {
  if (cell.size() <= k) {
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t a : cell) out.push_back({a});
    return out;
  }
  std::vector<std::size_t> centers{cell.front()};
  std::vector<double> near(cell.size());
  for (std::size_t x = 0; x < cell.size(); ++x) near[x] = F.d(n, cell[x], centers[0]);
  while (centers.size() < k) {
    std::size_t far = 0;
    for (std::size_t x = 1; x < cell.size(); ++x) if (near[x] > near[far]) far = x;
    if (near[far] <= 0.0) break;
    centers.push_back(cell[far]);
    for (std::size_t x = 0; x < cell.size(); ++x) near[x] = std::min(near[x], F.d(n, cell[x], cell[far]));
  }
  std::vector<std::vector<std::size_t>> out(centers.size());
  for (std::size_t a : cell) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < centers.size(); ++c) {
      if (F.d(n, a, centers[c]) < F.d(n, a, centers[best])) best = c;
    }
    out[best].push_back(a);
  }
  return out;
}
}  // namespace detail

struct GammaResult {
  double gamma = 0.0;
  PartitionTree tree;
  /// Contribution of levels above n_max (doubling extrapolation).
  double remainder = 0.0;
  /// Point attaining the sup.
  std::size_t argmax = 0;
};

/// Greedy admissible sequence: every cell of A_n is split by farthest-point
/// clustering in d_{n+1} into at most floor(N_{n+1} / |A_n|) children, until
/// all cells are singletons. Returns sup_t sum_n Delta_n(A_n(t)), an upper
/// bound on gamma_X(T).
inline GammaResult gamma_functional(const DistanceFamily& F) {
  GammaResult res;
  const std::size_t N = F.size();
  if (N == 0) return res;
  std::vector<std::size_t> all(N);
  std::iota(all.begin(), all.end(), 0);
  res.tree.levels.push_back({all});
  res.tree.remainder_from = F.n_max + 1;
  std::vector<double> acc(N, 0.0), tail(N, 0.0);
  for (std::size_t n = 0;; ++n) {
    const auto& level = res.tree.levels.back();
    bool singletons = true;
    for (const auto& cell : level) {
      const double diam = F.diameter(n, cell);
      for (std::size_t a : cell) {
        acc[a] += diam;
        if (n > F.n_max) tail[a] += diam;
      }
      if (cell.size() > 1) singletons = false;
    }
    if (singletons || n > 64) break;
    const std::size_t next_card = admissible_cardinality(n + 1);
    const std::size_t budget = std::max<std::size_t>(1, next_card / level.size());
    std::vector<std::vector<std::size_t>> next;
    for (const auto& cell : level) {
      for (auto& child : detail::farthest_point_split(F, n + 1, cell, budget)) next.push_back(std::move(child));
    }
    res.tree.levels.push_back(std::move(next));
  }
  res.argmax = static_cast<std::size_t>(std::max_element(acc.begin(), acc.end()) - acc.begin());
  res.gamma = acc[res.argmax];
  res.remainder = tail[res.argmax];
  return res;
}

/// Exact gamma for |T| <= 6: N_2 = 16 >= |T| makes singletons admissible at
/// level 2, so gamma = Delta_0(T) + min over partitions A_1 with at most 4
/// cells of the largest d_1 diameter.
inline double gamma_exhaustive(const DistanceFamily& F) {
  const std::size_t N = F.size();
  if (N > 6) throw DomainError("gamma_exhaustive: at most 6 points");
  if (N <= 1) return 0.0;
  std::vector<std::size_t> all(N);
  std::iota(all.begin(), all.end(), 0);
  const double d0 = F.diameter(0, all);
  double best = kInf;
  // restricted growth strings enumerate set partitions
  std::vector<std::size_t> label(N, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t used) {
    if (i == N) {
      double worst = 0.0;
      for (std::size_t c = 0; c < used; ++c) {
        std::vector<std::size_t> cell;
        for (std::size_t a = 0; a < N; ++a) if (label[a] == c) cell.push_back(a);
        worst = std::max(worst, F.diameter(1, cell));
      }
      best = std::min(best, worst);
      return;
    }
    for (std::size_t c = 0; c <= used && c < 4; ++c) {
      label[i] = c;
      rec(i + 1, std::max(used, c + 1));
    }
  };
  rec(0, 0);
  return d0 + best;
}

// ---------------------------------------------------------------------------
// Growth condition

/// Set functional on index subsets of T (E sup type, without the constant K).
using SetFunctional = std::function<double(const std::vector<std::size_t>&)>;

/// E sup over subsets on common random numbers: one sample batch of sup-able
/// projections, so nested subsets are compared noise-consistently.
inline SetFunctional esup_functional(const PointSet& T, std::size_t n, const RngStream& rng) {
  auto batch = std::make_shared<ProjectionBatch>(project_samples(T, n, rng));
  return [batch](const std::vector<std::size_t>& subset) {
    if (subset.empty()) return 0.0;
    CompensatedSum s;
    for (std::size_t r = 0; r < batch->n; ++r) {
      double m = -kInf;
      for (std::size_t a : subset) m = std::max(m, (*batch)(r, a));
      s.add(m);
    }
    return s.value() / static_cast<double>(batch->n);
  };
}

struct GrowthProbeOptions {
  std::size_t kappa = 0;  // 0: derived from eps as ceil(log_{1+eps} 64)
  double eps = 0.0;       // lower growth constant used for the default kappa
  std::size_t n0 = 1;
  std::size_t n_hi = 0;   // 0: F.n_max
  std::size_t trials = 200;
  double K = 0.0;         // pass rate is reported at this K when positive
  bool singleton_H = false;
};

struct GrowthProbeReport {
  std::size_t kappa = 0;
  double r = 0.0;
  std::size_t attempted = 0;
  std::size_t configurations = 0;
  /// Smallest K with K (G(union H) - min G(H_i)) >= 2^n r^{-j-1} on every configuration.
  double K_min = 0.0;
  std::size_t passed_at_K = 0;
  std::string note;
};

inline std::size_t default_kappa(double eps) {
  if (!(eps > 0.0)) return 8;
  return static_cast<std::size_t>(std::ceil(std::log(64.0) / std::log1p(eps)));
}

/// Samples (n, j, anchor) configurations from T, instantiates the premise
/// (N_n centers in B_n(t, 2^n r^{-j}) that are 2^{n+1} r^{-j-1} separated in
/// d_{n+1}, H_i the full balls B_{n+kappa}(t_i, 2^{n+kappa} r^{-j-2}) or
/// the singletons {t_i}) and tests F(U H_i) >= 2^n r^{-j-1} + min F(H_i)
/// with F = K G.
inline GrowthProbeReport growth_condition_probe(const DistanceFamily& F, const SetFunctional& G,
                                                const GrowthProbeOptions& opt, RngStream& rng) {
  GrowthProbeReport rep;
  rep.kappa = opt.kappa ? opt.kappa : default_kappa(opt.eps);
  rep.r = std::ldexp(1.0, static_cast<int>(rep.kappa) - 2);
  if (rep.kappa < 3) throw DomainError("growth_condition_probe: kappa must be >= 3 so that r > 1");
  const double r = rep.r;
  const std::size_t N = F.size();
  const std::size_t n_hi = opt.n_hi ? opt.n_hi : F.n_max;
  if (N < 2 || n_hi < opt.n0) {
    rep.note = "no admissible configuration found";
    return rep;
  }
  double dmin = kInf, dmax = 0.0;
  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t b = a + 1; b < N; ++b) {
      for (std::size_t n = 0; n <= F.n_max; ++n) {
        const double v = F.d(n, a, b);
        if (v > 0) {
          dmin = std::min(dmin, v);
          dmax = std::max(dmax, v);
        }
      }
    }
  }
  if (dmax == 0.0) {
    rep.note = "no admissible configuration found";
    return rep;
  }
  const double lr = std::log(r);
  std::vector<double> required;
  for (std::size_t trial = 0; trial < opt.trials; ++trial) {
    ++rep.attempted;
    const std::size_t n = opt.n0 + rng.below(n_hi - opt.n0 + 1);
    const std::size_t Nn = admissible_cardinality(n);
    if (Nn > N) continue;
    const double scale_n = std::ldexp(1.0, static_cast<int>(n));
    // r^{-j} ranges over the distance scales present at level n
    const long j_lo = static_cast<long>(std::floor(-std::log(2.0 * dmax / scale_n) / lr)) - 1;
    const long j_hi = static_cast<long>(std::ceil(-std::log(0.5 * dmin / scale_n) / lr)) + 1;
    const long j = j_lo + static_cast<long>(rng.below(static_cast<std::uint64_t>(j_hi - j_lo + 1)));
    const std::size_t anchor = rng.below(N);
    const double radius = scale_n * std::pow(r, -static_cast<double>(j));
    const double sep = 2.0 * scale_n * std::pow(r, -static_cast<double>(j) - 1.0);
    std::vector<std::size_t> centers;
    for (std::size_t a = 0; a < N && centers.size() < Nn; ++a) {
      if (F.d(n, anchor, a) > radius) continue;
      bool ok = true;
      for (std::size_t c : centers) {
        if (F.d(n + 1, a, c) < sep) {
          ok = false;
          break;
        }
      }
      if (ok) centers.push_back(a);
    }
    if (centers.size() < Nn) continue;
    const double h_radius =
        std::ldexp(1.0, static_cast<int>(n + rep.kappa)) * std::pow(r, -static_cast<double>(j) - 2.0);
    std::vector<std::size_t> uni;
    double min_h = kInf;
    for (std::size_t c : centers) {
      std::vector<std::size_t> H{c};
      if (!opt.singleton_H) {
        for (std::size_t a = 0; a < N; ++a) {
          if (a != c && F.d(n + rep.kappa, c, a) <= h_radius) H.push_back(a);
        }
      }
      min_h = std::min(min_h, G(H));
      uni.insert(uni.end(), H.begin(), H.end());
    }
    std::sort(uni.begin(), uni.end());
    uni.erase(std::unique(uni.begin(), uni.end()), uni.end());
    const double gain = G(uni) - min_h;
    const double target = scale_n * std::pow(r, -static_cast<double>(j) - 1.0);
    ++rep.configurations;
    required.push_back(gain > 0.0 ? target / gain : kInf);
  }
  if (rep.configurations == 0) {
    rep.note = "no admissible configuration found";
    return rep;
  }
  rep.K_min = *std::max_element(required.begin(), required.end());
  if (opt.K > 0.0) {
    rep.passed_at_K = static_cast<std::size_t>(
        std::count_if(required.begin(), required.end(), [&](double k) { return k <= opt.K; }));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Two-sided comparison and concentration

struct TwoSidedReport {
  Estimate esup;
  double gamma = 0.0;
  double ratio = 0.0;
  double ratio_lo = 0.0;
  double ratio_hi = 0.0;
  /// Both sides vanish (T a single point).
  bool degenerate = false;
};

inline TwoSidedReport two_sided_compare(const PointSet& T, const DistanceFamily& F,
                                        std::size_t samples, const RngStream& rng) {
  TwoSidedReport rep;
  rep.esup = esup_mc(T, samples, rng);
  rep.gamma = gamma_functional(F).gamma;
  if (rep.gamma == 0.0) {
    rep.degenerate = true;
    rep.ratio = rep.ratio_lo = rep.ratio_hi = 1.0;
    return rep;
  }
  const double z = 1.959963984540054;
  rep.ratio = rep.esup.value / rep.gamma;
  rep.ratio_lo = (rep.esup.value - z * rep.esup.stderr_) / rep.gamma;
  rep.ratio_hi = (rep.esup.value + z * rep.esup.stderr_) / rep.gamma;
  return rep;
}

struct ConcentrationReport {
  double p = 0.0;
  double esup = 0.0;
  /// sup_{s,t} ||X_t - X_s||_p (surrogate when the support is thin, MC otherwise).
  double spread = 0.0;
  /// ||(E sup - sup)_+||_p / spread.
  double L_lower = 0.0;
  /// For each K: ||(sup - K E sup)_+||_p / spread.
  std::vector<double> K_grid;
  std::vector<double> L_upper;
};

inline ConcentrationReport concentration_probe(const PointSet& T, double p, std::size_t samples,
                                               const RngStream& rng,
                                               std::vector<double> K_grid = {1.0, 1.5, 2.0, 3.0}) {
  ConcentrationReport rep;
  rep.p = p;
  rep.K_grid = K_grid;
  const auto sups = sup_samples(T, samples, rng.derive(0));
  rep.esup = mean_estimate(sups, rng.seed()).value;
  std::optional<ProjectionBatch> batch;
  for (std::size_t a = 0; a < T.size(); ++a) {
    for (std::size_t b = a + 1; b < T.size(); ++b) {
      const auto diff = T.difference(a, b);
      double v;
      if (static_cast<double>(diff.total_support()) <= p) {
        v = xt_moment_alloc(diff, p).value;
      } else {
        if (!batch) batch = project_samples(T, samples, rng.derive(1));
        v = pair_moment(*batch, a, b, p).value;
      }
      rep.spread = std::max(rep.spread, v);
    }
  }
  auto plus_norm = [&](double shift, double sign) {
    std::vector<double> dev(sups.size());
    for (std::size_t s = 0; s < sups.size(); ++s) dev[s] = std::max(0.0, sign * (sups[s] - shift));
    return lp_norm_estimate(dev, p, 0).value;
  };
  if (rep.spread == 0.0) {
    rep.L_upper.assign(K_grid.size(), 0.0);
    return rep;
  }
  rep.L_lower = plus_norm(rep.esup, -1.0) / rep.spread;
  for (double K : K_grid) rep.L_upper.push_back(plus_norm(K * rep.esup, 1.0) / rep.spread);
  return rep;
}

}  // namespace sudakov
