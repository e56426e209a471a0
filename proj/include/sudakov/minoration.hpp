#pragma once

// Cube-like separated sets, the empirical Sudakov minoration ratio, the
// small/large coefficient split and its dichotomy, and the truncated-process
// surrogate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "sudakov/allocation.hpp"
#include "sudakov/errors.hpp"
#include "sudakov/measure.hpp"
#include "sudakov/moments.hpp"
#include "sudakov/parallel.hpp"
#include "sudakov/pointset.hpp"
#include "sudakov/rng.hpp"
#include "sudakov/special.hpp"

namespace sudakov {

/// The interrelated constants of the cube-like set construction and of the
/// coefficient split. Every experiment echoes the full record.
struct Constants {
  double delta = 0.5;
  /// Support budget |I(t)| <= delta_prime * p.
  double delta_prime = 0.5;
  double delta_dblprime = 0.25;
  /// Weight floor k_i >= rho.
  double rho = 0.5 / std::numbers::e;
  /// Weight budget sum_{i in I(t)} k_i <= 2 C delta p.
  double C = 2.0;
  double D = 2.0;
  /// Split threshold; 0 means "derive from D and the measure".
  double A = 0.0;
  double eps = kDefaultEpsCutoff;

  double weight_budget(double p) const { return 2.0 * C * delta * p; }
};

/// A = D^{q/p} at the smallest exponent p > 1 of the measure, so that
/// A^{p_k} >= D^{q_k} for every block. Blocks with p_k = 1 have q_k = inf and
/// use the limiting rule in split_small_large, so they do not constrain A.
inline double default_split_A(const ProductMeasure& m, double D) {
  double pmin = kInf;
  for (const auto& b : m.blocks()) if (b.p > 1.0) pmin = std::min(pmin, b.p);
  if (!std::isfinite(pmin)) return D;
  return std::pow(D, 1.0 / (pmin - 1.0));
}

inline Constants resolve_constants(Constants c, const ProductMeasure& m) {
  if (!(c.A > 0.0)) c.A = default_split_A(m, c.D);
  c.eps = m.eps_cutoff();
  return c;
}

/// Cube-like set: 0 plus ceil(e^p) - 1 distinct points t with t_i in {0, k_i}
/// on supports of a common size m <= delta' p.
struct CubeSet {
  PointSet set;
  std::vector<double> weights;
  std::vector<std::vector<std::size_t>> supports;
  std::size_t support_size = 0;
  double p = 0.0;
  double target_A = 0.0;
  Constants constants;
};

/// Number of points a cube-like set for exponent p must have.
inline std::size_t cube_cardinality(double p) {
  return static_cast<std::size_t>(std::ceil(std::exp(p) - 1e-12));
}

/// Smallest support size m <= max(1, floor(delta' p)) with C(d, m) >= ceil(e^p) - 1.
/// Throws CapacityError with the counting bound when none exists.
inline std::size_t cube_support_size(std::size_t d, double p, double delta_prime) {
  const std::size_t need = cube_cardinality(p) - 1;
  const std::size_t m_max = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(delta_prime * p + 1e-12)));
  for (std::size_t m = 1; m <= std::min(m_max, d); ++m) {
    if (log_binomial(static_cast<double>(d), static_cast<double>(m)) >=
        std::log(static_cast<double>(need)) - 1e-12) {
      return m;
    }
  }
  const std::size_t m = std::min(m_max, d);
  throw CapacityError("cube set: d = " + std::to_string(d) + " admits at most C(" +
                      std::to_string(d) + ", " + std::to_string(m) + ") = " +
                      std::to_string(std::exp(log_binomial(static_cast<double>(d),
                                                           static_cast<double>(m)))) +
                      " distinct supports of size <= delta' p = " +
                      std::to_string(delta_prime * p) + ", but ceil(e^p) - 1 = " +
                      std::to_string(need) + " are needed");
}

/// Checks every CubeSet invariant; throws InvariantViolation.
inline void validate_cube_set(const CubeSet& T) {
  const std::size_t card = cube_cardinality(T.p);
  const auto& c = T.constants;
  if (T.set.size() < card || T.set.size() > card + 1) {
    throw InvariantViolation("cube set: |T| = " + std::to_string(T.set.size()) +
                             " outside [ceil(e^p), ceil(e^p) + 1]");
  }
  bool has_zero = false;
  for (std::size_t a = 0; a < T.set.size(); ++a) {
    const auto& sp = T.set.sparse(a);
    if (sp.idx.empty()) has_zero = true;
    if (static_cast<double>(sp.idx.size()) > c.delta_prime * T.p + 1e-12 && sp.idx.size() > 1) {
      throw InvariantViolation("cube set: |I(t)| = " + std::to_string(sp.idx.size()) +
                               " exceeds delta' p");
    }
    double mass = 0.0;
    for (std::size_t s = 0; s < sp.idx.size(); ++s) {
      const double k = T.weights[sp.idx[s]];
      if (sp.val[s] != k) throw InvariantViolation("cube set: coordinate not in {0, k_i}");
      if (k < c.rho) {
        throw InvariantViolation("cube set: weight " + std::to_string(k) + " below rho = " +
                                 std::to_string(c.rho));
      }
      mass += k;
    }
    if (mass > c.weight_budget(T.p) * (1 + 1e-12)) {
      throw InvariantViolation("cube set: sum of weights " + std::to_string(mass) +
                               " exceeds 2 C delta p = " + std::to_string(c.weight_budget(T.p)));
    }
  }
  if (!has_zero) throw InvariantViolation("cube set: 0 is not a point");
}

/// Result of a separation scan.
struct Separation {
  double A_min = kInf;
  std::size_t i = 0;
  std::size_t j = 0;
  bool has_pair = false;
};

enum class SeparationMethod { surrogate, mc };

inline SeparationMethod separation_method_from_string(const std::string& s) {
  if (s == "surrogate" || s == "alloc") return SeparationMethod::surrogate;
  if (s == "mc") return SeparationMethod::mc;
  throw ConfigError("unknown separation method '" + s + "'");
}

struct SeparationOptions {
  SeparationMethod method = SeparationMethod::surrogate;
  std::size_t samples = 20000;
  RngStream rng{0, 0};
};

/// min over pairs s != t of ||X_t - X_s||_p and the argmin pair.
inline Separation check_separation(const PointSet& T, double p,
                                   const SeparationOptions& opt = SeparationOptions{}) {
  Separation out;
  const std::size_t n = T.size();
  if (n < 2) return out;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  std::vector<double> dist(pairs.size());
  if (opt.method == SeparationMethod::surrogate) {
    parallel_for(pairs.size(), [&](std::size_t e) {
      dist[e] = xt_moment_alloc(T.difference(pairs[e].first, pairs[e].second), p).value;
    });
  } else {
    const auto batch = project_samples(T, opt.samples, opt.rng);
    parallel_for(pairs.size(), [&](std::size_t e) {
      dist[e] = pair_moment(batch, pairs[e].first, pairs[e].second, p).value;
    });
  }
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    if (dist[e] < out.A_min) {
      out.A_min = dist[e];
      out.i = pairs[e].first;
      out.j = pairs[e].second;
      out.has_pair = true;
    }
  }
  return out;
}

/// Builds a cube-like set whose minimum pairwise surrogate distance equals
/// target_A (default p). Weights start at U[1, 2] and are rescaled; a draw
/// that violates the weight floor or the weight budget is redrawn.
inline CubeSet generate_cube_set(const ProductMeasure& m, double p, double target_A,
                                 const Constants& constants, RngStream& rng,
                                 double max_p = 8.0, std::size_t max_attempts = 20) {
  if (!(p >= 2.0)) throw DomainError("generate_cube_set: p must be >= 2");
  if (p > max_p) {
    throw CapacityError("generate_cube_set: p = " + std::to_string(p) + " exceeds the cap " +
                        std::to_string(max_p) + " (ceil(e^p) points)");
  }
  if (!(target_A > 0.0)) target_A = p;
  const Constants c = resolve_constants(constants, m);
  const std::size_t d = m.dim();
  const std::size_t card = cube_cardinality(p);
  const std::size_t msz = cube_support_size(d, p, c.delta_prime);
  std::string last_failure;
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    // distinct random supports of size msz
    std::vector<std::vector<std::size_t>> supports;
    std::vector<std::vector<std::size_t>> seen;
    std::size_t tries = 0;
    while (supports.size() + 1 < card) {
      if (++tries > 200 * card) throw CapacityError("generate_cube_set: could not draw distinct supports");
      std::vector<std::size_t> pool(d);
      for (std::size_t i = 0; i < d; ++i) pool[i] = i;
      for (std::size_t a = 0; a < msz; ++a) std::swap(pool[a], pool[a + rng.below(d - a)]);
      std::vector<std::size_t> s(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(msz));
      std::sort(s.begin(), s.end());
      if (std::find(seen.begin(), seen.end(), s) != seen.end()) continue;
      seen.push_back(s);
      supports.push_back(std::move(s));
    }
    std::vector<double> weights(d);
    for (auto& w : weights) w = 1.0 + rng.uniform();
    auto build = [&](double factor) {
      std::vector<std::vector<double>> pts;
      pts.emplace_back(d, 0.0);
      for (const auto& s : supports) {
        std::vector<double> pt(d, 0.0);
        for (std::size_t i : s) pt[i] = factor * weights[i];
        pts.push_back(std::move(pt));
      }
      return PointSet(m, std::move(pts), p);
    };
    const PointSet base = build(1.0);
    const Separation sep = check_separation(base, p);
    if (!(sep.A_min > 0.0)) {
      last_failure = "degenerate base set";
      continue;
    }
    const double factor = target_A / sep.A_min;
    for (auto& w : weights) w *= factor;
    CubeSet T;
    T.set = build(1.0);
    T.weights = weights;
    T.supports.push_back({});
    for (auto& s : supports) T.supports.push_back(s);
    T.support_size = msz;
    T.p = p;
    T.target_A = target_A;
    T.constants = c;
    try {
      validate_cube_set(T);
    } catch (const InvariantViolation& e) {
      last_failure = e.what();
      continue;
    }
    return T;
  }
  throw CapacityError("generate_cube_set: no valid set after " + std::to_string(max_attempts) +
                      " attempts (" + last_failure + ")");
}

/// Empirical minoration constant K^ = A_min / E sup.
struct MinorationReport {
  double A_min = 0.0;
  Separation witness;
  Estimate esup;
  double K_hat = 0.0;
  double K_lo = 0.0;
  double K_hi = 0.0;
  /// MC ||X_t - X_s||_p at the witness pair; certifies the surrogate distance.
  Estimate witness_mc;
  Constants constants;
};

inline MinorationReport minoration_ratio(const CubeSet& T, std::size_t n_samples, const RngStream& rng,
                                         std::size_t witness_samples = 20000) {
  MinorationReport rep;
  rep.constants = T.constants;
  rep.witness = check_separation(T.set, T.p);
  rep.A_min = rep.witness.A_min;
  rep.esup = esup_mc(T.set, n_samples, rng.derive(0));
  const double z = 1.959963984540054;
  const double lo = rep.esup.value - z * rep.esup.stderr_;
  const double hi = rep.esup.value + z * rep.esup.stderr_;
  rep.K_hat = rep.esup.value > 0.0 ? rep.A_min / rep.esup.value : kInf;
  rep.K_lo = hi > 0.0 ? rep.A_min / hi : kInf;
  rep.K_hi = lo > 0.0 ? rep.A_min / lo : kInf;
  if (rep.witness.has_pair && witness_samples >= 1000) {
    const auto diff = T.set.difference(rep.witness.i, rep.witness.j);
    rep.witness_mc = mc_moment(ProcessSampler(T.set.measure(), ProcessKind::X), diff.coords(),
                               T.p, witness_samples, rng.derive(1));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Small / large split

struct SplitPoint {
  BlockVector small;
  BlockVector large;
  std::vector<char> large_block;
};

/// Whether block k of t is large: D^q ||t_k||_q^q > A^p n, compared in logs.
/// For q = inf the limit rule D ||t_k||_inf > 1 applies. Equality is small.
inline bool block_is_large(const BlockSpec& b, double norm_q, double A, double D) {
  if (norm_q == 0.0) return false;
  if (std::isinf(b.q)) return D * norm_q > 1.0;
  const double lhs = b.q * std::log(D * norm_q);
  const double rhs = b.p * std::log(A) + std::log(static_cast<double>(b.n));
  return lhs > rhs;
}

inline SplitPoint split_small_large(const BlockVector& t, double A, double D) {
  const auto& m = t.measure();
  std::vector<double> small = t.coords(), large(m.dim(), 0.0);
  std::vector<char> flag(m.block_count(), 0);
  for (std::size_t k = 0; k < m.block_count(); ++k) {
    if (!block_is_large(m.block(k), t.block_norm(k, m.block(k).q), A, D)) continue;
    flag[k] = 1;
    for (std::size_t i : m.index_set(k)) {
      large[i] = small[i];
      small[i] = 0.0;
    }
  }
  return SplitPoint{BlockVector(m, std::move(small)), BlockVector(m, std::move(large)), flag};
}

/// sum_k D^{q_k} ||x_k||_{q_k}^{q_k}; q_k = inf blocks contribute the limit
/// (0, 1 or inf according to D ||x_k||_inf).
inline double small_part_distance(const BlockVector& x, double D) {
  const auto& m = x.measure();
  double s = 0.0;
  for (std::size_t k = 0; k < m.block_count(); ++k) {
    if (x.support_size(k) == 0) continue;
    const auto& b = m.block(k);
    const double norm = x.block_norm(k, b.q);
    if (std::isinf(b.q)) {
      const double v = D * norm;
      s += v > 1.0 ? kInf : (v == 1.0 ? 1.0 : 0.0);
    } else {
      s += std::exp(b.q * std::log(D * norm));
    }
  }
  return s;
}

struct DichotomyResult {
  enum class Kind { separated, cluster };
  Kind kind = Kind::separated;
  /// Separated: the packing. Cluster: every point within distance < p of the center.
  std::vector<std::size_t> members;
  std::size_t center = 0;
  std::size_t packing_size = 0;
  std::size_t threshold = 0;
};

/// Greedy maximal packing of the small parts at distance p. At least
/// ceil(sqrt|T|) packed points gives the separated branch; otherwise the
/// packing's open p-balls cover T and the fullest ball has >= ceil(sqrt|T|)
/// points.
inline DichotomyResult dichotomy(const PointSet& T, double p, double D, double A) {
  DichotomyResult out;
  const std::size_t n = T.size();
  out.threshold = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n)) - 1e-12));
  if (n == 0) return out;
  std::vector<BlockVector> small;
  small.reserve(n);
  for (std::size_t a = 0; a < n; ++a) small.push_back(split_small_large(T.vector(a), A, D).small);
  auto dist = [&](std::size_t a, std::size_t b) { return small_part_distance(small[a] - small[b], D); };
  std::vector<std::size_t> packing;
  for (std::size_t a = 0; a < n; ++a) {
    bool far = true;
    for (std::size_t c : packing) {
      if (dist(a, c) < p) {
        far = false;
        break;
      }
    }
    if (far) packing.push_back(a);
  }
  out.packing_size = packing.size();
  if (packing.size() >= out.threshold) {
    out.kind = DichotomyResult::Kind::separated;
    out.members = packing;
    return out;
  }
  out.kind = DichotomyResult::Kind::cluster;
  for (std::size_t c : packing) {
    std::vector<std::size_t> ball;
    for (std::size_t a = 0; a < n; ++a) if (dist(a, c) < p) ball.push_back(a);
    if (ball.size() > out.members.size()) {
      out.members = std::move(ball);
      out.center = c;
    }
  }
  return out;
}

/// Capped terms (k_i r^{1/p_k}) ^ D^{q_k} k_i^{q_k} over the coordinates
/// where the small parts of t and s differ.
inline std::vector<AllocTerm> truncated_terms(const BlockVector& t_small, const BlockVector& s_small,
                                              double D) {
  const auto& m = t_small.measure();
  std::vector<AllocTerm> terms;
  for (std::size_t i = 0; i < m.dim(); ++i) {
    const double k = std::abs(t_small[i] - s_small[i]);
    if (k == 0.0) continue;
    const auto& b = m.block(m.block_of(i));
    AllocTerm term;
    term.kind = AllocTerm::Kind::capped_power;
    term.p = b.p;
    term.weight = k;
    if (std::isinf(b.q)) {
      term.cap = D * k > 1.0 ? kInf : (D * k == 1.0 ? 1.0 : 0.0);
    } else {
      term.cap = std::exp(b.q * std::log(D * k));
    }
    if (term.cap == 0.0) continue;
    terms.push_back(term);
  }
  return terms;
}

/// Surrogate lower bound for ||Z_{t*} - Z_{s*}||_p of the truncated process.
inline double truncated_moment_surrogate(const BlockVector& t, const BlockVector& s, double p,
                                         double D, double A) {
  if (!(p >= 1.0)) throw DomainError("truncated_moment_surrogate: p must be >= 1");
  const auto ts = split_small_large(t, A, D).small;
  const auto ss = split_small_large(s, A, D).small;
  const auto terms = truncated_terms(ts, ss, D);
  if (terms.empty()) return 0.0;
  return maximize_allocation(terms, p).value;
}

struct LargeNormBudget {
  double budget = 0.0;
  double block_count_weighted = 0.0;
  bool pass = true;
};

/// sum_k n_k^{1/p_k} ||t_k^dagger||_{q_k} against budget_multiple * p and
/// sum_k n_k 1{t_k^dagger != 0} against count_multiple * p.
inline LargeNormBudget large_norm_budget(const SplitPoint& sp, double p, double budget_multiple = 4.0,
                                         double count_multiple = 1.0) {
  LargeNormBudget out;
  const auto& m = sp.large.measure();
  for (std::size_t k = 0; k < m.block_count(); ++k) {
    if (sp.large.support_size(k) == 0) continue;
    const auto& b = m.block(k);
    const double n = static_cast<double>(b.n);
    out.budget += std::pow(n, 1.0 / b.p) * sp.large.block_norm(k, b.q);
    out.block_count_weighted += n;
  }
  out.pass = out.budget <= budget_multiple * p && out.block_count_weighted <= count_multiple * p;
  return out;
}

}  // namespace sudakov
