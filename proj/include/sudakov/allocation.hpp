#pragma once

// Budget allocation: maximise sum_k f_k(r_k) subject to sum_k r_k = budget,
// r_k in {0} U [m_k, budget]. Every moment surrogate in the library reduces
// to this problem with a different family of increasing terms f_k, f_k(0) = 0.
//
// The solver starts from the allocation that is optimal for the upper concave
// envelopes of the f_k (greedy over hull segments by slope) and then repairs
// it with pairwise exchanges, each solved as a one dimensional maximisation.
// For concave terms the envelope start is already optimal up to grid error
// and the exchanges only polish it; for the non-concave stretches below a
// block's knee they move mass off the envelope's linear segments.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "sudakov/errors.hpp"
#include "sudakov/special.hpp"

namespace sudakov {

/// One summand of the allocation objective.
struct AllocTerm {
  enum class Kind {
    /// weight * scale * ||R||_r * min(r/n, 1)^{1/p}: surrogate of ||<X_k, t_k>||_r.
    block_moment,
    /// weight * r^{1/p}: surrogate of ||<Y_k, t_k>||_r.
    power,
    /// min(weight * r^{1/p}, cap): one truncated coordinate.
    capped_power,
  };

  Kind kind = Kind::power;
  double weight = 0.0;
  double p = 2.0;
  double min_r = 0.0;
  // block_moment parameters
  double n = 1.0;
  double a = 2.0;           // p * gamma
  double log_prefactor = 0.0;  // log(scale) - log(lambda) / a
  double log_gamma_n = 0.0;    // log Gamma(n / a)
  // capped_power parameter
  double cap = kInf;

  double operator()(double r) const {
    if (r <= 0.0 || weight == 0.0) return 0.0;
    switch (kind) {
      case Kind::block_moment: {
        const double log_norm = log_prefactor + (log_gamma((n + r) / a) - log_gamma_n) / r;
        double v = weight * std::exp(log_norm);
        if (r < n) v *= std::pow(r / n, 1.0 / p);
        return v;
      }
      case Kind::power:
        return weight * std::pow(r, 1.0 / p);
      case Kind::capped_power:
        return std::min(weight * std::pow(r, 1.0 / p), cap);
    }
    return 0.0;
  }

  /// Interior point where the term is not differentiable, or NaN.
  double knee() const {
    switch (kind) {
      case Kind::block_moment:
        return n;
      case Kind::capped_power:
        return std::isfinite(cap) && weight > 0.0 ? std::pow(cap / weight, p) : kNaN;
      case Kind::power:
        return kNaN;
    }
    return kNaN;
  }

  /// Whether the term is known to be concave on [min_r, inf).
  bool concave() const { return kind != Kind::block_moment || n == 1.0 || p >= 2.0; }

  static constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
};

/// Solution of an allocation problem.
struct AllocationResult {
  double value = 0.0;
  std::vector<double> r;
};

inline double allocation_objective(std::span<const AllocTerm> terms, std::span<const double> r) {
  CompensatedSum s;
  for (std::size_t k = 0; k < terms.size(); ++k) s.add(terms[k](r[k]));
  return s.value();
}

namespace detail {

inline bool in_domain(const AllocTerm& t, double r, double budget) {
  constexpr double tol = 1e-12;
  if (r < -tol * budget || r > budget * (1 + tol)) return false;
  return r <= tol * budget || r >= t.min_r * (1 - tol);
}

/// Brent's method for the maximum of g on [lo, hi].
template <class G>
std::pair<double, double> brent_max(G&& g, double lo, double hi, double x_tol) {
  constexpr double golden = 0.3819660112501051;
  double a = lo, b = hi;
  double x = a + golden * (b - a), w = x, v = x;
  double fx = -g(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    const double xm = 0.5 * (a + b);
    const double tol1 = x_tol + 1e-12 * std::abs(x);
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) break;
    bool golden_step = true;
    if (std::abs(e) > tol1) {
      const double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double etemp = e;
      e = d;
      if (!(std::abs(p) >= std::abs(0.5 * q * etemp) || p <= q * (a - x) || p >= q * (b - x))) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = (xm - x >= 0) ? tol1 : -tol1;
        golden_step = false;
      }
    }
    if (golden_step) {
      e = (x >= xm) ? a - x : b - x;
      d = golden * e;
    }
    const double u = std::abs(d) >= tol1 ? x + d : x + (d >= 0 ? tol1 : -tol1);
    const double fu = -g(u);
    if (fu <= fx) {
      if (u >= x) a = x; else b = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  return {x, -fx};
}

/// Best split of `total` between terms i and j. Returns the share of i.
inline std::pair<double, double> best_pair_split(const AllocTerm& ti, const AllocTerm& tj,
                                                 double total) {
  auto g = [&](double x) { return ti(x) + tj(total - x); };
  double best_x = 0.0;
  double best_v = -kInf;
  auto consider = [&](double x, double v) {
    // ties go to the smaller share of the first term
    if (v > best_v || (v == best_v && x < best_x)) {
      best_v = v;
      best_x = x;
    }
  };
  if (total <= 0.0) return {0.0, 0.0};
  if (ti.min_r == 0.0 || total >= tj.min_r) consider(0.0, g(0.0));
  if (total >= ti.min_r) consider(total, g(total));
  const double lo = std::max(ti.min_r, 0.0);
  const double hi = total - tj.min_r;
  if (hi > lo) {
    const bool concave = ti.concave() && tj.concave();
    std::vector<double> xs;
    const int scan = concave ? 4 : 32;
    for (int s = 0; s <= scan; ++s) xs.push_back(lo + (hi - lo) * s / scan);
    const double ki = ti.knee();
    const double kj = tj.knee();
    if (std::isfinite(ki) && ki > lo && ki < hi) xs.push_back(ki);
    if (std::isfinite(kj) && total - kj > lo && total - kj < hi) xs.push_back(total - kj);
    std::sort(xs.begin(), xs.end());
    std::vector<double> vs(xs.size());
    for (std::size_t s = 0; s < xs.size(); ++s) vs[s] = g(xs[s]);
    const std::size_t top = static_cast<std::size_t>(
        std::max_element(vs.begin(), vs.end()) - vs.begin());
    consider(xs[top], vs[top]);
    const double a = xs[top == 0 ? 0 : top - 1];
    const double b = xs[top + 1 == xs.size() ? top : top + 1];
    if (b > a) {
      // a kink at the scan maximum splits the bracket; search each side
      auto [x1, v1] = brent_max(g, a, xs[top], 1e-10 * (hi - lo));
      consider(x1, v1);
      auto [x2, v2] = brent_max(g, xs[top], b, 1e-10 * (hi - lo));
      consider(x2, v2);
    }
  }
  return {best_x, best_v};
}

struct HullSegment {
  std::size_t term;
  double from;
  double to;
  double slope;
};

/// Allocation optimal for the upper concave envelopes of the terms.
inline std::vector<double> envelope_start(std::span<const AllocTerm> terms, double budget) {
  constexpr int kGrid = 24;
  std::vector<HullSegment> segments;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const auto& t = terms[k];
    std::vector<std::pair<double, double>> pts;
    pts.emplace_back(0.0, 0.0);
    const double lo = std::max(t.min_r, budget / (4.0 * kGrid));
    for (int s = 0; s <= kGrid; ++s) {
      // denser near the lower end, where curvature lives
      const double u = static_cast<double>(s) / kGrid;
      const double x = lo + (budget - lo) * u * u;
      pts.emplace_back(x, t(x));
    }
    const double kn = t.knee();
    if (std::isfinite(kn) && kn > lo && kn < budget) pts.emplace_back(kn, t(kn));
    std::sort(pts.begin(), pts.end());
    std::vector<std::pair<double, double>> hull;
    for (const auto& pt : pts) {
      while (hull.size() >= 2) {
        const auto& o = hull[hull.size() - 2];
        const auto& a = hull.back();
        const double cross =
            (a.first - o.first) * (pt.second - o.second) - (a.second - o.second) * (pt.first - o.first);
        if (cross >= 0) hull.pop_back(); else break;
      }
      hull.push_back(pt);
    }
    for (std::size_t s = 0; s + 1 < hull.size(); ++s) {
      const double dx = hull[s + 1].first - hull[s].first;
      if (dx <= 0) continue;
      segments.push_back({k, hull[s].first, hull[s + 1].first,
                          (hull[s + 1].second - hull[s].second) / dx});
    }
  }
  std::stable_sort(segments.begin(), segments.end(),
                   [](const HullSegment& x, const HullSegment& y) { return x.slope > y.slope; });
  std::vector<double> r(terms.size(), 0.0);
  double left = budget;
  for (const auto& seg : segments) {
    if (left <= 0) break;
    if (r[seg.term] != seg.from) continue;
    const double take = std::min(left, seg.to - seg.from);
    const double next = seg.from + take;
    if (next > 0 && next < terms[seg.term].min_r) continue;
    r[seg.term] = next;
    left -= take;
  }
  if (left > 0) {
    // leftover from a segment that could not be funded partially
    std::size_t best = terms.size();
    double gain = -kInf;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const double nr = r[k] + left;
      if (!in_domain(terms[k], nr, budget)) continue;
      const double gk = terms[k](nr) - terms[k](r[k]);
      if (gk > gain) {
        gain = gk;
        best = k;
      }
    }
    if (best < terms.size()) r[best] += left;
  }
  return r;
}

}  // namespace detail

/// Maximises the separable objective under the budget constraint.
inline AllocationResult maximize_allocation(std::span<const AllocTerm> terms, double budget) {
  AllocationResult out;
  out.r.assign(terms.size(), 0.0);
  if (!(budget > 0.0)) throw DomainError("allocation: budget must be positive");
  std::vector<std::size_t> live;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    if (terms[k].weight > 0.0 && terms[k].min_r <= budget) live.push_back(k);
  }
  if (live.empty()) return out;
  if (live.size() == 1) {
    out.r[live[0]] = budget;
    out.value = terms[live[0]](budget);
    return out;
  }
  std::vector<AllocTerm> sub;
  for (std::size_t k : live) sub.push_back(terms[k]);
  std::vector<double> r;
  if (sub.size() == 2) {
    auto [x, v] = detail::best_pair_split(sub[0], sub[1], budget);
    r = {x, budget - x};
  } else {
    r = detail::envelope_start(sub, budget);
    double value = allocation_objective(sub, r);
    for (int round = 0; round < 64; ++round) {
      bool improved = false;
      for (std::size_t i = 0; i < sub.size(); ++i) {
        for (std::size_t j = i + 1; j < sub.size(); ++j) {
          const double total = r[i] + r[j];
          if (total <= 0) continue;
          const double before = sub[i](r[i]) + sub[j](r[j]);
          auto [x, v] = detail::best_pair_split(sub[i], sub[j], total);
          if (v > before + 1e-15 * std::max(1.0, std::abs(value))) {
            r[i] = x;
            r[j] = total - x;
            value += v - before;
            improved = true;
          }
        }
      }
      if (!improved) break;
    }
  }
  for (std::size_t s = 0; s < live.size(); ++s) {
    // snap round-off: shares inside (0, m) are exactly zero
    out.r[live[s]] = (r[s] > 0 && r[s] < 1e-12 * budget) ? 0.0 : r[s];
  }
  out.value = allocation_objective(terms, out.r);
  return out;
}

/// Exhaustive search over a refined simplex grid. Independent of the solver
/// above; used as its correctness oracle. Each coordinate ranges over
/// {0, m_k, knee_k} plus the multiples of budget / grid_steps, one coordinate
/// absorbs the remainder, and every choice of remainder coordinate is tried.
/// refine_rounds > 0 re-grids a shrinking window around the incumbent.
inline AllocationResult alloc_bruteforce_oracle(std::span<const AllocTerm> terms, double budget,
                                                std::size_t grid_steps,
                                                std::size_t refine_rounds = 0) {
  const std::size_t m = terms.size();
  if (m > 4) throw DomainError("alloc_bruteforce_oracle: at most 4 terms (exponential grid)");
  if (grid_steps < 1) throw DomainError("alloc_bruteforce_oracle: grid_steps must be >= 1");
  constexpr double kNaNValue = std::numeric_limits<double>::quiet_NaN();
  AllocationResult best;
  best.r.assign(m, 0.0);
  best.value = m == 0 ? 0.0 : -kInf;
  if (m == 0) return best;

  constexpr std::size_t kOffGrid = std::numeric_limits<std::size_t>::max();
  auto search = [&](const std::vector<double>& lo, const std::vector<double>& hi,
                    std::size_t steps) {
    const bool full = std::all_of(lo.begin(), lo.end(), [](double x) { return x == 0.0; }) &&
                      std::all_of(hi.begin(), hi.end(), [&](double x) { return x == budget; });
    // candidate (value, grid index) lists per coordinate
    std::vector<std::vector<std::pair<double, std::size_t>>> cand(m);
    std::vector<std::vector<double>> grid_val(m, std::vector<double>(steps + 1, kNaNValue));
    for (std::size_t k = 0; k < m; ++k) {
      auto& c = cand[k];
      const double h = (hi[k] - lo[k]) / static_cast<double>(steps);
      for (std::size_t s = 0; s <= steps; ++s) {
        const double x = lo[k] + h * static_cast<double>(s);
        if (!detail::in_domain(terms[k], x, budget)) continue;
        c.emplace_back(x, s);
        grid_val[k][s] = terms[k](x);
      }
      for (double extra : {0.0, terms[k].min_r, terms[k].knee()}) {
        if (std::isfinite(extra) && extra >= lo[k] && extra <= hi[k] &&
            detail::in_domain(terms[k], extra, budget)) {
          c.emplace_back(extra, kOffGrid);
        }
      }
      std::sort(c.begin(), c.end());
    }
    auto value_of = [&](std::size_t k, const std::pair<double, std::size_t>& c) {
      return c.second == kOffGrid ? terms[k](c.first) : grid_val[k][c.second];
    };
    std::vector<std::vector<double>> val(m);
    for (std::size_t k = 0; k < m; ++k) {
      for (const auto& c : cand[k]) val[k].push_back(value_of(k, c));
    }
    std::vector<double> r(m);
    for (std::size_t rem = 0; rem < m; ++rem) {
      std::vector<std::size_t> others;
      for (std::size_t k = 0; k < m; ++k) if (k != rem) others.push_back(k);
      std::vector<std::size_t> idx(others.size(), 0);
      for (;;) {
        double used = 0.0, partial = 0.0;
        std::size_t grid_sum = 0;
        bool aligned = full;
        for (std::size_t o = 0; o < others.size(); ++o) {
          const auto& c = cand[others[o]][idx[o]];
          used += c.first;
          partial += val[others[o]][idx[o]];
          if (c.second == kOffGrid) aligned = false; else grid_sum += c.second;
        }
        const double left = budget - used;
        if (detail::in_domain(terms[rem], left, budget)) {
          const double x = std::clamp(left, 0.0, budget);
          double fx;
          if (aligned && grid_sum <= steps && !std::isnan(grid_val[rem][steps - grid_sum])) {
            fx = grid_val[rem][steps - grid_sum];
          } else {
            fx = terms[rem](x);
          }
          const double v = partial + fx;
          if (v > best.value) {
            best.value = v;
            for (std::size_t o = 0; o < others.size(); ++o) {
              r[others[o]] = cand[others[o]][idx[o]].first;
            }
            r[rem] = x;
            best.r = r;
          }
        }
        std::size_t o = 0;
        for (; o < others.size(); ++o) {
          if (++idx[o] < cand[others[o]].size()) break;
          idx[o] = 0;
        }
        if (o == others.size()) break;
      }
    }
  };

  std::vector<double> lo(m, 0.0), hi(m, budget);
  search(lo, hi, grid_steps);
  double width = budget;
  for (std::size_t round = 0; round < refine_rounds; ++round) {
    const double h = width / static_cast<double>(grid_steps);
    width = 4.0 * h;
    for (std::size_t k = 0; k < m; ++k) {
      lo[k] = std::max(0.0, best.r[k] - 2.0 * h);
      hi[k] = std::min(budget, best.r[k] + 2.0 * h);
    }
    search(lo, hi, grid_steps);
  }
  best.value = allocation_objective(terms, best.r);
  return best;
}

/// Dynamic program over the uniform grid r_k in {0, h, 2h, ..., budget},
/// h = budget / grid_steps. Any number of terms; a lower bound on the
/// optimum that converges as the grid is refined.
inline AllocationResult alloc_grid_dp_oracle(std::span<const AllocTerm> terms, double budget,
                                             std::size_t grid_steps) {
  if (grid_steps < 1) throw DomainError("alloc_grid_dp_oracle: grid_steps must be >= 1");
  const std::size_t m = terms.size();
  const std::size_t G = grid_steps;
  const double h = budget / static_cast<double>(G);
  std::vector<double> best(G + 1, 0.0);
  std::vector<std::vector<std::size_t>> choice(m, std::vector<std::size_t>(G + 1, 0));
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<double> f(G + 1, -kInf);
    for (std::size_t s = 0; s <= G; ++s) {
      const double x = h * static_cast<double>(s);
      if (detail::in_domain(terms[k], x, budget)) f[s] = terms[k](x);
    }
    std::vector<double> next(G + 1, -kInf);
    for (std::size_t j = 0; j <= G; ++j) {
      for (std::size_t s = 0; s <= j; ++s) {
        if (f[s] == -kInf || best[j - s] == -kInf) continue;
        const double v = best[j - s] + f[s];
        if (v > next[j]) {
          next[j] = v;
          choice[k][j] = s;
        }
      }
    }
    best = std::move(next);
  }
  AllocationResult out;
  out.r.assign(m, 0.0);
  std::size_t j = static_cast<std::size_t>(std::max_element(best.begin(), best.end()) - best.begin());
  for (std::size_t k = m; k-- > 0;) {
    const std::size_t s = choice[k][j];
    out.r[k] = h * static_cast<double>(s);
    j -= s;
  }
  out.value = allocation_objective(terms, out.r);
  return out;
}

}  // namespace sudakov
