#pragma once

// L_p norms of the canonical process X_t = <X, t>: Monte Carlo estimates,
// block-allocation surrogates, and the classical independent-coordinate
// formulas.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sudakov/allocation.hpp"
#include "sudakov/errors.hpp"
#include "sudakov/measure.hpp"
#include "sudakov/parallel.hpp"
#include "sudakov/rng.hpp"
#include "sudakov/sampling.hpp"
#include "sudakov/special.hpp"

namespace sudakov {

/// A point of R^d with per-block support bookkeeping I_k(t).
class BlockVector {
 public:
  BlockVector(const ProductMeasure& m, std::vector<double> coords)
      : measure_(&m), coords_(std::move(coords)) {
    if (coords_.size() != m.dim()) {
      throw ConfigError("BlockVector: expected " + std::to_string(m.dim()) + " coordinates, got " +
                        std::to_string(coords_.size()));
    }
    supports_.resize(m.block_count());
    for (std::size_t k = 0; k < m.block_count(); ++k) {
      for (std::size_t i : m.index_set(k)) {
        if (coords_[i] != 0.0) supports_[k].push_back(i);
      }
    }
  }

  const ProductMeasure& measure() const { return *measure_; }
  const std::vector<double>& coords() const { return coords_; }
  double operator[](std::size_t i) const { return coords_[i]; }
  const std::vector<std::size_t>& support(std::size_t k) const { return supports_.at(k); }

  std::size_t support_size(std::size_t k) const { return supports_.at(k).size(); }
  std::size_t total_support() const {
    std::size_t s = 0;
    for (const auto& sk : supports_) s += sk.size();
    return s;
  }
  std::vector<std::size_t> nonzero_indices() const {
    std::vector<std::size_t> out;
    for (const auto& sk : supports_) out.insert(out.end(), sk.begin(), sk.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  /// t_k in the order of J_k.
  std::vector<double> block(std::size_t k) const {
    std::vector<double> out;
    for (std::size_t i : measure_->index_set(k)) out.push_back(coords_[i]);
    return out;
  }

  /// ||t_k||_r over the support (the zero entries do not matter).
  double block_norm(std::size_t k, double r) const {
    std::vector<double> v;
    for (std::size_t i : supports_.at(k)) v.push_back(coords_[i]);
    return lp_norm(v, r);
  }

  BlockVector scaled(double lambda) const {
    std::vector<double> c = coords_;
    for (auto& x : c) x *= lambda;
    return BlockVector(*measure_, std::move(c));
  }

  BlockVector operator-(const BlockVector& other) const {
    std::vector<double> c = coords_;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] -= other.coords_[i];
    return BlockVector(*measure_, std::move(c));
  }

 private:
  const ProductMeasure* measure_;
  std::vector<double> coords_;
  std::vector<std::vector<std::size_t>> supports_;
};

/// Budget split r_k across blocks; sum r_k <= budget.
struct Allocation {
  std::vector<double> r;
  double budget = 0.0;

  double used() const {
    double s = 0.0;
    for (double x : r) s += x;
    return s;
  }
};

/// Monte Carlo estimate of a scalar functional.
struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
};

/// Value and maximiser of an allocation surrogate.
struct AllocSurrogate {
  double value = 0.0;
  Allocation allocation;
  /// Set when sum_k |I_k(t)| > budget / 4: the thin-support regime is marginal.
  bool thin_support_flag = false;
};

// ---------------------------------------------------------------------------
// Closed forms

/// p ||t||_inf + sqrt(p) ||t||_2.
inline double gluskin_kwapien(std::span<const double> t, double p) {
  if (!(p >= 1.0)) throw DomainError("gluskin_kwapien: p must be >= 1");
  return p * lp_norm(t, kInf) + std::sqrt(p) * lp_norm(t, 2.0);
}

/// Sum of the floor(p) largest |t_i| plus sqrt(p) times the l_2 norm of the rest.
inline double hitczenko(std::span<const double> t, double p) {
  if (!(p >= 1.0)) throw DomainError("hitczenko: p must be >= 1");
  std::vector<double> a(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) a[i] = std::abs(t[i]);
  std::sort(a.begin(), a.end(), std::greater<>());
  const std::size_t head = std::min(a.size(), static_cast<std::size_t>(std::floor(p)));
  double h = 0.0;
  for (std::size_t i = 0; i < head; ++i) h += a[i];
  std::vector<double> tail(a.begin() + static_cast<std::ptrdiff_t>(head), a.end());
  return h + std::sqrt(p) * lp_norm(tail, 2.0);
}

/// Surrogate for ||<V_k, t_k>||_r: ||t_k||_q (r/n)^{1/p} below the knee
/// r = n, ||t_k||_q above it. Requires r >= |I_k(t_k)|.
inline double cone_inner_moment(const BlockSpec& block, std::span<const double> t_k, double r) {
  if (t_k.size() != block.n) throw ConfigError("cone_inner_moment: t_k must have n entries");
  std::size_t support = 0;
  for (double x : t_k) support += (x != 0.0);
  if (r < static_cast<double>(support)) {
    throw DomainError("cone_inner_moment: r = " + std::to_string(r) + " < |I_k(t)| = " +
                      std::to_string(support) + "; the block formula does not apply");
  }
  const double norm = lp_norm(t_k, block.q);
  const double n = static_cast<double>(block.n);
  return r >= n ? norm : norm * std::pow(r / n, 1.0 / block.p);
}

/// Exact ||R~_k||_r = b^{-1/p} [Gamma((n+r)/p) / Gamma(n/p)]^{1/r}.
inline double rtilde_moment_exact(const BlockSpec& block, double r) {
  if (!(r > 0.0)) throw DomainError("rtilde_moment_exact: r must be positive");
  const double n = static_cast<double>(block.n);
  const double log_v = -std::log(block.b) / block.p + log_gamma_ratio((n + r) / block.p, n / block.p) / r;
  return checked_exp(log_v, "rtilde_moment_exact");
}

/// Exact ||R_k||_r = lambda^{-1/a} [Gamma((n+r)/a) / Gamma(n/a)]^{1/r}, a = p gamma.
inline double r_moment(const BlockSpec& block, double r) {
  if (!(r > 0.0)) throw DomainError("r_moment: r must be positive");
  const double n = static_cast<double>(block.n);
  const double a = block.radial_exponent();
  const double log_v = -std::log(block.potential.lambda) / a + log_gamma_ratio((n + r) / a, n / a) / r;
  return checked_exp(log_v, "r_moment");
}

/// The growth profile (n + r)^{1/p} that ||R_k||_r is compared against.
inline double r_moment_bound(const BlockSpec& block, double r) {
  return std::pow(static_cast<double>(block.n) + r, 1.0 / block.p);
}

// ---------------------------------------------------------------------------
// Allocation surrogates

/// Terms scale_k ||R_k||_r ||t_k||_{q_k} min(r/n_k, 1)^{1/p_k}, one per block.
/// The ||R_k||_2 factors of P_k = R_k/||R_k||_2 and W_k = ||R_k||_2 V_k cancel.
inline std::vector<AllocTerm> x_alloc_terms(const BlockVector& t) {
  const auto& m = t.measure();
  std::vector<AllocTerm> terms(m.block_count());
  for (std::size_t k = 0; k < m.block_count(); ++k) {
    const auto& b = m.block(k);
    auto& term = terms[k];
    term.kind = AllocTerm::Kind::block_moment;
    term.p = b.p;
    term.n = static_cast<double>(b.n);
    term.a = b.radial_exponent();
    term.log_prefactor = std::log(b.scale) - std::log(b.potential.lambda) / term.a;
    term.log_gamma_n = log_gamma(term.n / term.a);
    term.min_r = static_cast<double>(t.support_size(k));
    term.weight = t.support_size(k) ? t.block_norm(k, b.q) : 0.0;
  }
  return terms;
}

/// Terms r^{1/p_k} ||t_k||_{q_k}.
inline std::vector<AllocTerm> y_alloc_terms(const BlockVector& t) {
  const auto& m = t.measure();
  std::vector<AllocTerm> terms(m.block_count());
  for (std::size_t k = 0; k < m.block_count(); ++k) {
    const auto& b = m.block(k);
    terms[k].kind = AllocTerm::Kind::power;
    terms[k].p = b.p;
    terms[k].min_r = static_cast<double>(t.support_size(k));
    terms[k].weight = t.support_size(k) ? t.block_norm(k, b.q) : 0.0;
  }
  return terms;
}

namespace detail {
inline void require_thin_support(const BlockVector& t, double p, const char* who) {
  if (!(p >= 1.0)) throw DomainError(std::string(who) + ": p must be >= 1");
  const std::size_t s = t.total_support();
  if (static_cast<double>(s) > p) {
    throw DomainError(std::string(who) + ": thin-support precondition violated, sum_k |I_k(t)| = " +
                      std::to_string(s) + " > p = " + std::to_string(p));
  }
}

inline AllocSurrogate to_surrogate(const AllocationResult& res, const BlockVector& t, double p) {
  AllocSurrogate out;
  out.value = res.value;
  out.allocation.r = res.r;
  out.allocation.budget = p;
  out.thin_support_flag = static_cast<double>(t.total_support()) > p / 4.0;
  return out;
}
}  // namespace detail

/// Block-allocation surrogate of ||X_t||_p and its maximising allocation.
inline AllocSurrogate xt_moment_alloc(const BlockVector& t, double p) {
  detail::require_thin_support(t, p, "xt_moment_alloc");
  const auto terms = x_alloc_terms(t);
  return detail::to_surrogate(maximize_allocation(terms, p), t, p);
}

/// Grid-search oracle for xt_moment_alloc (blocks with t_k = 0 are dropped,
/// at most 4 active blocks).
inline AllocSurrogate alloc_bruteforce_oracle(const BlockVector& t, double p, std::size_t grid_steps,
                                              std::size_t refine_rounds = 0) {
  detail::require_thin_support(t, p, "alloc_bruteforce_oracle");
  const auto all = x_alloc_terms(t);
  std::vector<AllocTerm> active;
  std::vector<std::size_t> where;
  for (std::size_t k = 0; k < all.size(); ++k) {
    if (all[k].weight > 0.0) {
      active.push_back(all[k]);
      where.push_back(k);
    }
  }
  AllocationResult sub = alloc_bruteforce_oracle(active, p, grid_steps, refine_rounds);
  AllocationResult res;
  res.r.assign(all.size(), 0.0);
  for (std::size_t s = 0; s < where.size(); ++s) res.r[where[s]] = sub.r[s];
  res.value = active.empty() ? 0.0 : sub.value;
  return detail::to_surrogate(res, t, p);
}

/// Independent-coordinate surrogate sup sum_k r_k^{1/p_k} ||t_k||_{q_k}.
inline AllocSurrogate y_moment_surrogate(const BlockVector& t, double p) {
  detail::require_thin_support(t, p, "y_moment_surrogate");
  const auto terms = y_alloc_terms(t);
  return detail::to_surrogate(maximize_allocation(terms, p), t, p);
}

// ---------------------------------------------------------------------------
// Monte Carlo

/// Result of mc_moment for a list of exponents.
struct MomentReport {
  std::vector<double> ps;
  std::vector<Estimate> estimates;
  std::vector<std::string> warnings;
};

/// Estimator-variance heuristic: high moments need many samples.
inline std::optional<std::string> mc_stability_warning(double p, std::size_t n_samples) {
  if (p >= 20.0 && n_samples < 1000000) {
    return "p = " + std::to_string(p) + " with only " + std::to_string(n_samples) +
           " samples: the |X_t|^p estimator is dominated by rare draws";
  }
  return std::nullopt;
}

/// Draws <X, t> for n samples, chunked so the values do not depend on the
/// worker count.
inline std::vector<double> sample_process_values(const ProcessSampler& sampler,
                                                 std::span<const double> t, std::size_t n,
                                                 const RngStream& master) {
  std::vector<std::size_t> nz;
  for (std::size_t i = 0; i < t.size(); ++i) if (t[i] != 0.0) nz.push_back(i);
  ProcessSampler local = sampler;
  if (sampler.kind() == ProcessKind::X || sampler.kind() == ProcessKind::Y) local.restrict_to(nz);
  std::vector<double> z(n);
  const std::size_t chunks = chunk_count(n);
  parallel_for(chunks, [&](std::size_t c) {
    RngStream rng = master.derive(c);
    std::vector<double> x(local.dim());
    const std::size_t end = std::min(n, (c + 1) * kChunkSize);
    for (std::size_t s = c * kChunkSize; s < end; ++s) {
      local(rng, x);
      double acc = 0.0;
      for (std::size_t i : nz) acc += t[i] * x[i];
      z[s] = acc;
    }
  });
  return z;
}

/// (E|z|^p)^{1/p} with a delta-method standard error, scaled by max|z| so
/// that large p does not overflow.
inline Estimate lp_norm_estimate(std::span<const double> z, double p, std::uint64_t seed) {
  Estimate e;
  e.n_samples = z.size();
  e.seed = seed;
  double mx = 0.0;
  for (double v : z) mx = std::max(mx, std::abs(v));
  if (mx == 0.0 || z.empty()) return e;
  CompensatedSum s1, s2;
  for (double v : z) {
    const double u = std::pow(std::abs(v) / mx, p);
    s1.add(u);
    s2.add(u * u);
  }
  const double n = static_cast<double>(z.size());
  const double mean = s1.value() / n;
  const double var = std::max(0.0, s2.value() / n - mean * mean) * n / std::max(1.0, n - 1.0);
  const double se_mean = std::sqrt(var / n);
  e.value = mx * std::pow(mean, 1.0 / p);
  e.stderr_ = mx * (1.0 / p) * std::pow(mean, 1.0 / p - 1.0) * se_mean;
  return e;
}

/// Monte Carlo ||<Z, t>||_p for every p in ps, all from one sample batch.
inline MomentReport mc_moment(const ProcessSampler& sampler, std::span<const double> t,
                              const std::vector<double>& ps, std::size_t n, const RngStream& rng) {
  if (n < 1000) throw ConfigError("mc_moment: at least 1000 samples are required");
  if (t.size() != sampler.dim()) throw ConfigError("mc_moment: t has the wrong dimension");
  MomentReport rep;
  rep.ps = ps;
  for (double p : ps) {
    if (!(p >= 1.0)) throw DomainError("mc_moment: p must be >= 1");
    if (auto w = mc_stability_warning(p, n)) rep.warnings.push_back(*w);
  }
  const auto z = sample_process_values(sampler, t, n, rng);
  for (double p : ps) rep.estimates.push_back(lp_norm_estimate(z, p, rng.seed()));
  return rep;
}

inline Estimate mc_moment(const ProcessSampler& sampler, std::span<const double> t, double p,
                          std::size_t n, const RngStream& rng) {
  return mc_moment(sampler, t, std::vector<double>{p}, n, rng).estimates.front();
}

// ---------------------------------------------------------------------------
// Constant-band sweep

/// One (measure, t) pair of a sweep.
struct MomentInstance {
  ProductMeasure measure;
  std::vector<double> t;
};

/// min / max of MC moment over surrogate for one surrogate and exponent.
struct RatioBand {
  std::string surrogate;
  double p = 0.0;
  double min_ratio = kInf;
  double max_ratio = 0.0;
  std::size_t instances = 0;
};

/// Empirical constants hidden in each "up to constants" moment equivalence.
/// The allocation and Y surrogates are compared with MC moments of X_t, the
/// Gluskin-Kwapien formula with the symmetric exponential process and the
/// Hitczenko formula with the Rademacher process. Zero vectors are skipped,
/// and so are instances violating the thin-support precondition for the
/// allocation surrogates.
inline std::vector<RatioBand> moment_ratio_sweep(
    const std::function<MomentInstance(std::size_t, RngStream&)>& family,
    const std::vector<double>& ps, std::size_t n_instances, std::size_t n_samples,
    const RngStream& rng) {
  const std::vector<std::string> names = {"alloc", "y", "gk", "hitczenko"};
  std::vector<RatioBand> bands;
  for (const auto& name : names) {
    for (double p : ps) bands.push_back({name, p});
  }
  for (std::size_t inst = 0; inst < n_instances; ++inst) {
    RngStream gen = rng.derive(4 * inst);
    MomentInstance mi = family(inst, gen);
    BlockVector t(mi.measure, mi.t);
    if (t.total_support() == 0) continue;
    const auto x_rep = mc_moment(ProcessSampler(mi.measure, ProcessKind::X), mi.t, ps, n_samples,
                                 rng.derive(4 * inst + 1));
    const auto e_rep = mc_moment(ProcessSampler(mi.measure, ProcessKind::exponential), mi.t, ps,
                                 n_samples, rng.derive(4 * inst + 2));
    const auto r_rep = mc_moment(ProcessSampler(mi.measure, ProcessKind::rademacher), mi.t, ps,
                                 n_samples, rng.derive(4 * inst + 3));
    for (std::size_t pi = 0; pi < ps.size(); ++pi) {
      const double p = ps[pi];
      const bool thin = static_cast<double>(t.total_support()) <= p;
      for (std::size_t s = 0; s < names.size(); ++s) {
        double sur = 0.0;
        double mc = 0.0;
        if (names[s] == "alloc") {
          if (!thin) continue;
          sur = xt_moment_alloc(t, p).value;
          mc = x_rep.estimates[pi].value;
        } else if (names[s] == "y") {
          if (!thin) continue;
          sur = y_moment_surrogate(t, p).value;
          mc = x_rep.estimates[pi].value;
        } else if (names[s] == "gk") {
          sur = gluskin_kwapien(mi.t, p);
          mc = e_rep.estimates[pi].value;
        } else {
          sur = hitczenko(mi.t, p);
          mc = r_rep.estimates[pi].value;
        }
        if (sur <= 0.0) continue;
        auto& band = bands[s * ps.size() + pi];
        band.min_ratio = std::min(band.min_ratio, mc / sur);
        band.max_ratio = std::max(band.max_ratio, mc / sur);
        ++band.instances;
      }
    }
  }
  return bands;
}

}  // namespace sudakov
