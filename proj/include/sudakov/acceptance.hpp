#pragma once

// The acceptance suite: eleven criteria, each reduced to a pass/fail line
// with its tolerance pinned below. Every numeric outcome is also emitted as a
// ResultRow so two runs can be compared column for column.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "sudakov/allocation.hpp"
#include "sudakov/chaining.hpp"
#include "sudakov/experiment.hpp"
#include "sudakov/families.hpp"
#include "sudakov/measure.hpp"
#include "sudakov/minoration.hpp"
#include "sudakov/moments.hpp"
#include "sudakov/sampling.hpp"

namespace sudakov {

namespace tol {
inline constexpr double kSigmas = 4.0;               // sampler mean / variance bands
inline constexpr double kConeNorm = 1e-12;
inline constexpr double kSpecial = 1e-10;
inline constexpr double kOracleRel = 1e-6;
inline constexpr std::size_t kOracleGrid = 2000;     // step p / 2000
inline constexpr std::size_t kOracleRefine = 3;
inline constexpr double kClosedFormStderr = 3.0;
inline constexpr double kComparisonStderr = 5.0;
inline constexpr double kAlphaConstant = 3.0;
inline constexpr double kKCeiling = 30.0;
inline constexpr double kBandCeiling = 10.0;
inline constexpr double kGreedyFactor = 2.0;
inline constexpr double kDoubling = 2.0;
inline constexpr double kUnboundedEpsShare = 0.5;    // eps(p_k = 32) below half the bounded minimum
inline constexpr double kSamplerSeconds = 60.0;
inline constexpr double kOracleSeconds = 120.0;
inline constexpr double kSweepSeconds = 1200.0;
}  // namespace tol

struct AcceptanceOptions {
  std::uint64_t seed = 20240601;
  std::size_t sweep_instances = 20;
  std::size_t esup_samples = 20000;
  std::size_t witness_samples = 20000;
  std::size_t sampler_draws = 1000000;
  std::size_t closed_form_samples = 1000000;
  std::size_t comparison_instances = 100;
  std::size_t comparison_samples = 20000;
  std::size_t oracle_instances = 50;
  std::size_t dichotomy_sets = 100;
  std::size_t tiny_sets_per_family = 50;
  std::vector<std::size_t> repeat_workers{1, 8};
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

struct AcceptanceRun {
  std::vector<CriterionResult> criteria;
  std::vector<ResultRow> rows;
};

namespace detail {

inline std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

class RowSink {
 public:
  explicit RowSink(std::uint64_t seed) : seed_(seed) {}

  void add(int criterion, const std::string& metric, double value, double se = 0.0, std::size_t n = 0,
           double p = 0.0) {
    ResultRow r;
    r.experiment = "acceptance";
    r.instance = "c" + std::to_string(criterion);
    r.family = "-";
    r.p = p;
    r.metric = metric;
    r.value = value;
    r.stderr_ = se;
    r.n_samples = n;
    r.seed = seed_;
    r.timestamp = utc_timestamp();
    rows.push_back(r);
  }

  std::vector<ResultRow> rows;

 private:
  std::uint64_t seed_;
};

struct SlopeFit {
  double slope = 0.0;
  double se = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Least-squares slope of y on x after removing a per-group mean from both.
inline SlopeFit within_group_slope(const std::vector<double>& x, const std::vector<double>& y,
                                   const std::vector<std::size_t>& group) {
  std::size_t G = 0;
  for (auto g : group) G = std::max(G, g + 1);
  std::vector<double> mx(G, 0.0), my(G, 0.0), cnt(G, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx[group[i]] += x[i];
    my[group[i]] += y[i];
    cnt[group[i]] += 1.0;
  }
  for (std::size_t g = 0; g < G; ++g) {
    if (cnt[g] > 0) {
      mx[g] /= cnt[g];
      my[g] /= cnt[g];
    }
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx[group[i]];
    sxx += dx * dx;
    sxy += dx * (y[i] - my[group[i]]);
  }
  SlopeFit f;
  if (sxx == 0.0) return f;
  f.slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = (y[i] - my[group[i]]) - f.slope * (x[i] - mx[group[i]]);
    rss += e * e;
  }
  const double dof = static_cast<double>(x.size()) - static_cast<double>(G) - 1.0;
  f.se = dof > 0 ? std::sqrt(rss / dof / sxx) : kInf;
  f.lower = f.slope - 1.959963984540054 * f.se;
  f.upper = f.slope + 1.959963984540054 * f.se;
  return f;
}

// 1. sampler correctness
inline CriterionResult sampler_criterion(const AcceptanceOptions& o, RowSink& sink) {
  const auto t0 = std::chrono::steady_clock::now();
  CriterionResult c{1, "sampler correctness", true, ""};
  const RngStream master(o.seed, 1);
  const std::size_t n = o.sampler_draws;
  auto m = family_measure("gaussian", 4);
  ProcessSampler s(m, ProcessKind::X);
  double worst_mean = 0.0, worst_var = 0.0;
  for (std::size_t i = 0; i < m.dim(); ++i) {
    std::vector<double> e(m.dim(), 0.0);
    e[i] = 1.0;
    const auto z = sample_process_values(s, e, n, master.derive(i));
    std::vector<double> sq(n);
    for (std::size_t k = 0; k < n; ++k) sq[k] = z[k] * z[k];
    const auto mean = mean_estimate(z, o.seed);
    const auto var = mean_estimate(sq, o.seed);
    worst_mean = std::max(worst_mean, std::abs(mean.value) / mean.stderr_);
    worst_var = std::max(worst_var, std::abs(var.value - 1.0) / var.stderr_);
    sink.add(1, "coord_mean", mean.value, mean.stderr_, n);
    sink.add(1, "coord_var", var.value, var.stderr_, n);
  }
  // cone samples: unit l_p norm, and E V_i^2 against the Gamma formula
  double worst_norm = 0.0, worst_v2 = 0.0;
  const std::vector<std::pair<std::size_t, double>> shapes{{3, 2.0}, {4, 1.5}, {5, 1.0}, {6, 3.0}, {2, 32.0}};
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    const auto b = make_block(shapes[k].first, shapes[k].second, Potential{}, 0.0);
    const std::size_t draws = 200000;
    std::vector<double> v2(draws), dev(draws);
    const RngStream rs = master.derive(100 + k);
    parallel_for(chunk_count(draws), [&](std::size_t ch) {
      RngStream r = rs.derive(ch);
      std::vector<double> v(b.n);
      for (std::size_t d = ch * kChunkSize; d < std::min(draws, (ch + 1) * kChunkSize); ++d) {
        sample_cone(b, r, v);
        v2[d] = v[0] * v[0];
        dev[d] = std::abs(lp_norm(v, b.p) - 1.0);
      }
    });
    for (double x : dev) worst_norm = std::max(worst_norm, x);
    const auto est = mean_estimate(v2, o.seed);
    const double expect = std::exp(b.log_direction_second_moment());
    worst_v2 = std::max(worst_v2, std::abs(est.value - expect) / est.stderr_);
    sink.add(1, "cone_second_moment", est.value, est.stderr_, draws, b.p);
  }
  const double secs = seconds_since(t0);
  sink.add(1, "worst_mean_sigmas", worst_mean);
  sink.add(1, "worst_var_sigmas", worst_var);
  sink.add(1, "worst_cone_norm_dev", worst_norm);
  sink.add(1, "worst_cone_v2_sigmas", worst_v2);
  c.pass = worst_mean < tol::kSigmas && worst_var < tol::kSigmas && worst_norm <= tol::kConeNorm &&
           worst_v2 < tol::kSigmas && secs < tol::kSamplerSeconds;
  c.detail = "mean " + fmt("%.2f", worst_mean) + " sigma, var " + fmt("%.2f", worst_var) +
             " sigma, cone | ||v||_p - 1 | " + fmt("%.1e", worst_norm) + ", E V^2 " + fmt("%.2f", worst_v2) +
             " sigma, " + fmt("%.1f", secs) + " s";
  return c;
}

// 2. special functions
inline CriterionResult special_criterion(RowSink& sink) {
  const double a = surface_area(2, 2.0), b = surface_area(2, 1.0), r = generalized_gaussian_rate(2.0);
  sink.add(2, "surface_area_2_2", a);
  sink.add(2, "surface_area_2_1", b);
  sink.add(2, "b_2", r);
  const double err = std::max({std::abs(a - 2.0 * std::numbers::pi), std::abs(b - 4.0), std::abs(r - 0.5)});
  return {2, "special functions", err <= tol::kSpecial, "max error " + fmt("%.1e", err)};
}

// 3. allocation vs grid oracle
inline CriterionResult oracle_criterion(const AcceptanceOptions& o, RowSink& sink) {
  const auto t0 = std::chrono::steady_clock::now();
  RngStream gen(o.seed, 3);
  double worst = 0.0;
  for (std::size_t i = 0; i < o.oracle_instances; ++i) {
    auto inst = random_instance(gen, 3);
    const BlockVector t(inst.measure, inst.t);
    const double fast = xt_moment_alloc(t, inst.p).value;
    const double slow = alloc_bruteforce_oracle(t, inst.p, tol::kOracleGrid, tol::kOracleRefine).value;
    worst = std::max(worst, std::abs(fast - slow) / fast);
  }
  const double secs = seconds_since(t0);
  sink.add(3, "worst_relative_error", worst);
  return {3, "allocation oracle equivalence", worst <= tol::kOracleRel && secs < tol::kOracleSeconds,
          std::to_string(o.oracle_instances) + " instances, max rel error " + fmt("%.2e", worst) + ", " +
              fmt("%.1f", secs) + " s"};
}

// 4. Gaussian closed forms
inline CriterionResult gaussian_criterion(const AcceptanceOptions& o, RowSink& sink) {
  auto m = family_measure("gaussian", 3);
  ProcessSampler s(m, ProcessKind::X);
  const std::vector<double> t{0.3, -1.2, 0.5};
  const double norm = lp_norm(t, 2.0);
  const auto rep = mc_moment(s, t, {2.0, 4.0, 8.0}, o.closed_form_samples, RngStream(o.seed, 4));
  double worst = 0.0;
  for (std::size_t i = 0; i < rep.ps.size(); ++i) {
    const double p = rep.ps[i];
    const double exact =
        norm * std::sqrt(2.0) * std::exp((std::lgamma((p + 1.0) / 2.0) - std::lgamma(0.5)) / p);
    worst = std::max(worst, std::abs(rep.estimates[i].value - exact) / rep.estimates[i].stderr_);
    sink.add(4, "gaussian_moment", rep.estimates[i].value, rep.estimates[i].stderr_, o.closed_form_samples, p);
  }
  PointSet T(m, {std::vector<double>(3, 0.0), {1.0, 0.0, 0.0}});
  const auto e = esup_mc(T, o.closed_form_samples, RngStream(o.seed, 41));
  const double esup_z = std::abs(e.value - 1.0 / std::sqrt(2.0 * std::numbers::pi)) / e.stderr_;
  sink.add(4, "esup_0_e1", e.value, e.stderr_, e.n_samples);
  return {4, "Gaussian closed forms", worst <= tol::kClosedFormStderr && esup_z <= tol::kClosedFormStderr,
          "moments within " + fmt("%.2f", worst) + " stderr, E sup {0, e1} within " + fmt("%.2f", esup_z) +
              " stderr"};
}

// 5. log-concave moment comparison
inline CriterionResult comparison_criterion(const AcceptanceOptions& o, RowSink& sink) {
  RngStream gen(o.seed, 5);
  const std::vector<double> ps{2, 3, 4, 6, 8, 12, 16};
  std::size_t violations = 0, checks = 0;
  double worst = -kInf;
  for (std::size_t i = 0; i < o.comparison_instances; ++i) {
    auto inst = random_instance(gen, 4);
    ProcessSampler s(inst.measure, ProcessKind::X);
    const auto rep = mc_moment(s, inst.t, ps, o.comparison_samples, RngStream(o.seed, 500 + i));
    for (std::size_t a = 0; a < ps.size(); ++a) {
      for (std::size_t b = a + 1; b < ps.size(); ++b) {
        const double ratio = ps[b] / ps[a];
        const auto& lo = rep.estimates[a];
        const auto& hi = rep.estimates[b];
        const double se = std::hypot(hi.stderr_, ratio * lo.stderr_);
        const double slack = hi.value - ratio * lo.value;
        worst = std::max(worst, slack / std::max(se, 1e-300));
        ++checks;
        if (slack > tol::kComparisonStderr * se) ++violations;
      }
    }
  }
  sink.add(5, "violations", static_cast<double>(violations));
  sink.add(5, "worst_excess_stderr", worst);
  return {5, "moment comparison", violations == 0,
          std::to_string(violations) + " violations in " + std::to_string(checks) + " checks, worst excess " +
              fmt("%.2f", worst) + " stderr"};
}

// 6. alpha-regularity of the radial parts
inline CriterionResult alpha_criterion(RowSink& sink) {
  double worst = 0.0;
  for (std::size_t n = 1; n <= 64; ++n) {
    for (double pk : {1.1, 1.5, 2.0, 4.0}) {
      const auto b = make_block(n, pk, Potential{}, 0.1);
      for (double p = 1; p <= 128; p *= 2) {
        for (double q = p * 2; q <= 128; q *= 2) {
          const double lhs = r_moment(b, q) / r_moment(b, p);
          const double rhs = std::pow((n + q) / (n + p), 1.0 / pk);
          worst = std::max(worst, lhs / rhs);
        }
      }
    }
  }
  sink.add(6, "alpha_constant", worst);
  return {6, "alpha-regularity", worst <= tol::kAlphaConstant, "constant " + fmt("%.4f", worst)};
}

// 8. dichotomy pigeonhole
inline CriterionResult dichotomy_criterion(const AcceptanceOptions& o, RowSink& sink) {
  const auto& fams = standard_families();
  std::size_t failures = 0;
  RngStream gen(o.seed, 8);
  for (std::size_t i = 0; i < o.dichotomy_sets; ++i) {
    const auto m = family_measure(fams[i % fams.size()], i % 2 ? 64 : 32);
    const double p = 2.0 + static_cast<double>((i / fams.size()) % 3);
    const auto T = generate_cube_set(m, p, p, Constants{}, gen);
    const auto res = dichotomy(T.set, p, T.constants.D, T.constants.A);
    if (res.members.size() < res.threshold) ++failures;
  }
  sink.add(8, "failures", static_cast<double>(failures));
  return {8, "dichotomy pigeonhole", failures == 0,
          std::to_string(failures) + " failures on " + std::to_string(o.dichotomy_sets) + " cube sets"};
}

inline double greedy_exhaustive_worst(const AcceptanceOptions& o, RowSink& sink) {
  RngStream gen(o.seed, 9);
  double worst = 0.0;
  for (const auto& fam : standard_families()) {
    const auto m = family_measure(fam, 24);
    for (std::size_t i = 0; i < o.tiny_sets_per_family; ++i) {
      std::vector<std::vector<double>> pts;
      const std::size_t count = 2 + gen.below(5);
      for (std::size_t a = 0; a < count; ++a) {
        std::vector<double> x(24, 0.0);
        const std::size_t s = 1 + gen.below(3);
        for (std::size_t c = 0; c < s; ++c) x[gen.below(24)] = gen.normal();
        pts.push_back(std::move(x));
      }
      const auto F = build_distance_family(PointSet(m, pts), {});
      const double exact = gamma_exhaustive(F);
      if (exact > 0) worst = std::max(worst, gamma_functional(F).gamma / exact);
    }
  }
  sink.add(9, "greedy_over_exhaustive", worst);
  return worst;
}

}  // namespace detail

/// Runs every criterion once at the current worker count. Criterion 11 is
/// added by run_acceptance.
inline AcceptanceRun evaluate_criteria(const AcceptanceOptions& o) {
  AcceptanceRun run;
  detail::RowSink sink(o.seed);
  using detail::fmt;
  run.criteria.push_back(detail::sampler_criterion(o, sink));
  run.criteria.push_back(detail::special_criterion(sink));
  run.criteria.push_back(detail::oracle_criterion(o, sink));
  run.criteria.push_back(detail::gaussian_criterion(o, sink));
  run.criteria.push_back(detail::comparison_criterion(o, sink));
  run.criteria.push_back(detail::alpha_criterion(sink));

  // 7 and 9: the cube-set sweep
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  cfg.experiment = "sweep";
  cfg.seed = o.seed;
  cfg.grid = {{2.0, 3.0, 4.0}, {32, 64, 128}, standard_families(), o.sweep_instances};
  cfg.samples = o.esup_samples;
  cfg.witness_samples = o.witness_samples;
  const auto sweep = run_experiment(cfg);
  const double sweep_secs = detail::seconds_since(t0);
  for (const auto& r : sweep.rows) sink.rows.push_back(r);

  double k_max = 0.0, band = 1.0, raw = 0.0, enveloped = 0.0, eps_min = kInf, defect = 0.0;
  std::size_t clamps = 0;
  bool finite = true;
  for (const auto& r : sweep.instances) {
    finite = finite && std::isfinite(r.minoration.K_hat) && r.minoration.K_hat > 0;
    k_max = std::max(k_max, r.minoration.K_hat);
    band = std::max({band, r.two_sided, 1.0 / r.two_sided});
    raw = std::max(raw, r.raw_max_ratio);
    enveloped = std::max(enveloped, r.regularity.max_ratio);
    eps_min = std::min(eps_min, r.regularity.eps_hat);
    defect = std::max(defect, r.regularity.triangle_defect);
    clamps += r.doubling_clamps;
  }
  std::string drift;
  bool no_drift = true;
  for (double p : cfg.grid.p) {
    std::vector<double> x, y;
    std::vector<std::size_t> g;
    for (const auto& r : sweep.instances) {
      if (r.p != p) continue;
      x.push_back(std::log2(static_cast<double>(r.d)));
      y.push_back(r.minoration.K_hat);
      g.push_back(static_cast<std::size_t>(std::find(cfg.grid.families.begin(), cfg.grid.families.end(), r.family) -
                                           cfg.grid.families.begin()));
    }
    const auto fit = detail::within_group_slope(x, y, g);
    no_drift = no_drift && fit.lower <= 0.0;
    sink.add(7, "drift_slope", fit.slope, fit.se, x.size(), p);
    drift += (drift.empty() ? "" : ", ") + fmt("p=%g", p) + " slope " + fmt("%+.4f", fit.slope) + " [" +
             fmt("%+.4f", fit.lower) + ", " + fmt("%+.4f", fit.upper) + "]";
  }
  sink.add(7, "K_hat_max", k_max);
  run.criteria.push_back({7, "minoration sweep",
                          finite && k_max <= tol::kKCeiling && no_drift && sweep_secs < tol::kSweepSeconds,
                          std::to_string(sweep.instances.size()) + " instances, max K^ " + fmt("%.4f", k_max) +
                              " (ceiling " + fmt("%g", tol::kKCeiling) + "), drift in log2 d: " + drift + ", " +
                              fmt("%.0f", sweep_secs) + " s"});

  run.criteria.push_back(detail::dichotomy_criterion(o, sink));

  const double greedy = detail::greedy_exhaustive_worst(o, sink);
  sink.add(9, "band_B", band);
  run.criteria.push_back({9, "chaining two-sided band", band <= tol::kBandCeiling && greedy <= tol::kGreedyFactor,
                          "E sup / gamma in [1/B, B] with B = " + fmt("%.3f", band) + " (ceiling " +
                              fmt("%g", tol::kBandCeiling) + "), greedy / exhaustive gamma <= " + fmt("%.4f", greedy)});

  // 10: regularity; the doubling bound is judged on the raw surrogate
  double eps_unbounded = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto m = family_measure("p32", 32);
    RngStream gen(o.seed, 1000 + i);
    const auto T = generate_cube_set(m, 2.0 + static_cast<double>(i), 2.0 + static_cast<double>(i), Constants{}, gen);
    eps_unbounded = std::max(eps_unbounded, check_regularity(build_distance_family(T.set, {})).eps_hat);
  }
  sink.add(10, "raw_max_ratio", raw);
  sink.add(10, "enveloped_max_ratio", enveloped);
  sink.add(10, "doubling_clamps", static_cast<double>(clamps));
  sink.add(10, "eps_hat_min_bounded", eps_min);
  sink.add(10, "eps_hat_max_p32", eps_unbounded);
  sink.add(10, "triangle_defect", defect);
  const bool doubling = raw <= tol::kDoubling;
  const bool growth = eps_min > 0.0;
  const bool degrade = eps_unbounded < tol::kUnboundedEpsShare * eps_min;
  run.criteria.push_back({10, "distance regularity", doubling && growth && degrade,
                          std::string(doubling ? "" : "raw surrogate violates doubling: ") + "raw max d_{n+1}/d_n " +
                              fmt("%.4f", raw) + " (" + std::to_string(clamps) +
                              " level entries enveloped to 2), eps_hat min " + fmt("%.4f", eps_min) +
                              " on p_k <= 4 families, p_k = 32 eps_hat " + fmt("%.4f", eps_unbounded) +
                              ", triangle defect " + fmt("%.1e", defect)});
  std::sort(run.criteria.begin(), run.criteria.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  run.rows = std::move(sink.rows);
  return run;
}

/// Evaluates the suite at each worker count in o.repeat_workers (the first
/// run is the reported one) and appends criterion 11.
inline AcceptanceRun run_acceptance(const AcceptanceOptions& o) {
  const std::size_t saved = worker_count();
  std::vector<std::string> tables;
  AcceptanceRun first;
  for (std::size_t i = 0; i < o.repeat_workers.size(); ++i) {
    worker_count() = o.repeat_workers[i];
    auto run = evaluate_criteria(o);
    tables.push_back(rows_to_csv(run.rows, false));
    if (i == 0) first = std::move(run);
  }
  worker_count() = saved;
  bool same = !tables.empty();
  for (const auto& t : tables) same = same && t == tables.front();
  std::string workers;
  for (auto w : o.repeat_workers) workers += (workers.empty() ? "" : ", ") + std::to_string(w);
  first.criteria.push_back({11, "determinism", same && tables.size() >= 2,
                            std::to_string(first.rows.size()) + " metric rows " +
                                (same ? "byte-identical" : "differ") + " at workers {" + workers + "}"});
  return first;
}

inline std::string criterion_line(const CriterionResult& c) {
  return std::string(c.pass ? "PASS" : "FAIL") + "  " + std::to_string(c.id) + ". " + c.name + ": " + c.detail;
}

}  // namespace sudakov
