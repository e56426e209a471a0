#pragma once

// Experiment configuration, result rows and the runners behind the CLI
// subcommands. A config plus the code version fixes every output byte except
// the timestamp column.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sudakov/chaining.hpp"
#include "sudakov/errors.hpp"
#include "sudakov/families.hpp"
#include "sudakov/measure_io.hpp"
#include "sudakov/minoration.hpp"
#include "sudakov/moments.hpp"
#include "sudakov/rng.hpp"

namespace sudakov {

inline constexpr int kSchemaVersion = 1;

struct Grid {
  std::vector<double> p;
  std::vector<std::size_t> d;
  std::vector<std::string> families;
  std::size_t instances = 1;
};

struct ExperimentConfig {
  std::string experiment = "sweep";  // sample | moments | verify | chain | sweep
  std::uint64_t seed = 1;
  /// Explicit measure; replaces the family x d grid when present.
  std::optional<Json> measure;
  Grid grid;
  std::vector<double> t;
  std::vector<std::vector<double>> set;
  std::vector<std::string> methods{"mc"};
  std::string process = "X";
  std::size_t samples = 20000;
  std::size_t witness_samples = 20000;
  std::size_t draws = 1000;
  std::size_t n_max = 0;
  std::string distance = "surrogate";
  Constants constants;
  double max_p = 8.0;
  std::string out_dir = "out";
};

namespace detail {

inline std::string at(const std::string& path, const std::string& key) { return path + "." + key; }

inline double json_number(const Json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path + ": expected a number");
  return v.get<double>();
}

inline std::size_t json_count(const Json& v, const std::string& path) {
  if (!v.is_number_integer() && !(v.is_number() && v.get<double>() == std::floor(v.get<double>()))) {
    throw ConfigError(path + ": expected a non-negative integer");
  }
  const double x = v.get<double>();
  if (x < 0) throw ConfigError(path + ": expected a non-negative integer");
  return static_cast<std::size_t>(x);
}

inline std::string json_string(const Json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path + ": expected a string");
  return v.get<std::string>();
}

inline const Json& json_array(const Json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path + ": expected an array");
  return v;
}

inline std::vector<double> json_numbers(const Json& v, const std::string& path) {
  std::vector<double> out;
  const auto& a = json_array(v, path);
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(json_number(a[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace detail

inline Json constants_to_json(const Constants& c) {
  return Json{{"delta", c.delta}, {"delta_prime", c.delta_prime}, {"delta_dblprime", c.delta_dblprime},
              {"rho", c.rho},     {"C", c.C},                     {"D", c.D},
              {"A", c.A},         {"eps", c.eps}};
}

inline Constants constants_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  Constants c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string p = detail::at(path, it.key());
    const double v = detail::json_number(it.value(), p);
    if (it.key() == "delta") c.delta = v;
    else if (it.key() == "delta_prime") c.delta_prime = v;
    else if (it.key() == "delta_dblprime") c.delta_dblprime = v;
    else if (it.key() == "rho") c.rho = v;
    else if (it.key() == "C") c.C = v;
    else if (it.key() == "D") c.D = v;
    else if (it.key() == "A") c.A = v;
    else if (it.key() == "eps") c.eps = v;
    else throw ConfigError(p + ": unknown constant");
  }
  if (!(c.delta_prime > 0) || !(c.rho > 0) || !(c.C > 0) || !(c.D > 1.0) || c.A < 0) {
    throw ConfigError(path + ": constants must satisfy delta' > 0, rho > 0, C > 0, D > 1, A >= 0");
  }
  return c;
}

inline ExperimentConfig config_from_json(const Json& j, const std::string& path = "config") {
  using namespace detail;
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  ExperimentConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const Json& v = it.value();
    const std::string p = at(path, k);
    if (k == "experiment") c.experiment = json_string(v, p);
    else if (k == "seed") c.seed = static_cast<std::uint64_t>(json_count(v, p));
    else if (k == "measure") c.measure = v;
    else if (k == "t") c.t = json_numbers(v, p);
    else if (k == "set") {
      for (std::size_t i = 0; i < json_array(v, p).size(); ++i) {
        c.set.push_back(json_numbers(v[i], p + "[" + std::to_string(i) + "]"));
      }
    } else if (k == "methods") {
      c.methods.clear();
      for (std::size_t i = 0; i < json_array(v, p).size(); ++i) {
        c.methods.push_back(json_string(v[i], p + "[" + std::to_string(i) + "]"));
      }
    } else if (k == "process") c.process = json_string(v, p);
    else if (k == "samples") c.samples = json_count(v, p);
    else if (k == "witness_samples") c.witness_samples = json_count(v, p);
    else if (k == "draws") c.draws = json_count(v, p);
    else if (k == "n_max") c.n_max = json_count(v, p);
    else if (k == "distance") c.distance = json_string(v, p);
    else if (k == "constants") c.constants = constants_from_json(v, p);
    else if (k == "max_p") c.max_p = json_number(v, p);
    else if (k == "out_dir") c.out_dir = json_string(v, p);
    else if (k == "grid") {
      if (!v.is_object()) throw ConfigError(p + ": expected an object");
      for (auto g = v.begin(); g != v.end(); ++g) {
        const std::string gp = at(p, g.key());
        if (g.key() == "p") c.grid.p = json_numbers(g.value(), gp);
        else if (g.key() == "d") {
          for (std::size_t i = 0; i < json_array(g.value(), gp).size(); ++i) {
            c.grid.d.push_back(json_count(g.value()[i], gp + "[" + std::to_string(i) + "]"));
          }
        } else if (g.key() == "families") {
          for (std::size_t i = 0; i < json_array(g.value(), gp).size(); ++i) {
            c.grid.families.push_back(json_string(g.value()[i], gp + "[" + std::to_string(i) + "]"));
          }
        } else if (g.key() == "instances") c.grid.instances = json_count(g.value(), gp);
        else throw ConfigError(gp + ": unknown field");
      }
    } else {
      throw ConfigError(p + ": unknown field");
    }
  }
  static const std::vector<std::string> kinds{"sample", "moments", "verify", "chain", "sweep"};
  if (std::find(kinds.begin(), kinds.end(), c.experiment) == kinds.end()) {
    throw ConfigError(at(path, "experiment") + ": unknown experiment '" + c.experiment + "'");
  }
  static const std::vector<std::string> methods{"mc", "alloc", "gk", "hitczenko", "y"};
  for (std::size_t i = 0; i < c.methods.size(); ++i) {
    if (std::find(methods.begin(), methods.end(), c.methods[i]) == methods.end()) {
      throw ConfigError(at(path, "methods") + "[" + std::to_string(i) + "]: unknown method '" + c.methods[i] + "'");
    }
  }
  for (std::size_t i = 0; i < c.grid.families.size(); ++i) {
    try {
      family_measure(c.grid.families[i], 1);
    } catch (const ConfigError& e) {
      throw ConfigError(at(path, "grid.families") + "[" + std::to_string(i) + "]: " + e.what());
    }
  }
  process_kind_from_string(c.process);
  distance_source_from_string(c.distance);
  if (c.measure) measure_from_json(*c.measure, at(path, "measure"));
  return c;
}

inline Json config_to_json(const ExperimentConfig& c) {
  Json j{{"experiment", c.experiment},
         {"seed", c.seed},
         {"grid", {{"p", c.grid.p}, {"d", c.grid.d}, {"families", c.grid.families}, {"instances", c.grid.instances}}},
         {"methods", c.methods},
         {"process", c.process},
         {"samples", c.samples},
         {"witness_samples", c.witness_samples},
         {"draws", c.draws},
         {"n_max", c.n_max},
         {"distance", c.distance},
         {"constants", constants_to_json(c.constants)},
         {"max_p", c.max_p},
         {"out_dir", c.out_dir}};
  if (c.measure) j["measure"] = *c.measure;
  if (!c.t.empty()) j["t"] = c.t;
  if (!c.set.empty()) j["set"] = c.set;
  return j;
}

// ---------------------------------------------------------------------------
// Result rows

struct ResultRow {
  std::string experiment;
  std::string instance;
  std::string family;
  std::size_t d = 0;
  double p = 0.0;
  std::size_t set_size = 0;
  std::string metric;
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  Constants constants;
  std::string timestamp;
};

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline const char* kCsvHeader =
    "schema,experiment,instance,family,d,p,set_size,metric,value,stderr,n_samples,seed,"
    "delta,delta_prime,delta_dblprime,rho,C,D,A,eps";

/// One CSV line; the timestamp column is appended only when requested, so
/// the remaining columns can be compared byte for byte across runs.
inline std::string csv_line(const ResultRow& r, bool with_timestamp) {
  std::ostringstream o;
  const auto& c = r.constants;
  o << kSchemaVersion << ',' << r.experiment << ',' << r.instance << ',' << r.family << ',' << r.d << ','
    << format_double(r.p) << ',' << r.set_size << ',' << r.metric << ',' << format_double(r.value) << ','
    << format_double(r.stderr_) << ',' << r.n_samples << ',' << r.seed << ',' << format_double(c.delta) << ','
    << format_double(c.delta_prime) << ',' << format_double(c.delta_dblprime) << ',' << format_double(c.rho)
    << ',' << format_double(c.C) << ',' << format_double(c.D) << ',' << format_double(c.A) << ','
    << format_double(c.eps);
  if (with_timestamp) o << ',' << r.timestamp;
  return o.str();
}

inline std::string rows_to_csv(const std::vector<ResultRow>& rows, bool with_timestamp = true) {
  std::string out = kCsvHeader;
  if (with_timestamp) out += ",timestamp";
  out += '\n';
  for (const auto& r : rows) out += csv_line(r, with_timestamp) + '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Cube-set instances (verify / sweep)

/// Everything measured on one cube-like set.
struct InstanceRecord {
  std::string family;
  std::size_t d = 0;
  double p = 0.0;
  std::size_t index = 0;
  std::size_t set_size = 0;
  std::size_t support_size = 0;
  MinorationReport minoration;
  bool chained = false;
  double gamma = 0.0;
  double gamma_remainder = 0.0;
  double two_sided = 0.0;
  RegularityReport regularity;
  double raw_max_ratio = 0.0;
  std::size_t doubling_clamps = 0;
  std::size_t closure_adjustments = 0;
};

inline InstanceRecord run_cube_instance(const ProductMeasure& m, const std::string& family, double p,
                                        std::size_t index, const ExperimentConfig& cfg, const RngStream& task,
                                        bool chain) {
  InstanceRecord rec;
  rec.family = family;
  rec.d = m.dim();
  rec.p = p;
  rec.index = index;
  RngStream gen = task.derive(0);
  const CubeSet T = generate_cube_set(m, p, p, cfg.constants, gen, cfg.max_p);
  rec.set_size = T.set.size();
  rec.support_size = T.support_size;
  rec.minoration = minoration_ratio(T, cfg.samples, task.derive(1), cfg.witness_samples);
  if (!chain) return rec;
  rec.chained = true;
  DistanceOptions o;
  o.n_max = cfg.n_max;
  o.source = distance_source_from_string(cfg.distance);
  o.samples = std::max<std::size_t>(cfg.samples, 1000);
  o.rng = task.derive(2);
  const auto F = build_distance_family(T.set, o);
  const auto g = gamma_functional(F);
  rec.gamma = g.gamma;
  rec.gamma_remainder = g.remainder;
  rec.two_sided = g.gamma > 0 ? rec.minoration.esup.value / g.gamma : 1.0;
  rec.regularity = check_regularity(F);
  rec.raw_max_ratio = F.raw_max_ratio;
  for (auto c : F.doubling_clamps) rec.doubling_clamps += c;
  for (auto c : F.closure_adjustments) rec.closure_adjustments += c;
  return rec;
}

inline std::vector<ResultRow> instance_rows(const InstanceRecord& r, const std::string& experiment,
                                            std::uint64_t seed) {
  std::vector<ResultRow> rows;
  const std::string id = r.family + "-d" + std::to_string(r.d) + "-p" + format_double(r.p) + "-" + std::to_string(r.index);
  const std::string ts = utc_timestamp();
  auto add = [&](const std::string& metric, double value, double se = 0.0, std::size_t n = 0) {
    ResultRow row;
    row.experiment = experiment;
    row.instance = id;
    row.family = r.family;
    row.d = r.d;
    row.p = r.p;
    row.set_size = r.set_size;
    row.metric = metric;
    row.value = value;
    row.stderr_ = se;
    row.n_samples = n;
    row.seed = seed;
    row.constants = r.minoration.constants;
    row.timestamp = ts;
    rows.push_back(row);
  };
  const auto& mr = r.minoration;
  add("support_size", static_cast<double>(r.support_size));
  add("A_min", mr.A_min);
  add("esup", mr.esup.value, mr.esup.stderr_, mr.esup.n_samples);
  add("K_hat", mr.K_hat);
  add("K_lo", mr.K_lo);
  add("K_hi", mr.K_hi);
  if (mr.witness_mc.n_samples) add("witness_mc", mr.witness_mc.value, mr.witness_mc.stderr_, mr.witness_mc.n_samples);
  if (r.chained) {
    add("gamma", r.gamma);
    add("gamma_remainder", r.gamma_remainder);
    add("esup_over_gamma", r.two_sided);
    add("eps_hat", r.regularity.eps_hat);
    add("max_level_ratio", r.regularity.max_ratio);
    add("raw_max_level_ratio", r.raw_max_ratio);
    add("doubling_clamps", static_cast<double>(r.doubling_clamps));
    add("closure_adjustments", static_cast<double>(r.closure_adjustments));
    add("triangle_defect", r.regularity.triangle_defect);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Runs

struct RunResult {
  std::vector<ResultRow> rows;
  std::vector<std::string> warnings;
  Json report;
  std::vector<InstanceRecord> instances;
  /// Raw draws of the sample experiment, one row per draw.
  std::vector<std::vector<double>> draws;
};

namespace detail {

inline ProductMeasure config_measure(const ExperimentConfig& cfg) {
  if (!cfg.measure) throw ConfigError("config.measure: required for the " + cfg.experiment + " experiment");
  return measure_from_json(*cfg.measure, "config.measure");
}

inline ResultRow plain_row(const ExperimentConfig& cfg, const ProductMeasure& m, const std::string& metric,
                           double p, double value, double se, std::size_t n) {
  ResultRow r;
  r.experiment = cfg.experiment;
  r.instance = "0";
  r.family = "custom";
  r.d = m.dim();
  r.p = p;
  r.metric = metric;
  r.value = value;
  r.stderr_ = se;
  r.n_samples = n;
  r.seed = cfg.seed;
  r.constants = resolve_constants(cfg.constants, m);
  r.timestamp = utc_timestamp();
  return r;
}

inline RunResult run_sample(const ExperimentConfig& cfg) {
  RunResult out;
  const ProductMeasure m = config_measure(cfg);
  ProcessSampler sampler(m, process_kind_from_string(cfg.process));
  const RngStream rng(cfg.seed, 0);
  out.draws.assign(cfg.draws, std::vector<double>(m.dim()));
  parallel_for(chunk_count(cfg.draws), [&](std::size_t c) {
    RngStream r = rng.derive(c);
    const std::size_t end = std::min(cfg.draws, (c + 1) * kChunkSize);
    for (std::size_t s = c * kChunkSize; s < end; ++s) sampler(r, out.draws[s]);
  });
  for (std::size_t i = 0; i < m.dim(); ++i) {
    std::vector<double> col(cfg.draws), sq(cfg.draws);
    for (std::size_t s = 0; s < cfg.draws; ++s) {
      col[s] = out.draws[s][i];
      sq[s] = col[s] * col[s];
    }
    const auto mean = mean_estimate(col, cfg.seed);
    const auto var = mean_estimate(sq, cfg.seed);
    out.rows.push_back(plain_row(cfg, m, "mean_x" + std::to_string(i), 0.0, mean.value, mean.stderr_, cfg.draws));
    out.rows.push_back(plain_row(cfg, m, "second_moment_x" + std::to_string(i), 0.0, var.value, var.stderr_, cfg.draws));
  }
  out.report = Json{{"draws", cfg.draws}, {"dim", m.dim()}};
  return out;
}

inline RunResult run_moments(const ExperimentConfig& cfg) {
  RunResult out;
  const ProductMeasure m = config_measure(cfg);
  if (cfg.t.size() != m.dim()) {
    throw ConfigError("config.t: has " + std::to_string(cfg.t.size()) + " entries, the measure has dimension " +
                      std::to_string(m.dim()));
  }
  if (cfg.grid.p.empty()) {
    out.warnings.push_back("empty p list: nothing to compute");
    return out;
  }
  const BlockVector t(m, cfg.t);
  Json rep = Json::array();
  for (const auto& method : cfg.methods) {
    if (method == "mc") {
      ProcessSampler sampler(m, process_kind_from_string(cfg.process));
      const auto mr = mc_moment(sampler, cfg.t, cfg.grid.p, cfg.samples, RngStream(cfg.seed, 0));
      for (const auto& w : mr.warnings) out.warnings.push_back(w);
      for (std::size_t i = 0; i < mr.ps.size(); ++i) {
        out.rows.push_back(plain_row(cfg, m, "mc", mr.ps[i], mr.estimates[i].value, mr.estimates[i].stderr_,
                                     mr.estimates[i].n_samples));
      }
      continue;
    }
    for (double p : cfg.grid.p) {
      double v = 0.0;
      try {
        if (method == "alloc") v = xt_moment_alloc(t, p).value;
        else if (method == "y") v = y_moment_surrogate(t, p).value;
        else if (method == "gk") v = gluskin_kwapien(cfg.t, p);
        else v = hitczenko(cfg.t, p);
      } catch (const DomainError& e) {
        // surrogates are only asserted for p >= |supp t|; skip, do not abort
        out.warnings.push_back(method + " at p = " + format_double(p) + " skipped: " + e.what());
        continue;
      }
      out.rows.push_back(plain_row(cfg, m, method, p, v, 0.0, 0));
    }
  }
  for (const auto& r : out.rows) rep.push_back({{"method", r.metric}, {"p", r.p}, {"value", r.value}, {"stderr", r.stderr_}});
  out.report = Json{{"moments", rep}};
  return out;
}

/// Grid tasks in a fixed order; task index i uses stream derive(i).
struct GridTask {
  std::string family;
  std::size_t d;
  double p;
  std::size_t index;
};

inline std::vector<GridTask> grid_tasks(const ExperimentConfig& cfg) {
  std::vector<GridTask> tasks;
  if (cfg.measure) {
    const std::size_t d = measure_from_json(*cfg.measure).dim();
    for (double p : cfg.grid.p) {
      for (std::size_t i = 0; i < cfg.grid.instances; ++i) tasks.push_back({"custom", d, p, i});
    }
    return tasks;
  }
  for (const auto& f : cfg.grid.families) {
    for (std::size_t d : cfg.grid.d) {
      for (double p : cfg.grid.p) {
        for (std::size_t i = 0; i < cfg.grid.instances; ++i) tasks.push_back({f, d, p, i});
      }
    }
  }
  return tasks;
}

inline RunResult run_grid(const ExperimentConfig& cfg, bool chain) {
  RunResult out;
  const auto tasks = grid_tasks(cfg);
  if (tasks.empty()) {
    out.warnings.push_back("empty sweep grid: nothing to run");
    out.report = Json{{"instances", 0}};
    return out;
  }
  const RngStream master(cfg.seed, 0);
  std::optional<ProductMeasure> custom;
  if (cfg.measure) custom = measure_from_json(*cfg.measure, "config.measure");
  Json items = Json::array();
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& task = tasks[i];
    const ProductMeasure m = custom ? *custom : family_measure(task.family, task.d);
    auto rec = run_cube_instance(m, task.family, task.p, task.index, cfg, master.derive(i), chain);
    for (auto& row : instance_rows(rec, cfg.experiment, cfg.seed)) out.rows.push_back(std::move(row));
    Json item{{"family", rec.family}, {"d", rec.d}, {"p", rec.p}, {"index", rec.index},
              {"set_size", rec.set_size}, {"K_hat", rec.minoration.K_hat}};
    if (chain) item["esup_over_gamma"] = rec.two_sided;
    items.push_back(item);
    out.instances.push_back(std::move(rec));
  }
  double k_max = 0.0, band = 1.0;
  for (const auto& r : out.instances) {
    k_max = std::max(k_max, r.minoration.K_hat);
    if (r.chained && r.two_sided > 0) band = std::max({band, r.two_sided, 1.0 / r.two_sided});
  }
  out.report = Json{{"instances", items}, {"K_hat_max", k_max}};
  if (chain) out.report["two_sided_band_B"] = band;
  return out;
}

inline RunResult run_chain(const ExperimentConfig& cfg) {
  if (cfg.set.empty()) return run_grid(cfg, true);
  RunResult out;
  const ProductMeasure m = config_measure(cfg);
  const PointSet T(m, cfg.set);
  DistanceOptions o;
  o.n_max = cfg.n_max;
  o.source = distance_source_from_string(cfg.distance);
  o.samples = cfg.samples;
  o.rng = RngStream(cfg.seed, 0).derive(0);
  const auto F = build_distance_family(T, o);
  const auto g = gamma_functional(F);
  const auto reg = check_regularity(F);
  const auto two = two_sided_compare(T, F, std::max<std::size_t>(cfg.samples, 1000), RngStream(cfg.seed, 0).derive(1));
  std::vector<std::size_t> level_sizes;
  for (const auto& level : g.tree.levels) level_sizes.push_back(level.size());
  Json levels = Json::array();
  for (std::size_t n = 0; n <= F.n_max; ++n) {
    Json mat = Json::array();
    for (std::size_t a = 0; a < F.size(); ++a) {
      std::vector<double> row(F.size());
      for (std::size_t b = 0; b < F.size(); ++b) row[b] = F.d(n, a, b);
      mat.push_back(row);
    }
    levels.push_back(mat);
  }
  auto row = [&](const std::string& metric, double v, double se = 0.0, std::size_t n = 0) {
    auto r = plain_row(cfg, m, metric, 0.0, v, se, n);
    r.set_size = T.size();
    out.rows.push_back(r);
  };
  row("gamma", g.gamma);
  row("gamma_remainder", g.remainder);
  row("esup", two.esup.value, two.esup.stderr_, two.esup.n_samples);
  row("esup_over_gamma", two.ratio);
  row("eps_hat", reg.eps_hat);
  row("max_level_ratio", reg.max_ratio);
  row("raw_max_level_ratio", F.raw_max_ratio);
  row("triangle_defect", reg.triangle_defect);
  out.report = Json{{"gamma", g.gamma},
                    {"gamma_remainder", g.remainder},
                    {"partition_level_sizes", level_sizes},
                    {"n_max", F.n_max},
                    {"source", to_string(F.source)},
                    {"distances", levels},
                    {"regularity", {{"max_ratio", reg.max_ratio}, {"min_ratio", reg.min_ratio},
                                    {"eps_hat", reg.eps_hat}, {"raw_max_ratio", F.raw_max_ratio},
                                    {"triangle_defect", reg.triangle_defect}}},
                    {"two_sided", {{"esup", two.esup.value}, {"stderr", two.esup.stderr_},
                                   {"ratio", two.ratio}, {"ratio_lo", two.ratio_lo},
                                   {"ratio_hi", two.ratio_hi}, {"degenerate", two.degenerate}}}};
  if (T.size() <= 6) {
    out.report["gamma_exhaustive"] = gamma_exhaustive(F);
    row("gamma_exhaustive", out.report["gamma_exhaustive"].get<double>());
  }
  return out;
}

}  // namespace detail

/// Executes the named experiment. Throws the module errors unchanged.
inline RunResult run_experiment(const ExperimentConfig& cfg) {
  RunResult out;
  if (cfg.experiment == "sample") out = detail::run_sample(cfg);
  else if (cfg.experiment == "moments") out = detail::run_moments(cfg);
  else if (cfg.experiment == "verify") out = detail::run_grid(cfg, false);
  else if (cfg.experiment == "chain") out = detail::run_chain(cfg);
  else if (cfg.experiment == "sweep") out = detail::run_grid(cfg, true);
  else throw ConfigError("config.experiment: unknown experiment '" + cfg.experiment + "'");
  out.report["config"] = config_to_json(cfg);
  out.report["warnings"] = out.warnings;
  out.report["schema"] = kSchemaVersion;
  return out;
}

/// Writes <out_dir>/<experiment>.csv and .json (and samples.csv for sample).
inline std::vector<std::string> write_outputs(const RunResult& r, const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  std::vector<std::string> files;
  auto put = [&](const std::string& name, const std::string& body) {
    const fs::path path = fs::path(cfg.out_dir) / name;
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path.string());
    f << body;
    files.push_back(path.string());
  };
  put(cfg.experiment + ".csv", rows_to_csv(r.rows));
  put(cfg.experiment + ".json", r.report.dump(2) + "\n");
  if (!r.draws.empty()) {
    std::string body;
    for (const auto& row : r.draws) {
      for (std::size_t i = 0; i < row.size(); ++i) body += (i ? "," : "") + format_double(row[i]);
      body += '\n';
    }
    put("samples.csv", body);
  }
  return files;
}

// ---------------------------------------------------------------------------
// Validation

struct Diagnostic {
  enum class Kind { config_error, capacity_error, warning };
  Kind kind;
  std::string message;
};

struct Diagnostics {
  std::vector<Diagnostic> items;

  bool empty() const { return items.empty(); }
  bool has(Diagnostic::Kind k) const {
    return std::any_of(items.begin(), items.end(), [&](const Diagnostic& d) { return d.kind == k; });
  }
  /// 0 when only warnings, else the exit code of the most severe error.
  int exit_code() const {
    if (has(Diagnostic::Kind::config_error)) return 2;
    if (has(Diagnostic::Kind::capacity_error)) return 4;
    return 0;
  }
};

/// Schema and feasibility checks without running anything.
inline Diagnostics validate_config(const Json& j) {
  Diagnostics diag;
  auto add = [&](Diagnostic::Kind k, std::string msg) { diag.items.push_back({k, std::move(msg)}); };
  ExperimentConfig cfg;
  try {
    cfg = config_from_json(j);
  } catch (const std::exception& e) {
    add(Diagnostic::Kind::config_error, e.what());
    return diag;
  }
  std::optional<ProductMeasure> m;
  if (cfg.measure) m = measure_from_json(*cfg.measure);
  const bool grid_kind = cfg.experiment == "verify" || cfg.experiment == "sweep" ||
                         (cfg.experiment == "chain" && cfg.set.empty());
  if ((grid_kind || cfg.experiment == "moments") && cfg.grid.p.empty()) {
    add(Diagnostic::Kind::warning, "empty p list: the run is a no-op");
  }
  if (grid_kind) {
    std::vector<std::size_t> ds = cfg.grid.d;
    if (m) ds = {m->dim()};
    if (!m && (cfg.grid.families.empty() || cfg.grid.d.empty())) {
      add(Diagnostic::Kind::warning, "empty sweep grid: the run is a no-op");
    }
    if (cfg.grid.instances == 0) add(Diagnostic::Kind::warning, "grid.instances = 0: the run is a no-op");
    for (double p : cfg.grid.p) {
      if (!(p >= 2.0)) {
        add(Diagnostic::Kind::config_error, "grid.p: cube sets need p >= 2, got " + format_double(p));
        continue;
      }
      for (std::size_t d : ds) {
        try {
          cube_support_size(d, p, cfg.constants.delta_prime);
        } catch (const CapacityError& e) {
          add(Diagnostic::Kind::capacity_error, "p = " + format_double(p) + ", d = " + std::to_string(d) + ": " + e.what());
          continue;
        }
        if (p > cfg.max_p) {
          add(Diagnostic::Kind::capacity_error, "p = " + format_double(p) + " exceeds max_p = " + format_double(cfg.max_p));
        }
      }
    }
    if (cfg.samples < 1000) add(Diagnostic::Kind::config_error, "samples: E sup estimates need at least 1000");
  }
  if (cfg.experiment == "moments") {
    if (!m) add(Diagnostic::Kind::config_error, "config.measure: required for moments");
    else if (cfg.t.size() != m->dim()) add(Diagnostic::Kind::config_error, "config.t: length does not match the measure");
    const bool mc = std::find(cfg.methods.begin(), cfg.methods.end(), "mc") != cfg.methods.end();
    if (mc) {
      if (cfg.samples < 1000) add(Diagnostic::Kind::config_error, "samples: mc needs at least 1000");
      for (double p : cfg.grid.p) {
        if (auto w = mc_stability_warning(p, cfg.samples)) add(Diagnostic::Kind::warning, *w);
      }
    }
  }
  if (cfg.experiment == "sample" && !m) add(Diagnostic::Kind::config_error, "config.measure: required for sample");
  if (cfg.experiment == "chain" && !cfg.set.empty()) {
    if (!m) add(Diagnostic::Kind::config_error, "config.measure: required with an explicit set");
    if (m && cfg.distance == "mc") {
      const std::size_t nmax = cfg.n_max ? cfg.n_max : default_n_max(*m);
      if (std::ldexp(1.0, static_cast<int>(nmax)) > 16.0 && cfg.samples < 1000000) {
        add(Diagnostic::Kind::config_error, "distance = mc with 2^n_max > 16 needs >= 1e6 samples");
      }
    }
  }
  return diag;
}

}  // namespace sudakov
