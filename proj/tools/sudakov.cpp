// Command line front end. Subcommands: sample, moments, verify, chain,
// sweep, validate, acceptance. Exit codes: 0 ok, 2 config error,
// 3 invariant violation, 4 capacity error.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sudakov/sudakov.hpp"

using namespace sudakov;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

/// A JSON argument given inline ("{...}") or as a file path.
Json json_arg(const std::string& arg, const std::string& what) {
  if (!arg.empty() && (arg.front() == '{' || arg.front() == '[')) return parse_json(arg, what);
  return parse_json(read_file(arg), what + " (" + arg + ")");
}

std::vector<double> parse_row(const std::string& line, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw ConfigError(what + ": '" + cell + "' is not a number");
    }
  }
  return out;
}

std::vector<std::vector<double>> read_csv_matrix(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  for (std::size_t n = 1; std::getline(f, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    rows.push_back(parse_row(line, path + ":" + std::to_string(n)));
  }
  return rows;
}

void emit(const std::string& body, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << body;
    return;
  }
  std::ofstream f(out);
  if (!f) throw ConfigError("cannot write " + out);
  f << body;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sampling, moment surrogates, minoration and chaining for product radial log-concave measures"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::string out_dir = "out";
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--threads", threads, "Worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", out_dir, "Directory for result files");

  // sample
  auto* sample = app.add_subcommand("sample", "Draw from a product measure");
  std::string s_measure, s_out, s_process = "X";
  std::size_t s_n = 1000;
  sample->add_option("--measure", s_measure, "Measure JSON (file or inline)")->required();
  sample->add_option("--n", s_n, "Number of draws");
  sample->add_option("--process", s_process, "X | Y | exponential | rademacher");
  sample->add_option("--out", s_out, "CSV of draws, one row per draw (default stdout)");

  // moments
  auto* moments = app.add_subcommand("moments", "Moments of <X, t>: Monte Carlo and surrogates");
  std::string m_measure, m_t, m_out;
  std::vector<double> m_p;
  std::vector<std::string> m_methods{"mc"};
  std::size_t m_samples = 100000;
  moments->add_option("--measure", m_measure, "Measure JSON (file or inline)")->required();
  moments->add_option("--t", m_t, "Comma separated vector t")->required();
  moments->add_option("--p", m_p, "Moment exponents")->required()->delimiter(',');
  moments->add_option("--method", m_methods, "mc | alloc | gk | hitczenko | y")->delimiter(',');
  moments->add_option("--samples", m_samples, "Monte Carlo samples");
  moments->add_option("--out", m_out, "CSV output (default stdout)");

  // verify
  auto* verify = app.add_subcommand("verify", "Minoration ratio on random cube-like sets");
  std::string v_measure, v_sweep, v_out;
  std::vector<double> v_p;
  std::vector<std::size_t> v_d{64};
  std::vector<std::string> v_families{"gaussian"};
  std::size_t v_samples = 20000, v_instances = 1;
  verify->add_option("--measure", v_measure, "Measure JSON; replaces the family grid");
  verify->add_option("--p", v_p, "Exponents")->delimiter(',');
  verify->add_option("--d", v_d, "Dimensions for the family grid")->delimiter(',');
  verify->add_option("--family", v_families, "gaussian | exponential | p1.5 | mixed | p32")->delimiter(',');
  verify->add_option("--instances", v_instances, "Instances per grid point");
  verify->add_option("--samples", v_samples, "E sup samples");
  verify->add_option("--sweep", v_sweep, "Config JSON; overrides the flags above");
  verify->add_option("--out", v_out, "CSV output (default <out-dir>/verify.csv)");

  // chain
  auto* chain = app.add_subcommand("chain", "Distance family, gamma functional and two-sided comparison");
  std::string c_measure, c_set, c_method = "surrogate", c_out;
  std::size_t c_nmax = 0, c_samples = 1000000;
  chain->add_option("--measure", c_measure, "Measure JSON (file or inline)")->required();
  chain->add_option("--set", c_set, "CSV file, one point per row")->required();
  chain->add_option("--nmax", c_nmax, "Highest level (default floor(log2 max p_k) + 2)");
  chain->add_option("--method", c_method, "surrogate | mc");
  chain->add_option("--samples", c_samples, "Samples for the mc source and E sup");
  chain->add_option("--out", c_out, "JSON report (default stdout)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run a configured experiment");
  std::string w_config;
  sweep->add_option("--config", w_config, "Experiment config JSON")->required();

  // validate
  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  std::string a_config;
  validate->add_option("--config", a_config, "Experiment config JSON")->required();

  // acceptance
  auto* acceptance = app.add_subcommand("acceptance", "Run the acceptance suite");
  AcceptanceOptions acc;
  acceptance->add_option("--instances", acc.sweep_instances, "Instances per sweep grid point");

  CLI11_PARSE(app, argc, argv);
  worker_count() = threads;

  try {
    if (*sample) {
      ExperimentConfig cfg;
      cfg.experiment = "sample";
      cfg.seed = seed;
      cfg.measure = json_arg(s_measure, "--measure");
      cfg.draws = s_n;
      cfg.process = s_process;
      cfg = config_from_json(config_to_json(cfg));
      const auto r = run_experiment(cfg);
      std::string body;
      for (const auto& row : r.draws) {
        for (std::size_t i = 0; i < row.size(); ++i) body += (i ? "," : "") + format_double(row[i]);
        body += '\n';
      }
      emit(body, s_out);
    } else if (*moments) {
      ExperimentConfig cfg;
      cfg.experiment = "moments";
      cfg.seed = seed;
      cfg.measure = json_arg(m_measure, "--measure");
      cfg.t = parse_row(m_t, "--t");
      cfg.grid.p = m_p;
      cfg.methods = m_methods;
      cfg.samples = m_samples;
      cfg = config_from_json(config_to_json(cfg));
      const auto r = run_experiment(cfg);
      print_warnings(r.warnings);
      std::string body = "method,p,value,stderr\n";
      for (const auto& row : r.rows) {
        body += row.metric + "," + format_double(row.p) + "," + format_double(row.value) + "," +
                format_double(row.stderr_) + "\n";
      }
      emit(body, m_out);
    } else if (*verify) {
      ExperimentConfig cfg;
      if (!v_sweep.empty()) {
        cfg = config_from_json(json_arg(v_sweep, "--sweep"));
      } else {
        cfg.seed = seed;
        cfg.grid.p = v_p;
        cfg.grid.d = v_d;
        cfg.grid.families = v_families;
        cfg.grid.instances = v_instances;
        cfg.samples = v_samples;
        if (!v_measure.empty()) cfg.measure = json_arg(v_measure, "--measure");
      }
      cfg.experiment = "verify";
      cfg.out_dir = out_dir;
      cfg = config_from_json(config_to_json(cfg));
      const auto r = run_experiment(cfg);
      print_warnings(r.warnings);
      const auto files = write_outputs(r, cfg);
      if (!v_out.empty()) emit(rows_to_csv(r.rows), v_out);
      for (const auto& i : r.instances) {
        std::printf("%-12s d=%-4zu p=%-4g |T|=%-3zu A_min=%.6g esup=%.6g (%.2g) K^=%.4f\n", i.family.c_str(), i.d,
                    i.p, i.set_size, i.minoration.A_min, i.minoration.esup.value, i.minoration.esup.stderr_,
                    i.minoration.K_hat);
      }
      for (const auto& f : files) std::fprintf(stderr, "wrote %s\n", f.c_str());
    } else if (*chain) {
      ExperimentConfig cfg;
      cfg.experiment = "chain";
      cfg.seed = seed;
      cfg.measure = json_arg(c_measure, "--measure");
      cfg.set = read_csv_matrix(c_set);
      cfg.n_max = c_nmax;
      cfg.distance = c_method;
      cfg.samples = c_samples;
      cfg = config_from_json(config_to_json(cfg));
      const auto r = run_experiment(cfg);
      print_warnings(r.warnings);
      emit(r.report.dump(2) + "\n", c_out);
    } else if (*sweep) {
      auto cfg = config_from_json(json_arg(w_config, "--config"));
      if (app.get_option("--out-dir")->count()) cfg.out_dir = out_dir;
      const auto r = run_experiment(cfg);
      print_warnings(r.warnings);
      for (const auto& f : write_outputs(r, cfg)) std::fprintf(stderr, "wrote %s\n", f.c_str());
      if (r.report.contains("K_hat_max")) std::printf("K_hat max %.6g\n", r.report["K_hat_max"].get<double>());
      if (r.report.contains("two_sided_band_B")) {
        std::printf("two-sided band B %.6g\n", r.report["two_sided_band_B"].get<double>());
      }
    } else if (*validate) {
      Json j;
      try {
        j = json_arg(a_config, "--config");
      } catch (const ConfigError& e) {
        std::printf("config error: %s\n", e.what());
        return static_cast<int>(ExitCode::config_error);
      }
      const auto diag = validate_config(j);
      for (const auto& d : diag.items) {
        const char* tag = d.kind == Diagnostic::Kind::config_error     ? "config error"
                          : d.kind == Diagnostic::Kind::capacity_error ? "capacity error"
                                                                        : "warning";
        std::printf("%s: %s\n", tag, d.message.c_str());
      }
      if (diag.empty()) std::printf("ok\n");
      return diag.exit_code();
    } else if (*acceptance) {
      if (app.get_option("--seed")->count()) acc.seed = seed;
      const auto run = run_acceptance(acc);
      int failed = 0;
      for (const auto& c : run.criteria) {
        std::printf("%s\n", criterion_line(c).c_str());
        failed += c.pass ? 0 : 1;
      }
      ExperimentConfig cfg;
      cfg.experiment = "acceptance";
      cfg.out_dir = out_dir;
      RunResult r;
      r.rows = run.rows;
      Json items = Json::array();
      for (const auto& c : run.criteria) {
        items.push_back({{"id", c.id}, {"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
      }
      r.report = Json{{"criteria", items}, {"seed", acc.seed}, {"schema", kSchemaVersion}};
      for (const auto& f : write_outputs(r, cfg)) std::fprintf(stderr, "wrote %s\n", f.c_str());
      return failed ? static_cast<int>(ExitCode::invariant_violation) : 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::invariant_violation);
  }
  return 0;
}
