#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sudakov/acceptance.hpp"
#include "sudakov/experiment.hpp"

using namespace sudakov;

namespace {

Json gaussian_measure_json(std::size_t d) {
  return Json{{"blocks", {{{"n", 1}, {"p", 2}, {"potential", {{"lambda", 1}, {"gamma", 1}}}, {"repeat", d}}}},
              {"isotropic", true}};
}

ExperimentConfig small_sweep() {
  ExperimentConfig c;
  c.experiment = "sweep";
  c.seed = 7;
  c.grid = {{2.0, 3.0}, {32}, {"gaussian", "mixed"}, 2};
  c.samples = 4000;
  c.witness_samples = 2000;
  return c;
}

std::string message_of(const Json& j) {
  try {
    config_from_json(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, RoundTrip) {
  auto c = small_sweep();
  c.constants.D = 3.0;
  c.measure = gaussian_measure_json(4);
  c.t = {1, 0, 0, 0};
  const auto back = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
  EXPECT_EQ(back.constants.D, 3.0);
  EXPECT_EQ(back.grid.families, c.grid.families);
}

TEST(Config, ErrorsCarryFieldPaths) {
  EXPECT_NE(message_of(Json{{"grid", {{"p", {2, "x"}}}}}).find("config.grid.p[1]"), std::string::npos);
  EXPECT_NE(message_of(Json{{"samples", -3}}).find("config.samples"), std::string::npos);
  EXPECT_NE(message_of(Json{{"bogus", 1}}).find("config.bogus: unknown field"), std::string::npos);
  EXPECT_NE(message_of(Json{{"experiment", "dance"}}).find("config.experiment"), std::string::npos);
  EXPECT_NE(message_of(Json{{"grid", {{"families", {"gaussian", "cauchy"}}}}}).find("config.grid.families[1]"),
            std::string::npos);
  EXPECT_NE(message_of(Json{{"constants", {{"rho", "a"}}}}).find("config.constants.rho"), std::string::npos);
  EXPECT_NE(message_of(Json{{"methods", {"mc", "exact"}}}).find("config.methods[1]"), std::string::npos);
  EXPECT_NE(message_of(Json{{"measure", {{"blocks", 3}}}}).find("config.measure"), std::string::npos);
}

TEST(Validate, CapacityWarningAndClean) {
  auto cap = validate_config(Json{{"experiment", "verify"}, {"grid", {{"p", {10}}, {"d", {8}}, {"families", {"gaussian"}}}}});
  EXPECT_TRUE(cap.has(Diagnostic::Kind::capacity_error));
  EXPECT_EQ(cap.exit_code(), 4);

  auto warn = validate_config(Json{{"experiment", "moments"},
                                   {"measure", gaussian_measure_json(2)},
                                   {"t", {1, 0}},
                                   {"grid", {{"p", {20}}}},
                                   {"samples", 1000}});
  ASSERT_EQ(warn.items.size(), 1u);
  EXPECT_EQ(warn.items[0].kind, Diagnostic::Kind::warning);
  EXPECT_EQ(warn.exit_code(), 0);

  EXPECT_TRUE(validate_config(config_to_json(small_sweep())).empty());

  auto bad = validate_config(Json{{"grid", {{"p", "two"}}}});
  EXPECT_EQ(bad.exit_code(), 2);
  auto low = validate_config(Json{{"experiment", "verify"}, {"grid", {{"p", {1.5}}, {"d", {32}}, {"families", {"gaussian"}}}}});
  EXPECT_EQ(low.exit_code(), 2);
}

TEST(Run, EmptyGridIsNoOpWithWarning) {
  auto c = small_sweep();
  c.grid.d.clear();
  auto r = run_experiment(c);
  EXPECT_TRUE(r.rows.empty());
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("empty sweep grid"), std::string::npos);
  EXPECT_TRUE(validate_config(config_to_json(c)).has(Diagnostic::Kind::warning));
}

TEST(Run, RowsEchoConstantsAndRepeatByteIdentically) {
  const auto c = small_sweep();
  worker_count() = 1;
  const auto a = run_experiment(c);
  worker_count() = 8;
  const auto b = run_experiment(c);
  worker_count() = 1;
  ASSERT_FALSE(a.rows.empty());
  EXPECT_EQ(rows_to_csv(a.rows, false), rows_to_csv(b.rows, false));
  for (const auto& r : a.rows) {
    EXPECT_EQ(r.constants.delta_prime, 0.5);
    EXPECT_GT(r.constants.A, 0.0);  // resolved from the measure
    EXPECT_EQ(r.seed, 7u);
  }
  const std::string csv = rows_to_csv(a.rows, true);
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header, std::string(kCsvHeader) + ",timestamp");
  EXPECT_EQ(rows_to_csv(a.rows, false).find("timestamp"), std::string::npos);
  EXPECT_GT(a.report["two_sided_band_B"].get<double>(), 1.0);
}

TEST(Run, MomentsAndSample) {
  ExperimentConfig c;
  c.experiment = "moments";
  c.measure = gaussian_measure_json(3);
  c.t = {0.3, -1.2, 0.5};
  c.grid.p = {2.0, 4.0};
  c.methods = {"mc", "alloc", "gk", "hitczenko", "y"};
  c.samples = 20000;
  auto r = run_experiment(c);
  EXPECT_EQ(r.rows.size(), 2u + 1u + 2u + 2u + 1u);  // alloc and y skip p = 2 < |supp t|
  EXPECT_EQ(r.warnings.size(), 2u);
  c.t = {1.0};
  EXPECT_THROW(run_experiment(c), ConfigError);

  ExperimentConfig s;
  s.experiment = "sample";
  s.measure = gaussian_measure_json(2);
  s.draws = 5000;
  auto d = run_experiment(s);
  EXPECT_EQ(d.draws.size(), 5000u);
  EXPECT_EQ(d.rows.size(), 4u);
  s.measure.reset();
  EXPECT_THROW(run_experiment(s), ConfigError);
}

TEST(Run, ChainOnExplicitSet) {
  ExperimentConfig c;
  c.experiment = "chain";
  c.measure = gaussian_measure_json(3);
  c.set = {{0, 0, 0}, {1, 0, 0}, {0, 2, 0}};
  c.samples = 5000;
  auto r = run_experiment(c);
  EXPECT_DOUBLE_EQ(r.report["gamma"].get<double>(), r.report["gamma_exhaustive"].get<double>());
  EXPECT_EQ(r.report["distances"].size(), r.report["n_max"].get<std::size_t>() + 1);
}

TEST(Run, WritesFiles) {
  auto c = small_sweep();
  c.grid.instances = 1;
  c.grid.p = {2.0};
  c.out_dir = (std::filesystem::temp_directory_path() / "sudakov_test_out").string();
  auto r = run_experiment(c);
  auto files = write_outputs(r, c);
  ASSERT_EQ(files.size(), 2u);
  std::ifstream f(files[1]);
  Json j = Json::parse(f);
  EXPECT_EQ(j["config"]["seed"], 7);
  std::filesystem::remove_all(c.out_dir);
}

TEST(Acceptance, DriftRegressionRecoversSlope) {
  std::vector<double> x, y;
  std::vector<std::size_t> g;
  for (std::size_t grp = 0; grp < 3; ++grp) {
    for (double d : {5.0, 6.0, 7.0}) {
      for (int rep = 0; rep < 4; ++rep) {
        x.push_back(d);
        y.push_back(10.0 * grp - 0.25 * d + 0.01 * ((rep % 2) ? 1 : -1));
        g.push_back(grp);
      }
    }
  }
  auto f = detail::within_group_slope(x, y, g);
  EXPECT_NEAR(f.slope, -0.25, 1e-12);
  EXPECT_LT(f.upper, 0.0);
}

TEST(Acceptance, FastCriteria) {
  detail::RowSink sink(1);
  EXPECT_TRUE(detail::special_criterion(sink).pass);
  EXPECT_TRUE(detail::alpha_criterion(sink).pass);
  AcceptanceOptions o;
  o.oracle_instances = 5;
  EXPECT_TRUE(detail::oracle_criterion(o, sink).pass);
  o.dichotomy_sets = 8;
  EXPECT_TRUE(detail::dichotomy_criterion(o, sink).pass);
  EXPECT_EQ(sink.rows.size(), 6u);
}
