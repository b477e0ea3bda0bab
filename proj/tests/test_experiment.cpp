#include "dspec/error.hpp"
#include "dspec/experiment.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

using namespace dspec;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config(EnvKind env, double lambda) {
  ExperimentConfig c;
  c.env = env;
  c.lambda = lambda;
  c.n_rand_samples = 60;
  c.agent_modes = {AgentMode::vanilla, AgentMode::aup};
  return c;
}

struct ParsedCsv {
  std::vector<int> ids;
  std::vector<double> aup, vanilla, residual;
};

ParsedCsv parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  REQUIRE(line == "sample_id,aup_score,vanilla_score,residual");
  ParsedCsv out;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 4);
    out.ids.push_back(std::stoi(cells[0]));
    out.aup.push_back(std::strtod(cells[1].c_str(), nullptr));
    out.vanilla.push_back(std::strtod(cells[2].c_str(), nullptr));
    out.residual.push_back(std::strtod(cells[3].c_str(), nullptr));
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("summarize: medians and counts") {
  auto rows = [](std::vector<double> r) {
    std::vector<ResidualRow> out;
    for (std::size_t i = 0; i < r.size(); ++i) out.push_back({static_cast<int>(i), r[i], 0.0, r[i]});
    return out;
  };
  const auto odd = summarize(rows({3.0, -1.0, 2.0}));
  CHECK(odd.median == 2.0);
  CHECK(odd.n_positive == 2);
  CHECK(odd.fraction_positive == doctest::Approx(2.0 / 3.0));
  CHECK(odd.mean == doctest::Approx(4.0 / 3.0));
  const auto even = summarize(rows({4.0, -1.0, 0.0, 1.0}));
  CHECK(even.median == 0.5);
  CHECK(even.n_positive == 2);  // zero is not positive
  const auto none = summarize({});
  CHECK(none.n_samples == 0);
  CHECK(none.fraction_positive == 0.0);
}

TEST_CASE("lambda = 0 makes the two agents identical") {
  for (EnvKind env : {EnvKind::options, EnvKind::damage}) {
    const auto report = run_experiment(small_config(env, 0.0));
    CHECK(report.agents.at(AgentMode::aup).policy == report.agents.at(AgentMode::vanilla).policy);
    for (const auto& row : report.rows) CHECK(row.residual == 0.0);
    CHECK(report.summary.fraction_positive == 0.0);
    CHECK(report.d_true_advantage == 0.0);
  }
}

TEST_CASE("reports are deterministic and the CSV reproduces the summary") {
  const ExperimentConfig config = small_config(EnvKind::options, 0.01);
  const auto a = run_experiment(config, kernels::Execution::parallel);
  const auto b = run_experiment(config, kernels::Execution::serial);
  const std::string csv = residuals_csv(a.rows);
  CHECK(csv == residuals_csv(b.rows));
  CHECK(summary_json(a).dump() == summary_json(b).dump());

  const ParsedCsv parsed = parse_csv(csv);
  REQUIRE(parsed.ids.size() == 60);
  for (std::size_t i = 0; i < parsed.ids.size(); ++i) {
    CHECK(parsed.ids[i] == static_cast<int>(i));
    CHECK(parsed.aup[i] == a.rows[i].aup_score);  // exact round trip
    CHECK(parsed.residual[i] == a.rows[i].residual);
    CHECK(parsed.residual[i] == parsed.aup[i] - parsed.vanilla[i]);
  }
  std::vector<double> r = parsed.residual;
  std::sort(r.begin(), r.end());
  const double median = (r[29] + r[30]) / 2.0;
  const double mean = std::accumulate(r.begin(), r.end(), 0.0) / 60.0;
  const auto positives = std::count_if(r.begin(), r.end(), [](double x) { return x > 0.0; });

  const Json s = summary_json(a);
  CHECK(s["env"] == "options");
  CHECK(s["seed"] == 0);
  CHECK(s["n_samples"] == 60);
  CHECK(s["n_positive"] == positives);
  CHECK(s["fraction_positive"].get<double>() == doctest::Approx(positives / 60.0).epsilon(1e-15));
  CHECK(s["mean_residual"].get<double>() == doctest::Approx(mean).epsilon(1e-12));
  CHECK(s["median_residual"].get<double>() == median);
  CHECK(s["d_true_advantage"].get<double>() > 0.0);
  CHECK(s.contains("d_true_inv_residual"));
}

TEST_CASE("write_outputs") {
  ExperimentConfig config = small_config(EnvKind::damage, 0.01);
  config.n_rand_samples = 5;
  config.output_dir = fs::temp_directory_path() / "dspec_test_outputs";
  fs::remove_all(config.output_dir);
  const auto report = run_experiment(config);
  write_outputs(report);
  CHECK(slurp(config.output_dir / "residuals.csv") == residuals_csv(report.rows));
  const Json summary = Json::parse(slurp(config.output_dir / "summary.json"));
  CHECK(summary["n_samples"] == 5);
  const Json policies = Json::parse(slurp(config.output_dir / "policies.json"));
  CHECK(policies.contains("vanilla"));
  CHECK(policies.contains("aup"));
  fs::remove_all(config.output_dir);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(experiment_config_from_json(Json{{"lamda", 0.1}}), ValidationError);
  CHECK_THROWS_AS(experiment_config_from_json(Json{{"env", "maze"}}), ValidationError);
  CHECK_THROWS_AS(experiment_config_from_json(Json{{"agent_modes", {"vanilla"}}}), ValidationError);
  CHECK_THROWS_AS(experiment_config_from_json(Json{{"gamma", 1.0}}), ValidationError);
  CHECK_THROWS_AS(experiment_config_from_json(Json{{"n_rand_samples", 0}}), ValidationError);
  CHECK_THROWS_AS(experiment_config_from_json(Json{{"map", "no/such/map.txt"}}), ValidationError);
  const auto c = experiment_config_from_json(Json{{"env", "damage"}, {"lambda", 0.5}, {"seed", 9}});
  CHECK(c.env == EnvKind::damage);
  CHECK(c.lambda == 0.5);
  CHECK(c.seed == 9);
  CHECK(c.n_aux == 20);
}

TEST_CASE("score CSV layout") {
  const std::string csv = score_csv({{2.0, 1.5, 0.5}});
  CHECK(csv == "sample_id,score,prefix_return_term,post_correction_term\n0,2,1.5,0.5\n");
}

TEST_CASE("verification report") {
  const VerificationReport empty = verify_theorems(3, 0);
  CHECK(empty.passed());
  const VerificationReport full = verify_theorems(3, 8);
  CHECK(full.passed());
  CHECK_FALSE(full.checks.empty());
  CHECK(full.table().find("FAIL") == std::string::npos);

  VerificationReport broken = full;
  broken.checks.front().max_error = 10 * broken.checks.front().tolerance + 1.0;
  CHECK_FALSE(broken.passed());
  CHECK(broken.table().find("FAIL") != std::string::npos);
}
