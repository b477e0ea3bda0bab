// Command-line front end: solve, power, score, experiment, verify.
#include "dspec/error.hpp"
#include "dspec/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace dspec;
namespace fs = std::filesystem;

struct Options {
  std::string config;
  std::optional<Seed> seed;
  std::string out;
  std::string map;
  int cases = 100;
};

/// Inline object, or a path (relative to the config file) to a JSON document.
Json section(const Json& doc, const std::string& key, const fs::path& base) {
  require(doc.contains(key), "config is missing \"" + key + "\"");
  const Json& v = doc[key];
  if (v.is_string()) return read_json_file(base / v.get<std::string>());
  return v;
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text_file(out, text);
  }
}

Json load_config(const Options& o) {
  require(!o.config.empty(), "--config is required");
  return read_json_file(o.config);
}

fs::path config_dir(const Options& o) { return fs::path(o.config).parent_path(); }

int run_solve(const Options& o) {
  const Json doc = load_config(o);
  const fs::path base = config_dir(o);
  const TabularMdp mdp = mdp_from_json(section(doc, "mdp", base));
  const RewardFunction reward = reward_from_json(section(doc, "reward", base));
  const double gamma = doc.value("gamma", 0.9);
  const Solution sol = policy_iteration(mdp, reward, gamma);
  Json out = {{"policy", policy_to_json(sol.policy)},
              {"values", std::vector<double>(sol.values.data(), sol.values.data() + sol.values.size())},
              {"iterations", sol.iterations}};
  emit(out.dump(2) + "\n", o.out);
  return 0;
}

int run_power(const Options& o) {
  const Json doc = load_config(o);
  const fs::path base = config_dir(o);
  const TabularMdp mdp = mdp_from_json(section(doc, "mdp", base));
  const RewardDistribution dist = distribution_from_json(section(doc, "distribution", base));
  const double gamma = doc.value("gamma", 0.9);
  McOptions mc;
  mc.samples = doc.value("mc_samples", mc.samples);
  mc.seed = o.seed.value_or(doc.value("seed", Seed{0}));
  require(mc.samples >= 1, "mc_samples must be at least 1");

  const auto pw = power_all_states(dist, mdp, gamma, mc);
  std::optional<StateEstimates> va;
  if (gamma > 0.0 && gamma < 1.0) va = avg_optimal_values(dist, mdp, gamma, mc);
  std::vector<int> states;
  if (doc.contains("states")) {
    states = doc["states"].get<std::vector<int>>();
  } else {
    for (int s = 0; s < mdp.n_states(); ++s) states.push_back(s);
  }
  Json rows = Json::array();
  for (int s : states) {
    require(mdp.valid_state(s), "state " + std::to_string(s) + " out of range");
    Json row = {{"state", s}, {"power", pw.value[s]}, {"power_se", pw.std_error[s]}};
    if (va) {
      row["v_avg"] = va->value[s];
      row["v_avg_se"] = va->std_error[s];
    }
    rows.push_back(row);
  }
  emit(Json{{"gamma", gamma}, {"samples", pw.samples}, {"states", rows}}.dump(2) + "\n", o.out);
  return 0;
}

int run_score(const Options& o) {
  const Json doc = load_config(o);
  const fs::path base = config_dir(o);
  const TabularMdp mdp = mdp_from_json(section(doc, "mdp", base));
  const RewardDistribution dist = distribution_from_json(section(doc, "distribution", base));
  const Policy prefix = policy_from_json(section(doc, "policy", base));
  prefix.check_compatible(mdp);
  McOptions mc;
  mc.samples = doc.value("mc_samples", mc.samples);
  mc.seed = o.seed.value_or(doc.value("seed", Seed{0}));
  const auto scores = delayed_spec_scores(mdp, prefix, dist, doc.value("gamma", 0.996),
                                          doc.value("correct_at", 10), mc);
  emit(score_csv(scores), o.out);
  return 0;
}

int run_experiment_cmd(const Options& o) {
  const Json doc = load_config(o);
  ExperimentConfig config = experiment_config_from_json(doc, config_dir(o));
  if (o.seed) config.seed = *o.seed;
  if (!o.out.empty()) config.output_dir = o.out;
  if (!o.map.empty()) {
    std::ifstream in(o.map);
    require(in.good(), "cannot open map " + o.map);
    std::ostringstream text;
    text << in.rdbuf();
    config.map = text.str();
  }
  const ResidualReport report = run_experiment(config);
  write_outputs(report);
  std::cout << summary_json(report).dump(2) << "\n";
  return 0;
}

int run_verify(const Options& o) {
  require(o.cases >= 0, "--cases must be nonnegative");
  const VerificationReport report = verify_theorems(o.seed.value_or(0), o.cases);
  std::ostringstream text;
  text << report.table() << (report.passed() ? "all identities hold\n" : "IDENTITY VIOLATION\n");
  emit(text.str(), o.out);
  if (!o.out.empty()) std::cout << text.str();
  return report.passed() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delayed-specification assistance games: solvers, POWER, AUP experiments"};
  app.require_subcommand(1);
  Options o;
  Seed seed = 0;

  auto add_common = [&](CLI::App* cmd, bool with_config) {
    if (with_config) cmd->add_option("--config", o.config, "JSON config file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "seed override");
    cmd->add_option("--out", o.out, "output file (directory for experiment)");
  };
  auto* solve = app.add_subcommand("solve", "policy iteration on an MDP + reward");
  add_common(solve, true);
  auto* power = app.add_subcommand("power", "POWER and average optimal value per state");
  add_common(power, true);
  auto* score = app.add_subcommand("score", "delayed specification score of a policy");
  add_common(score, true);
  auto* experiment = app.add_subcommand("experiment", "gridworld residual experiment");
  add_common(experiment, true);
  experiment->add_option("--map", o.map, "ASCII map overriding the bundled layout")->check(CLI::ExistingFile);
  auto* verify = app.add_subcommand("verify", "numerical verification of the solver identities");
  add_common(verify, false);
  verify->add_option("--cases", o.cases, "number of random cases")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }
  for (auto* cmd : {solve, power, score, experiment, verify})
    if (cmd->parsed() && cmd->count("--seed")) o.seed = seed;

  try {
    if (solve->parsed()) return run_solve(o);
    if (power->parsed()) return run_power(o);
    if (score->parsed()) return run_score(o);
    if (experiment->parsed()) return run_experiment_cmd(o);
    return run_verify(o);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
