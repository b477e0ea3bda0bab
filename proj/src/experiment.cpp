#include "dspec/experiment.hpp"

#include "dspec/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace dspec {

std::string to_string(AgentMode mode) {
  switch (mode) {
    case AgentMode::vanilla: return "vanilla";
    case AgentMode::aup: return "aup";
    case AgentMode::power_penalty: return "power-penalty";
  }
  return "?";
}

AgentMode agent_mode_from_string(const std::string& name) {
  if (name == "vanilla") return AgentMode::vanilla;
  if (name == "aup") return AgentMode::aup;
  if (name == "power-penalty") return AgentMode::power_penalty;
  throw ValidationError("unknown agent mode \"" + name + "\" (expected vanilla, aup or power-penalty)");
}

void ExperimentConfig::validate() const {
  require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
  require(lambda >= 0.0, "lambda must be nonnegative");
  require(n_aux >= 1, "n_aux must be at least 1");
  require(n_rand_samples >= 1, "n_rand_samples must be at least 1");
  require(correct_at >= 1, "correct_at must be at least 1");
  require(episode_len >= 1, "episode_len must be at least 1");
  const std::set<AgentMode> modes(agent_modes.begin(), agent_modes.end());
  require(modes.size() == agent_modes.size(), "agent_modes has duplicates");
  require(modes.count(AgentMode::vanilla) && modes.count(AgentMode::aup),
          "agent_modes must include vanilla and aup (residuals compare the two)");
}

ExperimentConfig experiment_config_from_json(const Json& doc, const std::filesystem::path& base_dir) {
  require(doc.is_object(), "experiment config must be a JSON object");
  static const std::set<std::string> known{"env",     "gamma",          "lambda",      "n_aux",
                                           "n_rand_samples", "correct_at", "episode_len", "seed",
                                           "agent_modes",    "output_dir", "train_method", "map"};
  for (const auto& [key, value] : doc.items())
    require(known.count(key) > 0, "unknown experiment config key \"" + key + "\"");

  ExperimentConfig c;
  try {
    if (doc.contains("env")) c.env = env_kind_from_string(doc["env"].get<std::string>());
    c.gamma = doc.value("gamma", c.gamma);
    c.lambda = doc.value("lambda", c.lambda);
    c.n_aux = doc.value("n_aux", c.n_aux);
    c.n_rand_samples = doc.value("n_rand_samples", c.n_rand_samples);
    c.correct_at = doc.value("correct_at", c.correct_at);
    c.episode_len = doc.value("episode_len", c.episode_len);
    c.seed = doc.value("seed", c.seed);
    if (doc.contains("agent_modes")) {
      c.agent_modes.clear();
      for (const auto& m : doc["agent_modes"]) c.agent_modes.push_back(agent_mode_from_string(m.get<std::string>()));
    }
    if (doc.contains("output_dir")) c.output_dir = doc["output_dir"].get<std::string>();
    if (doc.contains("train_method"))
      c.train_method = train_method_from_string(doc["train_method"].get<std::string>());
    if (doc.contains("map")) {
      std::filesystem::path p = doc["map"].get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      std::ifstream in(p);
      require(in.good(), "cannot open map " + p.string());
      std::ostringstream text;
      text << in.rdbuf();
      c.map = text.str();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

ResidualSummary summarize(const std::vector<ResidualRow>& rows) {
  ResidualSummary out;
  out.n_samples = static_cast<int>(rows.size());
  if (rows.empty()) return out;
  std::vector<double> residuals;
  residuals.reserve(rows.size());
  double total = 0.0;
  for (const auto& r : rows) {
    residuals.push_back(r.residual);
    total += r.residual;
    if (r.residual > 0.0) ++out.n_positive;
  }
  const auto n = residuals.size();
  out.fraction_positive = static_cast<double>(out.n_positive) / static_cast<double>(n);
  out.mean = total / static_cast<double>(n);
  std::sort(residuals.begin(), residuals.end());
  out.median = n % 2 == 1 ? residuals[n / 2] : 0.5 * (residuals[n / 2 - 1] + residuals[n / 2]);
  return out;
}

namespace {

RewardFunction agent_reward(AgentMode mode, const GridWorld& env, const AuxiliarySet& aux,
                            const AupConfig& aup) {
  switch (mode) {
    case AgentMode::vanilla: return env.r_env();
    case AgentMode::aup: return aup_reward_table(env.mdp(), env.r_env(), aux, aup);
    case AgentMode::power_penalty: return power_penalty_reward_table(env.mdp(), env.r_env(), aux, aup);
  }
  throw InternalError("unreachable agent mode");
}

}  // namespace

ResidualReport run_experiment(const ExperimentConfig& config, kernels::Execution exec) {
  config.validate();
  const GridWorld env = build_environment(
      config.env, config.gamma,
      config.map ? std::optional<std::string_view>(*config.map) : std::nullopt);
  const TabularMdp& mdp = env.mdp();

  ResidualReport report;
  report.config = config;
  report.n_states = mdp.n_states();

  AupConfig aup;
  aup.lambda = config.lambda;
  aup.n_aux = config.n_aux;
  aup.noop_action = kNoop;
  aup.gamma = config.gamma;
  aup.seed = derive_stream(config.seed, "aux");
  const AuxiliarySet aux = sample_auxiliary_set(mdp, aup, exec);

  QLearningOptions qopts;
  qopts.episode_len = config.episode_len;
  for (AgentMode mode : config.agent_modes) {
    TrainResult trained = train_agent(mdp, agent_reward(mode, env, aux, aup), aup, config.train_method, qopts);
    AgentOutcome outcome{std::move(trained.policy), trained.converged, {}, std::nullopt, false, {}, {}};
    outcome.trajectory = rollout(mdp, outcome.policy, config.episode_len);
    for (std::size_t i = 0; i < outcome.trajectory.size(); ++i) {
      const StateIndex s = outcome.trajectory[i];
      if (!outcome.goal_step && env.on_goal(s)) outcome.goal_step = static_cast<int>(i);
      outcome.side_effect = outcome.side_effect || env.side_effect(s);
    }
    report.agents.emplace(mode, std::move(outcome));
  }

  const HeldoutDistributions heldout =
      build_heldout_distributions(env, config.n_rand_samples, config.seed);
  OptimalValueCache cache(mdp, config.gamma);
  for (auto& [mode, outcome] : report.agents) {
    outcome.d_true = delayed_spec_score(mdp, outcome.policy, heldout.d_true, config.gamma,
                                        config.correct_at, {}, &cache);
    outcome.d_true_inv = delayed_spec_score(mdp, outcome.policy, heldout.d_true_inv, config.gamma,
                                            config.correct_at, {}, &cache);
  }
  const AgentOutcome& vanilla = report.agents.at(AgentMode::vanilla);
  const AgentOutcome& aup_agent = report.agents.at(AgentMode::aup);
  report.d_true_advantage = aup_agent.d_true.score - vanilla.d_true.score;
  report.d_true_inv_residual = aup_agent.d_true_inv.score - vanilla.d_true_inv.score;

  // d_rand: one V* solve per sample, shared by both agents.
  const auto& members = std::get<Empirical>(heldout.d_rand.variant()).members;
  const auto values = kernels::optimal_values(mdp, members, config.gamma, exec);
  const PrefixOccupancy occ_vanilla =
      prefix_occupancy(mdp, vanilla.policy, config.gamma, config.correct_at, mdp.initial_state());
  const PrefixOccupancy occ_aup =
      prefix_occupancy(mdp, aup_agent.policy, config.gamma, config.correct_at, mdp.initial_state());
  report.rows.resize(members.size());
  kernels::for_each_index(members.size(), exec, [&](std::size_t k) {
    ResidualRow& row = report.rows[k];
    row.sample_id = static_cast<int>(k);
    row.aup_score = score_member(occ_aup, members[k], values[k]).score;
    row.vanilla_score = score_member(occ_vanilla, members[k], values[k]).score;
    row.residual = row.aup_score - row.vanilla_score;
  });
  report.summary = summarize(report.rows);
  return report;
}

std::string residuals_csv(const std::vector<ResidualRow>& rows) {
  std::vector<const ResidualRow*> sorted;
  for (const auto& r : rows) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const ResidualRow* a, const ResidualRow* b) { return a->sample_id < b->sample_id; });
  std::string out = "sample_id,aup_score,vanilla_score,residual\n";
  for (const ResidualRow* r : sorted) {
    out += std::to_string(r->sample_id) + "," + format_double(r->aup_score) + "," +
           format_double(r->vanilla_score) + "," + format_double(r->residual) + "\n";
  }
  return out;
}

Json summary_json(const ResidualReport& report) {
  return {{"env", to_string(report.config.env)},
          {"seed", report.config.seed},
          {"n_samples", report.summary.n_samples},
          {"n_positive", report.summary.n_positive},
          {"fraction_positive", report.summary.fraction_positive},
          {"mean_residual", report.summary.mean},
          {"median_residual", report.summary.median},
          {"d_true_advantage", report.d_true_advantage},
          {"d_true_inv_residual", report.d_true_inv_residual}};
}

Json policies_json(const ResidualReport& report) {
  Json out = Json::object();
  for (const auto& [mode, outcome] : report.agents) out[to_string(mode)] = policy_to_json(outcome.policy);
  return out;
}

void write_outputs(const ResidualReport& report) {
  const auto& dir = report.config.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, "cannot create output directory " + dir.string() + ": " + ec.message());
  write_text_file(dir / "residuals.csv", residuals_csv(report.rows));
  write_text_file(dir / "summary.json", summary_json(report).dump(2) + "\n");
  write_text_file(dir / "policies.json", policies_json(report).dump() + "\n");
}

std::string score_csv(const std::vector<ScoreBreakdown>& scores) {
  std::string out = "sample_id,score,prefix_return_term,post_correction_term\n";
  for (std::size_t k = 0; k < scores.size(); ++k) {
    out += std::to_string(k) + "," + format_double(scores[k].score) + "," +
           format_double(scores[k].prefix_return) + "," + format_double(scores[k].post_correction) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

TabularMdp random_mdp(int n_states, int n_actions, Rng& rng, bool sparse) {
  require(n_states >= 1 && n_actions >= 1, "random MDP needs at least one state and action");
  std::exponential_distribution<double> weight(1.0);
  std::uniform_int_distribution<int> pick(0, n_states - 1);
  std::vector<std::vector<Successor>> rows(static_cast<std::size_t>(n_states * n_actions));
  for (auto& row : rows) {
    std::vector<double> w(static_cast<std::size_t>(n_states), 0.0);
    if (sparse) {
      w[static_cast<std::size_t>(pick(rng))] += weight(rng);
      w[static_cast<std::size_t>(pick(rng))] += weight(rng);
    } else {
      for (auto& x : w) x = weight(rng);
    }
    double total = 0.0;
    for (double x : w) total += x;
    for (int s = 0; s < n_states; ++s)
      if (w[static_cast<std::size_t>(s)] > 0.0) row.push_back({s, w[static_cast<std::size_t>(s)] / total});
  }
  return TabularMdp::from_rows(n_states, n_actions, rows, 0);
}

bool VerificationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const IdentityCheck& c) { return c.passed(); });
}

std::string VerificationReport::table() const {
  std::ostringstream os;
  os << std::left << std::setw(34) << "identity" << std::setw(8) << "cases" << std::setw(14)
     << "max_error" << std::setw(10) << "tol" << "result\n";
  for (const auto& c : checks) {
    os << std::left << std::setw(34) << c.name << std::setw(8) << c.cases << std::setw(14)
       << std::setprecision(3) << std::scientific << c.max_error << std::setw(10) << c.tolerance
       << std::defaultfloat << (c.passed() ? "PASS" : "FAIL") << "\n";
  }
  return os.str();
}

namespace {

Policy random_policy(int n_states, int n_actions, Rng& rng) {
  std::uniform_int_distribution<int> pick(0, n_actions - 1);
  std::vector<ActionIndex> a(static_cast<std::size_t>(n_states));
  for (auto& x : a) x = pick(rng);
  return Policy::deterministic(std::move(a));
}

/// Calls fn on every deterministic stationary policy.
template <typename Fn>
void for_each_policy(int n_states, int n_actions, Fn&& fn) {
  std::vector<ActionIndex> a(static_cast<std::size_t>(n_states), 0);
  while (true) {
    fn(Policy::deterministic(a));
    int s = 0;
    while (s < n_states && ++a[static_cast<std::size_t>(s)] == n_actions) a[static_cast<std::size_t>(s++)] = 0;
    if (s == n_states) return;
  }
}

struct Tracker {
  IdentityCheck check;
  void record(double error) {
    ++check.cases;
    check.max_error = std::max(check.max_error, std::isnan(error) ? INFINITY : error);
  }
};

}  // namespace

VerificationReport verify_theorems(Seed seed, int n_cases) {
  require(n_cases >= 0, "case count must be nonnegative");
  VerificationReport report;
  if (n_cases == 0) return report;

  Tracker tradeoff{{"tradeoff decomposition", 0, 0.0, 1e-8}};
  Tracker surrogate{{"surrogate prefix optimality", 0, 0.0, 1e-8}};
  Tracker assist{{"assist reward equivalence", 0, 0.0, 1e-8}};
  Tracker vavg{{"average optimal value identity", 0, 0.0, 1e-8}};
  Tracker immediate{{"immediate reveal invariance", 0, 0.0, 1e-8}};
  Tracker bellman{{"q_from_v row max", 0, 0.0, 1e-10}};

  const double gammas[] = {0.3, 0.9};
  const double ps[] = {0.1, 0.5, 0.9};
  for (int c = 0; c < n_cases; ++c) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    const int n_states = std::uniform_int_distribution<int>(2, 6)(rng);
    const int n_actions = std::uniform_int_distribution<int>(2, 3)(rng);
    const TabularMdp mdp = random_mdp(n_states, n_actions, rng, c % 2 == 1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Eigen::VectorXd> members(
        static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 5)(rng)));
    for (auto& m : members) m = Eigen::VectorXd::NullaryExpr(n_states, [&] { return u(rng); });
    const auto dist = RewardDistribution::empirical(members);
    const double gamma = gammas[c % 2];
    const CorrectionTime correction =
        (c / 2) % 2 == 0 ? CorrectionTime::deterministic(3) : CorrectionTime::geometric(0.3);

    {
      const DelayedSpecGame game{mdp, dist, correction, gamma, std::nullopt, {}};
      const SwitchEvaluator sw(game, kernels::Execution::serial);
      const TradeoffEvaluator tr(game, kernels::Execution::serial);
      for (int k = 0; k < 2; ++k) {
        const Policy prefix = random_policy(n_states, n_actions, rng);
        tradeoff.record(std::abs(tr.value(prefix).total() - sw.value(prefix)));
      }
    }
    {
      const DelayedSpecGame game{mdp, dist, CorrectionTime::geometric(ps[c % 3]), gamma, std::nullopt, {}};
      const SwitchEvaluator sw(game, kernels::Execution::serial);
      const double attained = sw.value(surrogate_optimal_prefix(game));
      double best = -INFINITY;
      for_each_policy(n_states, n_actions, [&](const Policy& p) { best = std::max(best, sw.value(p)); });
      surrogate.record(std::max(0.0, best - attained));
      const Policy baseline = random_policy(n_states, n_actions, rng);
      assist.record(std::abs(sw.value(assist_optimal_prefix(game, baseline)) - attained));
    }
    for (double g : {0.3, 0.7, 0.996}) {
      const auto rbar = mean_reward(dist, n_states);
      const auto pw = power_all_states(dist, mdp, g, {}, kernels::Execution::serial).value;
      const auto va = avg_optimal_values(dist, mdp, g, {}, kernels::Execution::serial).value;
      vavg.record((va - (g / (1.0 - g)) * pw - rbar).cwiseAbs().maxCoeff());
    }
    {
      const DelayedSpecGame game{mdp, dist, CorrectionTime::deterministic(0), gamma, std::nullopt, {}};
      const SwitchEvaluator sw(game, kernels::Execution::serial);
      immediate.record(std::abs(sw.value(random_policy(n_states, n_actions, rng)) -
                                sw.value(random_policy(n_states, n_actions, rng))));
    }
    {
      const auto reward = RewardFunction::state_based(members.front());
      const Solution sol = policy_iteration(mdp, reward, gamma);
      const Eigen::MatrixXd q = q_from_v(mdp, reward, sol.values, gamma);
      bellman.record((q.rowwise().maxCoeff() - sol.values).cwiseAbs().maxCoeff());
    }
  }
  report.checks = {tradeoff.check, surrogate.check, assist.check, vavg.check, immediate.check, bellman.check};
  return report;
}

}  // namespace dspec
