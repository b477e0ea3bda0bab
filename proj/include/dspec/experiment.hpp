#pragma once

#include "dspec/assistance.hpp"
#include "dspec/aup.hpp"
#include "dspec/gridworld.hpp"
#include "dspec/io.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dspec {

enum class AgentMode { vanilla, aup, power_penalty };
std::string to_string(AgentMode mode);
AgentMode agent_mode_from_string(const std::string& name);

struct ExperimentConfig {
  EnvKind env = EnvKind::options;
  double gamma = 0.996;
  double lambda = 0.01;
  int n_aux = 20;
  int n_rand_samples = 1000;
  int correct_at = 10;
  int episode_len = 20;
  Seed seed = 0;
  std::vector<AgentMode> agent_modes{AgentMode::vanilla, AgentMode::aup, AgentMode::power_penalty};
  std::filesystem::path output_dir = "out";
  TrainMethod train_method = TrainMethod::exact;
  /// Map text overriding the bundled layout.
  std::optional<std::string> map;

  void validate() const;
};

/// Keys as in ExperimentConfig; "map" is a path to an ASCII map file, resolved
/// relative to `base_dir`. Unknown keys are rejected.
ExperimentConfig experiment_config_from_json(const Json& doc,
                                             const std::filesystem::path& base_dir = {});

struct ResidualRow {
  int sample_id = 0;
  double aup_score = 0.0;
  double vanilla_score = 0.0;
  double residual = 0.0;  // aup_score - vanilla_score
};

struct ResidualSummary {
  int n_samples = 0;
  int n_positive = 0;
  double fraction_positive = 0.0;
  double mean = 0.0;
  double median = 0.0;  // mean of the two middle values for even counts
};

ResidualSummary summarize(const std::vector<ResidualRow>& rows);

struct AgentOutcome {
  Policy policy;
  bool converged = true;
  std::vector<StateIndex> trajectory;  // s_0 .. s_episode_len
  std::optional<int> goal_step;        // first step on the goal
  bool side_effect = false;            // predicate true anywhere on the trajectory
  ScoreBreakdown d_true;
  ScoreBreakdown d_true_inv;
};

struct ResidualReport {
  ExperimentConfig config;
  int n_states = 0;
  std::vector<ResidualRow> rows;  // sorted by sample_id
  ResidualSummary summary;
  double d_true_advantage = 0.0;
  double d_true_inv_residual = 0.0;
  std::map<AgentMode, AgentOutcome> agents;
};

/// Deterministic in the config: trains every agent mode, then scores vanilla and AUP
/// on d_rand (one V* solve per sample, shared), d_true and d_true_inv.
ResidualReport run_experiment(const ExperimentConfig& config,
                              kernels::Execution exec = kernels::Execution::parallel);

/// Header sample_id,aup_score,vanilla_score,residual; 17 significant digits.
std::string residuals_csv(const std::vector<ResidualRow>& rows);
Json summary_json(const ResidualReport& report);
Json policies_json(const ResidualReport& report);
/// residuals.csv, summary.json, policies.json under config.output_dir.
void write_outputs(const ResidualReport& report);

/// Header sample_id,score,prefix_return_term,post_correction_term.
std::string score_csv(const std::vector<ScoreBreakdown>& scores);

// ---------------------------------------------------------------------------

/// Random MDP with Dirichlet(1)-like rows; `sparse` keeps 1-2 successors per row.
TabularMdp random_mdp(int n_states, int n_actions, Rng& rng, bool sparse = false);

struct IdentityCheck {
  std::string name;
  int cases = 0;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed() const { return max_error <= tolerance; }
};

struct VerificationReport {
  std::vector<IdentityCheck> checks;
  bool passed() const;
  std::string table() const;
};

/// Seeded random small games checked against every identity the solvers rely on.
/// n_cases = 0 yields an empty, passing report.
VerificationReport verify_theorems(Seed seed, int n_cases);

}  // namespace dspec
