#pragma once

#include "dspec/io.hpp"
#include "dspec/kernels.hpp"
#include "dspec/mdp.hpp"
#include "dspec/rng.hpp"

#include <vector>

namespace dspec {

struct AupConfig {
  double lambda = 0.01;
  int n_aux = 20;
  ActionIndex noop_action = 4;
  double gamma = 0.996;
  double learning_rate = 1.0;
  Seed seed = 0;

  void validate(const TabularMdp& mdp) const;
};

/// Auxiliary rewards R_i and their optimal Q-functions at config.gamma.
struct AuxiliarySet {
  std::vector<Eigen::VectorXd> rewards;
  std::vector<Eigen::MatrixXd> q_stars;
};

/// n_aux rewards drawn iid U(0, 1) per state; auxiliary i uses derive_seed(config.seed, i).
AuxiliarySet sample_auxiliary_set(const TabularMdp& mdp, const AupConfig& config,
                                  kernels::Execution exec = kernels::Execution::parallel);

AuxiliarySet auxiliary_set_from_rewards(const TabularMdp& mdp, std::vector<Eigen::VectorXd> rewards,
                                        double gamma,
                                        kernels::Execution exec = kernels::Execution::parallel);

/// (lambda / |R|) sum_i |Q_i(s, a) - Q_i(s, noop)|.
double aup_penalty(const AuxiliarySet& aux, const AupConfig& config, StateIndex s, ActionIndex a);

/// R_env(s, a) - aup_penalty(s, a).
double aup_reward(const RewardFunction& r_env, const AuxiliarySet& aux, const AupConfig& config,
                  StateIndex s, ActionIndex a);

/// Same as aup_reward without the absolute value; value-decreasing actions earn a bonus.
double power_penalty_reward(const RewardFunction& r_env, const AuxiliarySet& aux,
                            const AupConfig& config, StateIndex s, ActionIndex a);

/// Full (state, action) tables of the two rewards above.
RewardFunction aup_reward_table(const TabularMdp& mdp, const RewardFunction& r_env,
                                const AuxiliarySet& aux, const AupConfig& config);
RewardFunction power_penalty_reward_table(const TabularMdp& mdp, const RewardFunction& r_env,
                                          const AuxiliarySet& aux, const AupConfig& config);

enum class TrainMethod { exact, q_learning };

struct QLearningOptions {
  int max_episodes = 100'000;
  int episode_len = 20;
  /// Training stops once the greedy policy is unchanged for this many episodes.
  int stable_episodes = 500;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
};

struct TrainResult {
  Policy policy;
  bool converged = true;
  int episodes = 0;
};

/// Exact: policy iteration on the reward table at config.gamma.
/// Q-learning: episodes from the initial state, epsilon decaying linearly from
/// epsilon_start to epsilon_end over the first half of max_episodes. A run that
/// hits the cap returns its last greedy policy with converged = false.
TrainResult train_agent(const TabularMdp& mdp, const RewardFunction& reward, const AupConfig& config,
                        TrainMethod method = TrainMethod::exact, const QLearningOptions& options = {});

TrainMethod train_method_from_string(const std::string& name);

}  // namespace dspec
