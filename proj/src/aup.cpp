#include "dspec/aup.hpp"

#include "dspec/error.hpp"

#include <cmath>

namespace dspec {

void AupConfig::validate(const TabularMdp& mdp) const {
  require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be nonnegative");
  require(n_aux >= 1, "n_aux must be at least 1");
  require(mdp.valid_action(noop_action), "noop_action out of range");
  require(gamma > 0.0 && gamma < 1.0, "AUP discount must lie in (0, 1)");
  require(learning_rate > 0.0 && learning_rate <= 1.0, "learning rate must lie in (0, 1]");
}

AuxiliarySet auxiliary_set_from_rewards(const TabularMdp& mdp, std::vector<Eigen::VectorXd> rewards,
                                        double gamma, kernels::Execution exec) {
  const auto values = kernels::optimal_values(mdp, rewards, gamma, exec);
  AuxiliarySet aux;
  aux.q_stars.resize(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i)
    aux.q_stars[i] = q_from_v(mdp, RewardFunction::state_based(rewards[i]), values[i], gamma);
  aux.rewards = std::move(rewards);
  return aux;
}

AuxiliarySet sample_auxiliary_set(const TabularMdp& mdp, const AupConfig& config,
                                  kernels::Execution exec) {
  config.validate(mdp);
  std::vector<Eigen::VectorXd> rewards(static_cast<std::size_t>(config.n_aux));
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    Rng rng(derive_seed(config.seed, i));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    rewards[i].resize(mdp.n_states());
    for (int s = 0; s < mdp.n_states(); ++s) rewards[i][s] = u(rng);
  }
  return auxiliary_set_from_rewards(mdp, std::move(rewards), config.gamma, exec);
}

namespace {

template <bool Absolute>
double penalty(const AuxiliarySet& aux, const AupConfig& config, StateIndex s, ActionIndex a) {
  require(!aux.q_stars.empty(), "auxiliary set is empty");
  double total = 0.0;
  for (const auto& q : aux.q_stars) {
    const double diff = q(s, a) - q(s, config.noop_action);
    total += Absolute ? std::abs(diff) : diff;
  }
  return config.lambda / static_cast<double>(aux.q_stars.size()) * total;
}

template <bool Absolute>
RewardFunction table(const TabularMdp& mdp, const RewardFunction& r_env, const AuxiliarySet& aux,
                     const AupConfig& config) {
  config.validate(mdp);
  r_env.check_compatible(mdp);
  Eigen::MatrixXd out(mdp.n_states(), mdp.n_actions());
  for (int s = 0; s < mdp.n_states(); ++s)
    for (int a = 0; a < mdp.n_actions(); ++a)
      out(s, a) = r_env(s, a) - penalty<Absolute>(aux, config, s, a);
  return RewardFunction::state_action(std::move(out));
}

}  // namespace

double aup_penalty(const AuxiliarySet& aux, const AupConfig& config, StateIndex s, ActionIndex a) {
  return penalty<true>(aux, config, s, a);
}

double aup_reward(const RewardFunction& r_env, const AuxiliarySet& aux, const AupConfig& config,
                  StateIndex s, ActionIndex a) {
  return r_env(s, a) - penalty<true>(aux, config, s, a);
}

double power_penalty_reward(const RewardFunction& r_env, const AuxiliarySet& aux,
                            const AupConfig& config, StateIndex s, ActionIndex a) {
  return r_env(s, a) - penalty<false>(aux, config, s, a);
}

RewardFunction aup_reward_table(const TabularMdp& mdp, const RewardFunction& r_env,
                                const AuxiliarySet& aux, const AupConfig& config) {
  return table<true>(mdp, r_env, aux, config);
}

RewardFunction power_penalty_reward_table(const TabularMdp& mdp, const RewardFunction& r_env,
                                          const AuxiliarySet& aux, const AupConfig& config) {
  return table<false>(mdp, r_env, aux, config);
}

namespace {

TrainResult q_learning(const TabularMdp& mdp, const RewardFunction& reward, const AupConfig& config,
                       const QLearningOptions& options) {
  require(options.max_episodes >= 1 && options.episode_len >= 1 && options.stable_episodes >= 1,
          "q-learning options must be positive");
  const double alpha = config.learning_rate;
  const double gamma = config.gamma;
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(mdp.n_states(), mdp.n_actions());
  Rng rng(derive_stream(config.seed, "q-learning"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> any_action(0, mdp.n_actions() - 1);

  auto greedy = [&] { return greedy_policy(q, tie_tolerance(q.cwiseAbs().maxCoeff())); };
  auto sample_next = [&](StateIndex s, ActionIndex a) {
    const auto successors = mdp.successors(s, a);
    if (successors.size() == 1) return successors.front().state;
    double u = unit(rng);
    for (const auto& [next, p] : successors) {
      if (u < p) return next;
      u -= p;
    }
    return successors.back().state;
  };

  const double decay_episodes = std::max(1.0, options.max_episodes / 2.0);
  Policy last = greedy();
  int stable = 0;
  for (int episode = 1; episode <= options.max_episodes; ++episode) {
    const double frac = std::min(1.0, (episode - 1) / decay_episodes);
    const double epsilon = options.epsilon_start + frac * (options.epsilon_end - options.epsilon_start);
    StateIndex s = mdp.initial_state();
    for (int step = 0; step < options.episode_len; ++step) {
      ActionIndex a;
      if (unit(rng) < epsilon) {
        a = any_action(rng);
      } else {
        Eigen::Index best;
        q.row(s).maxCoeff(&best);
        a = static_cast<ActionIndex>(best);
      }
      const StateIndex next = sample_next(s, a);
      const double target = reward(s, a) + gamma * q.row(next).maxCoeff();
      q(s, a) += alpha * (target - q(s, a));
      s = next;
    }
    Policy current = greedy();
    if (current == last) {
      if (++stable >= options.stable_episodes) return {std::move(current), true, episode};
    } else {
      stable = 0;
      last = std::move(current);
    }
  }
  return {std::move(last), false, options.max_episodes};
}

}  // namespace

TrainResult train_agent(const TabularMdp& mdp, const RewardFunction& reward, const AupConfig& config,
                        TrainMethod method, const QLearningOptions& options) {
  config.validate(mdp);
  reward.check_compatible(mdp);
  if (method == TrainMethod::exact) return {policy_iteration(mdp, reward, config.gamma).policy, true, 0};
  return q_learning(mdp, reward, config, options);
}

TrainMethod train_method_from_string(const std::string& name) {
  if (name == "exact") return TrainMethod::exact;
  if (name == "q-learning") return TrainMethod::q_learning;
  throw ValidationError("unknown training method \"" + name + "\" (expected exact or q-learning)");
}

}  // namespace dspec
