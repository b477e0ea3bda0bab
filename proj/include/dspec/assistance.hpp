#pragma once

#include "dspec/kernels.hpp"
#include "dspec/mdp.hpp"
#include "dspec/reward_model.hpp"

#include <cstdint>
#include <optional>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

namespace dspec {

/// Distribution of the step at which the human reveals the reward.
class CorrectionTime {
 public:
  /// P(T = t) = 1.
  static CorrectionTime deterministic(int t);
  /// P(T = t) = (1 - p)^(t - 1) p for t >= 1, p in (0, 1).
  static CorrectionTime geometric(double p);

  bool is_geometric() const { return geometric_; }
  int step() const;  // deterministic only
  double p() const;  // geometric only
  double probability(int t) const;
  double mean() const;

  /// Last reveal step summed over. Deterministic: the step itself. Geometric: the
  /// smallest T with (1 - p)^T * bound <= tol, i.e. the dropped tail of any
  /// normalized quantity bounded by `bound` is at most `tol`.
  int horizon(double bound, double tol = 1e-12) const;

 private:
  CorrectionTime(bool geometric, int t, double p) : geometric_(geometric), t_(t), p_(p) {}
  bool geometric_;
  int t_;
  double p_;
};

/// Delayed-specification assistance game <MDP, D, T, gamma> started at mdp.initial_state().
struct DelayedSpecGame {
  TabularMdp mdp;
  RewardDistribution dist;
  CorrectionTime correction;
  double gamma;
  /// Inaction baseline; defaults to always taking the MDP's no-op action.
  std::optional<Policy> baseline;
  McOptions mc;

  void validate() const;
  Policy baseline_policy() const;
  StateIndex start() const { return mdp.initial_state(); }
};

/// Distribution over states after `steps` steps of `policy` from `start`.
Eigen::VectorXd state_distribution(const TabularMdp& mdp, const Policy& policy, int steps,
                                   StateIndex start);

/**
 * Expected normalized return of the switch policy: follow `prefix` until the
 * reveal at t ~ T, then act optimally for the revealed R ~ D.
 *
 *   (1 - gamma) E_{t,R}[ sum_{i<t} gamma^i E[R(s_i)] + gamma^t E[V*_R(s_t, gamma)] ]
 *
 * Every reward in the expectation support is solved once at construction;
 * value() is then cheap enough for exhaustive prefix enumeration.
 */
class SwitchEvaluator {
 public:
  explicit SwitchEvaluator(const DelayedSpecGame& game,
                           kernels::Execution exec = kernels::Execution::parallel);

  double value(const Policy& prefix) const;
  int horizon() const { return horizon_; }

 private:
  const DelayedSpecGame& game_;
  Eigen::MatrixXd rewards_;         // n_states x support
  Eigen::MatrixXd optimal_values_;  // n_states x support
  int horizon_;
};

double switch_value(const DelayedSpecGame& game, const Policy& prefix);

/// Average-reward and POWER terms of the switch value.
struct Tradeoff {
  double reward_term = 0.0;  // (1 - gamma) E_t[ sum_{i=0}^{t} gamma^i E[Rbar(s_i)] ]
  double power_term = 0.0;   // E_{t, s_t}[ gamma^(t+1) POWER(s_t, gamma) ]
  double total() const { return reward_term + power_term; }
};

/// Computed from mean_reward() and power_all_states(), independently of SwitchEvaluator.
class TradeoffEvaluator {
 public:
  explicit TradeoffEvaluator(const DelayedSpecGame& game,
                             kernels::Execution exec = kernels::Execution::parallel);
  Tradeoff value(const Policy& prefix) const;

  const Eigen::VectorXd& mean_reward() const { return mean_reward_; }
  const Eigen::VectorXd& power() const { return power_; }

 private:
  const DelayedSpecGame& game_;
  Eigen::VectorXd mean_reward_;
  Eigen::VectorXd power_;
  int horizon_;
};

Tradeoff tradeoff_decomposition(const DelayedSpecGame& game, const Policy& prefix);

/// R'(s) = (1 - p) Rbar(s) + p V_avg(s, gamma) with discount (1 - p) gamma.
struct Surrogate {
  RewardFunction reward;
  double gamma_aup;
};

/// Requires a geometric correction time.
Surrogate stationary_surrogate(const DelayedSpecGame& game);

/// Optimal prefix: policy iteration on the stationary surrogate.
Policy surrogate_optimal_prefix(const DelayedSpecGame& game);

/// Step-indexed baseline-relative reward
///   R(s | step) = Rbar(s) - p/(1-p) * ( E_{s0 ~ baseline at step}[V_avg(s0)] - V_avg(s) ).
RewardFunction assist_reward(const DelayedSpecGame& game, const Policy& baseline, int step);

/// Maximizes sum_i gamma_aup^i E[R(s_i | i)] by backward induction over the
/// step-indexed rewards (horizon chosen so the truncation error is below 1e-13)
/// and returns the first-step greedy rule.
Policy assist_optimal_prefix(const DelayedSpecGame& game, const Policy& baseline);

/// Visit weights of a prefix: sum_{i<c} gamma^i d_i and gamma^c d_c.
struct PrefixOccupancy {
  Eigen::VectorXd discounted_visits;
  Eigen::VectorXd terminal;
};

PrefixOccupancy prefix_occupancy(const TabularMdp& mdp, const Policy& prefix, double gamma,
                                 int correct_at, StateIndex start);

/// Unnormalized delayed specification score for one reward function.
struct ScoreBreakdown {
  double score = 0.0;
  double prefix_return = 0.0;    // sum_{i<c} gamma^i E[R(s_i)]
  double post_correction = 0.0;  // gamma^c E[V*_R(s_c, gamma)]
};

ScoreBreakdown score_member(const PrefixOccupancy& occupancy, const Eigen::VectorXd& reward,
                            const Eigen::VectorXd& optimal_values);

/// V* memo for one (MDP, gamma), keyed by the reward vector's hash with exact
/// equality on collision. Safe for concurrent readers and writers.
class OptimalValueCache {
 public:
  OptimalValueCache(const TabularMdp& mdp, double gamma) : mdp_(mdp), gamma_(gamma) {}
  Eigen::VectorXd get(const Eigen::VectorXd& reward);
  std::size_t size() const;

 private:
  struct Entry {
    Eigen::VectorXd reward;
    Eigen::VectorXd values;
  };
  const TabularMdp& mdp_;
  double gamma_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::uint64_t, std::vector<Entry>> entries_;
};

/// Per-member scores over the expectation support of `dist`.
std::vector<ScoreBreakdown> delayed_spec_scores(const TabularMdp& mdp, const Policy& prefix,
                                                const RewardDistribution& dist, double gamma,
                                                int correct_at = 10, const McOptions& mc = {},
                                                OptimalValueCache* cache = nullptr);

/// Mean of delayed_spec_scores().
ScoreBreakdown delayed_spec_score(const TabularMdp& mdp, const Policy& prefix,
                                  const RewardDistribution& dist, double gamma,
                                  int correct_at = 10, const McOptions& mc = {},
                                  OptimalValueCache* cache = nullptr);

/// {"mdp", "distribution", "correction": {"variant": "deterministic", "t"} |
///  {"variant": "geometric", "p"}, "gamma", optional "baseline", "mc_samples", "seed"}.
DelayedSpecGame game_from_json(const Json& doc);
Json correction_to_json(const CorrectionTime& correction);

}  // namespace dspec
