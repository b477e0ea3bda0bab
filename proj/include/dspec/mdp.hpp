#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dspec {

using StateIndex = int;
using ActionIndex = int;

struct MdpLabels {
  std::vector<std::string> states;
  std::vector<std::string> actions;
};

/// One entry of a sparse transition row: T(s, a, state) = prob.
struct Successor {
  StateIndex state;
  double prob;
};

/**
 * Finite rewardless MDP with stochastic transitions.
 *
 * Rows are stored sparsely (CSR over (state, action) pairs); the dense
 * constructor drops exact zeros. Every row is validated on construction:
 * nonnegative entries that sum to 1 within 1e-12.
 */
class TabularMdp {
 public:
  /// Dense tensor in (state, action, next_state) row-major order.
  TabularMdp(int n_states, int n_actions, std::span<const double> dense_transition,
             StateIndex initial_state, MdpLabels labels = {},
             std::optional<ActionIndex> noop_action = std::nullopt);

  /// Sparse rows indexed by state * n_actions + action.
  static TabularMdp from_rows(int n_states, int n_actions,
                              const std::vector<std::vector<Successor>>& rows,
                              StateIndex initial_state, MdpLabels labels = {},
                              std::optional<ActionIndex> noop_action = std::nullopt);

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  StateIndex initial_state() const { return initial_state_; }
  std::optional<ActionIndex> noop_action() const { return noop_action_; }
  const MdpLabels& labels() const { return labels_; }

  std::span<const Successor> successors(StateIndex s, ActionIndex a) const {
    const auto row = static_cast<std::size_t>(s) * n_actions_ + a;
    return {entries_.data() + offsets_[row], entries_.data() + offsets_[row + 1]};
  }

  double probability(StateIndex s, ActionIndex a, StateIndex next) const;

  /// Expectation of `values` over T(s, a, .).
  double expected_next(StateIndex s, ActionIndex a, const Eigen::VectorXd& values) const {
    double acc = 0.0;
    for (const auto& [next, p] : successors(s, a)) acc += p * values[next];
    return acc;
  }

  bool is_deterministic() const;
  bool valid_state(StateIndex s) const { return s >= 0 && s < n_states_; }
  bool valid_action(ActionIndex a) const { return a >= 0 && a < n_actions_; }

  /// Dense (state, action, next_state) tensor, row-major.
  std::vector<double> dense_transition() const;

 private:
  TabularMdp() = default;
  void validate() const;

  int n_states_ = 0;
  int n_actions_ = 0;
  StateIndex initial_state_ = 0;
  std::optional<ActionIndex> noop_action_;
  MdpLabels labels_;
  std::vector<std::size_t> offsets_;
  std::vector<Successor> entries_;
};

/// R_theta over states, or R(s, a) over state-action pairs.
class RewardFunction {
 public:
  enum class Kind { state, state_action };

  static RewardFunction state_based(Eigen::VectorXd values);
  static RewardFunction state_action(Eigen::MatrixXd values);

  Kind kind() const { return kind_; }
  bool is_state_based() const { return kind_ == Kind::state; }
  int n_states() const { return static_cast<int>(values_.rows()); }

  /// Reward for taking `a` in `s`; state-based rewards ignore `a`.
  double operator()(StateIndex s, ActionIndex a) const {
    return kind_ == Kind::state ? values_(s, 0) : values_(s, a);
  }

  /// Requires kind() == state.
  Eigen::VectorXd state_values() const;
  /// (n_states x n_actions) table; state-based rewards are broadcast.
  Eigen::MatrixXd table(int n_actions) const;

  double max_abs() const { return values_.size() == 0 ? 0.0 : values_.cwiseAbs().maxCoeff(); }
  void check_compatible(const TabularMdp& mdp) const;

 private:
  RewardFunction(Kind kind, Eigen::MatrixXd values);
  Kind kind_;
  Eigen::MatrixXd values_;
};

class Policy {
 public:
  static Policy deterministic(std::vector<ActionIndex> actions);
  /// Rows are action distributions and must sum to 1 within 1e-12.
  static Policy stochastic(Eigen::MatrixXd probabilities);
  /// Always take `action`.
  static Policy constant(int n_states, ActionIndex action);

  bool is_deterministic() const { return !probabilities_.has_value(); }
  int n_states() const;
  ActionIndex action(StateIndex s) const;  // deterministic only
  const std::vector<ActionIndex>& actions() const;
  double probability(StateIndex s, ActionIndex a) const;
  const Eigen::MatrixXd& probabilities() const;  // stochastic only

  void check_compatible(const TabularMdp& mdp) const;

  bool operator==(const Policy& other) const;

 private:
  Policy() = default;
  std::vector<ActionIndex> actions_;
  std::optional<Eigen::MatrixXd> probabilities_;
};

/// Dense P^pi(s, s').
Eigen::MatrixXd transition_matrix(const TabularMdp& mdp, const Policy& policy);

/// Expected one-step reward under the policy at each state.
Eigen::VectorXd policy_reward(const TabularMdp& mdp, const RewardFunction& reward,
                              const Policy& policy);

/// Exact on-policy value V^pi by LU solve of (I - gamma P^pi) V = r^pi.
Eigen::VectorXd policy_evaluation(const TabularMdp& mdp, const RewardFunction& reward,
                                  const Policy& policy, double gamma);

struct Solution {
  Policy policy;
  Eigen::VectorXd values;
  int iterations = 0;
};

/// Howard policy iteration with exact evaluation. Ties go to the lowest action index.
Solution policy_iteration(const TabularMdp& mdp, const RewardFunction& reward, double gamma);

/// Q(s, a) = R(s, a) + gamma * sum_s' T(s, a, s') V(s').
Eigen::MatrixXd q_from_v(const TabularMdp& mdp, const RewardFunction& reward,
                         const Eigen::VectorXd& values, double gamma);

/// Lowest-index argmax per row; entries within `tol` of the row max count as ties.
Policy greedy_policy(const Eigen::MatrixXd& q, double tol);

/// Tie tolerance used by the solvers for values of magnitude `scale`.
double tie_tolerance(double scale);

/// Discount used in place of gamma = 1 for quantities defined as gamma -> 1 limits.
inline constexpr double kUpperLimitGamma = 1.0 - 1e-6;
/// Discount used in place of gamma = 0 where the definition divides by gamma.
inline constexpr double kLowerLimitGamma = 1e-6;

/// (1 - gamma) V*(s, gamma); gamma = 1 is evaluated at kUpperLimitGamma.
///
/// The endpoint approximation error is at most (1 - kUpperLimitGamma) times
/// the mixing constant of the optimal chain times max|R|; for the small
/// MDPs used here it stays below 1e-5 * max|R|.
double normalized_optimal_value(const TabularMdp& mdp, const RewardFunction& reward,
                                StateIndex state, double gamma);

}  // namespace dspec
