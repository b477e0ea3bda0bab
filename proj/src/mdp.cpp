#include "dspec/mdp.hpp"

#include "dspec/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dspec {

namespace {

constexpr double kRowSumTol = 1e-12;

std::string row_name(StateIndex s, ActionIndex a) {
  std::ostringstream os;
  os << "(s=" << s << ", a=" << a << ")";
  return os.str();
}

}  // namespace

TabularMdp::TabularMdp(int n_states, int n_actions, std::span<const double> dense_transition,
                       StateIndex initial_state, MdpLabels labels,
                       std::optional<ActionIndex> noop_action)
    : n_states_(n_states),
      n_actions_(n_actions),
      initial_state_(initial_state),
      noop_action_(noop_action),
      labels_(std::move(labels)) {
  require(n_states >= 1, "MDP needs at least one state");
  require(n_actions >= 1, "MDP needs at least one action");
  const auto expected = static_cast<std::size_t>(n_states) * n_actions * n_states;
  require(dense_transition.size() == expected, "transition tensor has wrong size");

  offsets_.reserve(static_cast<std::size_t>(n_states) * n_actions + 1);
  offsets_.push_back(0);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      const auto base = (static_cast<std::size_t>(s) * n_actions + a) * n_states;
      for (int next = 0; next < n_states; ++next) {
        const double p = dense_transition[base + next];
        if (p != 0.0) entries_.push_back({next, p});
      }
      offsets_.push_back(entries_.size());
    }
  }
  validate();
}

TabularMdp TabularMdp::from_rows(int n_states, int n_actions,
                                 const std::vector<std::vector<Successor>>& rows,
                                 StateIndex initial_state, MdpLabels labels,
                                 std::optional<ActionIndex> noop_action) {
  require(n_states >= 1, "MDP needs at least one state");
  require(n_actions >= 1, "MDP needs at least one action");
  require(rows.size() == static_cast<std::size_t>(n_states) * n_actions,
          "expected one transition row per (state, action)");
  TabularMdp mdp;
  mdp.n_states_ = n_states;
  mdp.n_actions_ = n_actions;
  mdp.initial_state_ = initial_state;
  mdp.noop_action_ = noop_action;
  mdp.labels_ = std::move(labels);
  mdp.offsets_.reserve(rows.size() + 1);
  mdp.offsets_.push_back(0);
  for (const auto& row : rows) {
    std::vector<Successor> sorted = row;
    std::sort(sorted.begin(), sorted.end(),
              [](const Successor& x, const Successor& y) { return x.state < y.state; });
    for (const auto& entry : sorted) {
      if (!mdp.entries_.empty() && mdp.entries_.size() > mdp.offsets_.back() &&
          mdp.entries_.back().state == entry.state) {
        mdp.entries_.back().prob += entry.prob;
      } else if (entry.prob != 0.0) {
        mdp.entries_.push_back(entry);
      }
    }
    mdp.offsets_.push_back(mdp.entries_.size());
  }
  mdp.validate();
  return mdp;
}

void TabularMdp::validate() const {
  require(valid_state(initial_state_), "initial_state out of range");
  if (noop_action_) require(valid_action(*noop_action_), "noop_action out of range");
  if (!labels_.states.empty())
    require(labels_.states.size() == static_cast<std::size_t>(n_states_),
            "state labels must match n_states");
  if (!labels_.actions.empty())
    require(labels_.actions.size() == static_cast<std::size_t>(n_actions_),
            "action labels must match n_actions");
  for (int s = 0; s < n_states_; ++s) {
    for (int a = 0; a < n_actions_; ++a) {
      double total = 0.0;
      for (const auto& [next, p] : successors(s, a)) {
        require(valid_state(next), "successor state out of range in row " + row_name(s, a));
        require(std::isfinite(p) && p >= 0.0,
                "negative or non-finite transition probability in row " + row_name(s, a));
        total += p;
      }
      require(std::abs(total - 1.0) <= kRowSumTol,
              "transition row " + row_name(s, a) + " does not sum to 1");
    }
  }
}

double TabularMdp::probability(StateIndex s, ActionIndex a, StateIndex next) const {
  for (const auto& entry : successors(s, a))
    if (entry.state == next) return entry.prob;
  return 0.0;
}

bool TabularMdp::is_deterministic() const {
  for (std::size_t row = 0; row + 1 < offsets_.size(); ++row) {
    if (offsets_[row + 1] - offsets_[row] != 1) return false;
  }
  return true;
}

std::vector<double> TabularMdp::dense_transition() const {
  std::vector<double> dense(static_cast<std::size_t>(n_states_) * n_actions_ * n_states_, 0.0);
  for (int s = 0; s < n_states_; ++s)
    for (int a = 0; a < n_actions_; ++a)
      for (const auto& [next, p] : successors(s, a))
        dense[(static_cast<std::size_t>(s) * n_actions_ + a) * n_states_ + next] = p;
  return dense;
}

// ---------------------------------------------------------------------------

RewardFunction::RewardFunction(Kind kind, Eigen::MatrixXd values)
    : kind_(kind), values_(std::move(values)) {
  require(values_.rows() >= 1, "reward function needs at least one state");
  require(values_.allFinite(), "reward values must be finite");
}

RewardFunction RewardFunction::state_based(Eigen::VectorXd values) {
  return RewardFunction(Kind::state, Eigen::MatrixXd(std::move(values)));
}

RewardFunction RewardFunction::state_action(Eigen::MatrixXd values) {
  return RewardFunction(Kind::state_action, std::move(values));
}

Eigen::VectorXd RewardFunction::state_values() const {
  require(kind_ == Kind::state, "state-based reward required");
  return values_.col(0);
}

Eigen::MatrixXd RewardFunction::table(int n_actions) const {
  if (kind_ == Kind::state_action) return values_;
  return values_.col(0).replicate(1, n_actions);
}

void RewardFunction::check_compatible(const TabularMdp& mdp) const {
  require(n_states() == mdp.n_states(), "reward length does not match n_states");
  if (kind_ == Kind::state_action)
    require(values_.cols() == mdp.n_actions(), "reward columns do not match n_actions");
}

// ---------------------------------------------------------------------------

Policy Policy::deterministic(std::vector<ActionIndex> actions) {
  require(!actions.empty(), "policy needs at least one state");
  Policy policy;
  policy.actions_ = std::move(actions);
  return policy;
}

Policy Policy::stochastic(Eigen::MatrixXd probabilities) {
  require(probabilities.rows() >= 1 && probabilities.cols() >= 1, "empty stochastic policy");
  for (Eigen::Index s = 0; s < probabilities.rows(); ++s) {
    require((probabilities.row(s).array() >= 0.0).all(), "negative action probability");
    require(std::abs(probabilities.row(s).sum() - 1.0) <= kRowSumTol,
            "policy row does not sum to 1");
  }
  Policy policy;
  policy.probabilities_ = std::move(probabilities);
  return policy;
}

Policy Policy::constant(int n_states, ActionIndex action) {
  return deterministic(std::vector<ActionIndex>(static_cast<std::size_t>(n_states), action));
}

int Policy::n_states() const {
  return probabilities_ ? static_cast<int>(probabilities_->rows())
                        : static_cast<int>(actions_.size());
}

ActionIndex Policy::action(StateIndex s) const {
  require(is_deterministic(), "action() requires a deterministic policy");
  return actions_[static_cast<std::size_t>(s)];
}

const std::vector<ActionIndex>& Policy::actions() const {
  require(is_deterministic(), "actions() requires a deterministic policy");
  return actions_;
}

double Policy::probability(StateIndex s, ActionIndex a) const {
  if (probabilities_) return (*probabilities_)(s, a);
  return actions_[static_cast<std::size_t>(s)] == a ? 1.0 : 0.0;
}

const Eigen::MatrixXd& Policy::probabilities() const {
  require(!is_deterministic(), "probabilities() requires a stochastic policy");
  return *probabilities_;
}

void Policy::check_compatible(const TabularMdp& mdp) const {
  require(n_states() == mdp.n_states(), "policy length does not match n_states");
  if (probabilities_) {
    require(probabilities_->cols() == mdp.n_actions(), "policy columns do not match n_actions");
  } else {
    for (ActionIndex a : actions_) require(mdp.valid_action(a), "policy action out of range");
  }
}

bool Policy::operator==(const Policy& other) const {
  if (is_deterministic() != other.is_deterministic()) return false;
  if (is_deterministic()) return actions_ == other.actions_;
  return *probabilities_ == *other.probabilities_;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd transition_matrix(const TabularMdp& mdp, const Policy& policy) {
  policy.check_compatible(mdp);
  const int n = mdp.n_states();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < n; ++s) {
    if (policy.is_deterministic()) {
      for (const auto& [next, prob] : mdp.successors(s, policy.action(s))) p(s, next) += prob;
      continue;
    }
    for (int a = 0; a < mdp.n_actions(); ++a) {
      const double w = policy.probability(s, a);
      if (w == 0.0) continue;
      for (const auto& [next, prob] : mdp.successors(s, a)) p(s, next) += w * prob;
    }
  }
  return p;
}

Eigen::VectorXd policy_reward(const TabularMdp& mdp, const RewardFunction& reward,
                              const Policy& policy) {
  reward.check_compatible(mdp);
  policy.check_compatible(mdp);
  const int n = mdp.n_states();
  Eigen::VectorXd r(n);
  for (int s = 0; s < n; ++s) {
    if (reward.is_state_based()) {
      r[s] = reward(s, 0);
    } else if (policy.is_deterministic()) {
      r[s] = reward(s, policy.action(s));
    } else {
      double acc = 0.0;
      for (int a = 0; a < mdp.n_actions(); ++a) acc += policy.probability(s, a) * reward(s, a);
      r[s] = acc;
    }
  }
  return r;
}

Eigen::VectorXd policy_evaluation(const TabularMdp& mdp, const RewardFunction& reward,
                                  const Policy& policy, double gamma) {
  require(gamma >= 0.0 && gamma < 1.0, "policy evaluation requires gamma in [0, 1)");
  const Eigen::VectorXd r = policy_reward(mdp, reward, policy);
  const int n = mdp.n_states();
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - gamma * transition_matrix(mdp, policy);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  Eigen::VectorXd v = lu.solve(r);
  if (!v.allFinite()) throw InternalError("policy evaluation produced non-finite values");
  const double residual = (system * v - r).lpNorm<Eigen::Infinity>();
  if (residual > 1e-10 * (1.0 + v.lpNorm<Eigen::Infinity>()))
    throw InternalError("policy evaluation residual too large");
  return v;
}

double tie_tolerance(double scale) { return 1e-11 * std::max(1.0, scale); }

Eigen::MatrixXd q_from_v(const TabularMdp& mdp, const RewardFunction& reward,
                         const Eigen::VectorXd& values, double gamma) {
  reward.check_compatible(mdp);
  require(values.size() == mdp.n_states(), "value vector length does not match n_states");
  Eigen::MatrixXd q(mdp.n_states(), mdp.n_actions());
  for (int s = 0; s < mdp.n_states(); ++s)
    for (int a = 0; a < mdp.n_actions(); ++a)
      q(s, a) = reward(s, a) + gamma * mdp.expected_next(s, a, values);
  return q;
}

Policy greedy_policy(const Eigen::MatrixXd& q, double tol) {
  std::vector<ActionIndex> actions(static_cast<std::size_t>(q.rows()), 0);
  for (Eigen::Index s = 0; s < q.rows(); ++s) {
    const double best = q.row(s).maxCoeff();
    for (Eigen::Index a = 0; a < q.cols(); ++a) {
      if (q(s, a) >= best - tol) {
        actions[static_cast<std::size_t>(s)] = static_cast<ActionIndex>(a);
        break;
      }
    }
  }
  return Policy::deterministic(std::move(actions));
}

Solution policy_iteration(const TabularMdp& mdp, const RewardFunction& reward, double gamma) {
  require(gamma >= 0.0 && gamma < 1.0, "policy iteration requires gamma in [0, 1)");
  reward.check_compatible(mdp);
  const int max_sweeps = mdp.n_states() * mdp.n_actions() + 64;

  std::vector<ActionIndex> actions(static_cast<std::size_t>(mdp.n_states()), 0);
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    const Policy current = Policy::deterministic(actions);
    Eigen::VectorXd v = policy_evaluation(mdp, reward, current, gamma);
    const Eigen::MatrixXd q = q_from_v(mdp, reward, v, gamma);
    const double tol = tie_tolerance(q.cwiseAbs().maxCoeff());

    bool changed = false;
    for (int s = 0; s < mdp.n_states(); ++s) {
      auto& chosen = actions[static_cast<std::size_t>(s)];
      double best = q(s, chosen);
      for (int a = 0; a < mdp.n_actions(); ++a) {
        if (q(s, a) > best + tol) {
          best = q(s, a);
          chosen = a;
          changed = true;
        }
      }
    }
    if (changed) continue;

    Policy canonical = greedy_policy(q, tol);
    if (!(canonical == current)) v = policy_evaluation(mdp, reward, canonical, gamma);
    return {std::move(canonical), std::move(v), sweep};
  }
  throw InternalError("policy iteration did not converge");
}

double normalized_optimal_value(const TabularMdp& mdp, const RewardFunction& reward,
                                StateIndex state, double gamma) {
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
  require(mdp.valid_state(state), "state out of range");
  const double g = gamma >= 1.0 ? kUpperLimitGamma : gamma;
  const Solution solution = policy_iteration(mdp, reward, g);
  return (1.0 - g) * solution.values[state];
}

}  // namespace dspec
