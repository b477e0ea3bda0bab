#include "dspec/assistance.hpp"

#include "dspec/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>

namespace dspec {

namespace {

Eigen::MatrixXd stack_columns(const std::vector<Eigen::VectorXd>& columns) {
  Eigen::MatrixXd m(columns.front().size(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = columns[k];
  return m;
}

Eigen::RowVectorXd indicator(int n, StateIndex s) {
  Eigen::RowVectorXd d = Eigen::RowVectorXd::Zero(n);
  d[s] = 1.0;
  return d;
}

const CorrectionTime& require_geometric(const DelayedSpecGame& game) {
  require(game.correction.is_geometric(), "this construction requires a geometric correction time");
  return game.correction;
}

}  // namespace

// ---------------------------------------------------------------------------

CorrectionTime CorrectionTime::deterministic(int t) {
  require(t >= 0, "deterministic correction step must be nonnegative");
  return {false, t, 0.0};
}

CorrectionTime CorrectionTime::geometric(double p) {
  require(p > 0.0 && p < 1.0, "geometric correction requires p in (0, 1)");
  return {true, 0, p};
}

int CorrectionTime::step() const {
  require(!geometric_, "step() requires a deterministic correction time");
  return t_;
}

double CorrectionTime::p() const {
  require(geometric_, "p() requires a geometric correction time");
  return p_;
}

double CorrectionTime::probability(int t) const {
  if (!geometric_) return t == t_ ? 1.0 : 0.0;
  if (t < 1) return 0.0;
  return std::pow(1.0 - p_, t - 1) * p_;
}

double CorrectionTime::mean() const { return geometric_ ? 1.0 / p_ : static_cast<double>(t_); }

int CorrectionTime::horizon(double bound, double tol) const {
  if (!geometric_) return t_;
  if (bound <= tol) return 1;
  const double steps = std::log(tol / bound) / std::log(1.0 - p_);
  return std::max(1, static_cast<int>(std::ceil(steps)));
}

// ---------------------------------------------------------------------------

void DelayedSpecGame::validate() const {
  require(gamma > 0.0 && gamma < 1.0, "game discount must lie in (0, 1)");
  dist.check_compatible(mdp);
  if (baseline) baseline->check_compatible(mdp);
}

Policy DelayedSpecGame::baseline_policy() const {
  if (baseline) return *baseline;
  require(mdp.noop_action().has_value(),
          "no baseline policy given and the MDP has no designated no-op action");
  return Policy::constant(mdp.n_states(), *mdp.noop_action());
}

Eigen::VectorXd state_distribution(const TabularMdp& mdp, const Policy& policy, int steps,
                                   StateIndex start) {
  require(steps >= 0, "steps must be nonnegative");
  require(mdp.valid_state(start), "start state out of range");
  const Eigen::MatrixXd p = transition_matrix(mdp, policy);
  Eigen::RowVectorXd d = indicator(mdp.n_states(), start);
  for (int i = 0; i < steps; ++i) d = d * p;
  return d.transpose();
}

// ---------------------------------------------------------------------------

SwitchEvaluator::SwitchEvaluator(const DelayedSpecGame& game, kernels::Execution exec)
    : game_(game) {
  game.validate();
  const auto support = expectation_support(game.dist, game.mdp.n_states(), game.mc);
  rewards_ = stack_columns(support);
  optimal_values_ = stack_columns(kernels::optimal_values(game.mdp, support, game.gamma, exec));
  horizon_ = game.correction.horizon(game.dist.support_bound());
}

double SwitchEvaluator::value(const Policy& prefix) const {
  const auto& mdp = game_.mdp;
  const double gamma = game_.gamma;
  const Eigen::MatrixXd p = transition_matrix(mdp, prefix);
  Eigen::RowVectorXd d = indicator(mdp.n_states(), game_.start());

  // Per-member running sums; averaged over the support at the end.
  Eigen::RowVectorXd prefix_return = Eigen::RowVectorXd::Zero(rewards_.cols());
  Eigen::RowVectorXd total = Eigen::RowVectorXd::Zero(rewards_.cols());
  double discount = 1.0;  // gamma^t
  for (int t = 0;; ++t) {
    const double weight = game_.correction.probability(t);
    if (weight > 0.0) total += weight * (prefix_return + discount * (d * optimal_values_));
    if (t >= horizon_) break;
    prefix_return += discount * (d * rewards_);
    d = d * p;
    discount *= gamma;
  }
  return (1.0 - gamma) * total.mean();
}

double switch_value(const DelayedSpecGame& game, const Policy& prefix) {
  return SwitchEvaluator(game).value(prefix);
}

// ---------------------------------------------------------------------------

TradeoffEvaluator::TradeoffEvaluator(const DelayedSpecGame& game, kernels::Execution exec)
    : game_(game) {
  game.validate();
  mean_reward_ = dspec::mean_reward(game.dist, game.mdp.n_states());
  power_ = power_all_states(game.dist, game.mdp, game.gamma, game.mc, exec).value;
  horizon_ = game.correction.horizon(game.dist.support_bound());
}

Tradeoff TradeoffEvaluator::value(const Policy& prefix) const {
  const auto& mdp = game_.mdp;
  const double gamma = game_.gamma;
  const Eigen::MatrixXd p = transition_matrix(mdp, prefix);
  Eigen::RowVectorXd d = indicator(mdp.n_states(), game_.start());

  Tradeoff out;
  double running = 0.0;  // sum_{i<=t} gamma^i E[Rbar(s_i)]
  double discount = 1.0;
  for (int t = 0;; ++t) {
    running += discount * d.dot(mean_reward_);
    const double weight = game_.correction.probability(t);
    if (weight > 0.0) {
      out.reward_term += weight * running;
      out.power_term += weight * discount * gamma * d.dot(power_);
    }
    if (t >= horizon_) break;
    d = d * p;
    discount *= gamma;
  }
  out.reward_term *= 1.0 - gamma;
  return out;
}

Tradeoff tradeoff_decomposition(const DelayedSpecGame& game, const Policy& prefix) {
  return TradeoffEvaluator(game).value(prefix);
}

// ---------------------------------------------------------------------------

Surrogate stationary_surrogate(const DelayedSpecGame& game) {
  game.validate();
  const double p = require_geometric(game).p();
  const Eigen::VectorXd rbar = mean_reward(game.dist, game.mdp.n_states());
  const Eigen::VectorXd vavg = avg_optimal_values(game.dist, game.mdp, game.gamma, game.mc).value;
  return {RewardFunction::state_based((1.0 - p) * rbar + p * vavg), (1.0 - p) * game.gamma};
}

Policy surrogate_optimal_prefix(const DelayedSpecGame& game) {
  const Surrogate surrogate = stationary_surrogate(game);
  return policy_iteration(game.mdp, surrogate.reward, surrogate.gamma_aup).policy;
}

namespace {

struct AssistTerms {
  Eigen::VectorXd mean_reward;
  Eigen::VectorXd avg_values;
  double ratio;  // p / (1 - p)
};

AssistTerms assist_terms(const DelayedSpecGame& game) {
  game.validate();
  const double p = require_geometric(game).p();
  return {mean_reward(game.dist, game.mdp.n_states()),
          avg_optimal_values(game.dist, game.mdp, game.gamma, game.mc).value, p / (1.0 - p)};
}

Eigen::VectorXd assist_reward_vector(const AssistTerms& terms, double baseline_value) {
  return terms.mean_reward -
         terms.ratio * (Eigen::VectorXd::Constant(terms.avg_values.size(), baseline_value) -
                        terms.avg_values);
}

}  // namespace

RewardFunction assist_reward(const DelayedSpecGame& game, const Policy& baseline, int step) {
  const AssistTerms terms = assist_terms(game);
  const Eigen::VectorXd d = state_distribution(game.mdp, baseline, step, game.start());
  return RewardFunction::state_based(assist_reward_vector(terms, d.dot(terms.avg_values)));
}

Policy assist_optimal_prefix(const DelayedSpecGame& game, const Policy& baseline) {
  const AssistTerms terms = assist_terms(game);
  const auto& mdp = game.mdp;
  const double gamma_aup = (1.0 - game.correction.p()) * game.gamma;

  const double reward_bound = terms.mean_reward.cwiseAbs().maxCoeff() +
                              2.0 * terms.ratio * terms.avg_values.cwiseAbs().maxCoeff();
  const double tail_scale = std::max(reward_bound, 1.0) / (1.0 - gamma_aup);
  const int horizon =
      std::max(1, static_cast<int>(std::ceil(std::log(1e-13 / tail_scale) / std::log(gamma_aup))));
  require(horizon <= 1'000'000, "discount too close to 1 for backward induction");

  // Baseline value E[V_avg(s_i)] for each step, by forward propagation from s0.
  std::vector<double> baseline_values(static_cast<std::size_t>(horizon));
  {
    const Eigen::MatrixXd p = transition_matrix(mdp, baseline);
    Eigen::RowVectorXd d = indicator(mdp.n_states(), game.start());
    for (int i = 0; i < horizon; ++i) {
      baseline_values[static_cast<std::size_t>(i)] = d.dot(terms.avg_values);
      d = d * p;
    }
  }

  Eigen::VectorXd next_values = Eigen::VectorXd::Zero(mdp.n_states());
  Eigen::MatrixXd q(mdp.n_states(), mdp.n_actions());
  for (int i = horizon - 1; i >= 0; --i) {
    const Eigen::VectorXd r =
        assist_reward_vector(terms, baseline_values[static_cast<std::size_t>(i)]);
    for (int s = 0; s < mdp.n_states(); ++s)
      for (int a = 0; a < mdp.n_actions(); ++a)
        q(s, a) = r[s] + gamma_aup * mdp.expected_next(s, a, next_values);
    next_values = q.rowwise().maxCoeff();
  }
  return greedy_policy(q, tie_tolerance(q.cwiseAbs().maxCoeff()));
}

// ---------------------------------------------------------------------------

PrefixOccupancy prefix_occupancy(const TabularMdp& mdp, const Policy& prefix, double gamma,
                                 int correct_at, StateIndex start) {
  require(correct_at >= 0, "correction step must be nonnegative");
  require(mdp.valid_state(start), "start state out of range");
  const Eigen::MatrixXd p = transition_matrix(mdp, prefix);
  Eigen::RowVectorXd d = indicator(mdp.n_states(), start);
  Eigen::RowVectorXd visits = Eigen::RowVectorXd::Zero(mdp.n_states());
  double discount = 1.0;
  for (int i = 0; i < correct_at; ++i) {
    visits += discount * d;
    d = d * p;
    discount *= gamma;
  }
  return {visits.transpose(), (discount * d).transpose()};
}

ScoreBreakdown score_member(const PrefixOccupancy& occupancy, const Eigen::VectorXd& reward,
                            const Eigen::VectorXd& optimal_values) {
  ScoreBreakdown out;
  out.prefix_return = occupancy.discounted_visits.dot(reward);
  out.post_correction = occupancy.terminal.dot(optimal_values);
  out.score = out.prefix_return + out.post_correction;
  return out;
}

namespace {

std::uint64_t hash_vector(const Eigen::VectorXd& v) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::uint64_t bits;
    const double x = v[i] == 0.0 ? 0.0 : v[i];  // fold -0.0 into +0.0
    std::memcpy(&bits, &x, sizeof bits);
    h = splitmix64(h ^ bits);
  }
  return h;
}

}  // namespace

Eigen::VectorXd OptimalValueCache::get(const Eigen::VectorXd& reward) {
  const std::uint64_t key = hash_vector(reward);
  {
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end())
      for (const auto& entry : it->second)
        if (entry.reward == reward) return entry.values;
  }
  Eigen::VectorXd values =
      policy_iteration(mdp_, RewardFunction::state_based(reward), gamma_).values;
  std::unique_lock lock(mutex_);
  auto& bucket = entries_[key];
  for (const auto& entry : bucket)
    if (entry.reward == reward) return entry.values;
  bucket.push_back({reward, values});
  return values;
}

std::size_t OptimalValueCache::size() const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& [key, bucket] : entries_) n += bucket.size();
  return n;
}

std::vector<ScoreBreakdown> delayed_spec_scores(const TabularMdp& mdp, const Policy& prefix,
                                                const RewardDistribution& dist, double gamma,
                                                int correct_at, const McOptions& mc,
                                                OptimalValueCache* cache) {
  require(gamma >= 0.0 && gamma < 1.0, "score discount must lie in [0, 1)");
  require(correct_at >= 1, "correction step must be at least 1");
  dist.check_compatible(mdp);
  const PrefixOccupancy occupancy = prefix_occupancy(mdp, prefix, gamma, correct_at, mdp.initial_state());
  const auto support = expectation_support(dist, mdp.n_states(), mc);

  std::vector<ScoreBreakdown> scores(support.size());
  OptimalValueCache local(mdp, gamma);
  OptimalValueCache& values = cache ? *cache : local;
  kernels::for_each_index(support.size(), kernels::Execution::parallel, [&](std::size_t k) {
    scores[k] = score_member(occupancy, support[k], values.get(support[k]));
  });
  return scores;
}

ScoreBreakdown delayed_spec_score(const TabularMdp& mdp, const Policy& prefix,
                                  const RewardDistribution& dist, double gamma, int correct_at,
                                  const McOptions& mc, OptimalValueCache* cache) {
  const auto scores = delayed_spec_scores(mdp, prefix, dist, gamma, correct_at, mc, cache);
  ScoreBreakdown mean;
  for (const auto& s : scores) {
    mean.score += s.score;
    mean.prefix_return += s.prefix_return;
    mean.post_correction += s.post_correction;
  }
  const auto n = static_cast<double>(scores.size());
  mean.score /= n;
  mean.prefix_return /= n;
  mean.post_correction /= n;
  return mean;
}

// ---------------------------------------------------------------------------

Json correction_to_json(const CorrectionTime& correction) {
  if (correction.is_geometric()) return {{"variant", "geometric"}, {"p", correction.p()}};
  return {{"variant", "deterministic"}, {"t", correction.step()}};
}

DelayedSpecGame game_from_json(const Json& doc) {
  require(doc.is_object(), "game config must be a JSON object");
  require(doc.contains("mdp") && doc.contains("distribution"),
          "game config needs \"mdp\" and \"distribution\"");
  CorrectionTime correction = CorrectionTime::deterministic(10);
  if (doc.contains("correction")) {
    const Json& c = doc["correction"];
    const auto variant = c.value("variant", std::string("deterministic"));
    if (variant == "geometric") {
      correction = CorrectionTime::geometric(c.at("p").get<double>());
    } else if (variant == "deterministic") {
      correction = CorrectionTime::deterministic(c.at("t").get<int>());
    } else {
      throw ValidationError("unknown correction variant \"" + variant + "\"");
    }
  }
  std::optional<Policy> baseline;
  if (doc.contains("baseline") && !doc["baseline"].is_null()) baseline = policy_from_json(doc["baseline"]);
  McOptions mc;
  mc.samples = doc.value("mc_samples", 1000);
  mc.seed = doc.value("seed", Seed{0});
  DelayedSpecGame game{mdp_from_json(doc["mdp"]), distribution_from_json(doc["distribution"]),
                       correction, doc.value("gamma", 0.9), std::move(baseline), mc};
  game.validate();
  return game;
}

}  // namespace dspec
