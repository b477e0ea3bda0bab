#pragma once

#include "dspec/io.hpp"
#include "dspec/kernels.hpp"
#include "dspec/mdp.hpp"
#include "dspec/rng.hpp"

#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dspec {

struct PointMass {
  Eigen::VectorXd reward;
};

/// Equal-weight distribution over a finite list of state-based rewards.
struct Empirical {
  std::vector<Eigen::VectorXd> members;
};

/// R(s) ~ U(lo, hi) independently per state. States listed in `pinned` have a
/// known, fixed reward instead.
struct IidUniform {
  double lo = 0.0;
  double hi = 1.0;
  std::map<StateIndex, double> pinned;
};

/// Bounded-support distribution D over state-based reward functions.
class RewardDistribution {
 public:
  using Variant = std::variant<PointMass, Empirical, IidUniform>;

  static RewardDistribution point_mass(Eigen::VectorXd reward);
  static RewardDistribution empirical(std::vector<Eigen::VectorXd> members);
  static RewardDistribution iid_uniform(double lo, double hi,
                                        std::map<StateIndex, double> pinned = {});

  const Variant& variant() const { return variant_; }
  std::string_view variant_name() const;

  /// True when expectations are computed by exact enumeration.
  bool has_finite_support() const { return !std::holds_alternative<IidUniform>(variant_); }
  /// max |R(s)| over the support.
  double support_bound() const;
  /// Reward length fixed by the distribution, if any (iid-uniform adapts to the MDP).
  std::optional<int> n_states() const;
  void check_compatible(const TabularMdp& mdp) const;

  /// Adds `offset` to every reward in the support.
  RewardDistribution shifted(double offset) const;

 private:
  explicit RewardDistribution(Variant v) : variant_(std::move(v)) {}
  Variant variant_;
};

struct McOptions {
  int samples = 1000;
  Seed seed = 0;
};

/// Expectation over D: the exact value for finite supports, otherwise a Monte-Carlo
/// mean with its standard error.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  int samples = 0;
};

struct StateEstimates {
  Eigen::VectorXd value;
  Eigen::VectorXd std_error;
  int samples = 0;
};

struct PowerQuery {
  StateIndex state = 0;
  double gamma = 0.9;
  int mc_samples = 1000;
  Seed seed = 0;
};

/// Average reward function R-bar = E_{R~D}[R].
Eigen::VectorXd mean_reward(const RewardDistribution& dist, int n_states);

/// One draw from D, deterministic in `seed`.
Eigen::VectorXd sample_reward(const RewardDistribution& dist, int n_states, Seed seed);

/// Points over which expectations are taken. Finite supports return their members;
/// iid-uniform returns `mc.samples` draws where draw k uses derive_seed(mc.seed, k).
std::vector<Eigen::VectorXd> expectation_support(const RewardDistribution& dist, int n_states,
                                                 const McOptions& mc);

/**
 * POWER(s, gamma) = (1 - gamma)/gamma * E_{R~D}[V*_R(s, gamma) - R(s)].
 *
 * Evaluated as (1 - gamma) E[max_a E_{s'}[V*_R(s')]], which avoids the
 * cancellation in V* - R near gamma = 0. The endpoints 0 and 1 are evaluated
 * at kLowerLimitGamma and kUpperLimitGamma.
 */
Estimate power(const RewardDistribution& dist, const TabularMdp& mdp, const PowerQuery& query,
               kernels::Execution exec = kernels::Execution::parallel);

StateEstimates power_all_states(const RewardDistribution& dist, const TabularMdp& mdp,
                                double gamma, const McOptions& mc = {},
                                kernels::Execution exec = kernels::Execution::parallel);

/// V_avg(s, gamma) = E_{R~D}[V*_R(s, gamma)], gamma in (0, 1).
Estimate avg_optimal_value(const RewardDistribution& dist, const TabularMdp& mdp, StateIndex state,
                           double gamma, const McOptions& mc = {},
                           kernels::Execution exec = kernels::Execution::parallel);

StateEstimates avg_optimal_values(const RewardDistribution& dist, const TabularMdp& mdp,
                                  double gamma, const McOptions& mc = {},
                                  kernels::Execution exec = kernels::Execution::parallel);

/// {"variant": "point-mass", "reward": [...]}, {"variant": "empirical", "rewards": [[...]]}
/// or {"variant": "iid-uniform", "lo", "hi", "pinned": {"state": value}}.
Json distribution_to_json(const RewardDistribution& dist);
RewardDistribution distribution_from_json(const Json& doc);

/// One reward vector per row, no header.
std::string empirical_to_csv(const std::vector<Eigen::VectorXd>& members);
std::vector<Eigen::VectorXd> empirical_from_csv(std::string_view text);

}  // namespace dspec
