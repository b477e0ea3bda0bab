#pragma once
// Independent reference computations used as test oracles. Deliberately naive:
// value iteration instead of policy iteration, explicit per-step propagation
// instead of occupancy shortcuts, brute-force enumeration instead of solvers.

#include "dspec/mdp.hpp"
#include "dspec/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// T[s][a] as a dense row of next-state probabilities.
inline std::vector<std::vector<VectorXd>> dense(const dspec::TabularMdp& mdp) {
  const int n = mdp.n_states(), m = mdp.n_actions();
  const auto flat = mdp.dense_transition();
  std::vector<std::vector<VectorXd>> t(n, std::vector<VectorXd>(m, VectorXd(n)));
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < m; ++a)
      for (int x = 0; x < n; ++x) t[s][a][x] = flat[(static_cast<std::size_t>(s) * m + a) * n + x];
  return t;
}

/// Value iteration to a sup-norm change below `tol` (state-based reward).
inline VectorXd optimal_values(const dspec::TabularMdp& mdp, const VectorXd& r, double gamma,
                               double tol = 1e-13) {
  const auto t = dense(mdp);
  VectorXd v = VectorXd::Zero(mdp.n_states());
  // Past this many sweeps the contraction error is below tol; further change is rounding.
  const double scale = 1.0 + r.cwiseAbs().maxCoeff() / (1.0 - gamma);
  const long max_sweeps = gamma == 0.0 ? 1 : static_cast<long>(std::log(tol / scale) / std::log(gamma)) + 10;
  for (long it = 0; it < max_sweeps; ++it) {
    VectorXd next(v.size());
    for (int s = 0; s < mdp.n_states(); ++s) {
      double best = -INFINITY;
      for (int a = 0; a < mdp.n_actions(); ++a) best = std::max(best, t[s][a].dot(v));
      next[s] = r[s] + gamma * best;
    }
    const double change = (next - v).cwiseAbs().maxCoeff();
    v = next;
    if (change * gamma / (1.0 - gamma) < tol) break;
  }
  return v;
}

/// P^pi built from the dense tensor.
inline MatrixXd policy_matrix(const dspec::TabularMdp& mdp, const std::vector<int>& actions) {
  const auto t = dense(mdp);
  MatrixXd p(mdp.n_states(), mdp.n_states());
  for (int s = 0; s < mdp.n_states(); ++s) p.row(s) = t[s][actions[s]].transpose();
  return p;
}

/// Iterative policy evaluation for `sweeps` steps (state-action reward table).
inline VectorXd iterative_evaluation(const dspec::TabularMdp& mdp, const MatrixXd& r,
                                     const std::vector<int>& actions, double gamma, long sweeps) {
  const MatrixXd p = policy_matrix(mdp, actions);
  VectorXd rp(mdp.n_states());
  for (int s = 0; s < mdp.n_states(); ++s) rp[s] = r(s, actions[s]);
  VectorXd v = VectorXd::Zero(mdp.n_states());
  for (long i = 0; i < sweeps; ++i) {
    VectorXd next = rp + gamma * p * v;
    if ((next - v).cwiseAbs().maxCoeff() == 0.0) return next;
    v = std::move(next);
  }
  return v;
}

/// Calls fn(actions) for every deterministic stationary policy.
inline void for_each_policy(int n_states, int n_actions,
                            const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> a(n_states, 0);
  while (true) {
    fn(a);
    int s = 0;
    while (s < n_states && ++a[s] == n_actions) a[s++] = 0;
    if (s == n_states) return;
  }
}

/// Normalized switch value straight from its definition: for each reveal step t
/// with weight w_t, each member R: sum_{i<t} gamma^i d_i.R + gamma^t d_t.V*_R,
/// with d_i propagated one step at a time and V* from value iteration.
struct RevealWeights {
  std::vector<std::pair<int, double>> steps;  // (t, P(T = t))
};

inline RevealWeights deterministic_reveal(int t) { return {{{t, 1.0}}}; }

/// Geometric support t >= 1 cut where the remaining mass drops below `mass_tol`.
inline RevealWeights geometric_reveal(double p, double mass_tol = 1e-15) {
  RevealWeights w;
  double remaining = 1.0;
  for (int t = 1; remaining > mass_tol; ++t) {
    const double prob = std::pow(1.0 - p, t - 1) * p;
    w.steps.push_back({t, prob});
    remaining -= prob;
    if (t > 100000) break;
  }
  return w;
}

inline double switch_value(const dspec::TabularMdp& mdp, const std::vector<VectorXd>& members,
                           const RevealWeights& reveal, double gamma,
                           const std::vector<int>& prefix) {
  const MatrixXd p = policy_matrix(mdp, prefix);
  std::vector<VectorXd> vstar;
  for (const auto& r : members) vstar.push_back(optimal_values(mdp, r, gamma));
  int t_max = 0;
  for (auto [t, w] : reveal.steps) t_max = std::max(t_max, t);

  // d_i for every needed step.
  std::vector<Eigen::RowVectorXd> d{Eigen::RowVectorXd::Zero(mdp.n_states())};
  d[0][mdp.initial_state()] = 1.0;
  for (int i = 1; i <= t_max; ++i) d.push_back(d.back() * p);

  double total = 0.0;
  for (std::size_t k = 0; k < members.size(); ++k) {
    double member_total = 0.0;
    for (auto [t, w] : reveal.steps) {
      double value = 0.0;
      for (int i = 0; i < t; ++i) value += std::pow(gamma, i) * d[i].dot(members[k]);
      value += std::pow(gamma, t) * d[t].dot(vstar[k]);
      member_total += w * value;
    }
    total += member_total;
  }
  return (1.0 - gamma) * total / static_cast<double>(members.size());
}

/// Monte-Carlo discounted return of a deterministic policy, truncated at `horizon`.
struct McResult {
  double mean;
  double std_error;
};

inline McResult rollout_return(const dspec::TabularMdp& mdp, const MatrixXd& r,
                               const std::vector<int>& actions, double gamma, int horizon,
                               int episodes, dspec::Seed seed) {
  const auto t = dense(mdp);
  dspec::Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double sum = 0.0, sum_sq = 0.0;
  for (int e = 0; e < episodes; ++e) {
    int s = mdp.initial_state();
    double ret = 0.0, disc = 1.0;
    for (int i = 0; i < horizon; ++i) {
      ret += disc * r(s, actions[s]);
      disc *= gamma;
      double x = u(rng);
      int next = 0;
      const VectorXd& row = t[s][actions[s]];
      for (; next < mdp.n_states() - 1; ++next) {
        if (x < row[next]) break;
        x -= row[next];
      }
      s = next;
    }
    sum += ret;
    sum_sq += ret * ret;
  }
  const double mean = sum / episodes;
  const double var = (sum_sq / episodes - mean * mean) * episodes / (episodes - 1.0);
  return {mean, std::sqrt(std::max(var, 0.0) / episodes)};
}

}  // namespace oracle
