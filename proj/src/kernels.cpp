#include "dspec/kernels.hpp"

#include <cstdlib>
#include <limits>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dspec::kernels {

int thread_count() {
  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  if (const char* env = std::getenv("DELAYED_SPEC_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1) threads = cap;
    } catch (const std::exception&) {
      // ignore malformed values
    }
  }
  return threads;
}

namespace {

Eigen::VectorXd solve_one(const TabularMdp& mdp, const Eigen::VectorXd& reward, double gamma) {
  return policy_iteration(mdp, RewardFunction::state_based(reward), gamma).values;
}

}  // namespace

std::vector<Eigen::VectorXd> optimal_values_serial(const TabularMdp& mdp,
                                                   std::span<const Eigen::VectorXd> rewards,
                                                   double gamma) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(rewards.size());
  for (const auto& r : rewards) out.push_back(solve_one(mdp, r, gamma));
  return out;
}

std::vector<Eigen::VectorXd> optimal_values_parallel(const TabularMdp& mdp,
                                                     std::span<const Eigen::VectorXd> rewards,
                                                     double gamma) {
  std::vector<Eigen::VectorXd> out(rewards.size());
  for_each_index(rewards.size(), Execution::parallel,
                 [&](std::size_t i) { out[i] = solve_one(mdp, rewards[i], gamma); });
  return out;
}

std::vector<Eigen::VectorXd> optimal_values(const TabularMdp& mdp,
                                            std::span<const Eigen::VectorXd> rewards,
                                            double gamma, Execution exec) {
  return exec == Execution::parallel ? optimal_values_parallel(mdp, rewards, gamma)
                                     : optimal_values_serial(mdp, rewards, gamma);
}

Eigen::VectorXd best_continuation(const TabularMdp& mdp, const Eigen::VectorXd& values) {
  Eigen::VectorXd out(mdp.n_states());
  for (int s = 0; s < mdp.n_states(); ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < mdp.n_actions(); ++a) best = std::max(best, mdp.expected_next(s, a, values));
    out[s] = best;
  }
  return out;
}

}  // namespace dspec::kernels
