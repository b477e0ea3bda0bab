#pragma once

#include "dspec/mdp.hpp"

#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <vector>

namespace dspec::kernels {

enum class Execution { serial, parallel };

/// Worker count for parallel kernels: DELAYED_SPEC_THREADS if set, else the OpenMP default.
int thread_count();

/// Runs fn(i) for i in [0, n). The parallel path uses an OpenMP dynamic schedule;
/// each index must write only to its own output slot. The first exception thrown
/// by any worker is rethrown on the calling thread.
template <typename Fn>
void for_each_index(std::size_t n, Execution exec, Fn&& fn) {
  if (exec == Execution::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
  for (long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

/// V* for each state-based reward vector (one policy-iteration solve each).
std::vector<Eigen::VectorXd> optimal_values_serial(const TabularMdp& mdp,
                                                   std::span<const Eigen::VectorXd> rewards,
                                                   double gamma);
std::vector<Eigen::VectorXd> optimal_values_parallel(const TabularMdp& mdp,
                                                     std::span<const Eigen::VectorXd> rewards,
                                                     double gamma);
std::vector<Eigen::VectorXd> optimal_values(const TabularMdp& mdp,
                                            std::span<const Eigen::VectorXd> rewards,
                                            double gamma, Execution exec);

/// Continuation value max_a sum_s' T(s, a, s') V(s') at every state.
Eigen::VectorXd best_continuation(const TabularMdp& mdp, const Eigen::VectorXd& values);

}  // namespace dspec::kernels
