#pragma once
// Small hand-built MDPs shared by the tests.

#include "dspec/mdp.hpp"

#include <vector>

namespace fixture {

using dspec::Successor;
using dspec::TabularMdp;

/// One state, every action a self-loop.
inline TabularMdp single_state(int n_actions = 1) {
  std::vector<std::vector<Successor>> rows(n_actions, {{0, 1.0}});
  return TabularMdp::from_rows(1, n_actions, rows, 0);
}

/// s0 -> s1, s1 absorbing; one action.
inline TabularMdp chain2() { return TabularMdp::from_rows(2, 1, {{{1, 1.0}}, {{1, 1.0}}}, 0); }

/// Deterministic chain 0 -> 1 -> ... -> n-1 (absorbing); one action.
inline TabularMdp chain(int n) {
  std::vector<std::vector<Successor>> rows;
  for (int s = 0; s < n; ++s) rows.push_back({{std::min(s + 1, n - 1), 1.0}});
  return TabularMdp::from_rows(n, 1, rows, 0);
}

/// s0: a0 -> s1 (dead end, self-loops), a1 -> s2; s2: a0 stay, a1 -> s3; s3: a0 -> s2, a1 stay.
inline TabularMdp preserve_options() {
  return TabularMdp::from_rows(4, 2,
                               {{{1, 1.0}}, {{2, 1.0}},    // s0
                                {{1, 1.0}}, {{1, 1.0}},    // s1
                                {{2, 1.0}}, {{3, 1.0}},    // s2
                                {{2, 1.0}}, {{3, 1.0}}},   // s3
                               0, {{"s0", "s1", "s2", "s3"}, {"left", "right"}});
}

/// s0 with two actions leading to absorbing children s1 and s2.
inline TabularMdp two_absorbing_children() {
  return TabularMdp::from_rows(3, 2,
                               {{{1, 1.0}}, {{2, 1.0}},
                                {{1, 1.0}}, {{1, 1.0}},
                                {{2, 1.0}}, {{2, 1.0}}},
                               0);
}

/// 0 = s0, 1 = s1 (dead end), 2 = wait, 3 = s2, 4 = s3 (both absorbing).
/// s0: left -> s1, right -> wait; wait: a0 -> s2, a1 -> s3.
inline TabularMdp left_or_wait() {
  return TabularMdp::from_rows(5, 2,
                               {{{1, 1.0}}, {{2, 1.0}},
                                {{1, 1.0}}, {{1, 1.0}},
                                {{3, 1.0}}, {{4, 1.0}},
                                {{3, 1.0}}, {{3, 1.0}},
                                {{4, 1.0}}, {{4, 1.0}}},
                               0);
}

inline Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace fixture
