#include "dspec/experiment.hpp"
#include "dspec/kernels.hpp"

#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <stdexcept>

#include "oracles.hpp"

using namespace dspec;

TEST_CASE("serial and parallel optimal values are bitwise equal") {
  Rng rng(5);
  const TabularMdp mdp = random_mdp(12, 4, rng);
  std::vector<Eigen::VectorXd> rewards;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 40; ++k) rewards.push_back(Eigen::VectorXd::NullaryExpr(12, [&] { return u(rng); }));
  const auto serial = kernels::optimal_values_serial(mdp, rewards, 0.95);
  const auto parallel = kernels::optimal_values_parallel(mdp, rewards, 0.95);
  REQUIRE(serial.size() == rewards.size());
  for (std::size_t k = 0; k < rewards.size(); ++k) {
    CHECK(serial[k] == parallel[k]);
    CHECK((serial[k] - oracle::optimal_values(mdp, rewards[k], 0.95)).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("thread cap from the environment") {
  ::setenv("DELAYED_SPEC_THREADS", "3", 1);
  CHECK(kernels::thread_count() == 3);
  ::setenv("DELAYED_SPEC_THREADS", "zero", 1);
  CHECK(kernels::thread_count() >= 1);
  ::unsetenv("DELAYED_SPEC_THREADS");
  CHECK(kernels::thread_count() >= 1);
}

TEST_CASE("for_each_index visits each index once and rethrows") {
  for (auto exec : {kernels::Execution::serial, kernels::Execution::parallel}) {
    std::vector<int> hits(500, 0);
    kernels::for_each_index(hits.size(), exec, [&](std::size_t i) { ++hits[i]; });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));

    std::atomic<int> ran{0};
    CHECK_THROWS_AS(kernels::for_each_index(100, exec,
                                            [&](std::size_t i) {
                                              ++ran;
                                              if (i == 17) throw std::runtime_error("boom");
                                            }),
                    std::runtime_error);
    CHECK(ran.load() >= 18);
  }
}

TEST_CASE("best continuation") {
  Rng rng(8);
  const TabularMdp mdp = random_mdp(6, 3, rng, true);
  const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(6, -1.0, 4.0);
  const Eigen::VectorXd got = kernels::best_continuation(mdp, v);
  const auto t = oracle::dense(mdp);
  for (int s = 0; s < 6; ++s) {
    double best = -1e300;
    for (int a = 0; a < 3; ++a) best = std::max(best, t[s][a].dot(v));
    CHECK(got[s] == doctest::Approx(best).epsilon(1e-14));
  }
}
