#include "dspec/error.hpp"
#include "dspec/experiment.hpp"
#include "dspec/reward_model.hpp"

#include <doctest.h>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace dspec;
using fixture::vec;

TEST_CASE("mean reward") {
  const auto r = vec({0.1, -2.0, 3.5});
  CHECK(mean_reward(RewardDistribution::point_mass(r), 3) == r);
  const auto u = mean_reward(RewardDistribution::iid_uniform(0.0, 1.0), 7);
  CHECK(u == Eigen::VectorXd::Constant(7, 0.5));
  const auto pinned = mean_reward(RewardDistribution::iid_uniform(0.0, 1.0, {{2, 0.0}}), 4);
  CHECK(pinned == vec({0.5, 0.5, 0.0, 0.5}));

  const auto draws = expectation_support(RewardDistribution::iid_uniform(0, 1), 6, {1000, 3});
  const auto emp = mean_reward(RewardDistribution::empirical(draws), 6);
  CHECK((emp.array() - 0.5).abs().maxCoeff() < 0.05);

  const auto pair = RewardDistribution::empirical({vec({1, 3}), vec({2, 5})});
  CHECK(mean_reward(pair, 2) == vec({1.5, 4.0}));
}

TEST_CASE("sample_reward") {
  const auto r = vec({4, 5});
  CHECK(sample_reward(RewardDistribution::point_mass(r), 2, 99) == r);
  const auto u = RewardDistribution::iid_uniform(0, 1);
  for (Seed s = 0; s < 50; ++s) {
    const auto x = sample_reward(u, 9, s);
    CHECK(x.minCoeff() >= 0.0);
    CHECK(x.maxCoeff() <= 1.0);
  }
  CHECK(sample_reward(u, 9, 17) == sample_reward(u, 9, 17));
  CHECK_FALSE(sample_reward(u, 9, 17) == sample_reward(u, 9, 18));
  const auto emp = RewardDistribution::empirical({vec({1}), vec({2}), vec({3})});
  for (Seed s = 0; s < 20; ++s) {
    const double x = sample_reward(emp, 1, s)[0];
    CHECK((x == 1.0 || x == 2.0 || x == 3.0));
  }
}

TEST_CASE("distribution validation") {
  CHECK_THROWS_AS(RewardDistribution::empirical({}), ValidationError);
  CHECK_THROWS_AS(RewardDistribution::empirical({vec({1, 2}), vec({1})}), ValidationError);
  CHECK_THROWS_AS(RewardDistribution::iid_uniform(1.0, 0.0), ValidationError);
  CHECK_THROWS_AS(RewardDistribution::iid_uniform(0.0, INFINITY), ValidationError);
  CHECK_THROWS_AS(RewardDistribution::point_mass(vec({NAN})), ValidationError);
  CHECK_THROWS_AS(RewardDistribution::point_mass(vec({1, 2})).check_compatible(fixture::single_state()),
                  ValidationError);
  CHECK(RewardDistribution::empirical({vec({1, -4}), vec({2, 3})}).support_bound() == 4.0);
}

TEST_CASE("POWER closed forms") {
  const auto u = RewardDistribution::iid_uniform(0, 1);
  SUBCASE("self-loop state: POWER = E[R] = 1/2") {
    for (double g : {0.2, 0.9}) {
      const Estimate e = power(u, fixture::single_state(), {0, g, 20'000, 1});
      CHECK(std::abs(e.value - 0.5) <= 2.0 * e.std_error);
      CHECK(e.std_error > 0.0);
    }
  }
  SUBCASE("two absorbing children, gamma -> 1: E[max of two U(0,1)] = 2/3") {
    const Estimate e = power(u, fixture::two_absorbing_children(), {0, 1.0, 20'000, 2});
    CHECK(std::abs(e.value - 2.0 / 3.0) <= 2.0 * e.std_error);
  }
  SUBCASE("zero reward") {
    const Estimate e = power(RewardDistribution::point_mass(Eigen::VectorXd::Zero(3)),
                             fixture::two_absorbing_children(), {0, 0.5, 1, 0});
    CHECK(e.value == 0.0);
    CHECK(e.std_error == 0.0);
  }
  SUBCASE("gamma = 0 evaluates the limit") {
    // lim (1-g)/g * (V* - R) at g -> 0 is max_a E[R(s')].
    const auto r = vec({0.0, 0.25, 0.75});
    const Estimate e = power(RewardDistribution::point_mass(r), fixture::two_absorbing_children(), {0, 0.0, 1, 0});
    CHECK(e.value == doctest::Approx(0.75).epsilon(1e-5));
  }
}

TEST_CASE("POWER over iid-uniform(0,1) lies in [0.5, 1] and is nonnegative for nonnegative rewards") {
  Rng rng(5);
  const TabularMdp mdp = random_mdp(5, 3, rng, true);
  const auto pw = power_all_states(RewardDistribution::iid_uniform(0, 1), mdp, 0.8, {2000, 4});
  CHECK(pw.value.minCoeff() >= 0.5 - 3.0 * pw.std_error.maxCoeff());
  CHECK(pw.value.maxCoeff() <= 1.0);
  const auto nonneg = RewardDistribution::empirical({vec({0, 1, 2, 0, 1}), vec({3, 0, 0, 1, 1})});
  CHECK(power_all_states(nonneg, mdp, 0.6).value.minCoeff() >= 0.0);
}

TEST_CASE("average optimal value") {
  CHECK(avg_optimal_value(RewardDistribution::point_mass(vec({1.0})), fixture::single_state(), 0, 0.5).value ==
        doctest::Approx(2.0).epsilon(1e-14));

  Rng rng(6);
  const TabularMdp mdp = random_mdp(4, 2, rng);
  const auto r = vec({0.3, -0.2, 0.9, 0.0});
  const auto pm = avg_optimal_values(RewardDistribution::point_mass(r), mdp, 0.7).value;
  CHECK((pm - policy_iteration(mdp, RewardFunction::state_based(r), 0.7).values).cwiseAbs().maxCoeff() == 0.0);

  // {R, -R} on a 3-state chain: mean of two independent solves.
  const auto chain = fixture::chain(3);
  const auto rc = vec({1.0, -0.5, 0.25});
  const auto pair = avg_optimal_values(RewardDistribution::empirical({rc, -rc}), chain, 0.9).value;
  const Eigen::VectorXd oracle_mean =
      0.5 * (oracle::optimal_values(chain, rc, 0.9) + oracle::optimal_values(chain, -rc, 0.9));
  CHECK((pair - oracle_mean).cwiseAbs().maxCoeff() < 1e-10);

  CHECK_THROWS_AS(avg_optimal_values(RewardDistribution::point_mass(r), mdp, 1.0), ValidationError);
  CHECK_THROWS_AS(avg_optimal_values(RewardDistribution::point_mass(r), mdp, 0.0), ValidationError);
}

TEST_CASE("V_avg = gamma/(1-gamma) POWER + Rbar on exact distributions") {
  for (int c = 0; c < 30; ++c) {
    Rng rng(derive_seed(41, c));
    const int n = 2 + c % 5;
    const TabularMdp mdp = random_mdp(n, 1 + c % 3, rng, c % 2 == 0);
    std::vector<Eigen::VectorXd> members;
    for (int k = 0; k <= c % 4; ++k) members.push_back(Eigen::VectorXd::Random(n));
    const auto dist = c % 5 == 0 ? RewardDistribution::point_mass(members.front())
                                 : RewardDistribution::empirical(members);
    for (double g : {0.3, 0.7, 0.996}) {
      const auto va = avg_optimal_values(dist, mdp, g).value;
      const auto pw = power_all_states(dist, mdp, g).value;
      const auto rbar = mean_reward(dist, n);
      CHECK((va - (g / (1.0 - g)) * pw - rbar).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("shift equivariance and negation pairs") {
  Rng rng(13);
  const TabularMdp mdp = random_mdp(5, 2, rng);
  const auto r = vec({0.1, 0.4, -0.3, 0.8, 0.0});
  const auto base = RewardDistribution::point_mass(r);
  for (double g : {0.3, 0.9}) {
    for (double c : {-1.5, 2.0}) {
      const auto moved = base.shifted(c);
      const Eigen::VectorXd dv = avg_optimal_values(moved, mdp, g).value - avg_optimal_values(base, mdp, g).value;
      CHECK((dv.array() - c / (1.0 - g)).abs().maxCoeff() <= 1e-8);
      const Eigen::VectorXd dp = power_all_states(moved, mdp, g).value - power_all_states(base, mdp, g).value;
      // POWER shifts by c as a whole; the state-dependent part is unchanged.
      CHECK((dp.array() - c).abs().maxCoeff() <= 1e-8);
    }
  }
  const auto truth = mean_reward(RewardDistribution::point_mass(r), 5);
  const auto inv = mean_reward(RewardDistribution::point_mass(-r), 5);
  CHECK(inv == -truth);
}

TEST_CASE("serialization round trips") {
  const auto emp = RewardDistribution::empirical({vec({0.1, 1.0 / 3.0}), vec({-2, 5e-300})});
  const auto back = distribution_from_json(distribution_to_json(emp));
  CHECK(std::get<Empirical>(back.variant()).members == std::get<Empirical>(emp.variant()).members);

  const auto iid = RewardDistribution::iid_uniform(-1, 2, {{3, 0.5}});
  const auto iid_back = std::get<IidUniform>(distribution_from_json(distribution_to_json(iid)).variant());
  CHECK(iid_back.lo == -1.0);
  CHECK(iid_back.hi == 2.0);
  CHECK(iid_back.pinned.at(3) == 0.5);

  CHECK_THROWS_AS(distribution_from_json(Json{{"variant", "gaussian"}}), ValidationError);
  CHECK_THROWS_AS(distribution_from_json(Json{{"variant", "empirical"}, {"rewards", Json::array()}}),
                  ValidationError);

  const auto members = std::get<Empirical>(emp.variant()).members;
  CHECK(empirical_from_csv(empirical_to_csv(members)) == members);
  CHECK_THROWS_AS(empirical_from_csv("1,2\n3,x\n"), ValidationError);
}
