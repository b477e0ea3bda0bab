#include "dspec/reward_model.hpp"

#include "dspec/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dspec {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double effective_power_gamma(double gamma) {
  require(gamma >= 0.0 && gamma <= 1.0, "POWER requires gamma in [0, 1]");
  if (gamma <= 0.0) return kLowerLimitGamma;
  if (gamma >= 1.0) return kUpperLimitGamma;
  return gamma;
}

StateEstimates summarize(const std::vector<Eigen::VectorXd>& per_sample, bool exact) {
  const auto n = static_cast<double>(per_sample.size());
  StateEstimates out;
  out.samples = static_cast<int>(per_sample.size());
  out.value = Eigen::VectorXd::Zero(per_sample.front().size());
  for (const auto& v : per_sample) out.value += v;
  out.value /= n;
  out.std_error = Eigen::VectorXd::Zero(out.value.size());
  if (!exact && per_sample.size() > 1) {
    for (const auto& v : per_sample) out.std_error += (v - out.value).cwiseAbs2();
    out.std_error = (out.std_error / (n - 1.0) / n).cwiseSqrt();
  }
  return out;
}

Estimate at_state(const StateEstimates& all, StateIndex s) {
  return {all.value[s], all.std_error[s], all.samples};
}

}  // namespace

RewardDistribution RewardDistribution::point_mass(Eigen::VectorXd reward) {
  require(reward.size() >= 1, "point-mass reward must be nonempty");
  require(reward.allFinite(), "point-mass reward must be finite");
  return RewardDistribution(PointMass{std::move(reward)});
}

RewardDistribution RewardDistribution::empirical(std::vector<Eigen::VectorXd> members) {
  require(!members.empty(), "empirical distribution needs at least one member");
  const auto n = members.front().size();
  require(n >= 1, "empirical members must be nonempty");
  for (const auto& m : members) {
    require(m.size() == n, "empirical members must share a length");
    require(m.allFinite(), "empirical members must be finite");
  }
  return RewardDistribution(Empirical{std::move(members)});
}

RewardDistribution RewardDistribution::iid_uniform(double lo, double hi,
                                                   std::map<StateIndex, double> pinned) {
  require(std::isfinite(lo) && std::isfinite(hi) && lo <= hi,
          "iid-uniform needs finite bounds with lo <= hi");
  for (const auto& [s, v] : pinned) {
    require(s >= 0, "pinned state index must be nonnegative");
    require(std::isfinite(v), "pinned reward must be finite");
  }
  return RewardDistribution(IidUniform{lo, hi, std::move(pinned)});
}

std::string_view RewardDistribution::variant_name() const {
  return std::visit(Overloaded{[](const PointMass&) { return std::string_view("point-mass"); },
                               [](const Empirical&) { return std::string_view("empirical"); },
                               [](const IidUniform&) { return std::string_view("iid-uniform"); }},
                    variant_);
}

double RewardDistribution::support_bound() const {
  return std::visit(
      Overloaded{[](const PointMass& d) { return d.reward.cwiseAbs().maxCoeff(); },
                 [](const Empirical& d) {
                   double bound = 0.0;
                   for (const auto& m : d.members) bound = std::max(bound, m.cwiseAbs().maxCoeff());
                   return bound;
                 },
                 [](const IidUniform& d) {
                   double bound = std::max(std::abs(d.lo), std::abs(d.hi));
                   for (const auto& [s, v] : d.pinned) bound = std::max(bound, std::abs(v));
                   return bound;
                 }},
      variant_);
}

std::optional<int> RewardDistribution::n_states() const {
  if (const auto* pm = std::get_if<PointMass>(&variant_)) return static_cast<int>(pm->reward.size());
  if (const auto* em = std::get_if<Empirical>(&variant_))
    return static_cast<int>(em->members.front().size());
  return std::nullopt;
}

void RewardDistribution::check_compatible(const TabularMdp& mdp) const {
  if (const auto n = n_states()) {
    require(*n == mdp.n_states(), "reward distribution length does not match n_states");
  } else {
    for (const auto& [s, v] : std::get<IidUniform>(variant_).pinned)
      require(mdp.valid_state(s), "pinned state out of range");
  }
}

RewardDistribution RewardDistribution::shifted(double offset) const {
  return std::visit(
      Overloaded{[&](const PointMass& d) {
                   return point_mass((d.reward.array() + offset).matrix());
                 },
                 [&](const Empirical& d) {
                   std::vector<Eigen::VectorXd> members;
                   for (const auto& m : d.members) members.push_back((m.array() + offset).matrix());
                   return empirical(std::move(members));
                 },
                 [&](const IidUniform& d) {
                   auto pinned = d.pinned;
                   for (auto& [s, v] : pinned) v += offset;
                   return iid_uniform(d.lo + offset, d.hi + offset, std::move(pinned));
                 }},
      variant_);
}

// ---------------------------------------------------------------------------

Eigen::VectorXd mean_reward(const RewardDistribution& dist, int n_states) {
  require(n_states >= 1, "n_states must be positive");
  if (const auto n = dist.n_states())
    require(*n == n_states, "reward distribution length does not match n_states");
  return std::visit(
      Overloaded{[](const PointMass& d) -> Eigen::VectorXd { return d.reward; },
                 [](const Empirical& d) -> Eigen::VectorXd {
                   Eigen::VectorXd sum = Eigen::VectorXd::Zero(d.members.front().size());
                   for (const auto& m : d.members) sum += m;
                   return sum / static_cast<double>(d.members.size());
                 },
                 [&](const IidUniform& d) -> Eigen::VectorXd {
                   Eigen::VectorXd mean = Eigen::VectorXd::Constant(n_states, 0.5 * (d.lo + d.hi));
                   for (const auto& [s, v] : d.pinned)
                     if (s < n_states) mean[s] = v;
                   return mean;
                 }},
      dist.variant());
}

Eigen::VectorXd sample_reward(const RewardDistribution& dist, int n_states, Seed seed) {
  return std::visit(
      Overloaded{[](const PointMass& d) -> Eigen::VectorXd { return d.reward; },
                 [&](const Empirical& d) -> Eigen::VectorXd {
                   Rng rng(seed);
                   std::uniform_int_distribution<std::size_t> pick(0, d.members.size() - 1);
                   return d.members[pick(rng)];
                 },
                 [&](const IidUniform& d) -> Eigen::VectorXd {
                   Rng rng(seed);
                   std::uniform_real_distribution<double> unif(d.lo, d.hi);
                   Eigen::VectorXd r(n_states);
                   for (int s = 0; s < n_states; ++s) r[s] = d.lo == d.hi ? d.lo : unif(rng);
                   for (const auto& [s, v] : d.pinned)
                     if (s < n_states) r[s] = v;
                   return r;
                 }},
      dist.variant());
}

std::vector<Eigen::VectorXd> expectation_support(const RewardDistribution& dist, int n_states,
                                                 const McOptions& mc) {
  if (const auto* pm = std::get_if<PointMass>(&dist.variant())) return {pm->reward};
  if (const auto* em = std::get_if<Empirical>(&dist.variant())) return em->members;
  require(mc.samples >= 1, "Monte-Carlo sample count must be positive");
  std::vector<Eigen::VectorXd> draws(static_cast<std::size_t>(mc.samples));
  for (std::size_t k = 0; k < draws.size(); ++k)
    draws[k] = sample_reward(dist, n_states, derive_seed(mc.seed, k));
  return draws;
}

StateEstimates power_all_states(const RewardDistribution& dist, const TabularMdp& mdp,
                                double gamma, const McOptions& mc, kernels::Execution exec) {
  dist.check_compatible(mdp);
  const double g = effective_power_gamma(gamma);
  const auto support = expectation_support(dist, mdp.n_states(), mc);
  const auto values = kernels::optimal_values(mdp, support, g, exec);
  std::vector<Eigen::VectorXd> per_sample;
  per_sample.reserve(values.size());
  for (const auto& v : values) per_sample.push_back((1.0 - g) * kernels::best_continuation(mdp, v));
  return summarize(per_sample, dist.has_finite_support());
}

Estimate power(const RewardDistribution& dist, const TabularMdp& mdp, const PowerQuery& query,
               kernels::Execution exec) {
  require(mdp.valid_state(query.state), "state out of range");
  return at_state(
      power_all_states(dist, mdp, query.gamma, {query.mc_samples, query.seed}, exec), query.state);
}

StateEstimates avg_optimal_values(const RewardDistribution& dist, const TabularMdp& mdp,
                                  double gamma, const McOptions& mc, kernels::Execution exec) {
  require(gamma > 0.0 && gamma < 1.0, "average optimal value requires gamma in (0, 1)");
  dist.check_compatible(mdp);
  const auto support = expectation_support(dist, mdp.n_states(), mc);
  return summarize(kernels::optimal_values(mdp, support, gamma, exec), dist.has_finite_support());
}

Estimate avg_optimal_value(const RewardDistribution& dist, const TabularMdp& mdp, StateIndex state,
                           double gamma, const McOptions& mc, kernels::Execution exec) {
  require(mdp.valid_state(state), "state out of range");
  return at_state(avg_optimal_values(dist, mdp, gamma, mc, exec), state);
}

// ---------------------------------------------------------------------------

namespace {

Json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from(const Json& j) {
  require(j.is_array(), "expected a reward array");
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

Json distribution_to_json(const RewardDistribution& dist) {
  return std::visit(
      Overloaded{[](const PointMass& d) -> Json {
                   return {{"variant", "point-mass"}, {"reward", vec_json(d.reward)}};
                 },
                 [](const Empirical& d) -> Json {
                   Json rows = Json::array();
                   for (const auto& m : d.members) rows.push_back(vec_json(m));
                   return {{"variant", "empirical"}, {"rewards", std::move(rows)}};
                 },
                 [](const IidUniform& d) -> Json {
                   Json pinned = Json::object();
                   for (const auto& [s, v] : d.pinned) pinned[std::to_string(s)] = v;
                   return {{"variant", "iid-uniform"}, {"lo", d.lo}, {"hi", d.hi}, {"pinned", pinned}};
                 }},
      dist.variant());
}

RewardDistribution distribution_from_json(const Json& doc) {
  require(doc.is_object() && doc.contains("variant"), "distribution needs a \"variant\"");
  const auto variant = doc["variant"].get<std::string>();
  try {
    if (variant == "point-mass") return RewardDistribution::point_mass(vec_from(doc.at("reward")));
    if (variant == "empirical") {
      std::vector<Eigen::VectorXd> members;
      for (const auto& row : doc.at("rewards")) members.push_back(vec_from(row));
      return RewardDistribution::empirical(std::move(members));
    }
    if (variant == "iid-uniform") {
      std::map<StateIndex, double> pinned;
      if (doc.contains("pinned"))
        for (const auto& [key, value] : doc["pinned"].items()) pinned[std::stoi(key)] = value.get<double>();
      return RewardDistribution::iid_uniform(doc.value("lo", 0.0), doc.value("hi", 1.0),
                                             std::move(pinned));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad distribution: ") + e.what());
  }
  throw ValidationError("unknown distribution variant \"" + variant + "\"");
}

std::string empirical_to_csv(const std::vector<Eigen::VectorXd>& members) {
  std::string out;
  for (const auto& m : members) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      if (i) out += ',';
      out += format_double(m[i]);
    }
    out += '\n';
  }
  return out;
}

std::vector<Eigen::VectorXd> empirical_from_csv(std::string_view text) {
  std::vector<Eigen::VectorXd> members;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ValidationError("bad number on CSV line " + std::to_string(line_no));
      }
    }
    members.emplace_back(Eigen::Map<const Eigen::VectorXd>(row.data(), static_cast<Eigen::Index>(row.size())));
  }
  return members;
}

}  // namespace dspec
