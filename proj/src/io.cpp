#include "dspec/io.hpp"

#include "dspec/error.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace dspec {

namespace {

template <typename T>
T get_field(const Json& doc, const char* key) {
  require(doc.is_object() && doc.contains(key), std::string("missing field \"") + key + "\"");
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad field \"") + key + "\": " + e.what());
  }
}

Eigen::VectorXd vector_from_json(const Json& array) {
  require(array.is_array(), "expected a numeric array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(array.size()));
  for (std::size_t i = 0; i < array.size(); ++i) {
    require(array[i].is_number(), "expected a number");
    v[static_cast<Eigen::Index>(i)] = array[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd matrix_from_json(const Json& rows) {
  require(rows.is_array() && !rows.empty(), "expected a nonempty array of rows");
  const auto n_cols = rows[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n_cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].is_array() && rows[i].size() == n_cols, "ragged matrix");
    m.row(static_cast<Eigen::Index>(i)) = vector_from_json(rows[i]).transpose();
  }
  return m;
}

}  // namespace

Json mdp_to_json(const TabularMdp& mdp) {
  const int n = mdp.n_states();
  const int m = mdp.n_actions();
  Json transition = Json::array();
  for (int s = 0; s < n; ++s) {
    Json per_action = Json::array();
    for (int a = 0; a < m; ++a) {
      Json row = Json::array();
      for (int next = 0; next < n; ++next) row.push_back(mdp.probability(s, a, next));
      per_action.push_back(std::move(row));
    }
    transition.push_back(std::move(per_action));
  }
  Json doc{{"n_states", n},
           {"n_actions", m},
           {"transition", std::move(transition)},
           {"initial_state", mdp.initial_state()},
           {"labels", {{"states", mdp.labels().states}, {"actions", mdp.labels().actions}}}};
  if (mdp.noop_action()) doc["noop_action"] = *mdp.noop_action();
  return doc;
}

TabularMdp mdp_from_json(const Json& doc) {
  const int n = get_field<int>(doc, "n_states");
  const int m = get_field<int>(doc, "n_actions");
  require(n >= 1 && m >= 1, "n_states and n_actions must be positive");
  const Json& transition = doc.at("transition");
  require(transition.is_array() && transition.size() == static_cast<std::size_t>(n),
          "transition must have n_states entries");
  std::vector<double> dense;
  dense.reserve(static_cast<std::size_t>(n) * m * n);
  for (const auto& per_action : transition) {
    require(per_action.is_array() && per_action.size() == static_cast<std::size_t>(m),
            "transition[s] must have n_actions rows");
    for (const auto& row : per_action) {
      require(row.is_array() && row.size() == static_cast<std::size_t>(n),
              "transition[s][a] must have n_states entries");
      for (const auto& p : row) {
        require(p.is_number(), "transition entries must be numbers");
        dense.push_back(p.get<double>());
      }
    }
  }
  MdpLabels labels;
  if (doc.contains("labels") && doc["labels"].is_object()) {
    const Json& l = doc["labels"];
    if (l.contains("states")) labels.states = l["states"].get<std::vector<std::string>>();
    if (l.contains("actions")) labels.actions = l["actions"].get<std::vector<std::string>>();
  }
  std::optional<ActionIndex> noop;
  if (doc.contains("noop_action") && !doc["noop_action"].is_null())
    noop = doc["noop_action"].get<int>();
  const int initial = doc.contains("initial_state") ? doc["initial_state"].get<int>() : 0;
  return TabularMdp(n, m, dense, initial, std::move(labels), noop);
}

Json reward_to_json(const RewardFunction& reward) {
  if (reward.is_state_based()) {
    const Eigen::VectorXd v = reward.state_values();
    return {{"kind", "state"}, {"values", std::vector<double>(v.data(), v.data() + v.size())}};
  }
  const int cols = static_cast<int>(reward.table(1).cols());
  const Eigen::MatrixXd t = reward.table(cols);
  Json rows = Json::array();
  for (Eigen::Index s = 0; s < t.rows(); ++s) {
    Json row = Json::array();
    for (Eigen::Index a = 0; a < t.cols(); ++a) row.push_back(t(s, a));
    rows.push_back(std::move(row));
  }
  return {{"kind", "state-action"}, {"values", std::move(rows)}};
}

RewardFunction reward_from_json(const Json& doc) {
  if (doc.is_array()) return RewardFunction::state_based(vector_from_json(doc));
  const auto kind = get_field<std::string>(doc, "kind");
  if (kind == "state") return RewardFunction::state_based(vector_from_json(doc.at("values")));
  if (kind == "state-action")
    return RewardFunction::state_action(matrix_from_json(doc.at("values")));
  throw ValidationError("unknown reward kind \"" + kind + "\"");
}

Json policy_to_json(const Policy& policy) {
  if (policy.is_deterministic()) return Json(policy.actions());
  const Eigen::MatrixXd& p = policy.probabilities();
  Json rows = Json::array();
  for (Eigen::Index s = 0; s < p.rows(); ++s) {
    Json row = Json::array();
    for (Eigen::Index a = 0; a < p.cols(); ++a) row.push_back(p(s, a));
    rows.push_back(std::move(row));
  }
  return {{"kind", "stochastic"}, {"probabilities", std::move(rows)}};
}

Policy policy_from_json(const Json& doc) {
  if (doc.is_array()) return Policy::deterministic(doc.get<std::vector<int>>());
  const auto kind = get_field<std::string>(doc, "kind");
  if (kind == "deterministic") return Policy::deterministic(get_field<std::vector<int>>(doc, "actions"));
  if (kind == "stochastic") return Policy::stochastic(matrix_from_json(doc.at("probabilities")));
  throw ValidationError("unknown policy kind \"" + kind + "\"");
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write " + path.string());
  out << text;
  require(out.good(), "failed writing " + path.string());
}

std::string format_double(double value) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << value;
  return os.str();
}

}  // namespace dspec
