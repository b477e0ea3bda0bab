#pragma once

#include "dspec/mdp.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace dspec {

using Json = nlohmann::json;

/// {"n_states", "n_actions", "transition": [s][a][s'], "initial_state", "labels",
///  optional "noop_action"}.
Json mdp_to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const Json& doc);

/// {"kind": "state" | "state-action", "values": [...] | [[...]]}; a bare array
/// is read as a state-based reward.
Json reward_to_json(const RewardFunction& reward);
RewardFunction reward_from_json(const Json& doc);

/// Deterministic policies are written as a state -> action array; stochastic ones as
/// {"kind": "stochastic", "probabilities": [[...]]}.
Json policy_to_json(const Policy& policy);
Policy policy_from_json(const Json& doc);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// %.17g formatting; parses back to the same double.
std::string format_double(double value);

}  // namespace dspec
