#pragma once

#include "dspec/mdp.hpp"
#include "dspec/reward_model.hpp"

#include <compare>
#include <map>
#include <tuple>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dspec {

struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell&) const = default;
};

/// Action order shared by both environments.
enum GridAction : ActionIndex { kUp = 0, kLeft = 1, kRight = 2, kDown = 3, kNoop = 4 };
inline constexpr int kGridActions = 5;

Cell step_cell(Cell c, ActionIndex a);

/**
 * Parsed ASCII map: '#' wall, 'A' agent, 'G' goal, 'X' box, 'H' human, ' ' empty.
 * All rows must have the same width. Lines starting with ';' are annotations;
 * "; human_direction: left" makes the human start moving left (default right).
 */
struct GridSpec {
  int width = 0;
  int height = 0;
  std::vector<bool> walls;  // row-major
  Cell agent_start;
  Cell goal;
  std::optional<Cell> box_start;
  std::optional<Cell> human_start;
  int human_direction = +1;  // column step: +1 right, -1 left
  int episode_len = 20;

  bool wall(Cell c) const;  // out-of-bounds counts as wall
  std::vector<Cell> free_cells() const;
};

GridSpec parse_map(std::string_view text);

std::string_view default_options_map();
std::string_view default_damage_map();

enum class EnvKind { options, damage };
EnvKind env_kind_from_string(const std::string& name);
std::string to_string(EnvKind kind);

struct WorldState {
  Cell agent;
  std::optional<Cell> box;    // options
  std::optional<Cell> human;  // damage; nullopt once the human has been hit
  int direction = 0;          // human pacing direction; 0 when absent
  bool side_effect_flag = false;
  bool operator==(const WorldState&) const = default;
};

/// A built gridworld: deterministic MDP over every valid WorldState.
class GridWorld {
 public:
  EnvKind kind() const { return kind_; }
  const GridSpec& spec() const { return spec_; }
  const TabularMdp& mdp() const { return mdp_; }
  /// (1 - gamma) per step on the goal, for every action.
  const RewardFunction& r_env() const { return r_env_; }
  double gamma() const { return gamma_; }
  int n_states() const { return mdp_.n_states(); }

  StateIndex encode(const WorldState& state) const;
  const WorldState& decode(StateIndex s) const { return states_.at(static_cast<std::size_t>(s)); }

  bool side_effect(StateIndex s) const { return side_effect_[static_cast<std::size_t>(s)]; }
  bool on_goal(StateIndex s) const { return decode(s).agent == spec_.goal; }

  friend GridWorld build_options(const GridSpec& spec, double gamma);
  friend GridWorld build_damage(const GridSpec& spec, double gamma);

 private:
  GridWorld(EnvKind kind, GridSpec spec, std::vector<WorldState> states, TabularMdp mdp,
            double gamma);
  using Key = std::tuple<int, int, int, int, bool>;
  static Key key(const GridSpec& spec, const WorldState& state);

  EnvKind kind_;
  GridSpec spec_;
  std::vector<WorldState> states_;
  std::map<Key, StateIndex> index_;
  std::vector<bool> side_effect_;
  TabularMdp mdp_;
  RewardFunction r_env_;
  double gamma_;
};

/// Box cell from which no push can move it.
bool box_stuck(const GridSpec& spec, Cell box);

/// Sokoban pushing; state = (agent, box). Side effect: box_stuck().
GridWorld build_options(const GridSpec& spec, double gamma);
/// Human paces its row, reversing at walls; contact removes it permanently.
/// State = (agent, human cell, direction) or (agent, absent).
GridWorld build_damage(const GridSpec& spec, double gamma);

GridWorld build_environment(EnvKind kind, double gamma, std::optional<std::string_view> map = {});

struct HeldoutDistributions {
  RewardDistribution d_rand;
  RewardDistribution d_true;
  RewardDistribution d_true_inv;
};

/// d_true(s) = [agent on goal] - 2 [side effect]; d_rand member k uses
/// derive_seed(derive_stream(seed, "d_rand"), k).
HeldoutDistributions build_heldout_distributions(const GridWorld& env, int n_rand, Seed seed);

/// States s_0 .. s_steps visited by a deterministic policy on a deterministic MDP.
std::vector<StateIndex> rollout(const TabularMdp& mdp, const Policy& policy, int steps);

/// Map text with the agent drawn at its position in `state`.
std::string render(const GridWorld& env, StateIndex s);

}  // namespace dspec
