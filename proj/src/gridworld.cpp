#include "dspec/gridworld.hpp"

#include "dspec/embedded_maps.hpp"
#include "dspec/error.hpp"

#include <sstream>

namespace dspec {

Cell step_cell(Cell c, ActionIndex a) {
  switch (a) {
    case kUp: return {c.row - 1, c.col};
    case kLeft: return {c.row, c.col - 1};
    case kRight: return {c.row, c.col + 1};
    case kDown: return {c.row + 1, c.col};
    default: return c;
  }
}

bool GridSpec::wall(Cell c) const {
  if (c.row < 0 || c.row >= height || c.col < 0 || c.col >= width) return true;
  return walls[static_cast<std::size_t>(c.row * width + c.col)];
}

std::vector<Cell> GridSpec::free_cells() const {
  std::vector<Cell> out;
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c)
      if (!wall({r, c})) out.push_back({r, c});
  return out;
}

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t") - first + 1);
}

}  // namespace

GridSpec parse_map(std::string_view text) {
  std::vector<std::string> rows;
  GridSpec spec;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() == ';') {
      const auto colon = line.find(':');
      const std::string name = trim(line.substr(1, colon == std::string::npos ? std::string::npos : colon - 1));
      const std::string value = colon == std::string::npos ? "" : trim(line.substr(colon + 1));
      if (name == "human_direction") {
        require(value == "left" || value == "right", "human_direction must be left or right");
        spec.human_direction = value == "left" ? -1 : +1;
      } else {
        throw ValidationError("unknown map annotation \"" + name + "\"");
      }
      continue;
    }
    rows.push_back(line);
  }
  while (!rows.empty() && rows.back().empty()) rows.pop_back();
  require(!rows.empty(), "map is empty");

  spec.height = static_cast<int>(rows.size());
  spec.width = static_cast<int>(rows.front().size());
  spec.walls.assign(static_cast<std::size_t>(spec.width * spec.height), false);
  std::optional<Cell> agent, goal;
  for (int r = 0; r < spec.height; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    require(static_cast<int>(row.size()) == spec.width,
            "map row " + std::to_string(r + 1) + " has a different width");
    for (int c = 0; c < spec.width; ++c) {
      auto once = [&](std::optional<Cell>& slot, const char* what) {
        require(!slot, std::string("map has more than one ") + what);
        slot = Cell{r, c};
      };
      switch (row[static_cast<std::size_t>(c)]) {
        case '#': spec.walls[static_cast<std::size_t>(r * spec.width + c)] = true; break;
        case ' ': break;
        case 'A': once(agent, "agent"); break;
        case 'G': once(goal, "goal"); break;
        case 'X': once(spec.box_start, "box"); break;
        case 'H': once(spec.human_start, "human"); break;
        default:
          throw ValidationError("unexpected map character '" + std::string(1, row[static_cast<std::size_t>(c)]) +
                                "' at row " + std::to_string(r + 1));
      }
    }
  }
  require(agent.has_value(), "map has no agent");
  require(goal.has_value(), "map has no goal");
  spec.agent_start = *agent;
  spec.goal = *goal;
  return spec;
}

std::string_view default_options_map() { return detail::kOptionsMap; }
std::string_view default_damage_map() { return detail::kDamageMap; }

EnvKind env_kind_from_string(const std::string& name) {
  if (name == "options") return EnvKind::options;
  if (name == "damage") return EnvKind::damage;
  throw ValidationError("unknown env \"" + name + "\" (expected options or damage)");
}

std::string to_string(EnvKind kind) { return kind == EnvKind::options ? "options" : "damage"; }

// ---------------------------------------------------------------------------

GridWorld::Key GridWorld::key(const GridSpec& spec, const WorldState& state) {
  auto index = [&](const std::optional<Cell>& c) { return c ? c->row * spec.width + c->col : -1; };
  return {index(state.agent), index(state.box), index(state.human), state.direction,
          state.side_effect_flag};
}

GridWorld::GridWorld(EnvKind kind, GridSpec spec, std::vector<WorldState> states, TabularMdp mdp,
                     double gamma)
    : kind_(kind),
      spec_(std::move(spec)),
      states_(std::move(states)),
      mdp_(std::move(mdp)),
      r_env_(RewardFunction::state_based(Eigen::VectorXd::Zero(1))),
      gamma_(gamma) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(mdp_.n_states(), mdp_.n_actions());
  side_effect_.resize(states_.size());
  for (std::size_t i = 0; i < states_.size(); ++i) {
    index_.emplace(key(spec_, states_[i]), static_cast<StateIndex>(i));
    if (states_[i].agent == spec_.goal) r.row(static_cast<Eigen::Index>(i)).setConstant(1.0 - gamma);
    side_effect_[i] = kind_ == EnvKind::options ? box_stuck(spec_, *states_[i].box)
                                                : states_[i].side_effect_flag;
  }
  r_env_ = RewardFunction::state_action(std::move(r));
}

StateIndex GridWorld::encode(const WorldState& state) const {
  const auto it = index_.find(key(spec_, state));
  require(it != index_.end(), "world state is not part of this environment");
  return it->second;
}

bool box_stuck(const GridSpec& spec, Cell box) {
  for (ActionIndex a : {kUp, kLeft, kRight, kDown}) {
    const Cell ahead = step_cell(box, a);
    const Cell behind = {2 * box.row - ahead.row, 2 * box.col - ahead.col};
    if (!spec.wall(ahead) && !spec.wall(behind)) return false;
  }
  return true;
}

namespace {

MdpLabels grid_labels(const GridSpec& spec, const std::vector<WorldState>& states) {
  MdpLabels labels;
  labels.actions = {"up", "left", "right", "down", "noop"};
  auto cell = [](Cell c) { return std::to_string(c.row) + "," + std::to_string(c.col); };
  for (const auto& s : states) {
    std::string name = "agent=" + cell(s.agent);
    if (s.box) name += " box=" + cell(*s.box);
    if (spec.human_start) {
      name += s.human ? " human=" + cell(*s.human) + (s.direction > 0 ? ">" : "<") : " human=absent";
    }
    labels.states.push_back(std::move(name));
  }
  return labels;
}

void check_start(const GridSpec& spec, double gamma) {
  require(gamma > 0.0 && gamma < 1.0, "environment discount must lie in (0, 1)");
  require(spec.agent_start != spec.goal, "agent must not start on the goal");
}

TabularMdp deterministic_mdp(const GridSpec& spec, const std::vector<WorldState>& states,
                             const std::vector<StateIndex>& next, StateIndex initial) {
  std::vector<std::vector<Successor>> rows(next.size());
  for (std::size_t i = 0; i < next.size(); ++i) rows[i] = {{next[i], 1.0}};
  return TabularMdp::from_rows(static_cast<int>(states.size()), kGridActions, rows, initial,
                               grid_labels(spec, states), kNoop);
}

}  // namespace

GridWorld build_options(const GridSpec& spec, double gamma) {
  check_start(spec, gamma);
  require(spec.box_start.has_value(), "options map needs a box");
  require(!spec.human_start.has_value(), "options map must not contain a human");
  require(*spec.box_start != spec.agent_start && *spec.box_start != spec.goal,
          "box must start on its own cell");

  std::vector<WorldState> states;
  std::map<std::pair<Cell, Cell>, StateIndex> index;
  const auto cells = spec.free_cells();
  for (Cell agent : cells)
    for (Cell box : cells)
      if (agent != box) {
        index[{agent, box}] = static_cast<StateIndex>(states.size());
        states.push_back({agent, box, std::nullopt, 0, false});
      }

  std::vector<StateIndex> next(states.size() * kGridActions);
  for (std::size_t s = 0; s < states.size(); ++s) {
    const Cell agent = states[s].agent;
    const Cell box = *states[s].box;
    for (ActionIndex a = 0; a < kGridActions; ++a) {
      Cell new_agent = step_cell(agent, a);
      Cell new_box = box;
      if (spec.wall(new_agent)) {
        new_agent = agent;
      } else if (new_agent == box) {
        const Cell pushed = step_cell(box, a);
        if (spec.wall(pushed)) new_agent = agent;
        else new_box = pushed;
      }
      next[s * kGridActions + static_cast<std::size_t>(a)] = index.at({new_agent, new_box});
    }
  }
  const StateIndex initial = index.at({spec.agent_start, *spec.box_start});
  TabularMdp mdp = deterministic_mdp(spec, states, next, initial);
  return GridWorld(EnvKind::options, spec, std::move(states), std::move(mdp), gamma);
}

GridWorld build_damage(const GridSpec& spec, double gamma) {
  check_start(spec, gamma);
  require(spec.human_start.has_value(), "damage map needs a human");
  require(!spec.box_start.has_value(), "damage map must not contain a box");
  require(*spec.human_start != spec.agent_start && *spec.human_start != spec.goal,
          "human must start on its own cell");

  const int human_row = spec.human_start->row;
  std::vector<Cell> human_cells;
  for (int c = 0; c < spec.width; ++c)
    if (!spec.wall({human_row, c})) human_cells.push_back({human_row, c});

  std::vector<WorldState> states;
  std::map<GridWorld::Key, StateIndex> index;
  auto add = [&](const WorldState& w) {
    index[GridWorld::Key{w.agent.row * spec.width + w.agent.col,
                         -1,
                         w.human ? w.human->row * spec.width + w.human->col : -1,
                         w.direction, w.side_effect_flag}] = static_cast<StateIndex>(states.size());
    states.push_back(w);
  };
  const auto cells = spec.free_cells();
  for (Cell agent : cells)
    for (Cell human : human_cells)
      for (int dir : {+1, -1})
        if (agent != human) add({agent, std::nullopt, human, dir, false});
  for (Cell agent : cells) add({agent, std::nullopt, std::nullopt, 0, true});

  auto lookup = [&](const WorldState& w) {
    return index.at({w.agent.row * spec.width + w.agent.col, -1,
                     w.human ? w.human->row * spec.width + w.human->col : -1, w.direction,
                     w.side_effect_flag});
  };

  std::vector<StateIndex> next(states.size() * kGridActions);
  for (std::size_t s = 0; s < states.size(); ++s) {
    const WorldState& w = states[s];
    for (ActionIndex a = 0; a < kGridActions; ++a) {
      Cell agent = step_cell(w.agent, a);
      if (spec.wall(agent)) agent = w.agent;
      WorldState out{agent, std::nullopt, std::nullopt, 0, true};
      if (w.human) {
        int dir = w.direction;
        Cell human = {w.human->row, w.human->col + dir};
        if (spec.wall(human)) {
          dir = -dir;
          human = {w.human->row, w.human->col + dir};
          if (spec.wall(human)) {  // boxed in: stays put
            dir = w.direction;
            human = *w.human;
          }
        }
        if (agent != *w.human && agent != human) out = {agent, std::nullopt, human, dir, false};
      }
      next[s * kGridActions + static_cast<std::size_t>(a)] = lookup(out);
    }
  }
  const StateIndex initial =
      lookup({spec.agent_start, std::nullopt, spec.human_start, spec.human_direction, false});
  TabularMdp mdp = deterministic_mdp(spec, states, next, initial);
  return GridWorld(EnvKind::damage, spec, std::move(states), std::move(mdp), gamma);
}

GridWorld build_environment(EnvKind kind, double gamma, std::optional<std::string_view> map) {
  if (kind == EnvKind::options)
    return build_options(parse_map(map.value_or(default_options_map())), gamma);
  return build_damage(parse_map(map.value_or(default_damage_map())), gamma);
}

// ---------------------------------------------------------------------------

HeldoutDistributions build_heldout_distributions(const GridWorld& env, int n_rand, Seed seed) {
  require(n_rand >= 1, "n_rand_samples must be at least 1");
  const int n = env.n_states();
  Eigen::VectorXd truth(n);
  for (int s = 0; s < n; ++s)
    truth[s] = (env.on_goal(s) ? 1.0 : 0.0) - (env.side_effect(s) ? 2.0 : 0.0);

  const Seed stream = derive_stream(seed, "d_rand");
  std::vector<Eigen::VectorXd> members(static_cast<std::size_t>(n_rand));
  for (std::size_t k = 0; k < members.size(); ++k) {
    Rng rng(derive_seed(stream, k));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    members[k].resize(n);
    for (int s = 0; s < n; ++s) members[k][s] = u(rng);
  }
  return {RewardDistribution::empirical(std::move(members)), RewardDistribution::point_mass(truth),
          RewardDistribution::point_mass(-truth)};
}

std::vector<StateIndex> rollout(const TabularMdp& mdp, const Policy& policy, int steps) {
  require(policy.is_deterministic(), "rollout needs a deterministic policy");
  policy.check_compatible(mdp);
  std::vector<StateIndex> path{mdp.initial_state()};
  for (int i = 0; i < steps; ++i) {
    const auto successors = mdp.successors(path.back(), policy.action(path.back()));
    require(successors.size() == 1, "rollout needs deterministic transitions");
    path.push_back(successors.front().state);
  }
  return path;
}

std::string render(const GridWorld& env, StateIndex s) {
  const auto& spec = env.spec();
  const WorldState& w = env.decode(s);
  std::string out;
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      const Cell cell{r, c};
      char ch = spec.wall(cell) ? '#' : ' ';
      if (cell == spec.goal) ch = 'G';
      if (w.box && *w.box == cell) ch = 'X';
      if (w.human && *w.human == cell) ch = 'H';
      if (w.agent == cell) ch = 'A';
      out += ch;
    }
    out += '\n';
  }
  return out;
}

}  // namespace dspec
