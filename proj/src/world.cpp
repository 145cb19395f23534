#include "lle/world.hpp"

#include <algorithm>

#include "lle/error.hpp"

namespace lle {

namespace {

bool occupied_by_other(const std::vector<AgentState>& agents, Position p, int except_agent) {
  for (size_t i = 0; i < agents.size(); ++i) {
    if (static_cast<int>(i) == except_agent) continue;
    if (agents[i].alive && agents[i].position == p) return true;
  }
  return false;
}

}  // namespace

int max_score(const MapSpec& map) {
  return map.n_agents() + static_cast<int>(map.gem_positions().size()) + 1;
}

int time_limit(const MapSpec& map) { return (map.width() * map.height() + 1) / 2; }

BeamMap compute_beams(const MapSpec& map, const std::vector<AgentState>& agents) {
  BeamMap beams(map.height(), map.width());
  const auto& sources = map.laser_sources();
  for (size_t i = 0; i < sources.size(); ++i) {
    const auto& src = sources[i];
    Beam beam;
    beam.source_index = static_cast<int>(i);
    Position p = neighbor(src.pos, src.direction);
    while (map.in_bounds(p)) {
      const Tile& t = map.at(p);
      if (t.kind == TileKind::Wall || t.kind == TileKind::LaserSource) break;
      beam.tiles.push_back(p);
      bool blocked = false;
      for (const auto& a : agents) {
        if (a.alive && a.color == src.color && a.position == p) {
          blocked = true;
          break;
        }
      }
      if (blocked) break;
      p = neighbor(p, src.direction);
    }
    beams.add(std::move(beam), src.color);
  }
  return beams;
}

World::World(std::shared_ptr<const MapSpec> map) : map_(std::move(map)) {
  const auto& starts = map_->start_positions();
  agents_.reserve(starts.size());
  for (size_t i = 0; i < starts.size(); ++i)
    agents_.push_back(AgentState{starts[i], static_cast<int>(i), true, false});
  gem_present_.assign(map_->gem_positions().size(), 1);
  gems_remaining_ = static_cast<int>(gem_present_.size());
  beams_ = compute_beams(*map_, agents_);
}

World World::from_state(std::shared_ptr<const MapSpec> map, std::span<const Position> positions,
                        std::span<const bool> arrived, std::span<const uint8_t> gems_present) {
  World w(std::move(map));
  const MapSpec& m = *w.map_;
  if (static_cast<int>(positions.size()) != m.n_agents() || arrived.size() != positions.size())
    throw ContractViolation("from_state: need one position and arrived flag per agent");
  if (gems_present.size() != m.gem_positions().size())
    throw ContractViolation("from_state: need one presence flag per gem");
  for (size_t i = 0; i < positions.size(); ++i) {
    if (!m.is_enterable(positions[i]))
      throw ContractViolation("from_state: agent " + std::to_string(i) + " on a blocked tile");
    for (size_t j = i + 1; j < positions.size(); ++j)
      if (positions[i] == positions[j])
        throw ContractViolation("from_state: agents " + std::to_string(i) + " and " +
                                std::to_string(j) + " share a tile");
    if (arrived[i] && !m.is_exit(positions[i]))
      throw ContractViolation("from_state: agent " + std::to_string(i) +
                              " arrived but not on an exit");
    w.agents_[i].position = positions[i];
    w.agents_[i].arrived = arrived[i];
  }
  w.gems_remaining_ = 0;
  for (size_t g = 0; g < gems_present.size(); ++g) {
    w.gem_present_[g] = gems_present[g] ? 1 : 0;
    if (w.gem_present_[g]) ++w.gems_remaining_;
  }
  w.done_ = w.all_arrived();
  w.beams_ = compute_beams(m, w.agents_);
  return w;
}

int World::arrived_count() const {
  int k = 0;
  for (const auto& a : agents_)
    if (a.arrived) ++k;
  return k;
}

std::vector<Position> World::remaining_gem_positions() const {
  std::vector<Position> out;
  const auto& gems = map_->gem_positions();
  for (size_t i = 0; i < gems.size(); ++i)
    if (gem_present_[i]) out.push_back(gems[i]);
  return out;
}

std::vector<ActionMask> World::available_actions() const {
  std::vector<ActionMask> masks(agents_.size());
  for (size_t i = 0; i < agents_.size(); ++i) {
    ActionMask& m = masks[i];
    m.fill(false);
    m[static_cast<int>(Action::Stay)] = true;
    const AgentState& a = agents_[i];
    if (a.arrived || !a.alive) continue;
    for (Action act : {Action::North, Action::East, Action::South, Action::West}) {
      Position t = target_of(a.position, act);
      if (!map_->in_bounds(t)) continue;
      if (!map_->is_enterable(t)) continue;
      if (occupied_by_other(agents_, t, static_cast<int>(i))) continue;
      m[static_cast<int>(act)] = true;
    }
  }
  return masks;
}

StepOutcome World::step(std::span<const Action> joint_action) {
  if (done_) throw ContractViolation("step() called on a finished episode");
  if (static_cast<int>(joint_action.size()) != n_agents())
    throw ContractViolation("expected " + std::to_string(n_agents()) + " actions, got " +
                            std::to_string(joint_action.size()));
  auto masks = available_actions();
  for (size_t i = 0; i < joint_action.size(); ++i)
    if (!masks[i][static_cast<int>(joint_action[i])])
      throw ContractViolation("action " + std::string(action_name(joint_action[i])) +
                              " unavailable for agent " + std::to_string(i));

  StepOutcome out;

  // Phase 1: demote all agents that target the same tile to Stay. Demoted
  // agents return to tiles nobody else may target, so one pass suffices.
  std::vector<Position> targets(agents_.size());
  for (size_t i = 0; i < agents_.size(); ++i)
    targets[i] = target_of(agents_[i].position, joint_action[i]);
  std::vector<uint8_t> demoted(agents_.size(), 0);
  for (size_t i = 0; i < agents_.size(); ++i) {
    if (joint_action[i] == Action::Stay) continue;
    for (size_t j = i + 1; j < agents_.size(); ++j) {
      if (joint_action[j] == Action::Stay) continue;
      if (targets[i] == targets[j]) demoted[i] = demoted[j] = 1;
    }
  }
  for (size_t i = 0; i < agents_.size(); ++i) {
    if (demoted[i]) {
      out.events.push_back({EventKind::VertexConflict, static_cast<int>(i), targets[i]});
      targets[i] = agents_[i].position;
    }
  }

  // Phase 2: simultaneous move.
  for (size_t i = 0; i < agents_.size(); ++i) agents_[i].position = targets[i];

  // Phase 3: beams from post-move positions.
  beams_ = compute_beams(*map_, agents_);

  // Phase 4: an agent covered by any beam of a color other than its own dies.
  for (size_t i = 0; i < agents_.size(); ++i) {
    AgentState& a = agents_[i];
    if (!a.alive || a.arrived) continue;
    if (beams_.lethal_for(a.position, a.color)) {
      a.alive = false;
      out.deaths.push_back(static_cast<int>(i));
      out.events.push_back({EventKind::AgentDied, static_cast<int>(i), a.position});
    }
  }

  // Phase 5: a death step scores the death penalty alone; gems stay on the
  // board and no arrivals register.
  if (!out.deaths.empty()) {
    out.reward = -static_cast<double>(out.deaths.size());
    out.episode_done = true;
    done_ = true;
    ++step_count_;
    return out;
  }

  // Phase 6: gems, then arrivals, then the finish bonus.
  for (size_t i = 0; i < agents_.size(); ++i) {
    AgentState& a = agents_[i];
    if (a.arrived) continue;
    int g = map_->gem_index(a.position);
    if (g >= 0 && gem_present_[g]) {
      gem_present_[g] = 0;
      --gems_remaining_;
      out.reward += 1.0;
      out.gems_collected.push_back(a.position);
      out.events.push_back({EventKind::GemCollected, static_cast<int>(i), a.position});
    }
  }
  for (size_t i = 0; i < agents_.size(); ++i) {
    AgentState& a = agents_[i];
    if (a.arrived) continue;
    if (map_->is_exit(a.position)) {
      a.arrived = true;
      out.reward += 1.0;
      out.events.push_back({EventKind::AgentExited, static_cast<int>(i), a.position});
    }
  }
  if (all_arrived()) {
    out.reward += 1.0;
    out.episode_done = true;
    done_ = true;
    out.events.push_back({EventKind::Finished, -1, Position{-1, -1}});
  }
  ++step_count_;
  return out;
}

}  // namespace lle
