#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "lle/map.hpp"

namespace lle {

struct AgentState {
  Position position;
  int color = 0;          // == agent id
  bool alive = true;
  bool arrived = false;   // standing on an exit tile; arrived implies alive

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

// One laser beam: the tiles currently covered, ordered from the source
// outward. The beam stops before walls, laser sources and the grid edge; a
// matching-color agent absorbs it, so its tile is the last one covered.
// Non-matching agents do not interrupt the beam.
struct Beam {
  int source_index = 0;
  std::vector<Position> tiles;
};

class BeamMap {
 public:
  BeamMap() = default;
  BeamMap(int height, int width) : width_(width), cover_(static_cast<size_t>(height) * width, 0) {}

  const std::vector<Beam>& beams() const { return beams_; }

  // Bitmask of beam colors covering p.
  uint32_t colors_at(Position p) const { return cover_[p.row * width_ + p.col]; }

  bool covered(Position p, int color) const {
    return (colors_at(p) >> color) & 1u;
  }

  // True when any covering beam's color differs from `color`.
  bool lethal_for(Position p, int color) const {
    return (colors_at(p) & ~(1u << color)) != 0;
  }

  void add(Beam beam, int color) {
    for (Position p : beam.tiles) cover_[p.row * width_ + p.col] |= 1u << color;
    beams_.push_back(std::move(beam));
  }

  friend bool operator==(const BeamMap& a, const BeamMap& b) {
    return a.cover_ == b.cover_;
  }

 private:
  int width_ = 0;
  std::vector<uint32_t> cover_;
  std::vector<Beam> beams_;
};

enum class EventKind : uint8_t {
  VertexConflict,  // agent demoted to Stay
  GemCollected,
  AgentExited,
  AgentDied,
  Finished,        // all agents arrived
};

struct Event {
  EventKind kind;
  int agent = -1;
  Position pos{};
};

struct StepOutcome {
  double reward = 0.0;
  std::vector<int> deaths;             // agent ids, ascending
  std::vector<Position> gems_collected;
  bool episode_done = false;
  std::vector<Event> events;
};

// Beam occupancy for the given agent placement.
BeamMap compute_beams(const MapSpec& map, const std::vector<AgentState>& agents);

// n + g + 1: one point per gem, one per agent exited, one for finishing.
int max_score(const MapSpec& map);

// Episode cap used by the harness: width*height/2 rounded to nearest,
// ties rounding up.
int time_limit(const MapSpec& map);

// Simultaneous-move grid world. A World is a plain value: copy it to branch,
// step it to advance. All randomness lives outside; identical (world, joint
// action) pairs always produce identical results. The map is shared between
// copies, so copying a World is cheap.
class World {
 public:
  explicit World(MapSpec map) : World(std::make_shared<const MapSpec>(std::move(map))) {}
  explicit World(std::shared_ptr<const MapSpec> map);

  static World reset(MapSpec map) { return World(std::move(map)); }

  // Rebuilds a mid-episode state: one position per agent (distinct,
  // enterable), arrived flags (arrived requires standing on an exit), and one
  // presence flag per gem. All agents are alive.
  static World from_state(std::shared_ptr<const MapSpec> map, std::span<const Position> positions,
                          std::span<const bool> arrived, std::span<const uint8_t> gems_present);

  const MapSpec& map() const { return *map_; }
  const std::shared_ptr<const MapSpec>& map_ptr() const { return map_; }
  int n_agents() const { return static_cast<int>(agents_.size()); }
  const std::vector<AgentState>& agents() const { return agents_; }
  const BeamMap& beams() const { return beams_; }
  int step_count() const { return step_count_; }
  bool done() const { return done_; }

  bool gem_present(int gem_index) const { return gem_present_[gem_index] != 0; }
  const std::vector<uint8_t>& gems_present() const { return gem_present_; }
  int gems_remaining() const { return gems_remaining_; }
  std::vector<Position> remaining_gem_positions() const;

  int arrived_count() const;
  bool all_arrived() const { return arrived_count() == n_agents(); }
  double exit_rate() const { return static_cast<double>(arrived_count()) / n_agents(); }

  // Per-agent availability at the current state. Stay is always available;
  // moves into walls, laser sources, off-grid tiles or currently occupied
  // tiles are not. An arrived agent may only Stay.
  std::vector<ActionMask> available_actions() const;

  // Applies one simultaneous joint action. Phases: vertex-conflict demotion
  // to Stay, movement, beam recomputation, deaths, then reward. On a death
  // step the reward is -1 per death and replaces any gem/exit reward; gems
  // and arrivals are not registered that step.
  StepOutcome step(std::span<const Action> joint_action);

  friend bool operator==(const World& a, const World& b) {
    return a.agents_ == b.agents_ && a.gem_present_ == b.gem_present_ &&
           a.step_count_ == b.step_count_ && a.done_ == b.done_ &&
           (a.map_ == b.map_ || *a.map_ == *b.map_);
  }

 private:
  std::shared_ptr<const MapSpec> map_;
  std::vector<AgentState> agents_;
  std::vector<uint8_t> gem_present_;   // by gem index
  int gems_remaining_ = 0;
  BeamMap beams_;
  int step_count_ = 0;
  bool done_ = false;
};

}  // namespace lle
