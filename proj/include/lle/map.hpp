#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lle/geometry.hpp"

namespace lle {

enum class TileKind : uint8_t { Floor, Wall, Gem, Exit, Start, LaserSource };

struct Tile {
  TileKind kind = TileKind::Floor;
  int agent_id = -1;                          // Start tiles only
  int laser_color = -1;                       // LaserSource tiles only
  Direction laser_direction = Direction::North;

  friend bool operator==(const Tile&, const Tile&) = default;
};

struct LaserSourceSpec {
  Position pos;
  int color = 0;
  Direction direction = Direction::North;

  friend bool operator==(const LaserSourceSpec&, const LaserSourceSpec&) = default;
};

// Static level description. Built through from_grid, which validates the
// invariants: at least one agent, start tiles S0..S(n-1) each exactly once,
// at least as many exits as agents. Laser colors >= n_agents are legal but
// flagged: no agent can block such a beam.
class MapSpec {
 public:
  static MapSpec from_grid(std::vector<std::vector<Tile>> tiles);

  int width() const { return width_; }
  int height() const { return height_; }
  int n_agents() const { return static_cast<int>(starts_.size()); }

  bool in_bounds(Position p) const {
    return p.row >= 0 && p.row < height_ && p.col >= 0 && p.col < width_;
  }
  const Tile& at(Position p) const { return tiles_[p.row][p.col]; }

  // A tile an agent could ever occupy (walls and laser sources are not).
  bool is_enterable(Position p) const {
    if (!in_bounds(p)) return false;
    TileKind k = at(p).kind;
    return k != TileKind::Wall && k != TileKind::LaserSource;
  }

  const std::vector<Position>& start_positions() const { return starts_; }  // index = agent id
  const std::vector<Position>& exit_positions() const { return exits_; }
  const std::vector<Position>& gem_positions() const { return gems_; }
  const std::vector<LaserSourceSpec>& laser_sources() const { return sources_; }

  // Index into gem_positions() for the gem at p, or -1.
  int gem_index(Position p) const { return gem_index_[p.row * width_ + p.col]; }

  bool is_exit(Position p) const { return at(p).kind == TileKind::Exit; }

  // True when some laser color is >= n_agents (an unblockable beam).
  bool has_unmatched_laser_color() const { return unmatched_color_; }

  friend bool operator==(const MapSpec& a, const MapSpec& b) { return a.tiles_ == b.tiles_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::vector<Tile>> tiles_;
  std::vector<Position> starts_;
  std::vector<Position> exits_;
  std::vector<Position> gems_;
  std::vector<LaserSourceSpec> sources_;
  std::vector<int> gem_index_;
  bool unmatched_color_ = false;
};

// Text grammar, one whitespace-separated token per tile:
//   .       floor
//   @       wall
//   G       gem
//   X       exit
//   S<k>    start tile of agent k
//   L<k><D> laser source of color k facing D in {N,E,S,W}
// Rows are newline-separated and must all have the same number of tokens.
// Blank lines are ignored.
MapSpec parse_map(std::string_view text);

// Canonical form: single-space separated tokens, each row terminated by LF.
// parse_map(serialize_map(m)) is structurally equal to m.
std::string serialize_map(const MapSpec& map);

// The six embedded standard levels, k in 1..6.
MapSpec load_level(int k);

// Canonical map text of an embedded level (what serialize_map produces).
std::string level_text(int k);

// Small two-agent laser-crossing exercise: the red agent must hold the beam
// while the yellow agent crosses. Used by tests and coordination analysis.
MapSpec toy_map();
std::string toy_map_text();

}  // namespace lle
