#include "lle/observation.hpp"

namespace lle {

EncodingShape encoding_shape(const MapSpec& map) {
  return {2 * map.n_agents() + 3, map.height(), map.width()};
}

StateEncoding encode_state(const World& world) {
  const MapSpec& map = world.map();
  const int n = map.n_agents();
  StateEncoding enc(encoding_shape(map));

  for (int i = 0; i < n; ++i) {
    const AgentState& a = world.agents()[i];
    if (a.alive) enc.at(i, a.position.row, a.position.col) = 1;
  }

  // Beam tiles first, then sources: a source cell is -1 in its color layer
  // even if another beam of the same color passes over it (it cannot).
  const auto& sources = map.laser_sources();
  for (const Beam& beam : world.beams().beams()) {
    int color = sources[beam.source_index].color;
    if (color >= n) continue;  // no layer for unmatched colors
    for (Position p : beam.tiles) enc.at(n + color, p.row, p.col) = 1;
  }
  for (const auto& src : sources) {
    if (src.color >= n) continue;
    enc.at(n + src.color, src.pos.row, src.pos.col) = -1;
  }

  const int walls = 2 * n, gems = 2 * n + 1, exits = 2 * n + 2;
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      TileKind k = map.at({r, c}).kind;
      if (k == TileKind::Wall || k == TileKind::LaserSource) enc.at(walls, r, c) = 1;
      if (k == TileKind::Exit) enc.at(exits, r, c) = 1;
    }
  }
  for (Position p : world.remaining_gem_positions()) enc.at(gems, p.row, p.col) = 1;
  return enc;
}

}  // namespace lle
