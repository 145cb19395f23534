#pragma once

#include <cstdint>

#include "lle/map.hpp"
#include "lle/rng.hpp"
#include "lle/world.hpp"

namespace lle {

// Joint-state budget for the solvability search. Overridable per call and
// via the LLE_STATE_CAP environment variable (read by the CLI).
inline constexpr uint64_t kDefaultStateCap = 10'000'000;

struct GenParams {
  int width = 5;
  int height = 5;
  int n_agents = 1;
  int n_gems = 1;
  int n_lasers = 0;
  double wall_density = 0.0;
  int min_coordination_steps = 0;
  uint64_t seed = 0;
  int max_attempts = 1000;
  uint64_t state_cap = kDefaultStateCap;
};

// Scatters walls at wall_density, places starts, exits, gems and laser
// sources on free tiles, and retries until the solvability oracle accepts
// (and, when min_coordination_steps > 0, the coordination requirement
// holds). Deterministic per seed. Throws GenerationExhausted after
// max_attempts rejected layouts and ValidationError for parameter sets that
// cannot fit the grid.
MapSpec generate(const GenParams& params);

// Exhaustive BFS over joint states (positions x arrived flags x gem set)
// expanding every available joint action with the exact step dynamics.
// True iff some state with all agents arrived is reachable. Throws
// StateSpaceTooLarge when the visited-state count would exceed state_cap
// (a cheap product bound is checked first).
bool solvable(const MapSpec& map, uint64_t state_cap = kDefaultStateCap);

// Minimum, over all shortest completion plans, of the number of steps in
// which some beam is absorbed by a same-color agent while a different-color
// agent stands on the beam's full (agent-free) span. 0 for laser-free maps.
// Throws ValidationError if the map is not solvable.
int coordination_depth(const MapSpec& map, uint64_t state_cap = kDefaultStateCap);

}  // namespace lle
