#include "lle/error.hpp"
#include "lle/map.hpp"

namespace lle {

namespace {

// Level 1: one agent, one gem, no lasers.
constexpr const char* kLevel1 = R"(. . . . . . .
. S0 . . . . .
. . . . . . .
. . . G . . .
. . . . . . .
. . . . . X .
. . . . . . .
)";

// Level 2: two agents share one gem, no lasers.
constexpr const char* kLevel2 = R"(. . . . . . .
. S0 . . . S1 .
. . . . . . .
. . . G . . .
. . . . . . .
. X . . . X .
. . . . . . .
)";

// Level 3: a vertical laser splits the map; agent 1 crosses only while
// agent 0 stands in the beam.
constexpr const char* kLevel3 = R"(. . . L0S . . .
. . . . . . .
S0 . . . . . S1
. . . . . . .
. . . G . . .
. . . . . . .
X . X . . . .
)";

// Level 4: two stacked horizontal lasers of different colors; each agent
// must block its own beam while the other crosses.
constexpr const char* kLevel4 = R"(. . S0 . S1 . .
. . . . . . .
L0E . . . . . @
. . . . . . .
L1E . . . . . @
. . . . . . .
. G X . . X .
)";

// Level 5: four agents, five gems, two horizontal lasers gating the
// lower half of the map.
constexpr const char* kLevel5 = R"(. S0 . S2 . S3 . S1 .
. . . . . . . . .
L0E . . . G . . . @
. . . . . . . . .
. G . . . . . G .
. . . . . . . . .
L1E . . . G . . . @
. . . . . . . . .
X X . G . . . X X
)";

// Level 6: four agents, four gems, three lasers. The top-left gem sits in
// a pocket guarded by a green laser, and two full-width beams gate the
// lower half so agents 0 and 1 must block for the team.
constexpr const char* kLevel6 = R"(G L2S . . S0 S1 S2 S3 . . . . .
. . . . . . . . . . . . .
. . . . . . . . . . . . .
@ @ . . . . . . . . . . .
L0E . . . . . . @ @ @ @ @ @
. . . . . . . . . . . . .
. . . . . . . . . . . . L1W
. . . . . . . @ . G . . .
. . . . . . . @ @ @ @ @ @
. . . . . . . . . . . . .
. . . . G . . . . . X X .
. . . . . . . . . . X X G
)";

// Two agents, one horizontal laser, two gems. Agent 0 must stand in its
// own beam while agent 1 crosses.
constexpr const char* kToy = R"(. . S0 . S1 . .
. . . . . . .
. . . . . . .
L0E . . . . . @
. . . G . . .
. G . . . . .
X . . X . . .
)";

}  // namespace

std::string level_text(int level) {
  switch (level) {
    case 1: return kLevel1;
    case 2: return kLevel2;
    case 3: return kLevel3;
    case 4: return kLevel4;
    case 5: return kLevel5;
    case 6: return kLevel6;
    default: throw ValidationError("unknown level " + std::to_string(level) + " (expected 1..6)");
  }
}

MapSpec load_level(int level) { return parse_map(level_text(level)); }

std::string toy_map_text() { return kToy; }

MapSpec toy_map() { return parse_map(kToy); }

}  // namespace lle
