#include <string>

#include "doctest.h"
#include "lle/error.hpp"
#include "lle/map.hpp"
#include "lle/mapgen.hpp"
#include "lle/world.hpp"

using namespace lle;

TEST_CASE("one-line corridor parses to a one-agent map") {
  MapSpec m = parse_map("S0 . X");
  CHECK(m.width() == 3);
  CHECK(m.height() == 1);
  CHECK(m.n_agents() == 1);
  CHECK(m.start_positions()[0] == Position{0, 0});
  CHECK(m.exit_positions().size() == 1);
  CHECK(m.gem_positions().empty());
  CHECK(max_score(m) == 2);
}

TEST_CASE("serialize emits canonical single-space LF text") {
  MapSpec m = parse_map("S0   .\n.  X\n");
  CHECK(serialize_map(m) == "S0 .\n. X\n");
}

TEST_CASE("round trip is identity on every embedded level") {
  for (int k = 1; k <= 6; ++k) {
    MapSpec m = load_level(k);
    MapSpec again = parse_map(serialize_map(m));
    CHECK(again == m);
    CHECK(serialize_map(again) == serialize_map(m));
  }
}

TEST_CASE("round trip is identity on the blocking exercise map") {
  MapSpec m = toy_map();
  CHECK(m.n_agents() == 2);
  CHECK(m.gem_positions().size() == 2);
  REQUIRE(m.laser_sources().size() == 1);
  CHECK(m.laser_sources()[0].color == 0);
  CHECK(m.laser_sources()[0].direction == Direction::East);
  CHECK(parse_map(serialize_map(m)) == m);
}

TEST_CASE("round trip is identity on generated maps") {
  for (uint64_t seed = 0; seed < 100; ++seed) {
    GenParams p;
    p.width = 5;
    p.height = 5;
    p.n_agents = 2;
    p.n_gems = 1;
    p.n_lasers = 1;
    p.wall_density = 0.1;
    p.seed = seed;
    MapSpec m = generate(p);
    CHECK(parse_map(serialize_map(m)) == m);
  }
}

TEST_CASE("embedded levels match their published shapes") {
  MapSpec l1 = load_level(1);
  CHECK(l1.n_agents() == 1);
  CHECK(l1.gem_positions().size() == 1);
  CHECK(l1.laser_sources().empty());

  MapSpec l5 = load_level(5);
  CHECK(l5.n_agents() == 4);
  CHECK(max_score(l5) == 10);

  MapSpec l6 = load_level(6);
  CHECK(l6.n_agents() == 4);
  CHECK(l6.gem_positions().size() == 4);
  CHECK(l6.laser_sources().size() == 3);
  CHECK(l6.width() == 13);
  CHECK(l6.height() == 12);
  CHECK(l6.exit_positions().size() == 4);
}

TEST_CASE("invalid direction token is rejected with its position") {
  try {
    parse_map("S0 L1Q X");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("direction") != std::string::npos);
    CHECK(e.row == 0);
    CHECK(e.col == 1);
  }
}

TEST_CASE("malformed grids are rejected") {
  CHECK_THROWS_AS(parse_map("S0 . X\n. ."), ParseError);          // ragged rows
  CHECK_THROWS_AS(parse_map("S0 ? X"), ParseError);               // unknown token
  CHECK_THROWS_AS(parse_map(""), ParseError);                     // empty text
  CHECK_THROWS_AS(parse_map("S0 S0 X"), ValidationError);         // duplicate start
  CHECK_THROWS_AS(parse_map("S0 S2 X X X"), ValidationError);     // start ids not 0..n-1
  CHECK_THROWS_AS(parse_map(". . ."), ValidationError);           // no agent
  CHECK_THROWS_AS(parse_map("S0 S1 X"), ValidationError);         // fewer exits than agents
}

TEST_CASE("laser colors beyond the agent count are flagged") {
  MapSpec m = parse_map("S0 . X\nL1E . .");
  CHECK(m.has_unmatched_laser_color());
  CHECK_FALSE(toy_map().has_unmatched_laser_color());
}

TEST_CASE("unknown level index is rejected") {
  CHECK_THROWS_AS(load_level(0), ValidationError);
  CHECK_THROWS_AS(load_level(7), ValidationError);
}
