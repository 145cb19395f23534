#include <memory>
#include <vector>

#include "doctest.h"
#include "lle/map.hpp"
#include "lle/observation.hpp"
#include "lle/world.hpp"
#include "test_support.hpp"

using namespace lle;

namespace {

int count_value(const StateEncoding& e, int channel, int8_t v) {
  int k = 0;
  for (int r = 0; r < e.shape().height; ++r)
    for (int c = 0; c < e.shape().width; ++c) k += e.at(channel, r, c) == v;
  return k;
}

}  // namespace

TEST_CASE("channel count is two per agent plus three shared layers") {
  CHECK(encoding_shape(load_level(6)) == EncodingShape{11, 12, 13});
  CHECK(encoding_shape(load_level(5)).channels == 11);
  CHECK(encoding_shape(parse_map("S0 . X")) == EncodingShape{5, 1, 3});
  CHECK(encoding_shape(toy_map()) == EncodingShape{7, 7, 7});
}

TEST_CASE("start state of the large level encodes every layer correctly") {
  MapSpec map = load_level(6);
  World w(map);
  StateEncoding e = encode_state(w);
  const int n = 4;
  REQUIRE(e.shape() == EncodingShape{11, 12, 13});

  // One agent marker per layer, at the start tile.
  for (int i = 0; i < n; ++i) {
    CHECK(count_value(e, i, 1) == 1);
    CHECK(e.at(i, map.start_positions()[i].row, map.start_positions()[i].col) == 1);
  }

  // Laser layers: covered tiles are 1, the source cell is -1. The eastward
  // color-0 source on row 4 reaches up to the wall block.
  CHECK(e.at(n + 0, 4, 0) == -1);
  for (int c = 1; c <= 6; ++c) CHECK(e.at(n + 0, 4, c) == 1);
  CHECK(e.at(n + 0, 4, 7) == 0);
  CHECK(count_value(e, n + 3, 1) == 0);   // no color-3 source on this map
  CHECK(count_value(e, n + 3, -1) == 0);

  // Walls layer holds walls and laser sources.
  int wall_tiles = 0;
  for (int r = 0; r < map.height(); ++r)
    for (int c = 0; c < map.width(); ++c) {
      TileKind k = map.at({r, c}).kind;
      bool expect = k == TileKind::Wall || k == TileKind::LaserSource;
      CHECK(e.at(2 * n, r, c) == (expect ? 1 : 0));
      wall_tiles += expect;
    }
  CHECK(wall_tiles > 0);

  CHECK(count_value(e, 2 * n + 1, 1) == 4);  // gems
  CHECK(count_value(e, 2 * n + 2, 1) == 4);  // exits

  // Value alphabet: {-1, 0, 1}, with -1 exactly at the source cells.
  int minus = 0;
  for (int ch = 0; ch < e.shape().channels; ++ch)
    for (int r = 0; r < map.height(); ++r)
      for (int c = 0; c < map.width(); ++c) {
        int8_t v = e.at(ch, r, c);
        CHECK((v == -1 || v == 0 || v == 1));
        if (v == -1) {
          ++minus;
          CHECK(map.at({r, c}).kind == TileKind::LaserSource);
          CHECK(ch == n + map.at({r, c}).laser_color);
        }
      }
  CHECK(minus == 3);
}

TEST_CASE("a blocked beam encodes only up to the blocker tile") {
  auto map = std::make_shared<const MapSpec>(toy_map());
  const bool arrived[] = {false, false};
  const uint8_t gems[] = {1, 1};
  World w = World::from_state(map, std::vector<Position>{{3, 2}, {0, 4}}, arrived, gems);
  StateEncoding e = encode_state(w);
  const int laser0 = 2;  // n = 2
  CHECK(e.at(laser0, 3, 0) == -1);
  CHECK(e.at(laser0, 3, 1) == 1);
  CHECK(e.at(laser0, 3, 2) == 1);  // blocker tile stays covered
  CHECK(e.at(laser0, 3, 3) == 0);
  CHECK(e.at(laser0, 3, 4) == 0);
  CHECK(e.at(laser0, 3, 5) == 0);
}

TEST_CASE("collecting a gem clears exactly its marker") {
  World w(load_level(1));
  StateEncoding before = encode_state(w);
  CHECK(count_value(before, 3, 1) == 1);
  for (Action a : {Action::South, Action::South, Action::East, Action::East})
    w.step(std::vector<Action>{a});
  StateEncoding after = encode_state(w);
  CHECK(count_value(after, 3, 1) == 0);          // gems layer emptied
  CHECK(after.at(0, 3, 3) == 1);                 // agent moved onto the gem tile
  for (int ch = 1; ch < 5; ++ch) {
    if (ch == 3) continue;
    for (int r = 0; r < 7; ++r)
      for (int c = 0; c < 7; ++c) CHECK(after.at(ch, r, c) == before.at(ch, r, c));
  }
}

TEST_CASE("arrived agents stay visible, dead agents vanish") {
  World arrived_world(parse_map("S0 X"));
  arrived_world.step(std::vector<Action>{Action::East});
  StateEncoding e1 = encode_state(arrived_world);
  CHECK(e1.at(0, 0, 1) == 1);

  World death_world(toy_map());
  for (int k = 0; k < 3; ++k)
    death_world.step(std::vector<Action>{Action::South, Action::South});
  death_world.step(std::vector<Action>{Action::North, Action::Stay});
  REQUIRE_FALSE(death_world.agents()[1].alive);
  StateEncoding e2 = encode_state(death_world);
  CHECK(count_value(e2, 1, 1) == 0);
  CHECK(count_value(e2, 0, 1) == 1);
}

TEST_CASE("values stay in the ternary alphabet under random play") {
  Rng rng(77);
  for (uint64_t seed = 0; seed < 20; ++seed) {
    MapSpec map = lletest::random_small_map(seed + 300);
    World w(map);
    const int limit = time_limit(map);
    while (!w.done() && w.step_count() < limit) {
      w.step(lletest::random_joint_action(w.available_actions(), rng));
      StateEncoding e = encode_state(w);
      const int n = map.n_agents();
      for (int ch = 0; ch < e.shape().channels; ++ch)
        for (int r = 0; r < map.height(); ++r)
          for (int c = 0; c < map.width(); ++c) {
            int8_t v = e.at(ch, r, c);
            CHECK((v == -1 || v == 0 || v == 1));
            if (v == -1) {
              CHECK(map.at({r, c}).kind == TileKind::LaserSource);
              CHECK(ch == n + map.at({r, c}).laser_color);
            }
          }
    }
  }
}
