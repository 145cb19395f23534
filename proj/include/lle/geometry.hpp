#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>

namespace lle {

struct Position {
  int row = 0;
  int col = 0;

  friend bool operator==(const Position&, const Position&) = default;
  friend auto operator<=>(const Position&, const Position&) = default;
};

enum class Direction : uint8_t { North, East, South, West };

// Joint action components. The set is identical for every agent.
enum class Action : uint8_t { North, East, South, West, Stay };

inline constexpr int kNumActions = 5;
inline constexpr std::array<Action, kNumActions> kAllActions = {
    Action::North, Action::East, Action::South, Action::West, Action::Stay};

// True for the action slots an agent may take in its current state.
using ActionMask = std::array<bool, kNumActions>;

inline Position neighbor(Position p, Direction d) {
  switch (d) {
    case Direction::North: return {p.row - 1, p.col};
    case Direction::East: return {p.row, p.col + 1};
    case Direction::South: return {p.row + 1, p.col};
    case Direction::West: return {p.row, p.col - 1};
  }
  return p;
}

// Target tile of an action; Stay maps to the current tile.
inline Position target_of(Position p, Action a) {
  switch (a) {
    case Action::North: return {p.row - 1, p.col};
    case Action::East: return {p.row, p.col + 1};
    case Action::South: return {p.row + 1, p.col};
    case Action::West: return {p.row, p.col - 1};
    case Action::Stay: return p;
  }
  return p;
}

inline char direction_char(Direction d) {
  switch (d) {
    case Direction::North: return 'N';
    case Direction::East: return 'E';
    case Direction::South: return 'S';
    case Direction::West: return 'W';
  }
  return '?';
}

inline std::optional<Direction> direction_from_char(char c) {
  switch (c) {
    case 'N': return Direction::North;
    case 'E': return Direction::East;
    case 'S': return Direction::South;
    case 'W': return Direction::West;
    default: return std::nullopt;
  }
}

inline const char* action_name(Action a) {
  switch (a) {
    case Action::North: return "North";
    case Action::East: return "East";
    case Action::South: return "South";
    case Action::West: return "West";
    case Action::Stay: return "Stay";
  }
  return "?";
}

}  // namespace lle
