#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace mazerl {

// Fixed integer encoding. Serialized data and every feature index in the
// project depend on this order, so it must never change.
enum class Action : int { Up = 0, Down = 1, Left = 2, Right = 3 };

inline constexpr int kNumActions = 4;

inline constexpr std::array<Action, kNumActions> kAllActions = {
    Action::Up, Action::Down, Action::Left, Action::Right};

constexpr int index(Action a) { return static_cast<int>(a); }

constexpr Action action_from_index(int i) { return static_cast<Action>(i); }

constexpr std::string_view name(Action a) {
  switch (a) {
    case Action::Up: return "Up";
    case Action::Down: return "Down";
    case Action::Left: return "Left";
    case Action::Right: return "Right";
  }
  return "?";
}

inline std::optional<Action> parse_action(std::string_view token) {
  for (Action a : kAllActions) {
    if (token == name(a)) return a;
  }
  return std::nullopt;
}

// Row 0 is the top of the grid: Up decreases the row index.
constexpr int row_delta(Action a) {
  switch (a) {
    case Action::Up: return -1;
    case Action::Down: return 1;
    default: return 0;
  }
}

constexpr int col_delta(Action a) {
  switch (a) {
    case Action::Left: return -1;
    case Action::Right: return 1;
    default: return 0;
  }
}

}  // namespace mazerl
