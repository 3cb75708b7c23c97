#include "ddnav/decision.hpp"

namespace ddnav {

std::string_view to_string(Action a) {
  switch (a) {
    case Action::MoveAhead: return "MoveAhead";
    case Action::RotateLeft: return "RotateLeft";
    case Action::RotateRight: return "RotateRight";
    case Action::LookUp: return "LookUp";
    case Action::LookDown: return "LookDown";
    case Action::Done: return "Done";
  }
  return "?";
}

std::optional<Action> parse_action(std::string_view token) {
  for (Action a : kAllActions) {
    if (to_string(a) == token) return a;
  }
  return std::nullopt;
}

std::string join_actions(const std::vector<Action>& actions, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i) out += sep;
    out += to_string(actions[i]);
  }
  return out;
}

}  // namespace ddnav
