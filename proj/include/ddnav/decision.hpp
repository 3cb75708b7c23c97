#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ddnav {

// The closed action set of the agent.
enum class Action { MoveAhead, RotateLeft, RotateRight, LookUp, LookDown, Done };

inline constexpr std::array<Action, 6> kAllActions = {
    Action::MoveAhead, Action::RotateLeft, Action::RotateRight,
    Action::LookUp,    Action::LookDown,   Action::Done};

std::string_view to_string(Action a);
// Exact, case-sensitive token match against the closed set.
std::optional<Action> parse_action(std::string_view token);

inline bool is_rotation(Action a) { return a == Action::RotateLeft || a == Action::RotateRight; }

// Scene Description (D), Reasoning (R) and Decision (S) emitted by a reasoner.
struct DecisionTriple {
  std::string description;
  std::string reasoning;
  std::vector<Action> decision;

  bool operator==(const DecisionTriple&) const = default;
};

std::string join_actions(const std::vector<Action>& actions, std::string_view sep = ", ");

}  // namespace ddnav
