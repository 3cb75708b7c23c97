#pragma once

#include <optional>
#include <set>
#include <string>

#include "ddnav/decision.hpp"
#include "ddnav/world.hpp"

namespace ddnav {

inline constexpr int kRotationStep = 30;   // degrees per Rotate action
inline constexpr int kPitchStep = 30;      // degrees per Look action
inline constexpr int kPitchLimit = 60;     // |pitch| clamp
inline constexpr double kSuccessRadius = 1.5;
inline constexpr int kSuccessRadiusCells2 = 36;  // (1.5 m / 0.25 m)^2

struct AgentState {
  GridPos pos;
  int yaw = 0;     // clockwise from +z, multiple of 30 in [0, 360)
  int pitch = 0;   // positive looks up, clamped to [-60, 60]
  int steps_taken = 0;
  double path_length = 0.0;  // meters; 0.25 per successful MoveAhead

  bool operator==(const AgentState&) const = default;
};

bool valid_state(const AgentState& s);

// What stopped a MoveAhead.
struct Blocker {
  GridPos cell;
  CellKind kind = CellKind::Wall;
  std::string object_id;  // set when kind == Object

  bool operator==(const Blocker&) const = default;
};

struct StepOutcome {
  AgentState state;
  bool hindered = false;
  bool terminal = false;
  std::optional<Blocker> info;
};

// Yaw rounded to the nearest cardinal direction; MoveAhead travels along it.
int movement_heading(int yaw);
GridPos heading_offset(int cardinal);
inline GridPos ahead_of(GridPos p, int yaw) {
  GridPos d = heading_offset(movement_heading(yaw));
  return {p.x + d.x, p.z + d.z};
}
int wrap_yaw(int yaw);

StepOutcome step(const Scene& scene, const AgentState& state, Action action);

struct SuccessFlags {
  bool nav_success = false;
  bool sel_success = false;
};

// Squared distance in cells from `p` to the nearest footprint cell of `obj`.
int footprint_distance2(const SceneObject& obj, GridPos p);
inline bool within_success_radius(const SceneObject& obj, GridPos p) {
  return footprint_distance2(obj, p) <= kSuccessRadiusCells2;
}

// Throws UnknownObject when `selected_object_id` is set but not in the scene.
SuccessFlags check_success(const Scene& scene, const AgentState& state,
                           const std::optional<std::string>& selected_object_id,
                           const std::set<std::string>& demand_attributes, bool done_issued);

// Meters along the shortest 4-connected free path from `start` to any cell
// within the success radius of the object. Throws Unreachable.
double shortest_path_length(const Scene& scene, GridPos start, const std::string& object_id);

}  // namespace ddnav
