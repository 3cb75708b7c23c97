#include "ddnav/simulator.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#include "ddnav/error.hpp"

namespace ddnav {

bool valid_state(const AgentState& s) {
  return s.yaw >= 0 && s.yaw < 360 && s.yaw % kRotationStep == 0 && s.pitch >= -kPitchLimit &&
         s.pitch <= kPitchLimit && s.pitch % kPitchStep == 0 && s.steps_taken >= 0 && s.path_length >= 0.0;
}

int wrap_yaw(int yaw) { return ((yaw % 360) + 360) % 360; }

int movement_heading(int yaw) { return wrap_yaw(((wrap_yaw(yaw) + 45) / 90) * 90); }

GridPos heading_offset(int cardinal) {
  switch (wrap_yaw(cardinal)) {
    case 0: return {0, 1};
    case 90: return {1, 0};
    case 180: return {0, -1};
    default: return {-1, 0};
  }
}

StepOutcome step(const Scene& scene, const AgentState& state, Action action) {
  StepOutcome out;
  out.state = state;
  out.state.steps_taken += 1;
  switch (action) {
    case Action::MoveAhead: {
      GridPos target = ahead_of(state.pos, state.yaw);
      if (scene.is_free(target)) {
        out.state.pos = target;
        out.state.path_length += kCellSize;
      } else {
        out.hindered = true;
        Blocker b;
        b.cell = target;
        if (scene.in_bounds(target)) {
          const Cell& c = scene.at(target);
          b.kind = c.kind;
          if (c.kind == CellKind::Object) b.object_id = scene.objects[static_cast<std::size_t>(c.object)].id;
        }
        out.info = b;
      }
      break;
    }
    case Action::RotateLeft: out.state.yaw = wrap_yaw(state.yaw - kRotationStep); break;
    case Action::RotateRight: out.state.yaw = wrap_yaw(state.yaw + kRotationStep); break;
    case Action::LookUp: out.state.pitch = std::min(kPitchLimit, state.pitch + kPitchStep); break;
    case Action::LookDown: out.state.pitch = std::max(-kPitchLimit, state.pitch - kPitchStep); break;
    case Action::Done: out.terminal = true; break;
  }
  return out;
}

int footprint_distance2(const SceneObject& obj, GridPos p) {
  int best = std::numeric_limits<int>::max();
  for (GridPos f : obj.footprint) {
    const int dx = f.x - p.x;
    const int dz = f.z - p.z;
    best = std::min(best, dx * dx + dz * dz);
  }
  return best;
}

SuccessFlags check_success(const Scene& scene, const AgentState& state,
                           const std::optional<std::string>& selected_object_id,
                           const std::set<std::string>& demand_attributes, bool done_issued) {
  SuccessFlags flags;
  if (!selected_object_id) return flags;
  const SceneObject* obj = scene.find_object(*selected_object_id);
  if (!obj) throw UnknownObject("no object '" + *selected_object_id + "' in scene");
  const bool satisfies = !demand_attributes.empty() &&
                         std::includes(obj->attributes.begin(), obj->attributes.end(),
                                       demand_attributes.begin(), demand_attributes.end());
  flags.sel_success = satisfies;
  flags.nav_success = done_issued && satisfies && within_success_radius(*obj, state.pos);
  return flags;
}

double shortest_path_length(const Scene& scene, GridPos start, const std::string& object_id) {
  const SceneObject* obj = scene.find_object(object_id);
  if (!obj) throw UnknownObject("no object '" + object_id + "' in scene");
  if (!scene.is_free(start)) throw Unreachable("start cell is not free");
  std::vector<int> dist(scene.occupancy.size(), -1);
  auto idx = [&](GridPos p) { return static_cast<std::size_t>(p.z * scene.width + p.x); };
  std::deque<GridPos> queue{start};
  dist[idx(start)] = 0;
  while (!queue.empty()) {
    GridPos p = queue.front();
    queue.pop_front();
    if (within_success_radius(*obj, p)) return dist[idx(p)] * kCellSize;
    const GridPos nbrs[4] = {{p.x + 1, p.z}, {p.x - 1, p.z}, {p.x, p.z + 1}, {p.x, p.z - 1}};
    for (GridPos n : nbrs) {
      if (!scene.is_free(n) || dist[idx(n)] >= 0) continue;
      dist[idx(n)] = dist[idx(p)] + 1;
      queue.push_back(n);
    }
  }
  throw Unreachable("object '" + object_id + "' cannot be reached from (" + std::to_string(start.x) + "," +
                    std::to_string(start.z) + ")");
}

}  // namespace ddnav
