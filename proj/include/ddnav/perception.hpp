#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ddnav/simulator.hpp"
#include "ddnav/world.hpp"

namespace ddnav {

struct DetectedObject {
  std::string object_id;
  std::string category;
  std::set<std::string> attributes;
  double bearing = 0.0;   // degrees relative to yaw, (-180, 180], positive to the right
  double distance = 0.0;  // meters to the nearest visible footprint cell
  int visible_extent = 0; // footprint cells currently visible
  GridPos cell;           // the footprint cell bearing/distance refer to
  bool remembered = false;  // carried over from an earlier view, not seen now

  bool operator==(const DetectedObject&) const = default;
};

struct ViewSummary {
  int free_ahead = 0;  // free cells along the yaw ray before the first obstruction
  int free_left = 0;   // same along yaw - 90
  int free_right = 0;  // same along yaw + 90
  std::vector<DetectedObject> detected;  // ascending distance

  bool operator==(const ViewSummary&) const = default;
};

struct PerceptionConfig {
  double fov_deg = 90.0;
  double range_m = 5.0;
  double low_near_m = 2.0;  // low objects beyond this need the camera tilted down
  int low_pitch = -30;

  int range_cells() const { return static_cast<int>(range_m / kCellSize + 1e-9); }
};

struct NoiseConfig {
  double p_miss = 0.0;
};

// Pure in (scene, state, config) when noise is null. With noise, each
// detection is dropped independently using `rng`, which must be the episode's
// own stream.
ViewSummary observe(const Scene& scene, const AgentState& state, const PerceptionConfig& config = {},
                    const NoiseConfig* noise = nullptr, Rng* rng = nullptr);

struct RayHit {
  GridPos cell;           // first non-free cell, or the last cell visited at max range
  CellKind content = CellKind::Free;
  std::string object_id;
  int cells = 0;          // cells stepped through, including the hit cell
  bool max_range = false;
};

// Grid traversal from the centre of `from` along `heading_deg` (clockwise from
// +z). Stops at the first non-free cell or after `max_cells` cells.
RayHit raycast(const Scene& scene, GridPos from, double heading_deg, int max_cells);

// Free cells before the first obstruction, capped at `max_cells`.
int clearance(const Scene& scene, GridPos from, double heading_deg, int max_cells);

// True when no Wall cell lies on the segment between the two cell centres.
// Cells touched exactly at a corner count as traversed. Objects never occlude.
bool line_of_sight(const Scene& scene, GridPos from, GridPos to);

// Bearing of `to` seen from `from` with the given yaw, in (-180, 180].
double bearing_to(GridPos from, int yaw, GridPos to);
double wrap_bearing(double deg);

// ---- text digests consumed by prompts (and parsed back by the mock server)

// "- <id> | <category> | <attr,attr> | bearing=<deg> | distance=<m> | extent=<n>"
std::string format_object(const DetectedObject& d);
// One line per object, "- none" when empty.
std::string format_objects(const std::vector<DetectedObject>& objects);
// "free_ahead=<n> free_left=<n> free_right=<n>"
std::string format_clearance(const ViewSummary& view);
std::optional<DetectedObject> parse_object_line(const std::string& line);
// Every object line found in `text`, in order.
std::vector<DetectedObject> parse_objects(const std::string& text);
// Reads the first clearance triple in `text`; returns false if absent.
bool parse_clearance(const std::string& text, ViewSummary& view);

}  // namespace ddnav
