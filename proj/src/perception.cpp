#include "ddnav/perception.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ddnav {

namespace {

constexpr double kEps = 1e-9;

// Exact components for headings on the 30 degree lattice.
void heading_vector(double heading_deg, double& sx, double& sz) {
  const double h = std::fmod(std::fmod(heading_deg, 360.0) + 360.0, 360.0);
  const double rounded = std::round(h / 30.0) * 30.0;
  if (std::abs(h - rounded) < 1e-12) {
    static constexpr double kHalfRoot3 = 0.86602540378443864676;
    static constexpr double sin30[12] = {0, 0.5, kHalfRoot3, 1, kHalfRoot3, 0.5, 0, -0.5, -kHalfRoot3, -1, -kHalfRoot3, -0.5};
    const int k = static_cast<int>(rounded / 30.0) % 12;
    sx = sin30[k];
    sz = sin30[(k + 3) % 12];
    return;
  }
  const double rad = h * std::numbers::pi / 180.0;
  sx = std::sin(rad);
  sz = std::cos(rad);
}

RayHit make_hit(const Scene& scene, GridPos p, int cells) {
  RayHit hit;
  hit.cell = p;
  hit.cells = cells;
  if (scene.in_bounds(p)) {
    const Cell& c = scene.at(p);
    hit.content = c.kind;
    if (c.kind == CellKind::Object) hit.object_id = scene.objects[static_cast<std::size_t>(c.object)].id;
  } else {
    hit.content = CellKind::Wall;
  }
  return hit;
}

}  // namespace

double wrap_bearing(double deg) {
  double b = std::fmod(deg, 360.0);
  if (b <= -180.0) b += 360.0;
  if (b > 180.0) b -= 360.0;
  return b;
}

double bearing_to(GridPos from, int yaw, GridPos to) {
  const double dx = to.x - from.x;
  const double dz = to.z - from.z;
  const double heading = std::atan2(dx, dz) * 180.0 / std::numbers::pi;
  return wrap_bearing(heading - yaw);
}

RayHit raycast(const Scene& scene, GridPos from, double heading_deg, int max_cells) {
  double sx, sz;
  heading_vector(heading_deg, sx, sz);
  const int step_x = sx > 0 ? 1 : (sx < 0 ? -1 : 0);
  const int step_z = sz > 0 ? 1 : (sz < 0 ? -1 : 0);
  const double inf = std::numeric_limits<double>::infinity();
  const double delta_x = step_x ? 1.0 / std::abs(sx) : inf;
  const double delta_z = step_z ? 1.0 / std::abs(sz) : inf;
  double t_x = step_x ? 0.5 * delta_x : inf;
  double t_z = step_z ? 0.5 * delta_z : inf;

  GridPos p = from;
  for (int i = 1; i <= max_cells; ++i) {
    if (t_x < t_z - kEps) {
      p.x += step_x;
      t_x += delta_x;
    } else if (t_z < t_x - kEps) {
      p.z += step_z;
      t_z += delta_z;
    } else {
      // passing exactly through a corner: both side cells are touched
      const GridPos side_x{p.x + step_x, p.z};
      const GridPos side_z{p.x, p.z + step_z};
      if (!scene.is_free(side_x)) return make_hit(scene, side_x, i);
      if (!scene.is_free(side_z)) return make_hit(scene, side_z, i);
      p.x += step_x;
      p.z += step_z;
      t_x += delta_x;
      t_z += delta_z;
    }
    if (!scene.is_free(p)) return make_hit(scene, p, i);
  }
  RayHit hit;
  hit.cell = p;
  hit.cells = max_cells;
  hit.max_range = true;
  return hit;
}

int clearance(const Scene& scene, GridPos from, double heading_deg, int max_cells) {
  const RayHit hit = raycast(scene, from, heading_deg, max_cells);
  return hit.max_range ? max_cells : hit.cells - 1;
}

bool line_of_sight(const Scene& scene, GridPos from, GridPos to) {
  auto is_wall = [&](GridPos p) { return !scene.in_bounds(p) || scene.at(p).kind == CellKind::Wall; };
  const long dx = std::abs(to.x - from.x);
  const long dz = std::abs(to.z - from.z);
  const int sx = to.x > from.x ? 1 : -1;
  const int sz = to.z > from.z ? 1 : -1;
  long ix = 0, iz = 0;
  GridPos p = from;
  while (ix < dx || iz < dz) {
    // compare the parameters of the next x- and z-boundary crossings exactly
    const long decision = (1 + 2 * ix) * dz - (1 + 2 * iz) * dx;
    if (decision == 0) {
      const GridPos a{p.x + sx, p.z};
      const GridPos b{p.x, p.z + sz};
      if ((a != to && is_wall(a)) || (b != to && is_wall(b))) return false;
      p.x += sx;
      p.z += sz;
      ++ix;
      ++iz;
    } else if (decision < 0) {
      p.x += sx;
      ++ix;
    } else {
      p.z += sz;
      ++iz;
    }
    if (p != to && is_wall(p)) return false;
  }
  return true;
}

ViewSummary observe(const Scene& scene, const AgentState& state, const PerceptionConfig& config,
                    const NoiseConfig* noise, Rng* rng) {
  ViewSummary view;
  const int range = config.range_cells();
  view.free_ahead = clearance(scene, state.pos, state.yaw, range);
  view.free_left = clearance(scene, state.pos, state.yaw - 90, range);
  view.free_right = clearance(scene, state.pos, state.yaw + 90, range);

  const double half_fov = config.fov_deg / 2.0;
  const double range2 = config.range_m * config.range_m;
  const double low2 = config.low_near_m * config.low_near_m;
  for (const auto& obj : scene.objects) {
    DetectedObject det;
    int best_d2 = std::numeric_limits<int>::max();
    for (GridPos f : obj.footprint) {
      const int dx = f.x - state.pos.x;
      const int dz = f.z - state.pos.z;
      const int d2 = dx * dx + dz * dz;
      const double meters2 = d2 * kCellSize * kCellSize;
      if (meters2 > range2 + kEps) continue;
      const double bearing = bearing_to(state.pos, state.yaw, f);
      if (std::abs(bearing) > half_fov + kEps) continue;
      if (obj.low && meters2 > low2 + kEps && state.pitch > config.low_pitch) continue;
      if (!line_of_sight(scene, state.pos, f)) continue;
      ++det.visible_extent;
      if (d2 < best_d2) {
        best_d2 = d2;
        det.cell = f;
        det.bearing = bearing;
        det.distance = std::sqrt(static_cast<double>(d2)) * kCellSize;
      }
    }
    if (det.visible_extent == 0) continue;
    det.object_id = obj.id;
    det.category = obj.category;
    det.attributes = obj.attributes;
    view.detected.push_back(std::move(det));
  }
  std::sort(view.detected.begin(), view.detected.end(), [](const DetectedObject& a, const DetectedObject& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.object_id < b.object_id;
  });
  if (noise && noise->p_miss > 0.0 && rng) {
    std::vector<DetectedObject> kept;
    for (auto& d : view.detected) {
      if (uniform01(*rng) >= noise->p_miss) kept.push_back(std::move(d));
    }
    view.detected = std::move(kept);
  }
  return view;
}

}  // namespace ddnav

// ---------------------------------------------------------------- text digests

#include <cstdio>
#include <regex>
#include <sstream>

namespace ddnav {

std::string format_object(const DetectedObject& d) {
  std::string attrs;
  for (const auto& a : d.attributes) {
    if (!attrs.empty()) attrs += ',';
    attrs += a;
  }
  char geom[96];
  std::snprintf(geom, sizeof geom, "bearing=%+.6f | distance=%.6f | extent=%d", d.bearing, d.distance,
                d.visible_extent);
  return "- " + d.object_id + " | " + d.category + " | " + attrs + " | " + geom;
}

std::string format_objects(const std::vector<DetectedObject>& objects) {
  if (objects.empty()) return "- none";
  std::string out;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (i) out += '\n';
    out += format_object(objects[i]);
  }
  return out;
}

std::string format_clearance(const ViewSummary& view) {
  return "free_ahead=" + std::to_string(view.free_ahead) + " free_left=" + std::to_string(view.free_left) +
         " free_right=" + std::to_string(view.free_right);
}

std::optional<DetectedObject> parse_object_line(const std::string& line) {
  static const std::regex re(
      R"(^\s*-\s*([^|\s]+)\s*\|\s*([^|\s]+)\s*\|\s*([^|]*?)\s*\|\s*bearing=([-+0-9.eE]+)\s*\|\s*distance=([-+0-9.eE]+)\s*\|\s*extent=(\d+)\s*$)");
  std::smatch m;
  if (!std::regex_match(line, m, re)) return std::nullopt;
  DetectedObject d;
  d.object_id = m[1].str();
  d.category = m[2].str();
  std::istringstream attrs(m[3].str());
  std::string a;
  while (std::getline(attrs, a, ',')) {
    if (!a.empty()) d.attributes.insert(a);
  }
  d.bearing = std::stod(m[4].str());
  d.distance = std::stod(m[5].str());
  d.visible_extent = std::stoi(m[6].str());
  return d;
}

std::vector<DetectedObject> parse_objects(const std::string& text) {
  std::vector<DetectedObject> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (auto d = parse_object_line(line)) out.push_back(std::move(*d));
  }
  return out;
}

bool parse_clearance(const std::string& text, ViewSummary& view) {
  static const std::regex re(R"(free_ahead=(\d+)\s+free_left=(\d+)\s+free_right=(\d+))");
  std::smatch m;
  if (!std::regex_search(text, m, re)) return false;
  view.free_ahead = std::stoi(m[1].str());
  view.free_left = std::stoi(m[2].str());
  view.free_right = std::stoi(m[3].str());
  return true;
}

}  // namespace ddnav
