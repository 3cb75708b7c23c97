#pragma once

// Independent reference implementations used by the tests. None of these
// call into the library code they check.

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ddnav/world.hpp"

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

// Hand-built scene: '#' wall, '.' free, letters are 1x1 objects of the
// category given in `legend`. Row 0 of `rows` is the largest z.
inline ddnav::Scene ascii_scene(const std::vector<std::string>& rows,
                                const std::map<char, std::pair<std::string, std::set<std::string>>>& legend = {}) {
  ddnav::Scene s;
  s.depth = static_cast<int>(rows.size());
  s.width = static_cast<int>(rows.front().size());
  s.occupancy.assign(static_cast<std::size_t>(s.width * s.depth), {});
  for (int r = 0; r < s.depth; ++r) {
    const int z = s.depth - 1 - r;
    for (int x = 0; x < s.width; ++x) {
      const char c = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(x)];
      ddnav::Cell& cell = s.at({x, z});
      if (c == '#') {
        cell.kind = ddnav::CellKind::Wall;
      } else if (c == 'S') {
        s.spawn_points.push_back({x, z});
      } else if (c != '.') {
        auto it = legend.find(c);
        ddnav::SceneObject o;
        o.id = std::string(1, c) + "_" + std::to_string(s.objects.size());
        o.category = it == legend.end() ? "Vase" : it->second.first;
        if (it != legend.end()) o.attributes = it->second.second;
        o.position = {x, z};
        o.footprint = {{x, z}};
        cell.kind = ddnav::CellKind::Object;
        cell.object = static_cast<int>(s.objects.size());
        s.objects.push_back(o);
      }
    }
  }
  return s;
}

inline bool free_cell(const ddnav::Scene& s, ddnav::GridPos p) {
  if (p.x < 0 || p.z < 0 || p.x >= s.width || p.z >= s.depth) return false;
  return s.occupancy[static_cast<std::size_t>(p.z * s.width + p.x)].kind == ddnav::CellKind::Free;
}

// Breadth-first distances over free cells, -1 where unreachable.
inline std::vector<int> bfs(const ddnav::Scene& s, ddnav::GridPos start) {
  std::vector<int> dist(static_cast<std::size_t>(s.width * s.depth), -1);
  if (!free_cell(s, start)) return dist;
  std::deque<ddnav::GridPos> q{start};
  dist[static_cast<std::size_t>(start.z * s.width + start.x)] = 0;
  const int dx[] = {1, -1, 0, 0};
  const int dz[] = {0, 0, 1, -1};
  while (!q.empty()) {
    const auto p = q.front();
    q.pop_front();
    const int d = dist[static_cast<std::size_t>(p.z * s.width + p.x)];
    for (int k = 0; k < 4; ++k) {
      const ddnav::GridPos n{p.x + dx[k], p.z + dz[k]};
      if (!free_cell(s, n)) continue;
      int& nd = dist[static_cast<std::size_t>(n.z * s.width + n.x)];
      if (nd >= 0) continue;
      nd = d + 1;
      q.push_back(n);
    }
  }
  return dist;
}

inline int bfs_distance(const ddnav::Scene& s, ddnav::GridPos a, ddnav::GridPos b) {
  return bfs(s, a)[static_cast<std::size_t>(b.z * s.width + b.x)];
}

// Cardinal (0, 90, 180, 270) closest in angle to a yaw, by cosine.
inline int nearest_cardinal(int yaw) {
  int best = 0;
  double best_cos = -2.0;
  for (int c = 0; c < 360; c += 90) {
    const double v = std::cos((yaw - c) * kPi / 180.0);
    if (v > best_cos + 1e-9) {
      best_cos = v;
      best = c;
    }
  }
  return best;
}

// Unit step of a cardinal with yaw measured clockwise from +z.
inline ddnav::GridPos cardinal_step(int cardinal) {
  const double r = cardinal * kPi / 180.0;
  return {static_cast<int>(std::lround(std::sin(r))), static_cast<int>(std::lround(std::cos(r)))};
}

// Euclidean distance in meters from a cell centre to an object's nearest footprint cell.
inline double footprint_meters(const ddnav::SceneObject& o, ddnav::GridPos p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : o.footprint) best = std::min(best, std::hypot(c.x - p.x, c.z - p.z) * 0.25);
  return best;
}

// Wall occlusion by dense sampling of the segment between cell centres.
inline bool sampled_los(const ddnav::Scene& s, ddnav::GridPos a, ddnav::GridPos b) {
  const int n = 400;
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    const double x = a.x + 0.5 + (b.x - a.x) * t;
    const double z = a.z + 0.5 + (b.z - a.z) * t;
    const ddnav::GridPos c{static_cast<int>(std::floor(x)), static_cast<int>(std::floor(z))};
    if (c.x < 0 || c.z < 0 || c.x >= s.width || c.z >= s.depth) return false;
    if (s.occupancy[static_cast<std::size_t>(c.z * s.width + c.x)].kind == ddnav::CellKind::Wall) return false;
  }
  return true;
}

// Exact segment traversal between cell centres: every cell whose interior
// the segment crosses, plus all four cells around a lattice corner it passes
// through. True when none of them (other than `b`) is a wall or off-grid.
inline bool exact_los(const ddnav::Scene& s, ddnav::GridPos a, ddnav::GridPos b) {
  const long dx = b.x - a.x, dz = b.z - a.z;
  std::vector<double> ts{0.0, 1.0};
  std::vector<ddnav::GridPos> touched;
  for (long k = std::min<long>(a.x, b.x) + 1; k <= std::max<long>(a.x, b.x); ++k) {
    ts.push_back((k - a.x - 0.5) / static_cast<double>(dx));
    const long num = dz * (2 * k - 2 * a.x - 1) + dx * (2 * a.z + 1);
    if (num % (2 * dx) == 0) {
      const long m = num / (2 * dx);
      for (long cx : {k - 1, k})
        for (long cz : {m - 1, m}) touched.push_back({static_cast<int>(cx), static_cast<int>(cz)});
    }
  }
  for (long m = std::min<long>(a.z, b.z) + 1; m <= std::max<long>(a.z, b.z); ++m)
    ts.push_back((m - a.z - 0.5) / static_cast<double>(dz));
  std::sort(ts.begin(), ts.end());
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    const double t = 0.5 * (ts[i] + ts[i + 1]);
    touched.push_back({static_cast<int>(std::floor(a.x + 0.5 + dx * t)), static_cast<int>(std::floor(a.z + 0.5 + dz * t))});
  }
  for (const auto& c : touched) {
    if (c == b) continue;
    if (c.x < 0 || c.z < 0 || c.x >= s.width || c.z >= s.depth) return false;
    if (s.occupancy[static_cast<std::size_t>(c.z * s.width + c.x)].kind == ddnav::CellKind::Wall) return false;
  }
  return true;
}

// Attributes of a category straight from the ontology's entry table.
inline std::set<std::string> attributes_from_entries(const ddnav::DemandOntology& o, const std::string& category) {
  std::set<std::string> out;
  for (const auto& [attr, cats] : o.entries()) {
    if (cats.count(category)) out.insert(attr);
  }
  return out;
}

inline bool superset(const std::set<std::string>& have, const std::set<std::string>& need) {
  for (const auto& n : need) {
    if (!have.count(n)) return false;
  }
  return true;
}

}  // namespace oracle
