#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ddnav {

// Side length of one grid cell in meters; one MoveAhead crosses one cell.
inline constexpr double kCellSize = 0.25;

struct GridPos {
  int x = 0;
  int z = 0;

  auto operator<=>(const GridPos&) const = default;
};

enum class CellKind : std::uint8_t { Free, Wall, Object };

struct Cell {
  CellKind kind = CellKind::Free;
  int object = -1;  // index into Scene::objects when kind == Object

  bool operator==(const Cell&) const = default;
};

struct SceneObject {
  std::string id;
  std::string category;
  GridPos position;
  std::vector<GridPos> footprint;
  std::set<std::string> attributes;
  // Floor-level object; derived from the category registry, not serialized.
  bool low = false;

  bool operator==(const SceneObject&) const = default;
};

struct Scene {
  int width = 0;
  int depth = 0;
  std::uint64_t seed = 0;
  std::vector<Cell> occupancy;  // row-major, index = z * width + x
  std::vector<SceneObject> objects;
  std::vector<GridPos> spawn_points;

  bool in_bounds(GridPos p) const { return p.x >= 0 && p.z >= 0 && p.x < width && p.z < depth; }
  const Cell& at(GridPos p) const { return occupancy[static_cast<std::size_t>(p.z * width + p.x)]; }
  Cell& at(GridPos p) { return occupancy[static_cast<std::size_t>(p.z * width + p.x)]; }
  // Out-of-bounds cells count as blocked.
  bool is_free(GridPos p) const { return in_bounds(p) && at(p).kind == CellKind::Free; }
  const SceneObject* find_object(std::string_view id) const;

  bool operator==(const Scene&) const = default;
};

struct CategoryInfo {
  int width = 1;  // footprint extent in cells before rotation
  int depth = 1;
  bool low = false;
};

// Demand ontology plus the category registry it is defined over.
class DemandOntology {
 public:
  static DemandOntology load(const std::filesystem::path& path);
  static DemandOntology from_json(const nlohmann::json& j);
  // Ontology shipped with the project (data/ontology.json).
  static DemandOntology load_default();

  const std::map<std::string, CategoryInfo>& categories() const { return categories_; }
  const std::map<std::string, std::set<std::string>>& entries() const { return entries_; }
  // Keyed by the phrase as written in the data file.
  const std::map<std::string, std::set<std::string>>& demand_phrases() const { return phrases_; }

  bool has_category(std::string_view category) const;
  std::set<std::string> attributes_of(std::string_view category) const;
  // Categories whose attribute set covers every attribute in `required`.
  std::vector<std::string> categories_covering(const std::set<std::string>& required) const;

  // Exact template match after case folding and punctuation stripping.
  // Returns the empty set when no phrase matches.
  std::set<std::string> lookup_demand(std::string_view instruction) const;

  int version() const { return version_; }

 private:
  int version_ = 1;
  std::map<std::string, CategoryInfo> categories_;
  std::map<std::string, std::set<std::string>> entries_;
  std::map<std::string, std::set<std::string>> phrases_;
  std::map<std::string, std::string> normalized_;  // normalized phrase -> phrase
};

// Lowercase, drop apostrophes, map other punctuation to spaces, collapse runs.
std::string normalize_phrase(std::string_view text);

struct SceneConfig {
  int width = 16;
  int depth = 16;
  double density = 0.1;    // fraction of free interior cells covered by objects
  int spawn_count = 4;
  int min_room = 6;        // smallest room side, in cells, produced by a wall split
  int door_width = 2;
};

// Deterministic in (seed, config). Throws ConfigError when the constraints
// cannot be met.
Scene generate_scene(std::uint64_t seed, const SceneConfig& config, const DemandOntology& ontology);

nlohmann::ordered_json scene_to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j, const DemandOntology& ontology);
void save_scene(const Scene& scene, const std::filesystem::path& path);
Scene load_scene(const std::filesystem::path& path, const DemandOntology& ontology);

// Throws ValidationError describing the first broken invariant.
void validate_scene(const Scene& scene, const DemandOntology& ontology);

// 4-connected flood fill over Free cells; returns component label per cell
// (-1 for non-free cells).
std::vector<int> free_components(const Scene& scene);

// Seeded helpers shared by the generator and episode runners. They avoid
// std::uniform_*_distribution so results do not depend on the standard library.
using Rng = std::mt19937_64;
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);
double uniform01(Rng& rng);
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace ddnav
