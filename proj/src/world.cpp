#include "ddnav/world.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ddnav/error.hpp"

namespace ddnav {

using json = nlohmann::json;

// ---------------------------------------------------------------- RNG helpers

std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = Rng::max() - (Rng::max() % n);
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------- Scene

const SceneObject* Scene::find_object(std::string_view id) const {
  for (const auto& o : objects) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

std::vector<int> free_components(const Scene& scene) {
  std::vector<int> label(scene.occupancy.size(), -1);
  int next = 0;
  std::deque<GridPos> queue;
  for (int z = 0; z < scene.depth; ++z) {
    for (int x = 0; x < scene.width; ++x) {
      GridPos start{x, z};
      auto idx = static_cast<std::size_t>(z * scene.width + x);
      if (!scene.is_free(start) || label[idx] >= 0) continue;
      label[idx] = next;
      queue.push_back(start);
      while (!queue.empty()) {
        GridPos p = queue.front();
        queue.pop_front();
        const GridPos nbrs[4] = {{p.x + 1, p.z}, {p.x - 1, p.z}, {p.x, p.z + 1}, {p.x, p.z - 1}};
        for (GridPos n : nbrs) {
          if (!scene.is_free(n)) continue;
          auto nidx = static_cast<std::size_t>(n.z * scene.width + n.x);
          if (label[nidx] >= 0) continue;
          label[nidx] = next;
          queue.push_back(n);
        }
      }
      ++next;
    }
  }
  return label;
}

void validate_scene(const Scene& scene, const DemandOntology& ontology) {
  if (scene.width <= 0 || scene.depth <= 0) throw ValidationError("scene has non-positive size");
  if (scene.occupancy.size() != static_cast<std::size_t>(scene.width * scene.depth))
    throw ValidationError("occupancy size does not match width x depth");

  std::vector<int> claimed(scene.occupancy.size(), -1);
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const auto& o = scene.objects[i];
    if (o.footprint.empty()) throw ValidationError("object " + o.id + " has an empty footprint");
    if (std::find(o.footprint.begin(), o.footprint.end(), o.position) == o.footprint.end())
      throw ValidationError("object " + o.id + " position is not part of its footprint");
    if (!ontology.has_category(o.category))
      throw ValidationError("object " + o.id + " has unknown category " + o.category);
    if (o.attributes != ontology.attributes_of(o.category))
      throw ValidationError("object " + o.id + " attributes disagree with the ontology");
    for (GridPos p : o.footprint) {
      if (!scene.in_bounds(p)) throw ValidationError("object " + o.id + " footprint is off-grid");
      const Cell& c = scene.at(p);
      if (c.kind != CellKind::Object || c.object != static_cast<int>(i))
        throw ValidationError("object " + o.id + " footprint cell not marked in occupancy");
      claimed[static_cast<std::size_t>(p.z * scene.width + p.x)] = static_cast<int>(i);
    }
  }
  for (std::size_t i = 0; i < scene.occupancy.size(); ++i) {
    if (scene.occupancy[i].kind == CellKind::Object && claimed[i] < 0)
      throw ValidationError("occupancy marks an object cell no object claims");
  }
  if (scene.spawn_points.empty()) throw ValidationError("scene has no spawn points");
  const auto comp = free_components(scene);
  int component = -1;
  for (GridPos s : scene.spawn_points) {
    if (!scene.is_free(s)) throw ValidationError("spawn point is not a free cell");
    int c = comp[static_cast<std::size_t>(s.z * scene.width + s.x)];
    if (component < 0) component = c;
    if (c != component) throw ValidationError("spawn points are not mutually reachable");
  }
}

// ---------------------------------------------------------------- Ontology

std::string normalize_phrase(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char ch : text) {
    auto u = static_cast<unsigned char>(ch);
    if (ch == '\'') continue;
    if (std::isalnum(u)) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(static_cast<char>(std::tolower(u)));
    } else {
      pending_space = true;
    }
  }
  return out;
}

DemandOntology DemandOntology::from_json(const json& j) {
  DemandOntology o;
  try {
    o.version_ = j.value("version", 1);
    for (const auto& [name, info] : j.at("categories").items()) {
      CategoryInfo ci;
      if (info.contains("footprint")) {
        ci.width = info.at("footprint").at(0).get<int>();
        ci.depth = info.at("footprint").at(1).get<int>();
      }
      ci.low = info.value("low", false);
      if (ci.width < 1 || ci.depth < 1) throw ParseError("ontology: category " + name + " has an empty footprint");
      o.categories_[name] = ci;
    }
    for (const auto& [attr, cats] : j.at("entries").items()) {
      auto& set = o.entries_[attr];
      for (const auto& c : cats) {
        auto name = c.get<std::string>();
        if (!o.categories_.count(name))
          throw ParseError("ontology: entry '" + attr + "' names unknown category " + name);
        set.insert(name);
      }
    }
    for (const auto& [phrase, attrs] : j.at("demand_phrases").items()) {
      std::set<std::string> required;
      for (const auto& a : attrs) {
        auto name = a.get<std::string>();
        if (!o.entries_.count(name))
          throw ParseError("ontology: phrase '" + phrase + "' uses unknown attribute " + name);
        required.insert(name);
      }
      if (required.empty()) throw ParseError("ontology: phrase '" + phrase + "' maps to no attribute");
      o.phrases_[phrase] = required;
      o.normalized_[normalize_phrase(phrase)] = phrase;
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("ontology: ") + e.what());
  }
  return o;
}

DemandOntology DemandOntology::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open ontology file " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

DemandOntology DemandOntology::load_default() {
  return load(std::filesystem::path(DDNAV_DATA_DIR) / "ontology.json");
}

bool DemandOntology::has_category(std::string_view category) const {
  return categories_.find(std::string(category)) != categories_.end();
}

std::set<std::string> DemandOntology::attributes_of(std::string_view category) const {
  std::set<std::string> out;
  for (const auto& [attr, cats] : entries_) {
    if (cats.count(std::string(category))) out.insert(attr);
  }
  return out;
}

std::vector<std::string> DemandOntology::categories_covering(const std::set<std::string>& required) const {
  std::vector<std::string> out;
  for (const auto& [name, info] : categories_) {
    auto attrs = attributes_of(name);
    if (std::includes(attrs.begin(), attrs.end(), required.begin(), required.end())) out.push_back(name);
  }
  return out;
}

std::set<std::string> DemandOntology::lookup_demand(std::string_view instruction) const {
  auto it = normalized_.find(normalize_phrase(instruction));
  if (it == normalized_.end()) return {};
  return phrases_.at(it->second);
}

// ---------------------------------------------------------------- Generator

namespace {

struct Rect {
  int x0, z0, x1, z1;  // inclusive interior bounds
  int w() const { return x1 - x0 + 1; }
  int d() const { return z1 - z0 + 1; }
};

struct Builder {
  Scene scene;
  std::vector<bool> reserved;
  std::vector<GridPos> doors;

  bool is_door(GridPos p) const { return std::find(doors.begin(), doors.end(), p) != doors.end(); }
  std::size_t idx(GridPos p) const { return static_cast<std::size_t>(p.z * scene.width + p.x); }
};

void split_rooms(Builder& b, Rect r, const SceneConfig& cfg, Rng& rng) {
  const int need = 2 * cfg.min_room + 1;
  const bool can_x = r.w() >= need;
  const bool can_z = r.d() >= need;
  if ((!can_x && !can_z) || r.w() * r.d() < 150) return;
  const bool vertical = can_x && (!can_z || r.w() >= r.d());

  // Candidate wall lines; a line may not run through a doorway of the
  // enclosing walls.
  std::vector<int> lines;
  if (vertical) {
    for (int x = r.x0 + cfg.min_room; x <= r.x1 - cfg.min_room; ++x) {
      if (b.is_door({x, r.z0 - 1}) || b.is_door({x, r.z1 + 1})) continue;
      lines.push_back(x);
    }
  } else {
    for (int z = r.z0 + cfg.min_room; z <= r.z1 - cfg.min_room; ++z) {
      if (b.is_door({r.x0 - 1, z}) || b.is_door({r.x1 + 1, z})) continue;
      lines.push_back(z);
    }
  }
  if (lines.empty()) return;
  const int line = lines[uniform_index(rng, lines.size())];
  const int span = vertical ? r.d() : r.w();
  const int door_w = std::min(cfg.door_width, span);
  const int door_start = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(span - door_w + 1)));

  for (int k = 0; k < span; ++k) {
    GridPos p = vertical ? GridPos{line, r.z0 + k} : GridPos{r.x0 + k, line};
    if (k >= door_start && k < door_start + door_w) {
      b.doors.push_back(p);
      b.reserved[b.idx(p)] = true;
      // keep the approach cells on both sides clear
      GridPos a = vertical ? GridPos{p.x - 1, p.z} : GridPos{p.x, p.z - 1};
      GridPos c = vertical ? GridPos{p.x + 1, p.z} : GridPos{p.x, p.z + 1};
      b.reserved[b.idx(a)] = true;
      b.reserved[b.idx(c)] = true;
    } else {
      b.scene.at(p).kind = CellKind::Wall;
    }
  }
  if (vertical) {
    split_rooms(b, {r.x0, r.z0, line - 1, r.z1}, cfg, rng);
    split_rooms(b, {line + 1, r.z0, r.x1, r.z1}, cfg, rng);
  } else {
    split_rooms(b, {r.x0, r.z0, r.x1, line - 1}, cfg, rng);
    split_rooms(b, {r.x0, line + 1, r.x1, r.z1}, cfg, rng);
  }
}

int count_free(const Scene& s) {
  return static_cast<int>(std::count_if(s.occupancy.begin(), s.occupancy.end(),
                                        [](const Cell& c) { return c.kind == CellKind::Free; }));
}

bool free_space_connected(const Scene& s) {
  const auto comp = free_components(s);
  return std::all_of(comp.begin(), comp.end(), [](int c) { return c <= 0; });
}

}  // namespace

Scene generate_scene(std::uint64_t seed, const SceneConfig& cfg, const DemandOntology& ontology) {
  if (cfg.width < 8 || cfg.depth < 8) throw ConfigError("scene must be at least 8x8 cells");
  if (!(cfg.density > 0.0 && cfg.density < 1.0)) throw ConfigError("object density must lie in (0, 1)");
  if (cfg.spawn_count < 1) throw ConfigError("spawn_count must be positive");
  if (ontology.categories().empty()) throw ConfigError("ontology has no categories");

  Rng rng(seed);
  Builder b;
  b.scene.width = cfg.width;
  b.scene.depth = cfg.depth;
  b.scene.seed = seed;
  b.scene.occupancy.assign(static_cast<std::size_t>(cfg.width * cfg.depth), Cell{});
  b.reserved.assign(b.scene.occupancy.size(), false);
  for (int x = 0; x < cfg.width; ++x) {
    b.scene.at({x, 0}).kind = CellKind::Wall;
    b.scene.at({x, cfg.depth - 1}).kind = CellKind::Wall;
  }
  for (int z = 0; z < cfg.depth; ++z) {
    b.scene.at({0, z}).kind = CellKind::Wall;
    b.scene.at({cfg.width - 1, z}).kind = CellKind::Wall;
  }
  split_rooms(b, {1, 1, cfg.width - 2, cfg.depth - 2}, cfg, rng);

  const int free_cells = count_free(b.scene);
  const int target = static_cast<int>(std::ceil(cfg.density * free_cells));
  if (free_cells - target < cfg.spawn_count)
    throw ConfigError("density " + std::to_string(cfg.density) + " leaves fewer than " +
                      std::to_string(cfg.spawn_count) + " free cells for spawn points");

  std::vector<std::string> names;
  for (const auto& [name, info] : ontology.categories()) names.push_back(name);
  std::map<std::string, int> per_category;

  int covered = 0;
  int attempts = 0;
  const int max_attempts = 200 + 40 * free_cells;
  while (covered < target && attempts++ < max_attempts) {
    const std::string& category = names[uniform_index(rng, names.size())];
    const CategoryInfo& info = ontology.categories().at(category);
    const bool turn = info.width != info.depth && uniform_index(rng, 2) == 1;
    const int w = turn ? info.depth : info.width;
    const int d = turn ? info.width : info.depth;
    const int ax = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(std::max(1, cfg.width - 1 - w))));
    const int az = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(std::max(1, cfg.depth - 1 - d))));

    std::vector<GridPos> cells;
    bool ok = true;
    for (int dz = 0; dz < d && ok; ++dz) {
      for (int dx = 0; dx < w && ok; ++dx) {
        GridPos p{ax + dx, az + dz};
        if (!b.scene.is_free(p) || b.reserved[b.idx(p)]) ok = false;
        cells.push_back(p);
      }
    }
    if (!ok) continue;
    if (free_cells - covered - static_cast<int>(cells.size()) < cfg.spawn_count) continue;

    const int index = static_cast<int>(b.scene.objects.size());
    for (GridPos p : cells) b.scene.at(p) = Cell{CellKind::Object, index};
    if (!free_space_connected(b.scene)) {
      for (GridPos p : cells) b.scene.at(p) = Cell{};
      continue;
    }
    SceneObject obj;
    obj.id = category + "_" + std::to_string(per_category[category]++);
    obj.category = category;
    obj.position = cells.front();
    obj.footprint = cells;
    obj.attributes = ontology.attributes_of(category);
    obj.low = info.low;
    b.scene.objects.push_back(std::move(obj));
    covered += static_cast<int>(cells.size());
  }
  if (covered < target)
    throw ConfigError("could not place objects at density " + std::to_string(cfg.density) +
                      " while keeping free space connected");

  std::vector<GridPos> candidates;
  for (int z = 0; z < cfg.depth; ++z)
    for (int x = 0; x < cfg.width; ++x)
      if (b.scene.is_free({x, z})) candidates.push_back({x, z});
  if (static_cast<int>(candidates.size()) < cfg.spawn_count) throw ConfigError("no room left for spawn points");
  for (int i = 0; i < cfg.spawn_count; ++i) {
    auto k = uniform_index(rng, candidates.size() - static_cast<std::size_t>(i));
    std::swap(candidates[k], candidates[candidates.size() - 1 - static_cast<std::size_t>(i)]);
    b.scene.spawn_points.push_back(candidates[candidates.size() - 1 - static_cast<std::size_t>(i)]);
  }
  validate_scene(b.scene, ontology);
  return std::move(b.scene);
}

// ---------------------------------------------------------------- JSON

nlohmann::ordered_json scene_to_json(const Scene& scene) {
  nlohmann::ordered_json j;
  j["width"] = scene.width;
  j["depth"] = scene.depth;
  j["seed"] = scene.seed;
  auto rows = nlohmann::ordered_json::array();
  for (int z = 0; z < scene.depth; ++z) {
    std::string row;
    for (int x = 0; x < scene.width; ++x) {
      switch (scene.at({x, z}).kind) {
        case CellKind::Free: row += '.'; break;
        case CellKind::Wall: row += '#'; break;
        case CellKind::Object: row += 'O'; break;
      }
    }
    rows.push_back(row);
  }
  j["occupancy"] = rows;
  auto objects = nlohmann::ordered_json::array();
  for (const auto& o : scene.objects) {
    nlohmann::ordered_json jo;
    jo["id"] = o.id;
    jo["category"] = o.category;
    jo["x"] = o.position.x;
    jo["z"] = o.position.z;
    auto fp = nlohmann::ordered_json::array();
    for (GridPos p : o.footprint) fp.push_back({p.x, p.z});
    jo["footprint"] = fp;
    jo["attributes"] = o.attributes;
    objects.push_back(jo);
  }
  j["objects"] = objects;
  auto spawns = nlohmann::ordered_json::array();
  for (GridPos p : scene.spawn_points) spawns.push_back({p.x, p.z});
  j["spawn_points"] = spawns;
  return j;
}

namespace {

GridPos read_cell(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
    throw ParseError(field + ": expected [x, z] integer pair");
  return {j[0].get<int>(), j[1].get<int>()};
}

}  // namespace

Scene scene_from_json(const json& j, const DemandOntology& ontology) {
  Scene s;
  auto field = [&](const char* name) -> const json& {
    if (!j.contains(name)) throw ParseError(std::string("missing field '") + name + "'");
    return j.at(name);
  };
  try {
    s.width = field("width").get<int>();
    s.depth = field("depth").get<int>();
    s.seed = field("seed").get<std::uint64_t>();
  } catch (const json::type_error& e) {
    throw ParseError(std::string("scene header: ") + e.what());
  }
  if (s.width <= 0 || s.depth <= 0) throw ParseError("width/depth must be positive");

  const json& rows = field("occupancy");
  if (!rows.is_array() || static_cast<int>(rows.size()) != s.depth)
    throw ParseError("occupancy: expected " + std::to_string(s.depth) + " row strings");
  s.occupancy.assign(static_cast<std::size_t>(s.width * s.depth), Cell{});
  for (int z = 0; z < s.depth; ++z) {
    const std::string where = "occupancy[" + std::to_string(z) + "]";
    if (!rows[static_cast<std::size_t>(z)].is_string()) throw ParseError(where + ": expected a string");
    const auto row = rows[static_cast<std::size_t>(z)].get<std::string>();
    if (static_cast<int>(row.size()) != s.width)
      throw ParseError(where + ": expected " + std::to_string(s.width) + " cells, got " + std::to_string(row.size()));
    for (int x = 0; x < s.width; ++x) {
      switch (row[static_cast<std::size_t>(x)]) {
        case '.': break;
        case '#': s.at({x, z}).kind = CellKind::Wall; break;
        case 'O': s.at({x, z}).kind = CellKind::Object; break;
        default:
          throw ParseError(where + ": invalid cell character '" + std::string(1, row[static_cast<std::size_t>(x)]) +
                           "' at x=" + std::to_string(x));
      }
    }
  }

  const json& objects = field("objects");
  if (!objects.is_array()) throw ParseError("objects: expected an array");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const json& jo = objects[i];
    const std::string where = "objects[" + std::to_string(i) + "]";
    SceneObject o;
    try {
      o.id = jo.at("id").get<std::string>();
      o.category = jo.at("category").get<std::string>();
      o.position = {jo.at("x").get<int>(), jo.at("z").get<int>()};
      for (const auto& a : jo.at("attributes")) o.attributes.insert(a.get<std::string>());
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (!ontology.has_category(o.category)) throw ParseError(where + ": unknown category '" + o.category + "'");
    if (o.attributes != ontology.attributes_of(o.category))
      throw ParseError(where + ".attributes: do not match the ontology entry for " + o.category);
    if (s.find_object(o.id)) throw ParseError(where + ".id: duplicate id '" + o.id + "'");
    if (!jo.contains("footprint") || !jo.at("footprint").is_array() || jo.at("footprint").empty())
      throw ParseError(where + ".footprint: expected a non-empty array");
    const auto& fp = jo.at("footprint");
    for (std::size_t k = 0; k < fp.size(); ++k) {
      const std::string fwhere = where + ".footprint[" + std::to_string(k) + "]";
      GridPos p = read_cell(fp[k], fwhere);
      if (!s.in_bounds(p))
        throw ParseError(fwhere + ": cell (" + std::to_string(p.x) + "," + std::to_string(p.z) + ") is off-grid (" +
                         std::to_string(s.width) + "x" + std::to_string(s.depth) + ")");
      Cell& c = s.at(p);
      if (c.kind != CellKind::Object)
        throw ParseError(fwhere + ": occupancy does not mark this cell 'O'");
      if (c.object >= 0) throw ParseError(fwhere + ": cell already claimed by another object");
      c.object = static_cast<int>(i);
      o.footprint.push_back(p);
    }
    if (std::find(o.footprint.begin(), o.footprint.end(), o.position) == o.footprint.end())
      throw ParseError(where + ": (x, z) is not part of the footprint");
    o.low = ontology.categories().at(o.category).low;
    s.objects.push_back(std::move(o));
  }
  for (int z = 0; z < s.depth; ++z)
    for (int x = 0; x < s.width; ++x)
      if (s.at({x, z}).kind == CellKind::Object && s.at({x, z}).object < 0)
        throw ParseError("occupancy[" + std::to_string(z) + "]: 'O' at x=" + std::to_string(x) +
                         " belongs to no object");

  const json& spawns = field("spawn_points");
  if (!spawns.is_array()) throw ParseError("spawn_points: expected an array");
  for (std::size_t k = 0; k < spawns.size(); ++k) {
    const std::string where = "spawn_points[" + std::to_string(k) + "]";
    GridPos p = read_cell(spawns[k], where);
    if (!s.is_free(p)) throw ParseError(where + ": not a free cell");
    s.spawn_points.push_back(p);
  }
  try {
    validate_scene(s, ontology);
  } catch (const ValidationError& e) {
    throw ParseError(e.what());
  }
  return s;
}

void save_scene(const Scene& scene, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw StorageError("cannot write scene file " + path.string());
  out << scene_to_json(scene).dump(1) << '\n';
  if (!out) throw StorageError("failed writing scene file " + path.string());
}

Scene load_scene(const std::filesystem::path& path, const DemandOntology& ontology) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scene file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  try {
    return scene_from_json(j, ontology);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace ddnav
