#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "../oracles.hpp"
#include "ddnav/error.hpp"
#include "ddnav/world.hpp"

using namespace ddnav;

namespace {

const DemandOntology& onto() {
  static const DemandOntology o = DemandOntology::load_default();
  return o;
}

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "ddnav_unit";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("generated scene holds its invariants") {
  SceneConfig cfg;
  cfg.density = 0.1;
  const Scene s = generate_scene(7, cfg, onto());
  CHECK(s.width == 16);
  CHECK(s.depth == 16);
  REQUIRE_FALSE(s.spawn_points.empty());
  CHECK_NOTHROW(validate_scene(s, onto()));

  // every spawn reaches every other spawn over free cells
  const auto dist = oracle::bfs(s, s.spawn_points.front());
  for (auto p : s.spawn_points) {
    CHECK(oracle::free_cell(s, p));
    CHECK(dist[static_cast<std::size_t>(p.z * s.width + p.x)] >= 0);
  }
  for (const auto& o : s.objects) {
    CHECK(onto().has_category(o.category));
    CHECK(o.attributes == oracle::attributes_from_entries(onto(), o.category));
    for (auto c : o.footprint) {
      REQUIRE(s.in_bounds(c));
      CHECK(s.at(c).kind == CellKind::Object);
      CHECK(&s.objects[static_cast<std::size_t>(s.at(c).object)] == &o);
    }
  }
}

TEST_CASE("generator is deterministic in seed and config") {
  SceneConfig cfg;
  const auto a = scene_to_json(generate_scene(7, cfg, onto())).dump();
  const auto b = scene_to_json(generate_scene(7, cfg, onto())).dump();
  CHECK(a == b);
  CHECK(a != scene_to_json(generate_scene(8, cfg, onto())).dump());
}

TEST_CASE("invariants hold across many seeds and densities") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    SceneConfig cfg;
    cfg.density = 0.05 + 0.05 * static_cast<double>(seed % 5);
    const Scene s = generate_scene(seed, cfg, onto());
    CHECK_NOTHROW(validate_scene(s, onto()));
    CHECK_FALSE(s.spawn_points.empty());
  }
}

TEST_CASE("unsatisfiable density is a config error") {
  SceneConfig cfg;
  cfg.density = 0.99;
  CHECK_THROWS_AS(generate_scene(7, cfg, onto()), ConfigError);
}

TEST_CASE("scene save and load round-trip") {
  const Scene s = generate_scene(11, SceneConfig{}, onto());
  const auto path = temp_file("roundtrip.json");
  save_scene(s, path);
  const Scene back = load_scene(path, onto());
  CHECK(back == s);
}

TEST_CASE("bad scene files are parse errors") {
  const Scene s = oracle::ascii_scene({"#####", "#S.W#", "#####"}, {{'W', {"WaterBottle", {"drinkable", "portable"}}}});
  auto j = nlohmann::json::parse(scene_to_json(s).dump());
  REQUIRE_NOTHROW(scene_from_json(j, onto()));

  SUBCASE("footprint off the grid") {
    j["objects"][0]["footprint"] = nlohmann::json::array({nlohmann::json::array({9, 9})});
    CHECK_THROWS_AS(scene_from_json(j, onto()), ParseError);
  }
  SUBCASE("unknown category is named") {
    j["objects"][0]["category"] = "Spaceship";
    try {
      scene_from_json(j, onto());
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("Spaceship") != std::string::npos);
    }
  }
  SUBCASE("truncated file") {
    const auto path = temp_file("truncated.json");
    std::ofstream(path) << "{\"width\": 5,";
    CHECK_THROWS_AS(load_scene(path, onto()), ParseError);
  }
}

TEST_CASE("demand lookup") {
  CHECK(onto().lookup_demand("I am thirsty") == std::set<std::string>{"drinkable"});
  CHECK(onto().lookup_demand("I want decoration for my home") == std::set<std::string>{"decorative"});
  CHECK(onto().lookup_demand("zzqx unknown demand").empty());
  // case and punctuation do not matter
  CHECK(onto().lookup_demand("i am THIRSTY!") == std::set<std::string>{"drinkable"});
  CHECK(normalize_phrase("  It's   too, dark. ") == "its too dark");
}

TEST_CASE("ontology closure") {
  // every phrase attribute is carried by at least one registered category
  for (const auto& [phrase, attrs] : onto().demand_phrases()) {
    CHECK_FALSE(attrs.empty());
    const auto cats = onto().categories_covering(attrs);
    CHECK_MESSAGE(!cats.empty(), phrase);
    for (const auto& c : cats) CHECK(oracle::superset(oracle::attributes_from_entries(onto(), c), attrs));
  }
  for (const auto& [cat, info] : onto().categories()) {
    CHECK(onto().attributes_of(cat) == oracle::attributes_from_entries(onto(), cat));
    CHECK(info.width >= 1);
  }
}

TEST_CASE("ontology with a dangling category is rejected") {
  nlohmann::json j = {{"version", 1},
                      {"categories", {{"Mug", {{"footprint", {1, 1}}}}}},
                      {"entries", {{"drinkable", {"Teapot"}}}},
                      {"demand_phrases", {{"I am thirsty", {"drinkable"}}}}};
  CHECK_THROWS_AS(DemandOntology::from_json(j), ParseError);
}

TEST_CASE("seeded helpers") {
  Rng a(mix_seed(5, 1)), b(mix_seed(5, 1));
  for (int i = 0; i < 100; ++i) {
    const auto x = uniform_index(a, 7);
    CHECK(x == uniform_index(b, 7));
    CHECK(x < 7);
    const double u = uniform01(a);
    uniform01(b);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CHECK(mix_seed(5, 1) != mix_seed(5, 2));
}
