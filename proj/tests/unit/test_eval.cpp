#include <doctest.h>

#include <fstream>

#include "../oracles.hpp"
#include "ddnav/error.hpp"
#include "ddnav/eval.hpp"

using namespace ddnav;

namespace {

const DemandOntology& onto() {
  static const DemandOntology o = DemandOntology::load_default();
  return o;
}

std::filesystem::path fresh(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "ddnav_unit";
  std::filesystem::create_directories(dir);
  auto p = dir / name;
  std::filesystem::remove(p);
  return p;
}

EpisodeResult outcome(bool nav, double p, std::optional<double> l, std::string pool = "seen") {
  EpisodeResult r;
  r.nav_success = nav;
  r.sel_success = nav;
  r.path_length = p;
  r.shortest_length = l;
  r.scene_pool = std::move(pool);
  r.instruction_pool = "seen";
  r.steps = 10;
  return r;
}

EpisodeConfig fixture_episode(int max_steps = kDefaultMaxSteps) {
  std::vector<std::string> rows(14, ".......");
  rows[0] = "...T...";
  rows[13] = "...S...";
  EpisodeConfig c;
  c.scene = std::make_shared<const Scene>(oracle::ascii_scene(rows, {{'T', {"Toilet", {"sanitary"}}}}));
  c.scene_ref = "fixture";
  c.instruction = "I need to use the bathroom";
  c.spawn_yaw = 0;
  c.max_steps = max_steps;
  c.seed = 9;
  return c;
}

std::vector<EpisodeConfig> generated_pool(std::uint64_t first, int count, double density) {
  std::vector<NamedScene> scenes;
  for (int i = 0; i < count; ++i) {
    SceneConfig cfg;
    cfg.density = density;
    scenes.push_back({"s" + std::to_string(i),
                      std::make_shared<const Scene>(generate_scene(first + static_cast<std::uint64_t>(i), cfg, onto()))});
  }
  std::vector<std::string> phrases;
  for (const auto& [p, a] : onto().demand_phrases()) phrases.push_back(p);
  EpisodeConfig base;
  base.seed = first;
  return make_episodes(scenes, phrases, base, onto(), true, 1);
}

}  // namespace

TEST_CASE("target visible at spawn") {
  const auto c = fixture_episode();
  // the straight line to the target is free, so the grid path is the line itself
  const GridPos spawn = c.scene->spawn_points.front();
  CHECK(oracle::bfs_distance(*c.scene, spawn, {3, 7}) == 7);
  const auto r = run_episode(c, {&onto()});
  CHECK(r.nav_success);
  CHECK(r.sel_success);
  CHECK(r.hindrance_count == 0);
  REQUIRE(r.shortest_length.has_value());
  CHECK(*r.shortest_length == doctest::Approx(7 * 0.25));
  CHECK(r.path_length >= *r.shortest_length);
}

TEST_CASE("step budget") {
  const auto r = run_episode(fixture_episode(1), {&onto()});
  CHECK_FALSE(r.nav_success);
  CHECK(r.steps == 1);
}

TEST_CASE("episodes are deterministic") {
  for (const auto& c : generated_pool(500, 3, 0.15)) {
    const auto a = result_to_json(run_episode(c, {&onto()})).dump();
    const auto b = result_to_json(run_episode(c, {&onto()})).dump();
    CHECK(a == b);
  }
}

TEST_CASE("SPL") {
  CHECK(compute_spl({outcome(true, 3.0, 3.0)}) == doctest::Approx(1.0));
  CHECK(compute_spl({outcome(true, 8.0, 4.0)}) == doctest::Approx(0.5));
  CHECK(compute_spl({outcome(false, 2.0, 4.0), outcome(false, 1.0, std::nullopt)}) == doctest::Approx(0.0));
  CHECK(compute_spl({outcome(true, 0.0, 0.0)}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(compute_spl({}), EmptySet);
}

TEST_CASE("metric aggregation") {
  std::vector<EpisodeResult> rs;
  for (int i = 0; i < 10; ++i) rs.push_back(outcome(i < 6, 2.0, 2.0, i % 2 ? "unseen" : "seen"));
  rs[9].sel_success = true;
  const auto m = compute_metrics(rs);
  CHECK(m.episodes == 10);
  CHECK(m.nsr == doctest::Approx(0.6));
  CHECK(m.ssr == doctest::Approx(0.7));
  CHECK(m.spl == doctest::Approx(0.6));
  CHECK(m.mean_steps == doctest::Approx(10.0));
  CHECK_THROWS_AS(compute_metrics({}), EmptySet);

  const auto report = make_report("full", rs);
  CHECK(report.splits.size() == 2);
  CHECK(report.splits.count("seen/seen") == 1);
  CHECK(report.splits.count("unseen/seen") == 1);
  CHECK(report.splits.at("seen/seen").episodes == 5);

  const auto back = reports_from_file_json(nlohmann::json::parse(report_file_json({report}, {{"backend", "rule"}}).dump()));
  REQUIRE(back.size() == 1);
  CHECK(back[0].label == "full");
  CHECK(back[0].overall.nsr == doctest::Approx(0.6));
  CHECK(render_table({report}).find("full") != std::string::npos);
}

TEST_CASE("suite metrics are bounded and paths are never shorter than the oracle") {
  const auto pool = generated_pool(600, 6, 0.15);
  REQUIRE(pool.size() > 10);
  const auto suite = run_suite(pool, {&onto()}, 4);
  CHECK(suite.results.size() == pool.size());
  for (double v : {suite.report.overall.nsr, suite.report.overall.spl, suite.report.overall.ssr}) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(suite.report.overall.ssr >= suite.report.overall.nsr);
  for (const auto& r : suite.results) {
    if (!r.nav_success) continue;
    REQUIRE(r.shortest_length.has_value());
    CHECK(r.path_length + 1e-9 >= *r.shortest_length);
  }
  // thread count does not change results
  const auto serial = run_suite(pool, {&onto()}, 1);
  for (std::size_t i = 0; i < pool.size(); ++i)
    CHECK(result_to_json(serial.results[i]).dump() == result_to_json(suite.results[i]).dump());
  CHECK_THROWS_AS(run_suite({}, {&onto()}), EmptySet);
}

TEST_CASE("reflection rounds") {
  const auto pool = generated_pool(700, 4, 0.25);
  REQUIRE_FALSE(pool.empty());
  const int per_round = static_cast<int>(pool.size());

  KnowledgeBase kb(fresh("rounds.jsonl"));
  const auto on = run_reflection_rounds(pool, 2, per_round, kb, {&onto()}, 2);
  REQUIRE(on.hindrances.size() == 2);
  CHECK(on.hindrances[1] <= on.hindrances[0]);
  CHECK(kb.rounds().count(1) == 1);
  CHECK(kb.count() == on.kb_counts.back());

  std::vector<EpisodeConfig> ablated = pool;
  for (auto& c : ablated) c.ablation.no_reflection = true;
  KnowledgeBase empty(fresh("rounds_off.jsonl"));
  const auto off = run_reflection_rounds(ablated, 2, per_round, empty, {&onto()}, 2);
  CHECK(off.kb_counts == std::vector<std::size_t>{0, 0});
  CHECK(empty.count() == 0);
}

TEST_CASE("pool helpers") {
  const auto dir = std::filesystem::temp_directory_path() / "ddnav_unit" / "instr";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "ins.txt") << "# comment\nI am thirsty\n\n  I am hungry  \n";
  const auto ins = load_instructions(dir / "ins.txt");
  CHECK(ins == std::vector<std::string>{"I am thirsty", "I am hungry"});
  CHECK(parse_backend("rule") == BackendKind::Rule);
  CHECK_THROWS_AS(parse_backend("gpt"), ConfigError);
  Ablation a;
  CHECK(a.label() == "full");
  a.no_cot = true;
  CHECK(a.label() == "no-cot");
}
