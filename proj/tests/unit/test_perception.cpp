#include <doctest.h>

#include <cmath>

#include "../oracles.hpp"
#include "ddnav/perception.hpp"

using namespace ddnav;

namespace {

const DemandOntology& onto() {
  static const DemandOntology o = DemandOntology::load_default();
  return o;
}

bool sees(const ViewSummary& v, const std::string& id) {
  for (const auto& d : v.detected)
    if (d.object_id == id) return true;
  return false;
}

}  // namespace

TEST_CASE("object straight ahead") {
  const Scene s = oracle::ascii_scene({"..V..", ".....", "..S.."});
  const auto v = observe(s, {{2, 0}, 0, 0, 0, 0.0});
  REQUIRE(v.detected.size() == 1);
  CHECK(v.detected[0].bearing == doctest::Approx(0.0));
  CHECK(v.detected[0].distance == doctest::Approx(0.5));
  CHECK(v.detected[0].visible_extent == 1);
  CHECK(v.free_ahead == 1);
}

TEST_CASE("walls occlude") {
  const Scene s = oracle::ascii_scene({"..V..", "..#..", "..S.."});
  CHECK(observe(s, {{2, 0}, 0, 0, 0, 0.0}).detected.empty());
}

TEST_CASE("objects do not occlude") {
  const Scene s = oracle::ascii_scene({"..V..", "..C..", "..S.."}, {{'C', {"Chair", {"sittable"}}}});
  CHECK(observe(s, {{2, 0}, 0, 0, 0, 0.0}).detected.size() == 2);
}

TEST_CASE("field of view") {
  const Scene s = oracle::ascii_scene({"..V..", ".....", "..S.."});
  CHECK(observe(s, {{2, 0}, 300, 0, 0, 0.0}).detected.empty());  // bearing +60
  CHECK(observe(s, {{2, 0}, 60, 0, 0, 0.0}).detected.empty());   // bearing -60
  const auto v = observe(s, {{2, 0}, 330, 0, 0, 0.0});
  REQUIRE(v.detected.size() == 1);
  CHECK(v.detected[0].bearing == doctest::Approx(30.0));
}

TEST_CASE("low objects need a lowered camera when far") {
  std::vector<std::string> rows(14, ".");
  rows[0] = "D";
  rows[13] = "S";
  const Scene s = oracle::ascii_scene(rows, {{'D', {"Dumbbell", {"exercise", "portable"}}}});
  Scene low = s;
  low.objects[0].low = true;
  const AgentState far{{0, 0}, 0, 0, 0, 0.0};  // 13 cells = 3.25 m
  CHECK(observe(low, far).detected.empty());
  CHECK(observe(low, {{0, 0}, 0, -30, 0, 0.0}).detected.size() == 1);
  CHECK(observe(low, {{0, 6}, 0, 0, 0, 0.0}).detected.size() == 1);  // 1.75 m
  CHECK(observe(s, far).detected.size() == 1);
}

TEST_CASE("raycast") {
  const Scene corridor = oracle::ascii_scene({"S........"});
  auto hit = raycast(corridor, {0, 0}, 90, 4);
  CHECK(hit.max_range);
  CHECK(hit.cells == 4);
  CHECK(hit.cell == GridPos{4, 0});

  const Scene walled = oracle::ascii_scene({"S..#....."});
  hit = raycast(walled, {0, 0}, 90, 8);
  CHECK_FALSE(hit.max_range);
  CHECK(hit.cells == 3);
  CHECK(hit.content == CellKind::Wall);
  CHECK(hit.cell == GridPos{3, 0});
  CHECK(clearance(walled, {0, 0}, 90, 8) == 2);

  const Scene east = oracle::ascii_scene({".S#."});
  hit = raycast(east, {1, 0}, 90, 5);
  CHECK(hit.cells == 1);
  CHECK(hit.content == CellKind::Wall);

  // leaving the grid counts as a wall
  hit = raycast(corridor, {0, 0}, 270, 5);
  CHECK(hit.cells == 1);
  CHECK(hit.content == CellKind::Wall);
}

TEST_CASE("bearing convention") {
  CHECK(bearing_to({0, 0}, 0, {0, 3}) == doctest::Approx(0.0));
  CHECK(bearing_to({0, 0}, 0, {3, 0}) == doctest::Approx(90.0));
  CHECK(bearing_to({0, 0}, 0, {-3, 0}) == doctest::Approx(-90.0));
  CHECK(bearing_to({0, 0}, 90, {0, -3}) == doctest::Approx(90.0));
  CHECK(wrap_bearing(-180.0) == doctest::Approx(180.0));
  CHECK(wrap_bearing(540.0) == doctest::Approx(180.0));
}

TEST_CASE("line of sight matches an exact traversal oracle") {
  Rng rng(77);
  int blocked = 0, open = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Scene s = generate_scene(seed, SceneConfig{}, onto());
    for (int i = 0; i < 400; ++i) {
      const GridPos a{static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(s.width))),
                      static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(s.depth)))};
      const GridPos b{static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(s.width))),
                      static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(s.depth)))};
      if (!s.is_free(a)) continue;
      const bool expect = oracle::exact_los(s, a, b);
      CHECK(line_of_sight(s, a, b) == expect);
      CHECK(line_of_sight(s, b, a) == line_of_sight(s, a, b));
      (expect ? open : blocked)++;
    }
  }
  CHECK(open > 100);
  CHECK(blocked > 100);
}

TEST_CASE("detection predicate re-derived by brute force") {
  Rng rng(99);
  int detections = 0;
  for (std::uint64_t seed = 20; seed < 35; ++seed) {
    SceneConfig cfg;
    cfg.density = 0.15;
    const Scene s = generate_scene(seed, cfg, onto());
    for (int trial = 0; trial < 40; ++trial) {
      AgentState st;
      do {
        st.pos = {static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(s.width))),
                  static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(s.depth)))};
      } while (!s.is_free(st.pos));
      st.yaw = static_cast<int>(uniform_index(rng, 12)) * 30;
      st.pitch = static_cast<int>(uniform_index(rng, 5)) * 30 - 60;
      const auto view = observe(s, st);
      for (const auto& o : s.objects) {
        int extent = 0;
        double best = 1e9;
        for (auto c : o.footprint) {
          const double meters = std::hypot(c.x - st.pos.x, c.z - st.pos.z) * 0.25;
          double rel = std::atan2(c.x - st.pos.x, c.z - st.pos.z) * 180.0 / oracle::kPi - st.yaw;
          while (rel > 180.0) rel -= 360.0;
          while (rel <= -180.0) rel += 360.0;
          if (meters > 5.0 + 1e-9 || std::abs(rel) > 45.0 + 1e-9) continue;
          if (o.low && meters > 2.0 + 1e-9 && st.pitch > -30) continue;
          if (!oracle::exact_los(s, st.pos, c)) continue;
          ++extent;
          best = std::min(best, meters);
        }
        const DetectedObject* d = nullptr;
        for (const auto& x : view.detected)
          if (x.object_id == o.id) d = &x;
        CHECK((d != nullptr) == (extent > 0));
        if (d && extent > 0) {
          ++detections;
          CHECK(d->visible_extent == extent);
          CHECK(d->distance == doctest::Approx(best));
        }
      }
      for (std::size_t i = 1; i < view.detected.size(); ++i)
        CHECK(view.detected[i - 1].distance <= view.detected[i].distance);
    }
  }
  CHECK(detections > 50);
}

TEST_CASE("wider range and field of view only add detections") {
  Rng rng(5);
  for (std::uint64_t seed = 40; seed < 50; ++seed) {
    const Scene s = generate_scene(seed, SceneConfig{}, onto());
    for (int trial = 0; trial < 20; ++trial) {
      AgentState st;
      st.pos = s.spawn_points[uniform_index(rng, s.spawn_points.size())];
      st.yaw = static_cast<int>(uniform_index(rng, 12)) * 30;
      PerceptionConfig narrow;
      narrow.range_m = 2.5;
      narrow.fov_deg = 60;
      const auto small = observe(s, st, narrow);
      const auto big = observe(s, st);
      for (const auto& d : small.detected) CHECK(sees(big, d.object_id));
    }
  }
}

TEST_CASE("noisy observation drops detections from the episode stream") {
  const Scene s = oracle::ascii_scene({"V.V.V", ".....", "..S.."});
  NoiseConfig all{1.0};
  Rng rng(1);
  CHECK(observe(s, {{2, 0}, 0, 0, 0, 0.0}, {}, &all, &rng).detected.empty());
  NoiseConfig none{0.0};
  CHECK(observe(s, {{2, 0}, 0, 0, 0, 0.0}, {}, &none, &rng).detected.size() == 3);
  NoiseConfig half{0.5};
  Rng r1(3), r2(3);
  CHECK(observe(s, {{2, 0}, 0, 0, 0, 0.0}, {}, &half, &r1) == observe(s, {{2, 0}, 0, 0, 0, 0.0}, {}, &half, &r2));
}

TEST_CASE("text digests parse back") {
  const Scene s = oracle::ascii_scene({"V.W..", ".....", "..S.."}, {{'W', {"WaterBottle", {"drinkable", "portable"}}}});
  const auto v = observe(s, {{2, 0}, 0, 0, 0, 0.0});
  REQUIRE(v.detected.size() == 2);
  const auto back = parse_objects(format_objects(v.detected));
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].object_id == v.detected[i].object_id);
    CHECK(back[i].category == v.detected[i].category);
    CHECK(back[i].attributes == v.detected[i].attributes);
    CHECK(back[i].bearing == doctest::Approx(v.detected[i].bearing).epsilon(0.01));
    CHECK(back[i].distance == doctest::Approx(v.detected[i].distance).epsilon(0.01));
  }
  CHECK(format_objects({}) == "- none");
  ViewSummary c;
  REQUIRE(parse_clearance("noise " + format_clearance(v) + " tail", c));
  CHECK(c.free_ahead == v.free_ahead);
  CHECK(c.free_left == v.free_left);
  CHECK(c.free_right == v.free_right);
  CHECK_FALSE(parse_clearance("nothing here", c));
}
