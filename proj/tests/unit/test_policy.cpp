#include <doctest.h>

#include "../oracles.hpp"
#include "ddnav/demand.hpp"
#include "ddnav/error.hpp"
#include "ddnav/knowledge.hpp"
#include "ddnav/policy.hpp"

using namespace ddnav;

namespace {

const DemandOntology& onto() {
  static const DemandOntology o = DemandOntology::load_default();
  return o;
}

ViewSummary clear_view(int ahead, int left, int right) {
  ViewSummary v;
  v.free_ahead = ahead;
  v.free_left = left;
  v.free_right = right;
  return v;
}

DetectedObject target(const std::string& category, double bearing, double distance) {
  DetectedObject d;
  d.object_id = category + "_1";
  d.category = category;
  d.attributes = onto().attributes_of(category);
  d.bearing = bearing;
  d.distance = distance;
  d.visible_extent = 1;
  return d;
}

MatchResult matched_of(std::vector<DetectedObject> objs) {
  MatchResult m;
  m.matched = std::move(objs);
  return m;
}

std::vector<Action> moves(int n) { return std::vector<Action>(static_cast<std::size_t>(n), Action::MoveAhead); }

// Free cells along a cardinal from `p`, stepped one cell at a time.
int scan_free(const Scene& s, GridPos p, int cardinal, int cap) {
  const GridPos d = oracle::cardinal_step(cardinal);
  int n = 0;
  while (n < cap && oracle::free_cell(s, {p.x + d.x * (n + 1), p.z + d.z * (n + 1)})) ++n;
  return n;
}

struct Scripted final : llm::ChatBackend {
  std::string reply;
  bool fail = false;
  std::string complete(const std::string&, const std::string&) override {
    if (fail) throw BackendError("unavailable");
    return reply;
  }
};

}  // namespace

TEST_CASE("rotation runs are compressed") {
  const std::vector<Action> h{Action::RotateLeft, Action::RotateLeft, Action::MoveAhead, Action::RotateRight};
  const auto runs = compress_rotations(h);
  REQUIRE(runs.size() == 2);
  CHECK(runs[0] == RotationRun{Turn::Left, 2});
  CHECK(runs[1] == RotationRun{Turn::Right, 1});
  CHECK(compress_rotations({Action::MoveAhead}).empty());
}

TEST_CASE("explore rule") {
  SUBCASE("open corridor") {
    const auto ctx = ExploreContext::make(clear_view(5, 0, 0), {}, false);
    CHECK(explore_rule(ctx).decision == moves(4));
  }
  SUBCASE("short corridor advances its length") {
    const auto ctx = ExploreContext::make(clear_view(2, 0, 0), {}, false);
    CHECK(explore_rule(ctx).decision == moves(2));
  }
  SUBCASE("blocked after turning left turns right") {
    const auto ctx = ExploreContext::make(clear_view(0, 4, 4),
                                          {Action::RotateLeft, Action::RotateLeft, Action::MoveAhead}, false);
    CHECK(explore_rule(ctx).decision == std::vector<Action>{Action::RotateRight});
  }
  SUBCASE("a turn in progress continues") {
    const auto ctx = ExploreContext::make(clear_view(1, 0, 4), {Action::MoveAhead, Action::RotateLeft}, false);
    CHECK(explore_rule(ctx).decision == std::vector<Action>{Action::RotateLeft});
  }
  SUBCASE("hindered step turns toward room") {
    auto ctx = ExploreContext::make(clear_view(5, 3, 1), {}, true);
    CHECK(explore_rule(ctx).decision == std::vector<Action>{Action::RotateLeft});
    ctx = ExploreContext::make(clear_view(5, 1, 3), {}, true);
    CHECK(explore_rule(ctx).decision == std::vector<Action>{Action::RotateRight});
    ctx = ExploreContext::make(clear_view(5, 2, 2), {}, true);
    CHECK(explore_rule(ctx).decision == std::vector<Action>{Action::RotateLeft});
  }
  SUBCASE("history window") {
    const std::deque<Action> h{Action::LookUp, Action::LookDown, Action::RotateLeft, Action::MoveAhead,
                               Action::RotateRight};
    const auto ctx = ExploreContext::make(clear_view(0, 0, 0), h, false);
    CHECK(ctx.history.size() == kHistoryWindow);
    CHECK(ctx.history.back() == Action::RotateRight);
  }
  SUBCASE("plans stay within the cap and carry reasoning") {
    for (int a = 0; a <= 20; ++a) {
      const auto t = explore_rule(ExploreContext::make(clear_view(a, 1, 2), {}, false));
      CHECK(t.decision.size() >= 1);
      CHECK(t.decision.size() <= kMaxPlanLength);
      CHECK_FALSE(t.description.empty());
      CHECK_FALSE(t.reasoning.empty());
    }
  }
}

TEST_CASE("exploit rule") {
  CHECK(exploit_rule(clear_view(3, 0, 0), matched_of({target("Toilet", 0, 1.0)})).decision ==
        std::vector<Action>{Action::Done});
  CHECK(exploit_rule(clear_view(3, 0, 0), matched_of({target("Toilet", 40, 3.0)})).decision ==
        std::vector<Action>{Action::RotateRight});
  CHECK(exploit_rule(clear_view(3, 0, 0), matched_of({target("Toilet", -40, 3.0)})).decision ==
        std::vector<Action>{Action::RotateLeft});
  CHECK(exploit_rule(clear_view(0, 3, 1), matched_of({target("Toilet", 0, 3.0)})).decision ==
        std::vector<Action>{Action::RotateLeft});
  CHECK(exploit_rule(clear_view(4, 0, 0), matched_of({target("Toilet", 0, 2.0)})).decision ==
        std::vector<Action>{Action::MoveAhead});
  // the nearest match is the one approached
  CHECK(exploit_rule(clear_view(4, 0, 0), matched_of({target("Vase", 90, 3.0), target("Statue", 0, 2.0)}))
            .decision == std::vector<Action>{Action::MoveAhead});
}

TEST_CASE("open-loop exploit sequence") {
  const auto t = exploit_sequence(clear_view(10, 0, 0), matched_of({target("Toilet", 0, 3.0)}));
  CHECK(t.decision == moves(6));
  const auto turn = exploit_sequence(clear_view(10, 0, 0), matched_of({target("Toilet", 60, 3.0)}));
  REQUIRE(turn.decision.size() >= 2);
  CHECK(turn.decision[0] == Action::RotateRight);
  CHECK(turn.decision[1] == Action::RotateRight);
  CHECK(turn.decision.size() <= kMaxPlanLength);
}

TEST_CASE("decide chooses the branch from the match") {
  RuleReasoner rules;
  SUBCASE("nothing matched explores forward") {
    const auto ctx = ExploreContext::make(clear_view(6, 0, 0), {Action::RotateLeft, Action::RotateLeft}, false);
    CHECK(decide({}, ctx, rules).decision == moves(4));
  }
  SUBCASE("visible target straight ahead") {
    const auto ctx = ExploreContext::make(clear_view(8, 0, 0), {}, false);
    CHECK(decide(matched_of({target("Toilet", 0, 2.5)}), ctx, rules).decision ==
          std::vector<Action>{Action::MoveAhead});
  }
  SUBCASE("painting behind a bed, wall on the right") {
    const auto ctx = ExploreContext::make(clear_view(0, 4, 0), {}, false);
    CHECK(decide(matched_of({target("Painting", 0, 2.5)}), ctx, rules).decision ==
          std::vector<Action>{Action::RotateLeft});
  }
  SUBCASE("a failing reasoner falls back") {
    struct Throwing final : Reasoner {
      DecisionTriple explore(const ExploreContext&) override { throw BackendError("x"); }
      DecisionTriple exploit(const ViewSummary&, const MatchResult&, const ExploitHints&) override {
        throw BackendError("x");
      }
      DecisionTriple reflect(const ReflectionInput&) override { throw BackendError("x"); }
      DecisionTriple describe(const ViewSummary&, const DetectedObject&, Action) override { throw BackendError("x"); }
    } broken;
    const auto ctx = ExploreContext::make(clear_view(6, 0, 0), {}, false);
    CHECK_THROWS_AS(decide({}, ctx, broken), BackendError);
    CHECK(decide({}, ctx, broken, {}, &rules).decision == moves(4));
  }
}

TEST_CASE("reflection on fixture scenes") {
  RuleReasoner rules;
  SUBCASE("chair ahead with more room on the right") {
    const Scene s = oracle::ascii_scene({"#######", "#..C..#", "#..S..#", "#######"}, {{'C', {"Chair", {"sittable"}}}});
    Scene skew = s;
    skew.at({1, 1}).kind = CellKind::Wall;  // shrink the left side
    AgentState st{{3, 1}, 0, 0, 0, 0.0};
    const auto out = step(skew, st, Action::MoveAhead);
    REQUIRE(out.hindered);
    ReflectionInput in;
    in.failed = Action::MoveAhead;
    in.hindrance = {st.pos, out.info->cell, 0, out.info->kind, out.info->object_id};
    in.view = observe(skew, st);
    CHECK(scan_free(skew, st.pos, 90, 20) > scan_free(skew, st.pos, 270, 20));
    const auto t = reflect_rule(in);
    CHECK(t.decision == std::vector<Action>{Action::RotateRight});
    CHECK(t.description.find(s.objects[0].id) != std::string::npos);
    CHECK(rules.reflect(in) == rules.reflect(in));
  }
  SUBCASE("wall ahead with symmetric room") {
    const Scene s = oracle::ascii_scene({"#######", "#..S..#", "#######"});
    AgentState st{{3, 1}, 0, 0, 0, 0.0};
    const auto out = step(s, st, Action::MoveAhead);
    REQUIRE(out.hindered);
    REQUIRE(scan_free(s, st.pos, 90, 20) == scan_free(s, st.pos, 270, 20));
    ReflectionInput in;
    in.hindrance = {st.pos, out.info->cell, 0, CellKind::Wall, {}};
    in.view = observe(s, st);
    CHECK(reflect_rule(in).decision == std::vector<Action>{Action::RotateLeft});
  }
}

TEST_CASE("reply parsing") {
  const std::string ok = "Scene Description: a hallway.\nReasoning: nothing blocks the way.\nDecision: MoveAhead\n";
  auto t = llm::parse_triple(ok);
  CHECK(t.description == "a hallway.");
  CHECK(t.reasoning == "nothing blocks the way.");
  CHECK(t.decision == std::vector<Action>{Action::MoveAhead});

  CHECK(llm::parse_triple("Scene Description: x\nReasoning: y\nDecision: MoveAhead, MoveAhead\nthanks!").decision ==
        moves(2));
  CHECK_THROWS_AS(llm::parse_triple("Scene Description: x\nReasoning: y\nDecision: Jump"), ParseError);
  CHECK_THROWS_AS(llm::parse_triple("Scene Description: x\nReasoning: y\nDecision: TeleportToGoal"), ParseError);
  CHECK_THROWS_AS(llm::parse_triple("Scene Description: x\nDecision: MoveAhead"), ParseError);
  CHECK_THROWS_AS(llm::parse_triple("Scene Description: x\nReasoning: y\n"), ParseError);
  try {
    llm::parse_triple("Scene Description: x\nDecision: MoveAhead");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("Reasoning") != std::string::npos);
  }
  llm::ParseOptions loose;
  loose.require_cot = false;
  CHECK(llm::parse_triple("Decision: RotateLeft", loose).decision == std::vector<Action>{Action::RotateLeft});

  llm::ParseOptions single;
  single.max_actions = 1;
  CHECK_THROWS_AS(llm::parse_triple("Scene Description: x\nReasoning: y\nDecision: MoveAhead, MoveAhead", single),
                  ParseError);
}

TEST_CASE("triple format round-trip") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    DecisionTriple t;
    t.description = "view " + std::to_string(i);
    t.reasoning = "because " + std::to_string(i * 7);
    const auto n = 1 + uniform_index(rng, 6);
    for (std::uint64_t k = 0; k < n; ++k) t.decision.push_back(kAllActions[uniform_index(rng, kAllActions.size())]);
    CHECK(llm::parse_triple(llm::format_triple(t)) == t);
  }
}

TEST_CASE("model reasoner parses replies and falls back") {
  Scripted chat;
  LlmReasoner r(chat, llm::TemplateSet::load_default());
  const auto ctx = ExploreContext::make(clear_view(0, 2, 1), {}, false);

  chat.reply = "Scene Description: hall\nReasoning: open\nDecision: MoveAhead";
  CHECK(r.explore(ctx).decision == std::vector<Action>{Action::MoveAhead});
  CHECK(r.last_fallback().empty());

  chat.reply = "Scene Description: hall\nReasoning: open\nDecision: Jump";
  CHECK(r.explore(ctx) == explore_rule(ctx));
  CHECK_FALSE(r.last_fallback().empty());

  chat.fail = true;
  CHECK(r.explore(ctx) == explore_rule(ctx));
  CHECK_FALSE(r.last_fallback().empty());
}

TEST_CASE("queue-clear law") {
  RuleReasoner rules;
  Policy p(rules, {});
  const AgentState st{{0, 0}, 0, 0, 0, 0.0};
  auto tick = p.next({}, clear_view(6, 0, 0), st);
  CHECK(tick.action == Action::MoveAhead);
  CHECK(tick.phase == Phase::Explore);
  p.record(tick.action, false);
  CHECK(p.queued() == 3);

  tick = p.next({}, clear_view(5, 0, 0), st);
  CHECK(tick.phase == Phase::Queued);
  p.record(tick.action, false);
  CHECK(p.queued() == 2);

  tick = p.next(matched_of({target("Toilet", 30, 3.0)}), clear_view(5, 0, 0), st);
  CHECK(p.queued() == 0);
  CHECK(tick.phase == Phase::Exploit);
  CHECK(tick.action == Action::RotateRight);

  // a preloaded look-around is dropped the same way
  p.preload(std::vector<Action>(4, Action::RotateRight), {});
  CHECK(p.queued() == 4);
  p.next(matched_of({target("Toilet", 0, 1.0)}), clear_view(5, 0, 0), st);
  CHECK(p.queued() == 0);
}

TEST_CASE("hindrance sets the obstacle flag") {
  RuleReasoner rules;
  Policy p(rules, {});
  p.record(Action::MoveAhead, true);
  CHECK(p.obstacle_flag());
  p.record(Action::RotateLeft, false);
  CHECK_FALSE(p.obstacle_flag());
  for (int i = 0; i < 10; ++i) p.record(Action::RotateLeft, false);
  CHECK(p.history().size() <= kHistoryWindow);
}

TEST_CASE("exploit reaches Done within four times the planned length") {
  struct Fixture {
    std::vector<std::string> rows;
    int yaw;
  };
  const std::vector<Fixture> fixtures = {
      {{"..........", "....T.....", "..........", "..........", "..........", "..........", "..........",
        "..........", "..........", "....S....."},
       0},
      {{"..........", ".......T..", "..........", "..........", "..........", "..........", "..........",
        "..........", "..........", "..S......."},
       30},
      {{"....T.....", "..........", "..........", "..........", "...CCC....", "..........", "..........",
        "..........", "....S.....", ".........."},
       0},
      {{"#############", "#.....T.....#", "#...........#", "#...........#", "#...........#", "#....###....#",
        "#...........#", "#...........#", "#...........#", "#.....S.....#", "#############"},
       0},
  };
  RuleReasoner rules;
  for (const auto& f : fixtures) {
    const Scene s = oracle::ascii_scene(f.rows, {{'T', {"Toilet", {"sanitary"}}}, {'C', {"Chair", {"sittable"}}}});
    const SceneObject* goal = nullptr;
    for (const auto& o : s.objects)
      if (o.category == "Toilet") goal = &o;
    REQUIRE(goal);
    AgentState st{s.spawn_points.front(), f.yaw, 0, 0, 0.0};
    const auto plan = plan_to_object(s, st, goal->id);
    Policy p(rules, {});
    bool done = false;
    const int budget = 4 * static_cast<int>(plan.size());
    for (int i = 0; i < budget && !done; ++i) {
      const auto view = observe(s, st);
      const auto m = match_or_empty(onto(), {"I need to use the bathroom", view.detected});
      const auto tick = p.next(m, view, st);
      const auto out = step(s, st, tick.action);
      p.record(tick.action, out.hindered);
      st = out.state;
      done = out.terminal;
    }
    CHECK(done);
    CHECK(within_success_radius(*goal, st.pos));
  }
}
