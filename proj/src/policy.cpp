#include "ddnav/policy.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <sstream>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "ddnav/error.hpp"

namespace ddnav {

namespace {

std::string_view side_word(Turn t) { return t == Turn::Left ? "left" : "right"; }

// Rotation that brings `yaw` onto `heading` soonest; `tie` breaks a 180° turn.
std::optional<Turn> turn_toward(int yaw, int heading, Turn tie) {
  const int diff = wrap_yaw(heading - yaw);
  if (diff == 0) return std::nullopt;
  if (diff == 180) return tie;
  return diff < 180 ? Turn::Right : Turn::Left;
}

std::string clearance_text(const ViewSummary& v) {
  return fmt::format("Free cells ahead {}, to the left {}, to the right {}.", v.free_ahead, v.free_left,
                     v.free_right);
}

std::string target_text(const DetectedObject& t) {
  return fmt::format("{} ({}) is {:.2f} m away at {:+.0f} degrees{}.", t.category, t.object_id, t.distance,
                     t.bearing, t.remembered ? ", last seen there" : "");
}

int lateral(const ViewSummary& v, Turn t) { return t == Turn::Left ? v.free_left : v.free_right; }

DecisionTriple single(std::string d, std::string r, Action a) { return {std::move(d), std::move(r), {a}}; }

// Detour state after the agent, aligned with the detour heading, finds it blocked.
DetourState on_detour_blocked(DetourState s) {
  ++s.flips;
  if (s.flips == 1) {
    s.side = other(*s.side);
    s.heading = wrap_yaw(s.heading + 180);
    s.moves_left = kDetourMoves;
  } else if (s.flips == 2) {
    s.heading = wrap_yaw(s.blocked_heading + 180);
    s.moves_left = kDetourMoves;
  } else {
    s.side.reset();
    s.moves_left = 0;
  }
  return s;
}

}  // namespace

std::string_view to_string(Turn t) { return t == Turn::Left ? "Left" : "Right"; }

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Explore: return "explore";
    case Phase::Exploit: return "exploit";
    case Phase::Queued: return "queued";
    case Phase::Reflect: return "reflect";
  }
  return "?";
}

std::vector<RotationRun> compress_rotations(const std::vector<Action>& history) {
  std::vector<RotationRun> runs;
  for (Action a : history) {
    if (!is_rotation(a)) continue;
    const Turn t = a == Action::RotateLeft ? Turn::Left : Turn::Right;
    if (!runs.empty() && runs.back().direction == t) {
      ++runs.back().count;
    } else {
      runs.push_back({t, 1});
    }
  }
  return runs;
}

ExploreContext ExploreContext::make(ViewSummary view, const std::deque<Action>& history, bool obstacle) {
  ExploreContext c;
  c.view = std::move(view);
  const std::size_t skip = history.size() > kHistoryWindow ? history.size() - kHistoryWindow : 0;
  c.history.assign(history.begin() + static_cast<std::ptrdiff_t>(skip), history.end());
  c.recent_rotations = compress_rotations(c.history);
  c.obstacle = obstacle;
  return c;
}

// ---------------------------------------------------------------- text codecs

std::string format_hints(const ExploitHints& h) {
  const auto side = [](const std::optional<Turn>& t) -> std::string {
    return t ? std::string(side_word(*t)) : "none";
  };
  return fmt::format("Memory: yaw={} detour={} heading={} blocked={} moves_left={} flips={} preferred={} use_detour={}",
                     h.yaw, side(h.detour.side), h.detour.heading, h.detour.blocked_heading, h.detour.moves_left,
                     h.detour.flips, side(h.detour.preferred), h.use_detour ? 1 : 0);
}

std::optional<ExploitHints> parse_hints(const std::string& text) {
  static const std::regex re(
      R"(Memory: yaw=(\d+) detour=(\w+) heading=(\d+) blocked=(\d+) moves_left=(\d+) flips=(\d+) preferred=(\w+) use_detour=([01]))");
  std::smatch m;
  if (!std::regex_search(text, m, re)) return std::nullopt;
  const auto side = [](const std::string& s) -> std::optional<Turn> {
    if (s == "left") return Turn::Left;
    if (s == "right") return Turn::Right;
    return std::nullopt;
  };
  ExploitHints h;
  h.yaw = std::stoi(m[1]);
  h.detour.side = side(m[2]);
  h.detour.heading = std::stoi(m[3]);
  h.detour.blocked_heading = std::stoi(m[4]);
  h.detour.moves_left = std::stoi(m[5]);
  h.detour.flips = std::stoi(m[6]);
  h.detour.preferred = side(m[7]);
  h.use_detour = m[8] == "1";
  return h;
}

std::string format_hindrance(const Hindrance& h) {
  return fmt::format("Hindrance: agent=({},{}) blocked=({},{}) heading={} content={} object={}", h.agent_cell.x,
                     h.agent_cell.z, h.blocked_cell.x, h.blocked_cell.z, h.heading,
                     h.content == CellKind::Object ? "object" : "wall", h.object_id.empty() ? "-" : h.object_id);
}

std::optional<Hindrance> parse_hindrance(const std::string& text) {
  static const std::regex re(
      R"(Hindrance: agent=\((-?\d+),(-?\d+)\) blocked=\((-?\d+),(-?\d+)\) heading=(\d+) content=(wall|object) object=(\S+))");
  std::smatch m;
  if (!std::regex_search(text, m, re)) return std::nullopt;
  Hindrance h;
  h.agent_cell = {std::stoi(m[1]), std::stoi(m[2])};
  h.blocked_cell = {std::stoi(m[3]), std::stoi(m[4])};
  h.heading = std::stoi(m[5]);
  h.content = m[6] == "object" ? CellKind::Object : CellKind::Wall;
  if (m[7] != "-") h.object_id = m[7];
  return h;
}

// ---------------------------------------------------------------- rules

const DetectedObject& nearest(const std::vector<DetectedObject>& objects) {
  if (objects.empty()) throw EmptySet("no matched object to approach");
  return *std::min_element(objects.begin(), objects.end(), [](const auto& a, const auto& b) {
    return std::tie(a.distance, a.object_id) < std::tie(b.distance, b.object_id);
  });
}

Turn roomier_side(const ViewSummary& v) { return v.free_right > v.free_left ? Turn::Right : Turn::Left; }

DecisionTriple explore_rule(const ExploreContext& ctx) {
  const auto& v = ctx.view;
  std::string d = clearance_text(v);
  if (!v.detected.empty()) d += fmt::format(" Visible but unrelated: {}.", v.detected.front().category);
  if (ctx.obstacle) {
    const Turn t = roomier_side(v);
    return single(d, fmt::format("The last move was blocked; turn {} where there is more room before retrying.",
                                 side_word(t)),
                  rotation_of(t));
  }
  if (v.free_ahead >= 2) {
    const int k = std::min(v.free_ahead, kMaxExploreMoves);
    return {d, fmt::format("The way ahead is open; advance {} cells to explore new space.", k),
            std::vector<Action>(static_cast<std::size_t>(k), Action::MoveAhead)};
  }
  Turn t;
  std::string why;
  if (!ctx.history.empty() && is_rotation(ctx.history.back())) {
    t = ctx.history.back() == Action::RotateLeft ? Turn::Left : Turn::Right;
    why = fmt::format("Still facing an obstruction; keep turning {}.", side_word(t));
  } else if (!ctx.recent_rotations.empty()) {
    t = other(ctx.recent_rotations.back().direction);
    why = fmt::format("Blocked ahead; the last turns went {}, so turn {} to avoid revisiting that side.",
                      side_word(other(t)), side_word(t));
  } else {
    t = roomier_side(v);
    why = fmt::format("Blocked ahead; turn {} toward the larger free space.", side_word(t));
  }
  return single(d, why, rotation_of(t));
}

DecisionTriple explore_direct(const ExploreContext& ctx) {
  const auto& v = ctx.view;
  if (v.free_ahead >= 2) {
    return {{}, {}, std::vector<Action>(static_cast<std::size_t>(std::min(v.free_ahead, kMaxExploreMoves)),
                                        Action::MoveAhead)};
  }
  return {{}, {}, {rotation_of(roomier_side(v))}};
}

DecisionTriple exploit_rule(const ViewSummary& view, const MatchResult& matched, const ExploitHints& hints) {
  const DetectedObject& t = nearest(matched.matched);
  const std::string d = target_text(t) + " " + clearance_text(view);
  if (t.distance <= kSuccessRadius + 1e-9) {
    return single(d, "The target is within reach; stop here.", Action::Done);
  }
  if (hints.use_detour && hints.detour.active()) {
    DetourState s = hints.detour;
    if (hints.yaw == s.heading && view.free_ahead == 0) s = on_detour_blocked(s);
    if (s.active()) {
      if (auto turn = turn_toward(hints.yaw, s.heading, *s.side)) {
        return single(d, fmt::format("Going around the obstruction on the {}; turn {} to line up with the side path.",
                                     side_word(*s.side), side_word(*turn)),
                      rotation_of(*turn));
      }
      if (s.moves_left > 0) {
        return single(d, fmt::format("Sidestepping the obstruction; {} more cell(s) before turning back.",
                                     s.moves_left - 1),
                      Action::MoveAhead);
      }
    }
  }
  if (std::abs(t.bearing) > kBearingThreshold) {
    const Turn turn = t.bearing > 0 ? Turn::Right : Turn::Left;
    return single(d, fmt::format("The target is off to the {}; rotate to face it.", side_word(turn)),
                  rotation_of(turn));
  }
  if (view.free_ahead == 0) {
    Turn turn = roomier_side(view);
    if (hints.use_detour && hints.detour.preferred && lateral(view, *hints.detour.preferred) > 0) {
      turn = *hints.detour.preferred;
    }
    return single(d, fmt::format("Something blocks the direct path; turn {} to go around it.", side_word(turn)),
                  rotation_of(turn));
  }
  return single(d, "The target is ahead and the path is clear; move closer.", Action::MoveAhead);
}

DecisionTriple exploit_sequence(const ViewSummary& view, const MatchResult& matched) {
  const DetectedObject& t = nearest(matched.matched);
  const std::string d = target_text(t) + " " + clearance_text(view);
  if (t.distance <= kSuccessRadius + 1e-9) return single(d, "The target is within reach; stop here.", Action::Done);
  std::vector<Action> plan;
  const int turns = static_cast<int>(std::lround(std::abs(t.bearing) / kRotationStep));
  for (int i = 0; i < turns && plan.size() < kMaxPlanLength; ++i)
    plan.push_back(t.bearing > 0 ? Action::RotateRight : Action::RotateLeft);
  if (turns == 0) {
    const int needed = static_cast<int>(std::ceil((t.distance - kSuccessRadius) / kCellSize));
    const int moves = std::min({view.free_ahead, std::max(needed, 1), static_cast<int>(kMaxPlanLength)});
    plan.insert(plan.end(), static_cast<std::size_t>(moves), Action::MoveAhead);
  } else {
    // after turning the view is unknown; commit to a short advance
    while (plan.size() < kMaxPlanLength && static_cast<int>(plan.size()) < turns + 2) plan.push_back(Action::MoveAhead);
  }
  if (plan.empty()) plan.push_back(rotation_of(roomier_side(view)));
  return {d, "Face the target and head straight for it.", plan};
}

DecisionTriple reflect_rule(const ReflectionInput& in) {
  const Turn t = roomier_side(in.view);
  std::string blocker = in.hindrance.content == CellKind::Object && !in.hindrance.object_id.empty()
                            ? in.hindrance.object_id
                            : std::string("a wall");
  std::string d = fmt::format("{} failed: {} occupies cell ({},{}) in the direction of travel. {}",
                              to_string(in.failed), blocker, in.hindrance.blocked_cell.x, in.hindrance.blocked_cell.z,
                              clearance_text(in.view));
  std::string r = fmt::format(
      "The earlier plan assumed the cells ahead were passable, but the movement direction was obstructed. "
      "There is more room to the {} ({} vs {} cells), so turn that way first.",
      side_word(t), lateral(in.view, t), lateral(in.view, other(t)));
  return single(std::move(d), std::move(r), rotation_of(t));
}

DecisionTriple reflect_direct(const ReflectionInput& in) { return {{}, {}, {rotation_of(roomier_side(in.view))}}; }

DecisionTriple describe_rule(const ViewSummary& view, const DetectedObject& target, Action next) {
  const std::string d = target_text(target) + " " + clearance_text(view);
  std::string r;
  switch (next) {
    case Action::Done: r = "The target is within reach; stop here."; break;
    case Action::MoveAhead: r = "The planned route continues straight ahead through free cells."; break;
    case Action::RotateLeft: r = "The route bends; turn left to follow it."; break;
    case Action::RotateRight: r = "The route bends; turn right to follow it."; break;
    case Action::LookUp: r = "Raise the view to keep the target in sight."; break;
    case Action::LookDown: r = "Lower the view to keep the target in sight."; break;
  }
  return single(d, r, next);
}

DetourState advance_detour(const DetourState& state, const ViewSummary& view, const MatchResult& matched, int yaw,
                           Action decision) {
  DetourState s = state;
  if (decision == Action::Done || matched.matched.empty()) {
    s.side.reset();
    s.moves_left = 0;
    return s;
  }
  if (s.active()) {
    if (yaw == s.heading && view.free_ahead == 0) s = on_detour_blocked(s);
    if (!s.active()) return s;
    if (yaw == s.heading && decision == Action::MoveAhead) {
      if (--s.moves_left <= 0) {
        s.side.reset();
        s.moves_left = 0;
      }
    }
    return s;
  }
  const DetectedObject& t = nearest(matched.matched);
  if (is_rotation(decision) && std::abs(t.bearing) <= kBearingThreshold && view.free_ahead == 0) {
    const Turn side = decision == Action::RotateLeft ? Turn::Left : Turn::Right;
    s.side = side;
    s.preferred = side;
    s.blocked_heading = movement_heading(yaw);
    s.heading = wrap_yaw(s.blocked_heading + (side == Turn::Right ? 90 : -90));
    s.moves_left = kDetourMoves;
    s.flips = 0;
  }
  return s;
}

// ---------------------------------------------------------------- reasoners

DecisionTriple RuleReasoner::explore(const ExploreContext& ctx) {
  return options_.chain_of_thought ? explore_rule(ctx) : explore_direct(ctx);
}

DecisionTriple RuleReasoner::exploit(const ViewSummary& view, const MatchResult& matched, const ExploitHints& hints) {
  DecisionTriple t;
  if (options_.exploit == ExploitMode::GenericSequence) {
    t = exploit_sequence(view, matched);
  } else {
    ExploitHints h = hints;
    if (options_.exploit != ExploitMode::Tuned || !options_.chain_of_thought) h.use_detour = false;
    t = exploit_rule(view, matched, h);
  }
  if (!options_.chain_of_thought) t.description.clear(), t.reasoning.clear();
  return t;
}

DecisionTriple RuleReasoner::reflect(const ReflectionInput& input) {
  return options_.chain_of_thought ? reflect_rule(input) : reflect_direct(input);
}

DecisionTriple RuleReasoner::describe(const ViewSummary& view, const DetectedObject& target, Action next) {
  return describe_rule(view, target, next);
}

LlmReasoner::LlmReasoner(llm::ChatBackend& backend, llm::TemplateSet templates, ReasonerOptions options)
    : backend_(backend), templates_(std::move(templates)), options_(options), rules_(options) {}

namespace {

std::string history_text(const std::vector<Action>& h) { return h.empty() ? "none" : join_actions(h); }

std::string rotations_text(const std::vector<RotationRun>& runs) {
  if (runs.empty()) return "none";
  std::string out;
  for (const auto& r : runs) {
    if (!out.empty()) out += ", ";
    out += fmt::format("{} x{}", to_string(r.direction), r.count);
  }
  return out;
}

}  // namespace

llm::Bindings LlmReasoner::explore_bindings(const ExploreContext& ctx) const {
  return {{"clearance", format_clearance(ctx.view)},
          {"objects", format_objects(ctx.view.detected)},
          {"history", history_text(ctx.history)},
          {"rotations", rotations_text(ctx.recent_rotations)},
          {"obstacle", ctx.obstacle ? "true" : "false"},
          {"response_format", llm::response_format(options_.chain_of_thought, true)}};
}

llm::Bindings LlmReasoner::exploit_bindings(const ViewSummary& view, const MatchResult& matched,
                                            const ExploitHints& hints) const {
  ExploitHints h = hints;
  if (options_.exploit != ExploitMode::Tuned || !options_.chain_of_thought) h.use_detour = false;
  return {{"clearance", format_clearance(view)},
          {"objects", format_objects(matched.matched)},
          {"hints", format_hints(h)},
          {"response_format",
           llm::response_format(options_.chain_of_thought, options_.exploit == ExploitMode::GenericSequence)}};
}

llm::Bindings LlmReasoner::reflect_bindings(const ReflectionInput& in) const {
  return {{"failed", std::string(to_string(in.failed))},
          {"prior_description", in.prior.description.empty() ? "none" : in.prior.description},
          {"prior_reasoning", in.prior.reasoning.empty() ? "none" : in.prior.reasoning},
          {"prior_decision", join_actions(in.prior.decision)},
          {"hindrance", format_hindrance(in.hindrance)},
          {"clearance", format_clearance(in.view)},
          {"objects", format_objects(in.matched.matched)},
          {"response_format", llm::response_format(options_.chain_of_thought, true)}};
}

llm::Bindings LlmReasoner::describe_bindings(const ViewSummary& view, const DetectedObject& target,
                                             Action next) const {
  return {{"target", format_object(target)},
          {"clearance", format_clearance(view)},
          {"action", std::string(to_string(next))},
          {"response_format", llm::response_format(true, false)}};
}

template <class Fallback>
DecisionTriple LlmReasoner::ask(const llm::PromptTemplate& t, const llm::Bindings& b,
                                const llm::ParseOptions& parse, const char* task, Fallback&& fallback,
                                const std::function<bool(const DecisionTriple&)>& accept) {
  last_fallback_.clear();
  try {
    const std::string system = llm::render(t, b);
    const std::string reply = backend_.complete(system, task);
    DecisionTriple triple = llm::parse_triple(reply, parse);
    if (accept && !accept(triple)) throw ParseError("reply decision violates the " + t.name + " contract");
    return triple;
  } catch (const Error& e) {
    last_fallback_ = std::string(t.name) + ": " + e.what();
    spdlog::warn("reasoner falling back to rules ({})", last_fallback_);
    return fallback();
  }
}

DecisionTriple LlmReasoner::explore(const ExploreContext& ctx) {
  llm::ParseOptions p{options_.chain_of_thought, 1, kMaxPlanLength};
  return ask(templates_.explore, explore_bindings(ctx), p, "Decide the next exploration actions.",
             [&] { return rules_.explore(ctx); });
}

DecisionTriple LlmReasoner::exploit(const ViewSummary& view, const MatchResult& matched, const ExploitHints& hints) {
  const std::size_t max = options_.exploit == ExploitMode::GenericSequence ? kMaxPlanLength : 1;
  llm::ParseOptions p{options_.chain_of_thought, 1, max};
  return ask(templates_.exploit, exploit_bindings(view, matched, hints), p, "Decide the next action toward the target.",
             [&] { return rules_.exploit(view, matched, hints); });
}

DecisionTriple LlmReasoner::reflect(const ReflectionInput& input) {
  llm::ParseOptions p{options_.chain_of_thought, 1, kMaxPlanLength};
  return ask(
      templates_.reflect, reflect_bindings(input), p, "Correct the failed decision.",
      [&] { return rules_.reflect(input); },
      [&](const DecisionTriple& t) { return t.decision.front() != input.failed; });
}

DecisionTriple LlmReasoner::describe(const ViewSummary& view, const DetectedObject& target, Action next) {
  llm::ParseOptions p{true, 1, 1};
  DecisionTriple t = ask(templates_.describe, describe_bindings(view, target, next), p,
                         "Describe the scene and justify the planned action.",
                         [&] { return rules_.describe(view, target, next); });
  t.decision = {next};
  return t;
}

// ---------------------------------------------------------------- offline mock

namespace {

std::optional<std::string> capture(const std::string& text, const std::string& label) {
  const std::regex re("(^|\\n)" + label + ":[ \\t]*([^\\n]*)");
  std::smatch m;
  if (!std::regex_search(text, m, re)) return std::nullopt;
  return m[2].str();
}

std::vector<Action> parse_list(const std::string& s) {
  std::vector<Action> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok.erase(0, tok.find_first_not_of(' '));
    tok.erase(tok.find_last_not_of(' ') + 1);
    if (auto a = parse_action(tok)) out.push_back(*a);
  }
  return out;
}

std::string reply_for(const DecisionTriple& t, bool direct) {
  return direct ? "Decision: " + join_actions(t.decision) + "\n" : llm::format_triple(t);
}

}  // namespace

llm::MockChatServer::Responder faithful_responder(const DemandOntology& ontology) {
  return [ontology](const llm::ChatRequest& req) -> std::optional<std::string> {
    const std::string& p = req.system;
    const auto module = capture(p, "Module");
    if (!module) return std::nullopt;
    const bool direct = p.find(llm::kDirectFormatMarker) != std::string::npos;
    const bool multi = p.find("list of one to six actions") != std::string::npos;
    ViewSummary view;
    parse_clearance(p, view);

    if (*module == "demand") {
      DemandQuery q{req.user, parse_objects(p)};
      return format_match_reply(match_or_empty(ontology, q));
    }
    if (*module == "explore") {
      view.detected = parse_objects(p);
      ExploreContext ctx;
      ctx.view = view;
      ctx.history = parse_list(capture(p, "Recent actions").value_or(""));
      ctx.recent_rotations = compress_rotations(ctx.history);
      ctx.obstacle = capture(p, "Obstacle flag").value_or("false") == "true";
      return reply_for(direct ? explore_direct(ctx) : explore_rule(ctx), direct);
    }
    if (*module == "exploit") {
      MatchResult m;
      m.matched = parse_objects(p);
      if (m.matched.empty()) return std::nullopt;
      const ExploitHints hints = parse_hints(p).value_or(ExploitHints{});
      DecisionTriple t = multi ? exploit_sequence(view, m) : exploit_rule(view, m, hints);
      return reply_for(t, direct);
    }
    if (*module == "reflect") {
      ReflectionInput in;
      in.view = view;
      if (auto h = parse_hindrance(p)) in.hindrance = *h;
      if (auto f = capture(p, "Failed decision")) {
        if (auto a = parse_action(*f)) in.failed = *a;
      }
      return reply_for(direct ? reflect_direct(in) : reflect_rule(in), direct);
    }
    if (*module == "describe") {
      const auto objects = parse_objects(p);
      const auto action = parse_action(capture(p, "Planned action").value_or(""));
      if (objects.empty() || !action) return std::nullopt;
      return reply_for(describe_rule(view, objects.front(), *action), false);
    }
    return std::nullopt;
  };
}

// ---------------------------------------------------------------- memo

// ---------------------------------------------------------------- decide

DecisionTriple decide(const MatchResult& matched, const ExploreContext& ctx, Reasoner& reasoner,
                      const ExploitHints& hints, Reasoner* fallback) {
  const bool explore = matched.matched.empty();
  try {
    return explore ? reasoner.explore(ctx) : reasoner.exploit(ctx.view, matched, hints);
  } catch (const Error& e) {
    if (!fallback) throw;
    spdlog::warn("reasoner failed, using fallback: {}", e.what());
    return explore ? fallback->explore(ctx) : fallback->exploit(ctx.view, matched, hints);
  }
}

Policy::Policy(Reasoner& reasoner, ReasonerOptions options, Reasoner* fallback)
    : reasoner_(reasoner), fallback_(fallback), options_(options) {}

Policy::Tick Policy::next(const MatchResult& matched, const ViewSummary& view, const AgentState& state) {
  Tick tick;
  const bool explore = matched.matched.empty();
  if (explore) {
    detour_.side.reset();
    detour_.moves_left = 0;
  }
  // a plan only survives while the branch that produced it still applies
  if (!queue_.empty() && (queue_phase_ == Phase::Explore) != explore) queue_.clear();
  if (!queue_.empty()) {
    tick.action = queue_.front();
    queue_.pop_front();
    tick.triple = queue_triple_;
    tick.phase = Phase::Queued;
    return tick;
  }
  ExploitHints hints{state.yaw, detour_, true};
  const ExploreContext ctx = ExploreContext::make(view, history_, obstacle_);
  tick.triple = decide(matched, ctx, reasoner_, hints, fallback_);
  tick.note = reasoner_.last_fallback();
  tick.phase = explore ? Phase::Explore : Phase::Exploit;
  tick.action = tick.triple.decision.front();
  queue_.assign(tick.triple.decision.begin() + 1, tick.triple.decision.end());
  queue_phase_ = tick.phase;
  queue_triple_ = tick.triple;
  if (!explore && options_.exploit == ExploitMode::Tuned && options_.chain_of_thought) {
    detour_ = advance_detour(detour_, view, matched, state.yaw, tick.action);
  }
  return tick;
}

void Policy::preload(std::vector<Action> plan, DecisionTriple triple) {
  queue_.assign(plan.begin(), plan.end());
  queue_phase_ = Phase::Explore;
  triple.decision = std::move(plan);
  queue_triple_ = std::move(triple);
}

void Policy::record(Action action, bool hindered) {
  history_.push_back(action);
  while (history_.size() > kHistoryWindow) history_.pop_front();
  obstacle_ = hindered;
  if (hindered) queue_.clear();
}

}  // namespace ddnav
