#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "ddnav/decision.hpp"
#include "ddnav/demand.hpp"
#include "ddnav/llm.hpp"
#include "ddnav/perception.hpp"
#include "ddnav/simulator.hpp"

namespace ddnav {

inline constexpr std::size_t kHistoryWindow = 3;
inline constexpr std::size_t kMaxPlanLength = 6;
inline constexpr int kMaxExploreMoves = 4;
inline constexpr double kBearingThreshold = 15.0;  // degrees; half a rotation step
inline constexpr int kDetourMoves = 2;

enum class Turn { Left, Right };

inline Action rotation_of(Turn t) { return t == Turn::Left ? Action::RotateLeft : Action::RotateRight; }
inline Turn other(Turn t) { return t == Turn::Left ? Turn::Right : Turn::Left; }
std::string_view to_string(Turn t);

struct RotationRun {
  Turn direction = Turn::Left;
  int count = 0;

  bool operator==(const RotationRun&) const = default;
};

// Consecutive rotations in one direction are recorded once, with a count.
std::vector<RotationRun> compress_rotations(const std::vector<Action>& history);

struct ExploreContext {
  ViewSummary view;
  std::vector<Action> history;  // oldest first, at most kHistoryWindow entries
  std::vector<RotationRun> recent_rotations;
  bool obstacle = false;  // X: the previous step was hindered

  static ExploreContext make(ViewSummary view, const std::deque<Action>& history, bool obstacle);
};

// Sidestep state used while approaching a target around an obstruction.
struct DetourState {
  std::optional<Turn> side;     // set while a detour is active
  int blocked_heading = 0;      // cardinal that was blocked when the detour began
  int heading = 0;              // cardinal the detour travels along
  int moves_left = 0;
  int flips = 0;                // times the sidestep itself was blocked
  std::optional<Turn> preferred;  // side used last; reused while it has room

  bool active() const { return side.has_value(); }
  bool operator==(const DetourState&) const = default;
};

struct ExploitHints {
  int yaw = 0;
  DetourState detour;
  bool use_detour = true;
};

std::string format_hints(const ExploitHints& hints);
// Inverse of format_hints; nullopt if no hint line is present.
std::optional<ExploitHints> parse_hints(const std::string& text);

struct Hindrance {
  GridPos agent_cell;
  GridPos blocked_cell;
  int heading = 0;  // movement cardinal of the failed MoveAhead
  CellKind content = CellKind::Wall;
  std::string object_id;

  bool operator==(const Hindrance&) const = default;
};

std::string format_hindrance(const Hindrance& h);
std::optional<Hindrance> parse_hindrance(const std::string& text);

struct ReflectionInput {
  DecisionTriple prior;
  Action failed = Action::MoveAhead;
  MatchResult matched;
  Hindrance hindrance;
  ViewSummary view;
};

// ---------------------------------------------------------------- rule backends

// Nearest matched object (ties by id). Requires a non-empty list.
const DetectedObject& nearest(const std::vector<DetectedObject>& objects);

// Larger lateral clearance, ties to the left.
Turn roomier_side(const ViewSummary& view);

DecisionTriple explore_rule(const ExploreContext& ctx);
// Explore without history reasoning: rotate toward room when blocked.
DecisionTriple explore_direct(const ExploreContext& ctx);

// Single-action approach to the nearest matched object. With a detour in the
// hints, sidesteps around the obstruction before resuming the direct approach.
DecisionTriple exploit_rule(const ViewSummary& view, const MatchResult& matched, const ExploitHints& hints = {});
// Open-loop variant: rotations to face the target then as many moves as the
// clearance allows, up to kMaxPlanLength actions.
DecisionTriple exploit_sequence(const ViewSummary& view, const MatchResult& matched);

DecisionTriple reflect_rule(const ReflectionInput& input);
DecisionTriple reflect_direct(const ReflectionInput& input);

// Templated description/reasoning for a known next action toward `target`.
DecisionTriple describe_rule(const ViewSummary& view, const DetectedObject& target, Action next);

// Advances the detour state after `decision` was chosen by exploit_rule.
DetourState advance_detour(const DetourState& state, const ViewSummary& view, const MatchResult& matched,
                           int yaw, Action decision);

// ---------------------------------------------------------------- reasoners

enum class ExploitMode { Tuned, GenericSingle, GenericSequence };

struct ReasonerOptions {
  bool chain_of_thought = true;
  ExploitMode exploit = ExploitMode::Tuned;
};

class Reasoner {
 public:
  virtual ~Reasoner() = default;
  virtual DecisionTriple explore(const ExploreContext& ctx) = 0;
  virtual DecisionTriple exploit(const ViewSummary& view, const MatchResult& matched, const ExploitHints& hints) = 0;
  virtual DecisionTriple reflect(const ReflectionInput& input) = 0;
  virtual DecisionTriple describe(const ViewSummary& view, const DetectedObject& target, Action next) = 0;
  // Why the last call did not use the primary backend, if it did not.
  virtual std::string last_fallback() const { return {}; }
};

class RuleReasoner final : public Reasoner {
 public:
  explicit RuleReasoner(ReasonerOptions options = {}) : options_(options) {}
  DecisionTriple explore(const ExploreContext& ctx) override;
  DecisionTriple exploit(const ViewSummary& view, const MatchResult& matched, const ExploitHints& hints) override;
  DecisionTriple reflect(const ReflectionInput& input) override;
  DecisionTriple describe(const ViewSummary& view, const DetectedObject& target, Action next) override;
  const ReasonerOptions& options() const { return options_; }

 private:
  ReasonerOptions options_;
};

// Prompts a chat backend and parses D/R/S replies; any transport or parse
// failure falls back to the rule reasoner with the same options.
class LlmReasoner final : public Reasoner {
 public:
  LlmReasoner(llm::ChatBackend& backend, llm::TemplateSet templates, ReasonerOptions options = {});
  DecisionTriple explore(const ExploreContext& ctx) override;
  DecisionTriple exploit(const ViewSummary& view, const MatchResult& matched, const ExploitHints& hints) override;
  DecisionTriple reflect(const ReflectionInput& input) override;
  DecisionTriple describe(const ViewSummary& view, const DetectedObject& target, Action next) override;
  std::string last_fallback() const override { return last_fallback_; }

  // Bindings for each template, exposed for tests and the offline mock.
  llm::Bindings explore_bindings(const ExploreContext& ctx) const;
  llm::Bindings exploit_bindings(const ViewSummary& view, const MatchResult& matched, const ExploitHints& hints) const;
  llm::Bindings reflect_bindings(const ReflectionInput& input) const;
  llm::Bindings describe_bindings(const ViewSummary& view, const DetectedObject& target, Action next) const;

 private:
  template <class Fallback>
  DecisionTriple ask(const llm::PromptTemplate& t, const llm::Bindings& b, const llm::ParseOptions& parse,
                     const char* task, Fallback&& fallback,
                     const std::function<bool(const DecisionTriple&)>& accept = {});

  llm::ChatBackend& backend_;
  llm::TemplateSet templates_;
  ReasonerOptions options_;
  RuleReasoner rules_;
  std::string last_fallback_;
};

// Replies to rendered prompts by reading back the structured context and
// applying the rule backends, so an LLM-path run can be checked offline.
llm::MockChatServer::Responder faithful_responder(const DemandOntology& ontology);

// ---------------------------------------------------------------- memo

// Blocked (cell, movement cardinal) transitions remembered by the agent,
// with the corrected decisions reflection produced at them.
class ObstacleMemo {
 public:
  // The first record for a transition or pose wins.
  void add(const Hindrance& h) { blocked_.emplace(std::tuple{h.agent_cell.x, h.agent_cell.z, h.heading}, h); }
  void add_correction(GridPos cell, int yaw, const DecisionTriple& t) {
    corrections_.emplace(std::tuple{cell.x, cell.z, yaw}, t);
  }
  bool blocks(GridPos cell, int heading) const { return blocked_.count({cell.x, cell.z, heading}) > 0; }
  const Hindrance* find(GridPos cell, int heading) const {
    auto it = blocked_.find({cell.x, cell.z, heading});
    return it == blocked_.end() ? nullptr : &it->second;
  }
  const DecisionTriple* correction(GridPos cell, int yaw) const {
    auto it = corrections_.find({cell.x, cell.z, yaw});
    return it == corrections_.end() ? nullptr : &it->second;
  }
  std::size_t size() const { return blocked_.size(); }
  bool empty() const { return blocked_.empty(); }

 private:
  std::map<std::tuple<int, int, int>, Hindrance> blocked_;
  std::map<std::tuple<int, int, int>, DecisionTriple> corrections_;
};


// ---------------------------------------------------------------- decide

// Explore iff nothing matched; exploit otherwise. Reasoner errors fall back
// to `fallback` when given and propagate otherwise.
DecisionTriple decide(const MatchResult& matched, const ExploreContext& ctx, Reasoner& reasoner,
                      const ExploitHints& hints = {}, Reasoner* fallback = nullptr);

enum class Phase { Explore, Exploit, Queued, Reflect };
std::string_view to_string(Phase p);

// Per-episode decision state: pending plan, action history, X flag, detour.
class Policy {
 public:
  struct Tick {
    Action action = Action::Done;
    DecisionTriple triple;
    Phase phase = Phase::Explore;
    std::string note;  // fallback reason, if any
  };

  Policy(Reasoner& reasoner, ReasonerOptions options, Reasoner* fallback = nullptr);

  Tick next(const MatchResult& matched, const ViewSummary& view, const AgentState& state);
  // Records an executed action and whether it was hindered.
  void record(Action action, bool hindered);
  void clear_queue() { queue_.clear(); }
  // Seeds the pending explore plan, e.g. a look-around before the first decision.
  void preload(std::vector<Action> plan, DecisionTriple triple);

  bool obstacle_flag() const { return obstacle_; }
  std::size_t queued() const { return queue_.size(); }
  const std::deque<Action>& history() const { return history_; }
  const DetourState& detour() const { return detour_; }

 private:
  Reasoner& reasoner_;
  Reasoner* fallback_;
  ReasonerOptions options_;
  std::deque<Action> queue_;
  Phase queue_phase_ = Phase::Explore;
  DecisionTriple queue_triple_;
  std::deque<Action> history_;
  bool obstacle_ = false;
  DetourState detour_;
};

}  // namespace ddnav
