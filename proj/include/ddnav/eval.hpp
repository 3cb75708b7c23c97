#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddnav/demand.hpp"
#include "ddnav/knowledge.hpp"
#include "ddnav/llm.hpp"
#include "ddnav/perception.hpp"
#include "ddnav/policy.hpp"
#include "ddnav/simulator.hpp"
#include "ddnav/world.hpp"

namespace ddnav {

enum class BackendKind { Rule, Llm, Mock };
std::string_view to_string(BackendKind b);
BackendKind parse_backend(std::string_view name);  // throws ConfigError

struct Ablation {
  bool no_cot = false;
  ExploitMode exploit = ExploitMode::Tuned;  // GenericSingle / GenericSequence drop the tuned exploit
  bool no_reflection = false;

  // "full", "no-exploit-single", "no-exploit-sequence", "no-cot", "no-reflection" or a '+' join.
  std::string label() const;
  ReasonerOptions reasoner_options() const { return {!no_cot, exploit}; }
};

inline constexpr int kDefaultMaxSteps = 200;
inline constexpr int kTrackTicks = 12;  // ticks a lost target is remembered
inline constexpr int kScanRotations = 9;  // 270 degrees; with a 90 degree view this covers the full circle

struct EpisodeConfig {
  std::shared_ptr<const Scene> scene;
  std::string scene_ref;
  std::string instruction;
  int spawn_index = 0;
  std::optional<int> spawn_yaw;  // drawn from the episode seed when unset
  int max_steps = kDefaultMaxSteps;
  std::uint64_t seed = 0;
  BackendKind backend = BackendKind::Rule;
  Ablation ablation;
  std::string scene_pool = "seen";
  std::string instruction_pool = "seen";
  int round = 0;
  PerceptionConfig perception;
  NoiseConfig noise;
  bool initial_scan = true;  // look around in place before the first explore decision
};

// Services shared by the episodes of a run. Nothing here is mutated by
// run_episode, so one environment can serve concurrent episodes.
struct EpisodeEnv {
  const DemandOntology* ontology = nullptr;
  llm::ChatBackend* chat = nullptr;              // required for Llm and Mock backends
  const llm::TemplateSet* templates = nullptr;   // required for Llm and Mock backends
  const std::map<std::uint64_t, ObstacleMemo>* memos = nullptr;  // per scene seed, from the KB
};

struct TrajectoryStep {
  AgentState state;  // before the action
  Action action = Action::Done;
  Phase phase = Phase::Explore;
  DecisionTriple triple;  // empty for queued actions
  bool hindered = false;
  std::string note;
};

struct EpisodeResult {
  std::string scene_ref;
  std::uint64_t scene_seed = 0;
  std::string instruction;
  int spawn_index = 0;
  std::uint64_t seed = 0;
  std::string scene_pool;
  std::string instruction_pool;
  int round = 0;

  bool nav_success = false;
  bool sel_success = false;
  bool done_issued = false;
  std::optional<std::string> selected_object;
  double path_length = 0.0;              // p, meters
  std::optional<double> shortest_length;  // l, meters; unset when no satisfying object is reachable
  int steps = 0;
  int hindrance_count = 0;
  int reflections = 0;
  int recalls = 0;  // blocked moves skipped thanks to remembered reflections
  std::vector<TrajectoryStep> trajectory;
  std::vector<Experience> experiences;  // reflection records produced by the episode
};

EpisodeResult run_episode(const EpisodeConfig& config, const EpisodeEnv& env);

struct Metrics {
  std::size_t episodes = 0;
  double nsr = 0.0;
  double spl = 0.0;
  double ssr = 0.0;
  double mean_steps = 0.0;
  long hindrances = 0;
  long reflections = 0;
};

struct MetricsReport {
  std::string label;
  Metrics overall;
  std::map<std::string, Metrics> splits;  // "<scene pool>/<instruction pool>"
  std::map<int, Metrics> rounds;
};

// Mean over results of S * l / max(p, l). Throws EmptySet.
double compute_spl(const std::vector<EpisodeResult>& results);
Metrics compute_metrics(const std::vector<EpisodeResult>& results);  // throws EmptySet
MetricsReport make_report(const std::string& label, const std::vector<EpisodeResult>& results);

struct SuiteResult {
  std::vector<EpisodeResult> results;  // in config order
  MetricsReport report;
};

// Runs episodes on up to `parallelism` threads. Throws EmptySet.
SuiteResult run_suite(const std::vector<EpisodeConfig>& configs, const EpisodeEnv& env, int parallelism = 1,
                      const std::string& label = "full");

struct RoundsResult {
  std::vector<MetricsReport> per_round;
  std::vector<std::size_t> kb_counts;  // KB size after each round
  std::vector<long> hindrances;        // total per round
  std::vector<SuiteResult> suites;
};

// Replays the pool for `rounds` rounds. Before each round the KB's reflection
// records become per-scene obstacle memos; after it, the round's reflection
// records are appended in config order.
RoundsResult run_reflection_rounds(const std::vector<EpisodeConfig>& pool, int rounds, int episodes_per_round,
                                   KnowledgeBase& kb, const EpisodeEnv& env, int parallelism = 1);

// ---------------------------------------------------------------- pools

struct NamedScene {
  std::string ref;
  std::shared_ptr<const Scene> scene;
};

// Every *.json scene in `dir`, sorted by file name.
std::vector<NamedScene> load_scene_dir(const std::filesystem::path& dir, const DemandOntology& ontology);
// One instruction per line; blank lines and '#' comments are skipped.
std::vector<std::string> load_instructions(const std::filesystem::path& path);

// Scene x instruction x spawn grid built on `base`. Seeds derive from
// base.seed and the grid position. With `solvable_only`, episodes whose
// demand no reachable object covers are left out.
std::vector<EpisodeConfig> make_episodes(const std::vector<NamedScene>& scenes,
                                         const std::vector<std::string>& instructions, const EpisodeConfig& base,
                                         const DemandOntology& ontology, bool solvable_only = true,
                                         int spawns_per_scene = -1);

// Calls fn(i) for i in [0, n) on up to `workers` threads; rethrows the first failure.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

// Some object covering the demand is reachable from the spawn point.
bool solvable(const Scene& scene, const DemandOntology& ontology, const std::string& instruction, GridPos spawn);
// A covering object is detected from the spawn cell during a full in-place turn.
bool detectable_by_scan(const Scene& scene, const DemandOntology& ontology, const std::string& instruction,
                        GridPos spawn, const PerceptionConfig& perception = {});
// Actions of the object plan to the nearest (by plan length) covering object.
std::optional<std::size_t> oracle_steps(const Scene& scene, const DemandOntology& ontology,
                                        const std::string& instruction, const AgentState& start);

// ---------------------------------------------------------------- output

nlohmann::ordered_json metrics_to_json(const Metrics& m);
nlohmann::ordered_json report_to_json(const MetricsReport& r);
MetricsReport report_from_json(const nlohmann::json& j);
// Report file: {"schema": "ddnav-report/1", "config": {...}, "reports": [...]}.
nlohmann::ordered_json report_file_json(const std::vector<MetricsReport>& reports, const nlohmann::ordered_json& config);
std::vector<MetricsReport> reports_from_file_json(const nlohmann::json& j);
nlohmann::ordered_json result_to_json(const EpisodeResult& r, bool with_trajectory = true);
// Plain-text table: one row per report, NSR/SPL/SSR for each scene/instruction split.
std::string render_table(const std::vector<MetricsReport>& reports);

}  // namespace ddnav
