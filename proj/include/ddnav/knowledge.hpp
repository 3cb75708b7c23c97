#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddnav/perception.hpp"
#include "ddnav/policy.hpp"
#include "ddnav/simulator.hpp"

namespace ddnav {

// ---------------------------------------------------------------- json codecs

nlohmann::ordered_json detected_to_json(const DetectedObject& d);
DetectedObject detected_from_json(const nlohmann::json& j);
nlohmann::ordered_json view_to_json(const ViewSummary& v);
ViewSummary view_from_json(const nlohmann::json& j);
nlohmann::ordered_json triple_to_json(const DecisionTriple& t);
// Throws ValidationError for tokens outside the action set.
DecisionTriple triple_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------- experience

enum class ExperienceSource { Bootstrap, Reflection };
std::string_view to_string(ExperienceSource s);

struct MatchedObjectInfo {
  std::string object_id;
  std::string category;
  double bearing = 0.0;
  double distance = 0.0;

  bool operator==(const MatchedObjectInfo&) const = default;
};

struct Experience {
  std::uint64_t scene = 0;  // seed of the scene it was recorded in
  std::string instruction;
  std::optional<MatchedObjectInfo> matched_object;
  ViewSummary view;  // stands in for the camera frame
  DecisionTriple triple;
  ExperienceSource source = ExperienceSource::Bootstrap;
  int round = 0;
  GridPos agent_cell;
  int yaw = 0;
  std::optional<Hindrance> hindrance;  // always present for reflection records

  bool operator==(const Experience&) const = default;
};

inline constexpr int kExperienceVersion = 1;

void validate(const Experience& e);  // throws ValidationError
nlohmann::ordered_json experience_to_json(const Experience& e);
// Throws ParseError for malformed records and ValidationError for invalid ones.
Experience experience_from_json(const nlohmann::json& j);

// Append-only JSONL store. Appends from several threads are serialised.
class KnowledgeBase {
 public:
  // Opens (creating if needed) the file and validates existing lines.
  explicit KnowledgeBase(std::filesystem::path path);
  KnowledgeBase(const KnowledgeBase&) = delete;
  KnowledgeBase& operator=(const KnowledgeBase&) = delete;

  std::size_t append(const Experience& e);
  // Parses and validates one JSON record before appending it.
  std::size_t append_json(const std::string& line);

  std::size_t count() const;
  std::map<int, std::size_t> rounds() const;
  std::vector<Experience> read_all() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::size_t write_locked(const Experience& e);

  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::ofstream out_;
  std::size_t count_ = 0;
  std::map<int, std::size_t> rounds_;
};

// Blocked transitions recorded by reflection experiences in one scene.
ObstacleMemo memo_for_scene(const std::vector<Experience>& experiences, std::uint64_t scene);

// ---------------------------------------------------------------- planning

// Shortest 4-connected free-cell path (start and goal included) to the first
// cell satisfying `goal`. `heuristic` must never overestimate. Throws NoPath.
std::vector<GridPos> astar_cells(const Scene& scene, GridPos start, const std::function<bool(GridPos)>& goal,
                                 const std::function<int(GridPos)>& heuristic);

// Rotations (shortest turn, ties to the right) and moves that follow `path`
// from `yaw`; each leg begins by turning onto the exact cardinal.
std::vector<Action> path_to_actions(const std::vector<GridPos>& path, int yaw);

// Plan to a goal cell with the Manhattan heuristic. Throws NoPath.
std::vector<Action> plan_astar(const Scene& scene, const AgentState& start, GridPos goal);

// Plan to the nearest cell within the success radius of `object_id` that has
// line of sight to the object, then face it and finish with Done.
// Throws UnknownObject or Unreachable.
std::vector<Action> plan_to_object(const Scene& scene, const AgentState& start, const std::string& object_id);

// Replays the object plan and records an experience at every tick where the
// target is detected; D and R come from `reasoner`. Throws Unreachable.
std::vector<Experience> bootstrap(const Scene& scene, const std::string& instruction, const std::string& object_id,
                                  const AgentState& start, Reasoner& reasoner, const PerceptionConfig& perception = {});

// One {"question","answer","source"} line per experience. Throws
// EmptyKnowledgeBase when there is nothing to export.
std::size_t export_sft(const KnowledgeBase& kb, const std::filesystem::path& path);

}  // namespace ddnav
