#include "ddnav/knowledge.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <queue>
#include <tuple>

#include "ddnav/error.hpp"

namespace ddnav {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------- json codecs

ojson detected_to_json(const DetectedObject& d) {
  ojson j;
  j["id"] = d.object_id;
  j["category"] = d.category;
  j["attributes"] = d.attributes;
  j["bearing"] = d.bearing;
  j["distance"] = d.distance;
  j["extent"] = d.visible_extent;
  j["cell"] = {d.cell.x, d.cell.z};
  if (d.remembered) j["remembered"] = true;
  return j;
}

DetectedObject detected_from_json(const json& j) {
  DetectedObject d;
  d.object_id = j.at("id").get<std::string>();
  d.category = j.at("category").get<std::string>();
  d.attributes = j.at("attributes").get<std::set<std::string>>();
  d.bearing = j.at("bearing").get<double>();
  d.distance = j.at("distance").get<double>();
  d.visible_extent = j.at("extent").get<int>();
  d.cell = {j.at("cell").at(0).get<int>(), j.at("cell").at(1).get<int>()};
  d.remembered = j.value("remembered", false);
  return d;
}

ojson view_to_json(const ViewSummary& v) {
  ojson j;
  j["free_ahead"] = v.free_ahead;
  j["free_left"] = v.free_left;
  j["free_right"] = v.free_right;
  j["detected"] = ojson::array();
  for (const auto& d : v.detected) j["detected"].push_back(detected_to_json(d));
  return j;
}

ViewSummary view_from_json(const json& j) {
  ViewSummary v;
  v.free_ahead = j.at("free_ahead").get<int>();
  v.free_left = j.at("free_left").get<int>();
  v.free_right = j.at("free_right").get<int>();
  for (const auto& d : j.at("detected")) v.detected.push_back(detected_from_json(d));
  return v;
}

ojson triple_to_json(const DecisionTriple& t) {
  ojson j;
  j["description"] = t.description;
  j["reasoning"] = t.reasoning;
  j["decision"] = ojson::array();
  for (Action a : t.decision) j["decision"].push_back(std::string(to_string(a)));
  return j;
}

DecisionTriple triple_from_json(const json& j) {
  DecisionTriple t;
  t.description = j.at("description").get<std::string>();
  t.reasoning = j.at("reasoning").get<std::string>();
  for (const auto& tok : j.at("decision")) {
    const auto s = tok.get<std::string>();
    auto a = parse_action(s);
    if (!a) throw ValidationError("decision token '" + s + "' is not an action");
    t.decision.push_back(*a);
  }
  return t;
}

// ---------------------------------------------------------------- experience

std::string_view to_string(ExperienceSource s) {
  return s == ExperienceSource::Bootstrap ? "bootstrap" : "reflection";
}

void validate(const Experience& e) {
  if (e.triple.decision.empty()) throw ValidationError("experience has an empty decision");
  if (e.triple.decision.size() > kMaxPlanLength) throw ValidationError("experience decision is longer than a plan");
  if (e.source == ExperienceSource::Reflection && !e.hindrance)
    throw ValidationError("reflection experience carries no hindrance");
  if (e.round < 0) throw ValidationError("experience round is negative");
}

ojson experience_to_json(const Experience& e) {
  ojson j;
  j["v"] = kExperienceVersion;
  j["scene"] = e.scene;
  j["round"] = e.round;
  j["source"] = std::string(to_string(e.source));
  j["instruction"] = e.instruction;
  if (e.matched_object) {
    const auto& m = *e.matched_object;
    j["matched_object"] = {{"id", m.object_id}, {"category", m.category}, {"bearing", m.bearing},
                           {"distance", m.distance}};
  } else {
    j["matched_object"] = nullptr;
  }
  j["agent"] = {{"cell", {e.agent_cell.x, e.agent_cell.z}}, {"yaw", e.yaw}};
  j["view_digest"] = view_to_json(e.view);
  j["description"] = e.triple.description;
  j["reasoning"] = e.triple.reasoning;
  j["decision"] = triple_to_json(e.triple)["decision"];
  if (e.hindrance) {
    const auto& h = *e.hindrance;
    ojson hj;
    hj["agent_cell"] = {h.agent_cell.x, h.agent_cell.z};
    hj["blocked_cell"] = {h.blocked_cell.x, h.blocked_cell.z};
    hj["heading"] = h.heading;
    hj["content"] = h.content == CellKind::Object ? "object" : "wall";
    if (!h.object_id.empty()) hj["object_id"] = h.object_id;
    j["hindrance"] = hj;
  }
  return j;
}

Experience experience_from_json(const json& j) {
  Experience e;
  try {
    if (j.at("v").get<int>() != kExperienceVersion)
      throw ParseError("unsupported experience version " + j.at("v").dump());
    e.scene = j.at("scene").get<std::uint64_t>();
    e.round = j.at("round").get<int>();
    const auto src = j.at("source").get<std::string>();
    if (src == "bootstrap") {
      e.source = ExperienceSource::Bootstrap;
    } else if (src == "reflection") {
      e.source = ExperienceSource::Reflection;
    } else {
      throw ValidationError("unknown experience source '" + src + "'");
    }
    e.instruction = j.value("instruction", "");
    if (const auto& m = j.at("matched_object"); !m.is_null()) {
      e.matched_object = MatchedObjectInfo{m.at("id").get<std::string>(), m.at("category").get<std::string>(),
                                           m.at("bearing").get<double>(), m.at("distance").get<double>()};
    }
    e.agent_cell = {j.at("agent").at("cell").at(0).get<int>(), j.at("agent").at("cell").at(1).get<int>()};
    e.yaw = j.at("agent").at("yaw").get<int>();
    e.view = view_from_json(j.at("view_digest"));
    e.triple = triple_from_json(j);
    if (j.contains("hindrance")) {
      const auto& hj = j.at("hindrance");
      Hindrance h;
      h.agent_cell = {hj.at("agent_cell").at(0).get<int>(), hj.at("agent_cell").at(1).get<int>()};
      h.blocked_cell = {hj.at("blocked_cell").at(0).get<int>(), hj.at("blocked_cell").at(1).get<int>()};
      h.heading = hj.at("heading").get<int>();
      h.content = hj.at("content").get<std::string>() == "object" ? CellKind::Object : CellKind::Wall;
      h.object_id = hj.value("object_id", "");
      e.hindrance = h;
    }
  } catch (const json::exception& ex) {
    throw ParseError(std::string("malformed experience: ") + ex.what());
  }
  validate(e);
  return e;
}

KnowledgeBase::KnowledgeBase(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path_.parent_path(), ec);
  }
  if (std::filesystem::exists(path_)) {
    std::ifstream in(path_);
    if (!in) throw StorageError("cannot read " + path_.string());
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      try {
        const Experience e = experience_from_json(json::parse(line));
        ++count_;
        ++rounds_[e.round];
      } catch (const json::exception& ex) {
        throw ParseError(path_.string() + ":" + std::to_string(n) + ": " + ex.what());
      } catch (const Error& ex) {
        throw ParseError(path_.string() + ":" + std::to_string(n) + ": " + ex.what());
      }
    }
  }
  out_.open(path_, std::ios::app);
  if (!out_) throw StorageError("cannot open " + path_.string() + " for appending");
}

std::size_t KnowledgeBase::write_locked(const Experience& e) {
  out_ << experience_to_json(e).dump() << '\n';
  out_.flush();
  if (!out_) throw StorageError("append to " + path_.string() + " failed");
  ++rounds_[e.round];
  return ++count_;
}

std::size_t KnowledgeBase::append(const Experience& e) {
  validate(e);
  std::lock_guard lock(mutex_);
  return write_locked(e);
}

std::size_t KnowledgeBase::append_json(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& ex) {
    throw ParseError(std::string("record is not JSON: ") + ex.what());
  }
  Experience e;
  try {
    e = experience_from_json(j);
  } catch (const ParseError& ex) {
    throw ValidationError(ex.what());
  }
  std::lock_guard lock(mutex_);
  return write_locked(e);
}

std::size_t KnowledgeBase::count() const {
  std::lock_guard lock(mutex_);
  return count_;
}

std::map<int, std::size_t> KnowledgeBase::rounds() const {
  std::lock_guard lock(mutex_);
  return rounds_;
}

std::vector<Experience> KnowledgeBase::read_all() const {
  std::lock_guard lock(mutex_);
  std::vector<Experience> out;
  std::ifstream in(path_);
  if (!in) throw StorageError("cannot read " + path_.string());
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(experience_from_json(json::parse(line)));
  }
  return out;
}

ObstacleMemo memo_for_scene(const std::vector<Experience>& experiences, std::uint64_t scene) {
  ObstacleMemo memo;
  for (const auto& e : experiences) {
    if (e.scene != scene || !e.hindrance) continue;
    memo.add(*e.hindrance);
    memo.add_correction(e.agent_cell, e.yaw, e.triple);
  }
  return memo;
}

// ---------------------------------------------------------------- planning

std::vector<GridPos> astar_cells(const Scene& scene, GridPos start, const std::function<bool(GridPos)>& goal,
                                 const std::function<int(GridPos)>& heuristic) {
  if (!scene.is_free(start)) throw NoPath("start cell is not free");
  const auto index = [&](GridPos p) { return static_cast<std::size_t>(p.z * scene.width + p.x); };
  const std::size_t n = static_cast<std::size_t>(scene.width * scene.depth);
  std::vector<int> g(n, INT_MAX);
  std::vector<std::size_t> parent(n, SIZE_MAX);
  std::vector<char> closed(n, 0);
  // (f, h, insertion order, cell index); insertion order makes ties deterministic
  using Entry = std::tuple<int, int, std::uint64_t, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::uint64_t seq = 0;
  g[index(start)] = 0;
  open.emplace(heuristic(start), heuristic(start), seq++, index(start));
  static constexpr GridPos kSteps[] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  while (!open.empty()) {
    const auto [f, h, s, cur] = open.top();
    open.pop();
    if (closed[cur]) continue;
    closed[cur] = 1;
    const GridPos p{static_cast<int>(cur % static_cast<std::size_t>(scene.width)),
                    static_cast<int>(cur / static_cast<std::size_t>(scene.width))};
    if (goal(p)) {
      std::vector<GridPos> path;
      for (std::size_t i = cur; i != SIZE_MAX; i = parent[i]) {
        path.push_back({static_cast<int>(i % static_cast<std::size_t>(scene.width)),
                        static_cast<int>(i / static_cast<std::size_t>(scene.width))});
      }
      std::reverse(path.begin(), path.end());
      return path;
    }
    for (const GridPos d : kSteps) {
      const GridPos q{p.x + d.x, p.z + d.z};
      if (!scene.is_free(q)) continue;
      const std::size_t qi = index(q);
      if (closed[qi] || g[cur] + 1 >= g[qi]) continue;
      g[qi] = g[cur] + 1;
      parent[qi] = cur;
      const int hq = heuristic(q);
      open.emplace(g[qi] + hq, hq, seq++, qi);
    }
  }
  throw NoPath("no free path to the goal");
}

namespace {

int heading_between(GridPos a, GridPos b) {
  if (b.x > a.x) return 90;
  if (b.x < a.x) return 270;
  return b.z > a.z ? 0 : 180;
}

void append_turn(std::vector<Action>& out, int& yaw, int target) {
  const int diff = wrap_yaw(target - yaw);
  if (diff == 0) return;
  const bool right = diff <= 180;
  const int n = (right ? diff : 360 - diff) / kRotationStep;
  out.insert(out.end(), static_cast<std::size_t>(n), right ? Action::RotateRight : Action::RotateLeft);
  yaw = target;
}

}  // namespace

std::vector<Action> path_to_actions(const std::vector<GridPos>& path, int yaw) {
  std::vector<Action> out;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const int h = heading_between(path[i - 1], path[i]);
    if (movement_heading(yaw) != h) append_turn(out, yaw, h);
    out.push_back(Action::MoveAhead);
  }
  return out;
}

std::vector<Action> plan_astar(const Scene& scene, const AgentState& start, GridPos goal) {
  if (!scene.is_free(goal)) throw NoPath("goal cell is not free");
  const auto path = astar_cells(
      scene, start.pos, [&](GridPos p) { return p == goal; },
      [&](GridPos p) { return std::abs(p.x - goal.x) + std::abs(p.z - goal.z); });
  return path_to_actions(path, start.yaw);
}

std::vector<Action> plan_to_object(const Scene& scene, const AgentState& start, const std::string& object_id) {
  const SceneObject* obj = scene.find_object(object_id);
  if (!obj) throw UnknownObject("no object '" + object_id + "' in the scene");
  // footprint cell in reach and in sight from p, nearest first
  const auto visible_cell = [&](GridPos p) -> std::optional<GridPos> {
    std::optional<GridPos> best;
    int best_d2 = INT_MAX;
    for (const auto& f : obj->footprint) {
      const int d2 = (f.x - p.x) * (f.x - p.x) + (f.z - p.z) * (f.z - p.z);
      if (d2 <= kSuccessRadiusCells2 && d2 < best_d2 && line_of_sight(scene, p, f)) {
        best = f;
        best_d2 = d2;
      }
    }
    return best;
  };
  const auto heuristic = [&](GridPos p) {
    int m = INT_MAX;
    for (const auto& f : obj->footprint) m = std::min(m, std::abs(f.x - p.x) + std::abs(f.z - p.z));
    return std::max(0, m - 8);  // every goal cell lies within Manhattan 8 of a footprint cell
  };
  std::vector<GridPos> path;
  try {
    path = astar_cells(
        scene, start.pos, [&](GridPos p) { return visible_cell(p).has_value(); }, heuristic);
  } catch (const NoPath&) {
    throw Unreachable("object '" + object_id + "' cannot be reached");
  }
  std::vector<Action> actions = path_to_actions(path, start.yaw);
  int yaw = start.yaw;
  for (Action a : actions) {
    if (a == Action::RotateLeft) yaw = wrap_yaw(yaw - kRotationStep);
    if (a == Action::RotateRight) yaw = wrap_yaw(yaw + kRotationStep);
  }
  const GridPos end = path.back();
  const double b = bearing_to(end, yaw, *visible_cell(end));
  const long turns = std::lround(b / kRotationStep);
  actions.insert(actions.end(), static_cast<std::size_t>(std::labs(turns)),
                 turns > 0 ? Action::RotateRight : Action::RotateLeft);
  actions.push_back(Action::Done);
  return actions;
}

std::vector<Experience> bootstrap(const Scene& scene, const std::string& instruction, const std::string& object_id,
                                  const AgentState& start, Reasoner& reasoner, const PerceptionConfig& perception) {
  const std::vector<Action> plan = plan_to_object(scene, start, object_id);
  std::vector<Experience> out;
  AgentState state = start;
  for (Action a : plan) {
    ViewSummary view = observe(scene, state, perception);
    const auto it = std::find_if(view.detected.begin(), view.detected.end(),
                                 [&](const DetectedObject& d) { return d.object_id == object_id; });
    if (it != view.detected.end()) {
      Experience e;
      e.scene = scene.seed;
      e.instruction = instruction;
      e.matched_object = MatchedObjectInfo{it->object_id, it->category, it->bearing, it->distance};
      e.triple = reasoner.describe(view, *it, a);
      e.view = std::move(view);
      e.source = ExperienceSource::Bootstrap;
      e.agent_cell = state.pos;
      e.yaw = state.yaw;
      out.push_back(std::move(e));
    }
    const StepOutcome o = step(scene, state, a);
    if (o.hindered) throw Error("planned bootstrap move was blocked; the planner and simulator disagree");
    state = o.state;
  }
  return out;
}

std::size_t export_sft(const KnowledgeBase& kb, const std::filesystem::path& path) {
  const auto experiences = kb.read_all();
  if (experiences.empty()) throw EmptyKnowledgeBase("knowledge base " + kb.path().string() + " is empty");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw StorageError("cannot write " + path.string());
  for (const auto& e : experiences) {
    std::string q = "Instruction: " + e.instruction + "\n";
    if (e.matched_object) {
      const auto& m = *e.matched_object;
      q += "Target: " + m.category + " (" + m.object_id + ") bearing=" + std::to_string(m.bearing) +
           " distance=" + std::to_string(m.distance) + "\n";
    } else {
      q += "Target: none\n";
    }
    q += "Clearance: " + format_clearance(e.view) + "\nVisible objects:\n" + format_objects(e.view.detected);
    if (e.hindrance) q += "\n" + format_hindrance(*e.hindrance);
    ojson rec;
    rec["question"] = q;
    rec["answer"] = llm::format_triple(e.triple);
    rec["source"] = std::string(to_string(e.source));
    out << rec.dump() << '\n';
  }
  if (!out) throw StorageError("write failed for " + path.string());
  return experiences.size();
}

}  // namespace ddnav
