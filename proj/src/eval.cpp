#include "ddnav/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "ddnav/error.hpp"

namespace ddnav {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string_view to_string(BackendKind b) {
  switch (b) {
    case BackendKind::Rule: return "rule";
    case BackendKind::Llm: return "llm";
    case BackendKind::Mock: return "mock";
  }
  return "?";
}

BackendKind parse_backend(std::string_view name) {
  if (name == "rule") return BackendKind::Rule;
  if (name == "llm") return BackendKind::Llm;
  if (name == "mock") return BackendKind::Mock;
  throw ConfigError("unknown backend '" + std::string(name) + "' (expected rule, llm or mock)");
}

std::string Ablation::label() const {
  std::vector<std::string> parts;
  if (exploit == ExploitMode::GenericSingle) parts.emplace_back("no-exploit-single");
  if (exploit == ExploitMode::GenericSequence) parts.emplace_back("no-exploit-sequence");
  if (no_cot) parts.emplace_back("no-cot");
  if (no_reflection) parts.emplace_back("no-reflection");
  if (parts.empty()) return "full";
  std::string out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) out += "+" + parts[i];
  return out;
}

namespace {

bool covers(const std::set<std::string>& attrs, const std::set<std::string>& required) {
  return !required.empty() && std::includes(attrs.begin(), attrs.end(), required.begin(), required.end());
}

// Keeps the last exploit target for a few ticks after it drops out of view.
class TargetTracker {
 public:
  void augment(std::vector<DetectedObject>& detected, const AgentState& s, int tick) const {
    if (!target_ || tick - last_seen_ > kTrackTicks) return;
    for (const auto& d : detected) {
      if (d.object_id == target_->object_id) return;
    }
    DetectedObject r = *target_;
    const int dx = r.cell.x - s.pos.x, dz = r.cell.z - s.pos.z;
    r.distance = std::sqrt(static_cast<double>(dx * dx + dz * dz)) * kCellSize;
    r.bearing = bearing_to(s.pos, s.yaw, r.cell);
    r.visible_extent = 0;
    r.remembered = true;
    const auto at = std::lower_bound(detected.begin(), detected.end(), r, [](const auto& a, const auto& b) {
      return std::tie(a.distance, a.object_id) < std::tie(b.distance, b.object_id);
    });
    detected.insert(at, r);
  }

  void update(const MatchResult& m, int tick) {
    if (m.matched.empty()) return;
    const DetectedObject& t = nearest(m.matched);
    if (t.remembered) return;
    target_ = t;
    last_seen_ = tick;
  }

 private:
  std::optional<DetectedObject> target_;
  int last_seen_ = 0;
};

}  // namespace

EpisodeResult run_episode(const EpisodeConfig& config, const EpisodeEnv& env) {
  if (!config.scene) throw ConfigError("episode has no scene");
  if (!env.ontology) throw ConfigError("episode environment has no ontology");
  if (config.max_steps < 1) throw ConfigError("max_steps must be at least 1");
  const Scene& scene = *config.scene;
  if (config.spawn_index < 0 || config.spawn_index >= static_cast<int>(scene.spawn_points.size()))
    throw ConfigError("spawn index " + std::to_string(config.spawn_index) + " out of range");
  const bool remote = config.backend != BackendKind::Rule;
  if (remote && (!env.chat || !env.templates)) throw ConfigError("LLM backend selected but no chat backend configured");

  EpisodeResult res;
  res.scene_ref = config.scene_ref;
  res.scene_seed = scene.seed;
  res.instruction = config.instruction;
  res.spawn_index = config.spawn_index;
  res.seed = config.seed;
  res.scene_pool = config.scene_pool;
  res.instruction_pool = config.instruction_pool;
  res.round = config.round;

  Rng rng(mix_seed(config.seed, 0x5EED));
  AgentState state;
  state.pos = scene.spawn_points[static_cast<std::size_t>(config.spawn_index)];
  state.yaw = config.spawn_yaw ? wrap_yaw(*config.spawn_yaw) : static_cast<int>(uniform_index(rng, 12)) * kRotationStep;

  const std::set<std::string> demand = env.ontology->lookup_demand(config.instruction);
  for (const auto& o : scene.objects) {
    if (!covers(o.attributes, demand)) continue;
    try {
      const double l = shortest_path_length(scene, state.pos, o.id);
      if (!res.shortest_length || l < *res.shortest_length) res.shortest_length = l;
    } catch (const Unreachable&) {
    }
  }

  const ReasonerOptions options = config.ablation.reasoner_options();
  RuleReasoner rules(options);
  std::unique_ptr<LlmReasoner> llm_reasoner;
  if (remote) llm_reasoner = std::make_unique<LlmReasoner>(*env.chat, *env.templates, options);
  Reasoner& reasoner = remote ? static_cast<Reasoner&>(*llm_reasoner) : rules;
  Policy policy(reasoner, options, &rules);
  if (config.initial_scan) {
    policy.preload(std::vector<Action>(kScanRotations, Action::RotateRight),
                   {"Episode start; nothing has been looked at yet.",
                    "Turn in place to see the whole surroundings before choosing a direction.", {}});
  }

  const bool reflective = !config.ablation.no_reflection;
  ObstacleMemo known;
  if (env.memos && reflective) {
    if (auto it = env.memos->find(scene.seed); it != env.memos->end()) known = it->second;
  }
  const NoiseConfig* noise = config.noise.p_miss > 0.0 ? &config.noise : nullptr;
  const auto look = [&](const AgentState& s) { return observe(scene, s, config.perception, noise, &rng); };

  TargetTracker tracker;
  bool done = false;
  int tick = 0;
  const auto select = [&](const MatchResult& m) {
    if (!m.matched.empty()) res.selected_object = nearest(m.matched).object_id;
  };
  const auto on_hindrance = [&](const AgentState& before, const StepOutcome& o) {
    ++res.hindrance_count;
    Hindrance h;
    h.agent_cell = before.pos;
    h.heading = movement_heading(before.yaw);
    if (o.info) {
      h.blocked_cell = o.info->cell;
      h.content = o.info->kind;
      h.object_id = o.info->object_id;
    } else {
      h.blocked_cell = ahead_of(before.pos, before.yaw);
    }
    if (reflective) known.add(h);
    return h;
  };
  const auto correct = [&](const ReflectionInput& in, std::string& note) {
    try {
      DecisionTriple t = reasoner.reflect(in);
      note = reasoner.last_fallback();
      return t;
    } catch (const Error& e) {
      note = e.what();
      return rules.reflect(in);
    }
  };
  // Runs a corrected decision straight away; stops at Done or a new hindrance.
  const auto execute = [&](const DecisionTriple& corrected, const MatchResult& match, const std::string& note) {
    for (std::size_t i = 0; i < corrected.decision.size() && state.steps_taken < config.max_steps; ++i) {
      const Action a = corrected.decision[i];
      const AgentState b = state;
      const StepOutcome o = step(scene, state, a);
      state = o.state;
      res.trajectory.push_back({b, a, Phase::Reflect, i == 0 ? corrected : DecisionTriple{}, o.hindered,
                                i == 0 ? note : std::string()});
      if (a == Action::Done) {
        done = true;
        select(match);
        return;
      }
      policy.record(a, o.hindered);
      if (o.hindered) {
        on_hindrance(b, o);
        return;
      }
    }
  };

  while (!done && state.steps_taken < config.max_steps) {
    ViewSummary view = look(state);
    tracker.augment(view.detected, state, tick);
    const DemandQuery query{config.instruction, view.detected};
    const MatchResult match = remote ? match_llm(*env.chat, env.templates->demand, query)
                                     : match_or_empty(*env.ontology, query);
    tracker.update(match, tick);
    ++tick;

    Policy::Tick t = policy.next(match, view, state);

    // A move across a transition reflection already learned about is not
    // attempted; the remembered correction is applied instead.
    if (t.action == Action::MoveAhead) {
      if (const Hindrance* h = known.find(state.pos, movement_heading(state.yaw))) {
        policy.clear_queue();
        std::string note = "recalled blocked move";
        DecisionTriple corrected;
        if (const DecisionTriple* stored = known.correction(state.pos, state.yaw)) {
          corrected = *stored;
        } else {
          ReflectionInput in{t.triple, Action::MoveAhead, match, *h, view};
          std::string why;
          corrected = correct(in, why);
          if (!why.empty()) note += "; " + why;
          known.add_correction(state.pos, state.yaw, corrected);
        }
        ++res.recalls;
        execute(corrected, match, note);
        continue;
      }
    }

    const AgentState before = state;
    const StepOutcome out = step(scene, state, t.action);
    state = out.state;
    res.trajectory.push_back({before, t.action, t.phase, t.phase == Phase::Queued ? DecisionTriple{} : t.triple,
                              out.hindered, t.note});
    if (t.action == Action::Done) {
      done = true;
      select(match);
      break;
    }
    policy.record(t.action, out.hindered);
    if (!out.hindered) continue;

    const Hindrance h = on_hindrance(before, out);
    if (!reflective || state.steps_taken >= config.max_steps) continue;

    ReflectionInput in;
    in.prior = t.triple;
    in.failed = t.action;
    in.matched = match;
    in.hindrance = h;
    in.view = look(state);
    std::string note;
    const DecisionTriple corrected = correct(in, note);
    known.add_correction(state.pos, state.yaw, corrected);
    ++res.reflections;
    Experience e;
    e.scene = scene.seed;
    e.instruction = config.instruction;
    if (!match.matched.empty()) {
      const auto& m = nearest(match.matched);
      e.matched_object = MatchedObjectInfo{m.object_id, m.category, m.bearing, m.distance};
    }
    e.view = in.view;
    e.triple = corrected;
    e.source = ExperienceSource::Reflection;
    e.round = config.round;
    e.agent_cell = state.pos;
    e.yaw = state.yaw;
    e.hindrance = h;
    res.experiences.push_back(std::move(e));

    // the corrected decision is executed straight away
    execute(corrected, match, note);
  }

  const SuccessFlags flags = check_success(scene, state, res.selected_object, demand, done);
  res.nav_success = flags.nav_success;
  res.sel_success = flags.sel_success;
  res.done_issued = done;
  res.path_length = state.path_length;
  res.steps = state.steps_taken;
  return res;
}

// ---------------------------------------------------------------- metrics

double compute_spl(const std::vector<EpisodeResult>& results) {
  if (results.empty()) throw EmptySet("SPL of an empty result set");
  double sum = 0.0;
  for (const auto& r : results) {
    if (!r.nav_success) continue;
    if (!r.shortest_length) throw ValidationError("successful episode without a shortest path length");
    const double l = *r.shortest_length;
    const double denom = std::max(r.path_length, l);
    sum += denom > 0.0 ? l / denom : 1.0;  // spawned inside the success radius
  }
  return sum / static_cast<double>(results.size());
}

Metrics compute_metrics(const std::vector<EpisodeResult>& results) {
  if (results.empty()) throw EmptySet("metrics of an empty result set");
  Metrics m;
  m.episodes = results.size();
  double nav = 0, sel = 0, steps = 0;
  for (const auto& r : results) {
    nav += r.nav_success;
    sel += r.sel_success;
    steps += r.steps;
    m.hindrances += r.hindrance_count;
    m.reflections += r.reflections;
  }
  const double n = static_cast<double>(results.size());
  m.nsr = nav / n;
  m.ssr = sel / n;
  m.mean_steps = steps / n;
  m.spl = compute_spl(results);
  return m;
}

MetricsReport make_report(const std::string& label, const std::vector<EpisodeResult>& results) {
  MetricsReport rep;
  rep.label = label;
  rep.overall = compute_metrics(results);
  std::map<std::string, std::vector<EpisodeResult>> splits;
  std::map<int, std::vector<EpisodeResult>> rounds;
  for (const auto& r : results) {
    splits[r.scene_pool + "/" + r.instruction_pool].push_back(r);
    rounds[r.round].push_back(r);
  }
  for (const auto& [k, v] : splits) rep.splits[k] = compute_metrics(v);
  for (const auto& [k, v] : rounds) rep.rounds[k] = compute_metrics(v);
  return rep;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t w = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (w == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < w; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

SuiteResult run_suite(const std::vector<EpisodeConfig>& configs, const EpisodeEnv& env, int parallelism,
                      const std::string& label) {
  if (configs.empty()) throw EmptySet("suite has no episodes");
  SuiteResult out;
  out.results.resize(configs.size());
  std::atomic<std::size_t> finished{0};
  parallel_for(configs.size(), parallelism, [&](std::size_t i) {
    out.results[i] = run_episode(configs[i], env);
    const std::size_t done = ++finished;
    if (done % 100 == 0 || done == configs.size()) spdlog::info("{}: {}/{} episodes", label, done, configs.size());
  });
  out.report = make_report(label, out.results);
  return out;
}

RoundsResult run_reflection_rounds(const std::vector<EpisodeConfig>& pool, int rounds, int episodes_per_round,
                                   KnowledgeBase& kb, const EpisodeEnv& env, int parallelism) {
  if (pool.empty()) throw EmptySet("reflection rounds need a non-empty pool");
  if (rounds < 1 || episodes_per_round < 1) throw ConfigError("rounds and episodes per round must be positive");
  RoundsResult out;
  for (int r = 1; r <= rounds; ++r) {
    const auto experiences = kb.read_all();
    std::map<std::uint64_t, ObstacleMemo> memos;
    for (const auto& c : pool) {
      if (c.scene && !memos.count(c.scene->seed)) memos[c.scene->seed] = memo_for_scene(experiences, c.scene->seed);
    }
    EpisodeEnv round_env = env;
    round_env.memos = &memos;
    std::vector<EpisodeConfig> configs;
    for (int i = 0; i < episodes_per_round; ++i) {
      EpisodeConfig c = pool[static_cast<std::size_t>(i) % pool.size()];
      c.round = r;
      configs.push_back(std::move(c));
    }
    SuiteResult suite = run_suite(configs, round_env, parallelism, "round " + std::to_string(r));
    for (const auto& res : suite.results) {
      for (const auto& e : res.experiences) kb.append(e);
    }
    out.per_round.push_back(suite.report);
    out.kb_counts.push_back(kb.count());
    out.hindrances.push_back(suite.report.overall.hindrances);
    spdlog::info("round {}: NSR {:.3f} SPL {:.3f} hindrances {} KB {}", r, suite.report.overall.nsr,
                 suite.report.overall.spl, suite.report.overall.hindrances, kb.count());
    out.suites.push_back(std::move(suite));
  }
  return out;
}

// ---------------------------------------------------------------- pools

std::vector<NamedScene> load_scene_dir(const std::filesystem::path& dir, const DemandOntology& ontology) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("scene directory " + dir.string() + " does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<NamedScene> out;
  for (const auto& f : files) out.push_back({f.filename().string(), std::make_shared<const Scene>(load_scene(f, ontology))});
  if (out.empty()) throw ConfigError("no scene files in " + dir.string());
  return out;
}

std::vector<std::string> load_instructions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open instruction file " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto b = line.find_first_not_of(" \t");
    if (b == std::string::npos || line[b] == '#') continue;
    out.push_back(line.substr(b, line.find_last_not_of(" \t") - b + 1));
  }
  if (out.empty()) throw ConfigError("instruction file " + path.string() + " is empty");
  return out;
}

std::vector<EpisodeConfig> make_episodes(const std::vector<NamedScene>& scenes,
                                         const std::vector<std::string>& instructions, const EpisodeConfig& base,
                                         const DemandOntology& ontology, bool solvable_only, int spawns_per_scene) {
  std::vector<EpisodeConfig> out;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const Scene& scene = *scenes[i].scene;
    int spawns = static_cast<int>(scene.spawn_points.size());
    if (spawns_per_scene >= 0) spawns = std::min(spawns, spawns_per_scene);
    for (std::size_t j = 0; j < instructions.size(); ++j) {
      for (int k = 0; k < spawns; ++k) {
        if (solvable_only &&
            !solvable(scene, ontology, instructions[j], scene.spawn_points[static_cast<std::size_t>(k)]))
          continue;
        EpisodeConfig c = base;
        c.scene = scenes[i].scene;
        c.scene_ref = scenes[i].ref;
        c.instruction = instructions[j];
        c.spawn_index = k;
        c.seed = mix_seed(mix_seed(mix_seed(base.seed, i), j), static_cast<std::uint64_t>(k));
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

bool solvable(const Scene& scene, const DemandOntology& ontology, const std::string& instruction, GridPos spawn) {
  const auto demand = ontology.lookup_demand(instruction);
  for (const auto& o : scene.objects) {
    if (!covers(o.attributes, demand)) continue;
    try {
      shortest_path_length(scene, spawn, o.id);
      return true;
    } catch (const Unreachable&) {
    }
  }
  return false;
}

bool detectable_by_scan(const Scene& scene, const DemandOntology& ontology, const std::string& instruction,
                        GridPos spawn, const PerceptionConfig& perception) {
  const auto demand = ontology.lookup_demand(instruction);
  if (demand.empty()) return false;
  AgentState s;
  s.pos = spawn;
  for (int yaw = 0; yaw < 360; yaw += kRotationStep) {
    s.yaw = yaw;
    for (const auto& d : observe(scene, s, perception).detected) {
      if (covers(d.attributes, demand)) return true;
    }
  }
  return false;
}

std::optional<std::size_t> oracle_steps(const Scene& scene, const DemandOntology& ontology,
                                        const std::string& instruction, const AgentState& start) {
  const auto demand = ontology.lookup_demand(instruction);
  std::optional<std::size_t> best;
  for (const auto& o : scene.objects) {
    if (!covers(o.attributes, demand)) continue;
    try {
      const std::size_t n = plan_to_object(scene, start, o.id).size();
      if (!best || n < *best) best = n;
    } catch (const Unreachable&) {
    }
  }
  return best;
}

// ---------------------------------------------------------------- output

ojson metrics_to_json(const Metrics& m) {
  ojson j;
  j["episodes"] = m.episodes;
  j["nsr"] = m.nsr;
  j["spl"] = m.spl;
  j["ssr"] = m.ssr;
  j["mean_steps"] = m.mean_steps;
  j["hindrances"] = m.hindrances;
  j["reflections"] = m.reflections;
  return j;
}

namespace {

Metrics metrics_from_json(const json& j) {
  Metrics m;
  m.episodes = j.at("episodes").get<std::size_t>();
  m.nsr = j.at("nsr").get<double>();
  m.spl = j.at("spl").get<double>();
  m.ssr = j.at("ssr").get<double>();
  m.mean_steps = j.value("mean_steps", 0.0);
  m.hindrances = j.value("hindrances", 0L);
  m.reflections = j.value("reflections", 0L);
  return m;
}

}  // namespace

ojson report_to_json(const MetricsReport& r) {
  ojson j;
  j["label"] = r.label;
  j["overall"] = metrics_to_json(r.overall);
  j["splits"] = ojson::object();
  for (const auto& [k, v] : r.splits) j["splits"][k] = metrics_to_json(v);
  j["rounds"] = ojson::object();
  for (const auto& [k, v] : r.rounds) j["rounds"][std::to_string(k)] = metrics_to_json(v);
  return j;
}

MetricsReport report_from_json(const json& j) {
  try {
    MetricsReport r;
    r.label = j.at("label").get<std::string>();
    r.overall = metrics_from_json(j.at("overall"));
    for (const auto& [k, v] : j.at("splits").items()) r.splits[k] = metrics_from_json(v);
    const json rounds = j.value("rounds", json::object());
    for (const auto& [k, v] : rounds.items()) r.rounds[std::stoi(k)] = metrics_from_json(v);
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what());
  }
}

ojson report_file_json(const std::vector<MetricsReport>& reports, const ojson& config) {
  ojson j;
  j["schema"] = "ddnav-report/1";
  j["config"] = config;
  j["reports"] = ojson::array();
  for (const auto& r : reports) j["reports"].push_back(report_to_json(r));
  return j;
}

std::vector<MetricsReport> reports_from_file_json(const json& j) {
  if (j.value("schema", "") != "ddnav-report/1") throw ParseError("not a ddnav report file");
  std::vector<MetricsReport> out;
  try {
    for (const auto& r : j.at("reports")) out.push_back(report_from_json(r));
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed report file: ") + e.what());
  }
  return out;
}

ojson result_to_json(const EpisodeResult& r, bool with_trajectory) {
  ojson j;
  j["scene"] = r.scene_ref;
  j["scene_seed"] = r.scene_seed;
  j["instruction"] = r.instruction;
  j["spawn_index"] = r.spawn_index;
  j["seed"] = r.seed;
  j["scene_pool"] = r.scene_pool;
  j["instruction_pool"] = r.instruction_pool;
  j["round"] = r.round;
  j["nav_success"] = r.nav_success;
  j["sel_success"] = r.sel_success;
  j["done_issued"] = r.done_issued;
  j["selected_object"] = r.selected_object ? ojson(*r.selected_object) : ojson(nullptr);
  j["path_length"] = r.path_length;
  j["shortest_length"] = r.shortest_length ? ojson(*r.shortest_length) : ojson(nullptr);
  j["steps"] = r.steps;
  j["hindrance_count"] = r.hindrance_count;
  j["reflections"] = r.reflections;
  j["recalls"] = r.recalls;
  if (with_trajectory) {
    ojson traj = ojson::array();
    for (const auto& s : r.trajectory) {
      ojson t;
      t["pos"] = {s.state.pos.x, s.state.pos.z};
      t["yaw"] = s.state.yaw;
      t["pitch"] = s.state.pitch;
      t["action"] = std::string(to_string(s.action));
      t["phase"] = std::string(to_string(s.phase));
      t["hindered"] = s.hindered;
      if (!s.triple.decision.empty()) t["triple"] = triple_to_json(s.triple);
      if (!s.note.empty()) t["note"] = s.note;
      traj.push_back(std::move(t));
    }
    j["trajectory"] = std::move(traj);
  }
  return j;
}

std::string render_table(const std::vector<MetricsReport>& reports) {
  static const std::pair<const char*, const char*> kCols[] = {
      {"seen", "seen"}, {"seen", "unseen"}, {"unseen", "seen"}, {"unseen", "unseen"}};
  std::size_t w = 6;
  for (const auto& r : reports) w = std::max(w, r.label.size());
  std::string out;
  out += fmt::format("{:<{}} | {:^37} | {:^37}\n", "", w, "Seen Scene", "Unseen Scene");
  out += fmt::format("{:<{}} | {:^17} | {:^17} | {:^17} | {:^17}\n", "", w, "Seen Ins.", "Unseen Ins.", "Seen Ins.",
                     "Unseen Ins.");
  out += fmt::format("{:<{}}", "Method", w);
  for (int i = 0; i < 4; ++i) out += " |  NSR   SPL   SSR ";
  out += "\n" + std::string(w + 4 * 20, '-') + "\n";
  for (const auto& r : reports) {
    out += fmt::format("{:<{}}", r.label, w);
    for (const auto& [scene, ins] : kCols) {
      auto it = r.splits.find(std::string(scene) + "/" + ins);
      if (it == r.splits.end()) {
        out += " |    -     -     - ";
      } else {
        out += fmt::format(" | {:5.1f} {:5.1f} {:5.1f}", 100 * it->second.nsr, 100 * it->second.spl,
                           100 * it->second.ssr);
      }
    }
    out += "\n";
  }
  return out;
}

}  // namespace ddnav
