#include "ddnav/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ddnav/demand.hpp"
#include "ddnav/error.hpp"
#include "ddnav/eval.hpp"
#include "ddnav/knowledge.hpp"
#include "ddnav/llm.hpp"
#include "ddnav/world.hpp"

namespace ddnav::cli {

namespace {

using ojson = nlohmann::ordered_json;

struct Settings {
  // shared
  std::uint64_t seed = 0;
  int parallelism = 1;
  std::string log_level = "info";
  std::string ontology;
  std::string prompts;

  // scenes
  int count = 10;
  int width = 16;
  int depth = 16;
  double density = 0.1;
  int spawn_points = 4;

  // episodes
  std::string scenes;
  std::string unseen_scenes;
  std::string instructions;
  std::string unseen_instructions;
  std::string scene;
  std::string instruction;
  int spawn = 0;
  int spawns = -1;
  int max_steps = kDefaultMaxSteps;
  bool all_episodes = false;
  double p_miss = 0.0;

  // backend
  std::string backend = "rule";
  std::string endpoint;
  std::string model;
  std::string mock_script;

  // ablations
  bool no_cot = false;
  std::string no_exploit;  // "", "single" or "sequence"
  bool no_reflection = false;
  bool ablations = false;

  // knowledge
  std::string kb;
  int rounds = 2;
  int episodes_per_round = 500;

  // outputs
  std::string out;
  std::string trajectories;
  std::string table;
  std::string demand_qa;
  std::vector<std::string> inputs;
};

// A registered option, so values can be filled from the environment and
// echoed at startup.
struct Entry {
  std::string name;
  CLI::Option* option;
  std::function<bool(const std::string&)> assign;
  std::function<std::string()> show;
};

class Registry {
 public:
  template <class T>
  CLI::Option* add(CLI::App* app, const std::string& name, T& var, const std::string& help) {
    CLI::Option* o = app->add_option("--" + name, var, help)->capture_default_str();
    push(app, name, o, var);
    return o;
  }

  CLI::Option* flag(CLI::App* app, const std::string& name, bool& var, const std::string& help) {
    CLI::Option* o = app->add_flag("--" + name, var, help);
    push(app, name, o, var);
    return o;
  }

  // Unset options take DDNAV_<NAME> from the environment; returns the
  // resolved configuration of the selected subcommand.
  ojson resolve(const CLI::App* selected, const std::vector<std::string>& argv) {
    ojson cfg;
    for (auto& e : entries_) {
      if (e.second.empty() || e.first != selected) continue;
      for (auto& entry : e.second) {
        std::string source = "default";
        const std::string flag = "--" + entry.name;
        bool on_line = false;
        for (const auto& a : argv) on_line = on_line || a == flag || a.rfind(flag + "=", 0) == 0;
        if (on_line) {
          source = "flag";
        } else if (entry.option->count() > 0) {
          source = "config";
        } else {
          std::string env = "DDNAV_" + entry.name;
          for (auto& c : env) c = c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
          if (const char* v = std::getenv(env.c_str())) {
            if (!entry.assign(v)) throw CLI::ValidationError(env, "cannot parse '" + std::string(v) + "'");
            source = "env";
          }
        }
        cfg[entry.name] = entry.show();
        spdlog::info("config {} = {} ({})", entry.name, entry.show(), source);
      }
    }
    return cfg;
  }

 private:
  template <class T>
  void push(CLI::App* app, const std::string& name, CLI::Option* o, T& var) {
    Entry e{name, o,
            [&var](const std::string& s) {
              if constexpr (std::is_same_v<T, std::vector<std::string>>) {
                var = CLI::detail::split(s, ',');
                return true;
              } else {
                return CLI::detail::lexical_cast(s, var);
              }
            },
            [&var] {
              if constexpr (std::is_same_v<T, std::vector<std::string>>) {
                std::string out;
                for (const auto& v : var) out += (out.empty() ? "" : ",") + v;
                return out;
              } else if constexpr (std::is_same_v<T, std::string>) {
                return var;
              } else if constexpr (std::is_same_v<T, bool>) {
                return std::string(var ? "true" : "false");
              } else {
                std::ostringstream os;
                os << var;
                return os.str();
              }
            }};
    for (auto& [owner, list] : entries_) {
      if (owner == app) {
        list.push_back(std::move(e));
        return;
      }
    }
    entries_.push_back({app, {std::move(e)}});
  }

  std::vector<std::pair<const CLI::App*, std::vector<Entry>>> entries_;
};

void ensure_logger(const std::string& level) {
  if (!spdlog::get("ddnav")) {
    auto logger = spdlog::stderr_color_mt("ddnav");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
  }
  spdlog::set_level(spdlog::level::from_str(level));
}

DemandOntology ontology_of(const Settings& s) {
  return s.ontology.empty() ? DemandOntology::load_default() : DemandOntology::load(s.ontology);
}

llm::TemplateSet templates_of(const Settings& s) {
  return s.prompts.empty() ? llm::TemplateSet::load_default() : llm::TemplateSet::load(s.prompts);
}

// Owns whatever the selected backend needs for the lifetime of a command.
struct BackendHandle {
  std::unique_ptr<llm::MockChatServer> mock;
  std::unique_ptr<llm::HttpChatBackend> chat;
  llm::TemplateSet templates;
  BackendKind kind = BackendKind::Rule;
};

std::unique_ptr<BackendHandle> open_backend(const Settings& s, const DemandOntology& ontology) {
  auto h = std::make_unique<BackendHandle>();
  h->kind = parse_backend(s.backend);
  if (h->kind == BackendKind::Rule) return h;
  h->templates = templates_of(s);
  llm::BackendConfig cfg = llm::BackendConfig::from_env();
  if (h->kind == BackendKind::Mock) {
    h->mock = std::make_unique<llm::MockChatServer>();
    if (!s.mock_script.empty()) h->mock->load_script(s.mock_script);
    h->mock->set_responder(faithful_responder(ontology));
    h->mock->start();
    cfg.endpoint = h->mock->endpoint();
    spdlog::info("offline mock chat server on {}", cfg.endpoint);
  }
  if (!s.endpoint.empty() && h->kind == BackendKind::Llm) cfg.endpoint = s.endpoint;
  if (!s.model.empty()) cfg.model = s.model;
  cfg.validate();
  h->chat = std::make_unique<llm::HttpChatBackend>(cfg);
  return h;
}

Ablation ablation_of(const Settings& s) {
  Ablation a;
  a.no_cot = s.no_cot;
  a.no_reflection = s.no_reflection;
  if (s.no_exploit == "single") a.exploit = ExploitMode::GenericSingle;
  else if (s.no_exploit == "sequence") a.exploit = ExploitMode::GenericSequence;
  else if (!s.no_exploit.empty()) throw ConfigError("--no-exploit expects 'single' or 'sequence'");
  return a;
}

EpisodeConfig base_config(const Settings& s, BackendKind backend) {
  EpisodeConfig c;
  c.seed = s.seed;
  c.max_steps = s.max_steps;
  c.backend = backend;
  c.ablation = ablation_of(s);
  c.noise.p_miss = s.p_miss;
  return c;
}

std::vector<EpisodeConfig> episode_pool(const Settings& s, const DemandOntology& ontology, BackendKind backend) {
  const EpisodeConfig base = base_config(s, backend);
  std::vector<EpisodeConfig> all;
  const auto add = [&](const std::string& dir, const std::string& ins, const char* scene_pool,
                       const char* ins_pool) {
    if (dir.empty() || ins.empty()) return;
    auto part = make_episodes(load_scene_dir(dir, ontology), load_instructions(ins), base, ontology,
                              !s.all_episodes, s.spawns);
    for (auto& c : part) {
      c.scene_pool = scene_pool;
      c.instruction_pool = ins_pool;
      all.push_back(std::move(c));
    }
  };
  add(s.scenes, s.instructions, "seen", "seen");
  add(s.scenes, s.unseen_instructions, "seen", "unseen");
  add(s.unseen_scenes, s.instructions, "unseen", "seen");
  add(s.unseen_scenes, s.unseen_instructions, "unseen", "unseen");
  if (all.empty()) throw EmptySet("no solvable episodes in the given scenes and instructions");
  spdlog::info("{} episodes", all.size());
  return all;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw StorageError("cannot write " + path);
  out << text;
  if (!out) throw StorageError("write failed for " + path);
}

// ---------------------------------------------------------------- commands

int cmd_gen_scenes(const Settings& s) {
  const DemandOntology ontology = ontology_of(s);
  SceneConfig cfg;
  cfg.width = s.width;
  cfg.depth = s.depth;
  cfg.density = s.density;
  cfg.spawn_count = s.spawn_points;
  std::filesystem::create_directories(s.out);
  for (int i = 0; i < s.count; ++i) {
    const Scene scene = generate_scene(mix_seed(s.seed, static_cast<std::uint64_t>(i)), cfg, ontology);
    char name[32];
    std::snprintf(name, sizeof name, "scene_%03d.json", i);
    save_scene(scene, std::filesystem::path(s.out) / name);
  }
  spdlog::info("wrote {} scenes to {}", s.count, s.out);
  std::cout << s.count << " scenes written to " << s.out << "\n";
  return 0;
}

int cmd_bootstrap(const Settings& s) {
  const DemandOntology ontology = ontology_of(s);
  auto backend = open_backend(s, ontology);
  const auto pool = make_episodes(load_scene_dir(s.scenes, ontology), load_instructions(s.instructions),
                                  base_config(s, backend->kind), ontology, true, s.spawns);
  if (pool.empty()) throw EmptySet("no solvable scene/instruction pairs to bootstrap from");
  std::vector<std::vector<Experience>> per(pool.size());
  std::atomic<std::size_t> done{0};
  parallel_for(pool.size(), s.parallelism, [&](std::size_t i) {
    const EpisodeConfig& c = pool[i];
    const Scene& scene = *c.scene;
    Rng rng(mix_seed(c.seed, 0x5EED));
    AgentState start;
    start.pos = scene.spawn_points[static_cast<std::size_t>(c.spawn_index)];
    start.yaw = static_cast<int>(uniform_index(rng, 12)) * kRotationStep;
    const auto demand = ontology.lookup_demand(c.instruction);
    std::optional<std::pair<std::size_t, std::string>> best;
    for (const auto& o : scene.objects) {
      if (!std::includes(o.attributes.begin(), o.attributes.end(), demand.begin(), demand.end())) continue;
      try {
        const std::size_t n = plan_to_object(scene, start, o.id).size();
        if (!best || n < best->first) best = std::make_pair(n, o.id);
      } catch (const Unreachable&) {
      }
    }
    if (!best) return;
    RuleReasoner rules;
    std::unique_ptr<LlmReasoner> remote;
    if (backend->chat) remote = std::make_unique<LlmReasoner>(*backend->chat, backend->templates);
    Reasoner& r = remote ? static_cast<Reasoner&>(*remote) : rules;
    per[i] = bootstrap(scene, c.instruction, best->second, start, r);
    const std::size_t n = ++done;
    if (n % 100 == 0 || n == pool.size()) spdlog::info("bootstrap: {}/{} trajectories", n, pool.size());
  });
  KnowledgeBase kb(s.kb);
  const std::size_t before = kb.count();
  for (const auto& list : per) {
    for (const auto& e : list) kb.append(e);
  }
  std::cout << (kb.count() - before) << " experiences appended to " << s.kb << " (total " << kb.count() << ")\n";
  return 0;
}

int cmd_run(const Settings& s) {
  const DemandOntology ontology = ontology_of(s);
  auto backend = open_backend(s, ontology);
  EpisodeConfig c = base_config(s, backend->kind);
  c.scene = std::make_shared<const Scene>(load_scene(s.scene, ontology));
  c.scene_ref = std::filesystem::path(s.scene).filename().string();
  c.instruction = s.instruction;
  c.spawn_index = s.spawn;
  std::map<std::uint64_t, ObstacleMemo> memos;
  EpisodeEnv env{&ontology, backend->chat.get(), &backend->templates, nullptr};
  if (!s.kb.empty()) {
    KnowledgeBase kb(s.kb);
    memos[c.scene->seed] = memo_for_scene(kb.read_all(), c.scene->seed);
    env.memos = &memos;
  }
  const EpisodeResult r = run_episode(c, env);
  const ojson j = result_to_json(r);
  if (!s.out.empty()) write_text(s.out, j.dump(2) + "\n");
  std::cout << "nav_success=" << r.nav_success << " sel_success=" << r.sel_success << " steps=" << r.steps
            << " path=" << r.path_length << "m hindrances=" << r.hindrance_count << "\n";
  return 0;
}

int cmd_suite(const Settings& s, const ojson& cfg) {
  const DemandOntology ontology = ontology_of(s);
  auto backend = open_backend(s, ontology);
  const auto pool = episode_pool(s, ontology, backend->kind);
  std::map<std::uint64_t, ObstacleMemo> memos;
  EpisodeEnv env{&ontology, backend->chat.get(), &backend->templates, nullptr};
  if (!s.kb.empty()) {
    KnowledgeBase kb(s.kb);
    const auto experiences = kb.read_all();
    for (const auto& c : pool) memos[c.scene->seed] = memo_for_scene(experiences, c.scene->seed);
    env.memos = &memos;
  }

  std::vector<Ablation> rows{ablation_of(s)};
  if (s.ablations) {
    rows.clear();
    rows.push_back({});
    rows.push_back({false, ExploitMode::GenericSingle, false});
    rows.push_back({false, ExploitMode::GenericSequence, false});
    rows.push_back({true, ExploitMode::Tuned, false});
  }
  std::vector<MetricsReport> reports;
  std::string traj;
  for (const auto& a : rows) {
    auto configs = pool;
    for (auto& c : configs) c.ablation = a;
    SuiteResult r = run_suite(configs, env, s.parallelism, a.label());
    reports.push_back(r.report);
    if (!s.trajectories.empty()) {
      for (const auto& res : r.results) {
        ojson line = result_to_json(res);
        line["label"] = a.label();
        traj += line.dump() + "\n";
      }
    }
  }
  if (!s.out.empty()) write_text(s.out, report_file_json(reports, cfg).dump(2) + "\n");
  if (!s.trajectories.empty()) write_text(s.trajectories, traj);
  const std::string table = render_table(reports);
  if (!s.table.empty()) write_text(s.table, table);
  std::cout << table;
  return 0;
}

int cmd_reflect_rounds(const Settings& s, ojson cfg) {
  const DemandOntology ontology = ontology_of(s);
  auto backend = open_backend(s, ontology);
  const auto pool = episode_pool(s, ontology, backend->kind);
  KnowledgeBase kb(s.kb);
  const std::size_t start = kb.count();
  EpisodeEnv env{&ontology, backend->chat.get(), &backend->templates, nullptr};
  const RoundsResult r = run_reflection_rounds(pool, s.rounds, s.episodes_per_round, kb, env, s.parallelism);
  std::vector<MetricsReport> reports = r.per_round;
  ojson file = report_file_json(reports, cfg);
  file["kb_initial"] = start;
  file["kb_counts"] = r.kb_counts;
  file["hindrances"] = r.hindrances;
  if (!s.out.empty()) write_text(s.out, file.dump(2) + "\n");
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& m = reports[i].overall;
    std::printf("round %zu  NSR %.3f  SPL %.3f  SSR %.3f  hindrances %ld  KB %zu\n", i + 1, m.nsr, m.spl, m.ssr,
                m.hindrances, r.kb_counts[i]);
  }
  return 0;
}

int cmd_export_sft(const Settings& s) {
  KnowledgeBase kb(s.kb);
  const std::size_t n = export_sft(kb, s.out);
  std::cout << n << " records written to " << s.out << "\n";
  if (!s.demand_qa.empty()) {
    const std::size_t q = export_demand_qa(ontology_of(s), s.demand_qa);
    std::cout << q << " demand QA records written to " << s.demand_qa << "\n";
  }
  return 0;
}

int cmd_report(const Settings& s) {
  std::vector<MetricsReport> reports;
  for (const auto& path : s.inputs) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open report " + path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ": " + e.what());
    }
    for (auto& r : reports_from_file_json(j)) reports.push_back(std::move(r));
  }
  const std::string table = render_table(reports);
  if (!s.out.empty()) write_text(s.out, table);
  std::cout << table;
  return 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
  Settings s;
  Registry reg;
  CLI::App app{"Demand-driven navigation agent: scenes, knowledge base, episodes and metrics", "ddnav"};
  app.set_config("--config", "", "TOML/INI file with option values (flags override it)");
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--log-level", s.log_level, "trace, debug, info, warn, error or off")->capture_default_str();

  const auto common = [&](CLI::App* c) {
    reg.add(c, "seed", s.seed, "Base seed");
    reg.add(c, "ontology", s.ontology, "Ontology JSON (defaults to the bundled one)")->check(CLI::ExistingFile);
  };
  const auto episodes = [&](CLI::App* c, bool pools) {
    reg.add(c, "scenes", s.scenes, "Directory of scene JSON files")->check(CLI::ExistingDirectory)->required();
    reg.add(c, "instructions", s.instructions, "Instruction file, one per line")->check(CLI::ExistingFile)->required();
    if (pools) {
      reg.add(c, "unseen-scenes", s.unseen_scenes, "Scene directory tagged unseen")->check(CLI::ExistingDirectory);
      reg.add(c, "unseen-instructions", s.unseen_instructions, "Instruction file tagged unseen")
          ->check(CLI::ExistingFile);
      reg.flag(c, "all-episodes", s.all_episodes, "Keep episodes no reachable object can satisfy");
    }
    reg.add(c, "spawns", s.spawns, "Spawn points used per scene (-1 for all)");
    reg.add(c, "parallelism", s.parallelism, "Worker threads")->check(CLI::PositiveNumber);
  };
  const auto backend = [&](CLI::App* c) {
    reg.add(c, "backend", s.backend, "rule, llm or mock")->check(CLI::IsMember({"rule", "llm", "mock"}));
    reg.add(c, "endpoint", s.endpoint, "Chat-completions URL for --backend llm");
    reg.add(c, "model", s.model, "Model name sent to the chat backend");
    reg.add(c, "prompts", s.prompts, "Prompt template directory")->check(CLI::ExistingDirectory);
    reg.add(c, "mock-script", s.mock_script, "Scripted replies for --backend mock")->check(CLI::ExistingFile);
  };
  const auto agent = [&](CLI::App* c) {
    reg.add(c, "max-steps", s.max_steps, "Step budget per episode")->check(CLI::PositiveNumber);
    reg.flag(c, "no-cot", s.no_cot, "Decide without description and reasoning");
    reg.add(c, "no-exploit", s.no_exploit, "Replace the tuned exploit: single or sequence")
        ->check(CLI::IsMember({"", "single", "sequence"}));
    reg.flag(c, "no-reflection", s.no_reflection, "Disable reflection on hindrance");
    reg.add(c, "p-miss", s.p_miss, "Per-detection drop probability")->check(CLI::Range(0.0, 1.0));
  };

  CLI::App* gen = app.add_subcommand("gen-scenes", "Generate random scenes");
  common(gen);
  reg.add(gen, "count", s.count, "Number of scenes")->check(CLI::PositiveNumber);
  reg.add(gen, "width", s.width, "Grid width in cells");
  reg.add(gen, "depth", s.depth, "Grid depth in cells");
  reg.add(gen, "density", s.density, "Fraction of free cells covered by objects")->check(CLI::Range(0.0, 1.0));
  reg.add(gen, "spawn-points", s.spawn_points, "Spawn points per scene");
  reg.add(gen, "out", s.out, "Output directory")->required();

  CLI::App* boot = app.add_subcommand("bootstrap-kb", "Record experiences along planned trajectories");
  common(boot);
  episodes(boot, false);
  backend(boot);
  reg.add(boot, "kb", s.kb, "Knowledge base JSONL file")->required();

  CLI::App* run = app.add_subcommand("run", "Run one episode");
  common(run);
  backend(run);
  agent(run);
  reg.add(run, "scene", s.scene, "Scene JSON file")->check(CLI::ExistingFile)->required();
  reg.add(run, "instruction", s.instruction, "Human demand")->required();
  reg.add(run, "spawn", s.spawn, "Spawn point index");
  reg.add(run, "kb", s.kb, "Knowledge base whose reflections inform the agent")->check(CLI::ExistingFile);
  reg.add(run, "out", s.out, "Episode result JSON with trajectory");

  CLI::App* suite = app.add_subcommand("suite", "Run an episode suite and report NSR/SPL/SSR");
  common(suite);
  episodes(suite, true);
  backend(suite);
  agent(suite);
  reg.flag(suite, "ablations", s.ablations, "Also run the no-exploit and no-cot rows");
  reg.add(suite, "kb", s.kb, "Knowledge base whose reflections inform the agent")->check(CLI::ExistingFile);
  reg.add(suite, "out", s.out, "Report JSON");
  reg.add(suite, "trajectories", s.trajectories, "Per-episode results, JSONL");
  reg.add(suite, "table", s.table, "Text table output");

  CLI::App* rounds = app.add_subcommand("reflect-rounds", "Replay a pool over rounds, growing the knowledge base");
  common(rounds);
  episodes(rounds, true);
  backend(rounds);
  agent(rounds);
  reg.add(rounds, "rounds", s.rounds, "Number of rounds")->check(CLI::PositiveNumber);
  reg.add(rounds, "episodes-per-round", s.episodes_per_round, "Episodes per round")->check(CLI::PositiveNumber);
  reg.add(rounds, "kb", s.kb, "Knowledge base JSONL file")->required();
  reg.add(rounds, "out", s.out, "Per-round report JSON");

  CLI::App* sft = app.add_subcommand("export-sft", "Export knowledge base experiences as QA records");
  reg.add(sft, "kb", s.kb, "Knowledge base JSONL file")->check(CLI::ExistingFile)->required();
  reg.add(sft, "out", s.out, "Output JSONL")->required();
  reg.add(sft, "demand-qa", s.demand_qa, "Also write demand-matching QA pairs here");
  reg.add(sft, "ontology", s.ontology, "Ontology JSON (defaults to the bundled one)")->check(CLI::ExistingFile);

  CLI::App* report = app.add_subcommand("report", "Render report JSON files as a table");
  reg.add(report, "in", s.inputs, "Report JSON files")->check(CLI::ExistingFile)->required();
  reg.add(report, "out", s.out, "Write the table here as well");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  }

  try {
    ensure_logger(s.log_level);
    CLI::App* selected = app.get_subcommands().front();
    ojson cfg = reg.resolve(selected, args);
    cfg["command"] = selected->get_name();
    const std::string name = selected->get_name();
    if (name == "gen-scenes") return cmd_gen_scenes(s);
    if (name == "bootstrap-kb") return cmd_bootstrap(s);
    if (name == "run") return cmd_run(s);
    if (name == "suite") return cmd_suite(s, cfg);
    if (name == "reflect-rounds") return cmd_reflect_rounds(s, cfg);
    if (name == "export-sft") return cmd_export_sft(s);
    if (name == "report") return cmd_report(s);
    return 2;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ddnav::cli
