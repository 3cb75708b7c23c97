#include "ddnav/llm.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "ddnav/error.hpp"

namespace ddnav::llm {

using json = nlohmann::json;

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Walks `body`, calling on_text for literal runs and on_name for placeholders.
template <typename Text, typename Name>
void scan(const std::string& body, Text on_text, Name on_name) {
  std::size_t i = 0;
  while (i < body.size()) {
    const char c = body[i];
    if (c == '{' && i + 1 < body.size() && body[i + 1] == '{') {
      on_text("{");
      i += 2;
    } else if (c == '}' && i + 1 < body.size() && body[i + 1] == '}') {
      on_text("}");
      i += 2;
    } else if (c == '{' && i + 1 < body.size() && is_ident_start(body[i + 1])) {
      std::size_t j = i + 1;
      while (j < body.size() && is_ident(body[j])) ++j;
      if (j < body.size() && body[j] == '}') {
        on_name(body.substr(i + 1, j - i - 1));
        i = j + 1;
      } else {
        on_text(std::string(1, c));
        ++i;
      }
    } else {
      on_text(std::string(1, c));
      ++i;
    }
  }
}

}  // namespace

// ------------------------------------------------------------------ templates

PromptTemplate PromptTemplate::parse(const std::string& text, const std::string& fallback_name) {
  PromptTemplate t;
  t.name = fallback_name;
  std::istringstream in(text);
  std::string line;
  std::string body;
  bool in_header = true;
  while (std::getline(in, line)) {
    if (in_header && !line.empty() && line[0] == '#') {
      auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      const std::string key = trim(line.substr(1, colon - 1));
      const std::string value = trim(line.substr(colon + 1));
      if (key == "template") {
        t.name = value;
      } else if (key == "requires") {
        std::istringstream items(value);
        std::string item;
        while (std::getline(items, item, ',')) {
          item = trim(item);
          if (!item.empty()) t.required_placeholders.insert(item);
        }
      }
      continue;
    }
    in_header = false;
    body += line;
    body += '\n';
  }
  t.body = body;
  validate(t);
  return t;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open prompt template " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str(), path.stem().string());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::vector<std::string> placeholders(const std::string& body) {
  std::vector<std::string> names;
  scan(body, [](const std::string&) {}, [&](const std::string& n) { names.push_back(n); });
  return names;
}

void validate(const PromptTemplate& t) {
  const auto names = placeholders(t.body);
  for (const auto& req : t.required_placeholders) {
    const auto n = std::count(names.begin(), names.end(), req);
    if (n != 1)
      throw ValidationError("template " + t.name + ": placeholder {" + req + "} appears " + std::to_string(n) +
                            " times, expected exactly once");
  }
}

std::string render(const PromptTemplate& t, const Bindings& bindings, std::vector<std::string>* warnings) {
  std::string out;
  std::set<std::string> used;
  scan(
      t.body, [&](const std::string& s) { out += s; },
      [&](const std::string& name) {
        auto it = bindings.find(name);
        if (it == bindings.end()) throw MissingBinding("template " + t.name + ": no binding for {" + name + "}");
        used.insert(name);
        out += it->second;
      });
  for (const auto& [name, value] : bindings) {
    if (used.count(name)) continue;
    const std::string msg = "template " + t.name + ": binding '" + name + "' is not used";
    spdlog::warn("{}", msg);
    if (warnings) warnings->push_back(msg);
  }
  return out;
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
  TemplateSet s;
  s.demand = PromptTemplate::load(dir / "P_m.txt");
  s.explore = PromptTemplate::load(dir / "P_e.txt");
  s.exploit = PromptTemplate::load(dir / "P_x.txt");
  s.reflect = PromptTemplate::load(dir / "P_r.txt");
  s.describe = PromptTemplate::load(dir / "P_d.txt");
  return s;
}

TemplateSet TemplateSet::load_default() { return load(std::filesystem::path(DDNAV_DATA_DIR) / "prompts"); }

std::string response_format(bool chain_of_thought, bool multi_action) {
  const std::string actions = multi_action
                                  ? "a comma-separated list of one to six actions"
                                  : "exactly one action";
  if (!chain_of_thought) {
    return std::string(kDirectFormatMarker) + "\nDecision: <" + actions + ">";
  }
  return "Think step by step and answer in three labelled sections:\n"
         "Scene Description: <passable areas and task-related objects>\n"
         "Reasoning: <how the target location and the description lead to the decision>\n"
         "Decision: <" +
         actions + ">";
}

// ------------------------------------------------------------------ transport

BackendConfig BackendConfig::from_env() {
  BackendConfig c;
  if (const char* v = std::getenv("DDNAV_LLM_ENDPOINT")) c.endpoint = v;
  if (const char* v = std::getenv("DDNAV_LLM_MODEL")) c.model = v;
  if (const char* v = std::getenv("DDNAV_LLM_TOKEN_ENV")) c.token_env = v;
  if (const char* v = std::getenv("DDNAV_LLM_TIMEOUT")) c.timeout_s = std::atof(v);
  if (const char* v = std::getenv("DDNAV_LLM_RETRIES")) c.max_retries = std::atoi(v);
  return c;
}

void BackendConfig::validate() const {
  if (endpoint.empty()) throw ConfigError("LLM endpoint is not configured (set DDNAV_LLM_ENDPOINT)");
  if (!(timeout_s > 0.0)) throw ConfigError("LLM timeout must be positive");
  if (max_retries < 0) throw ConfigError("LLM retries must be non-negative");
}

namespace {

struct SplitUrl {
  std::string base;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw ConfigError("malformed endpoint URL: " + url);
  return {m[1].str(), m[2].matched ? m[2].str() : std::string("/v1/chat/completions")};
}

}  // namespace

std::string complete(const BackendConfig& config, const std::string& system, const std::string& user) {
  config.validate();
  const SplitUrl url = split_url(config.endpoint);
  httplib::Client client(url.base);
  const auto timeout = std::chrono::duration<double>(config.timeout_s);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (!config.token_env.empty()) {
    if (const char* token = std::getenv(config.token_env.c_str()); token && *token)
      headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  json body;
  body["model"] = config.model;
  body["messages"] = json::array({{{"role", "system"}, {"content", system}}, {{"role", "user"}, {"content", user}}});
  const std::string payload = body.dump();

  std::string last_error;
  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(config.backoff_ms << (attempt - 1)));
    }
    spdlog::debug("chat request to {} model={} attempt={} bytes={}", url.base, config.model, attempt + 1,
                  payload.size());
    auto res = client.Post(url.path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 401 || res->status == 403)
      throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(res->status) + ")");
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) throw BackendError("endpoint returned HTTP " + std::to_string(res->status));
    try {
      const json reply = json::parse(res->body);
      std::string content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
      if (reply.contains("usage")) {
        const auto& u = reply["usage"];
        spdlog::debug("chat reply bytes={} prompt_tokens={} completion_tokens={}", content.size(),
                      u.value("prompt_tokens", 0), u.value("completion_tokens", 0));
      } else {
        spdlog::debug("chat reply bytes={}", content.size());
      }
      return content;
    } catch (const json::exception& e) {
      throw BackendError(std::string("malformed chat-completions response: ") + e.what());
    }
  }
  throw BackendError("chat request failed after " + std::to_string(config.max_retries + 1) +
                     " attempts: " + last_error);
}

HttpChatBackend::HttpChatBackend(BackendConfig config) : config_(std::move(config)) { config_.validate(); }

std::string HttpChatBackend::complete(const std::string& system, const std::string& user) {
  return llm::complete(config_, system, user);
}

// ------------------------------------------------------------------ replies

namespace {

struct Label {
  std::size_t begin = std::string::npos;  // start of the label
  std::size_t end = std::string::npos;    // first character after the colon
  bool found() const { return begin != std::string::npos; }
};

Label find_label(const std::string& text, const std::regex& re, std::size_t from) {
  Label l;
  if (from >= text.size()) return l;
  std::smatch m;
  auto start = text.cbegin() + static_cast<std::ptrdiff_t>(from);
  if (std::regex_search(start, text.cend(), m, re)) {
    l.begin = from + static_cast<std::size_t>(m.position(0));
    l.end = l.begin + static_cast<std::size_t>(m.length(0));
  }
  return l;
}

std::string strip_markup(std::string s) {
  s = trim(std::move(s));
  while (!s.empty() && (s.front() == '*' || s.front() == '-')) s.erase(s.begin());
  while (!s.empty() && (s.back() == '*')) s.pop_back();
  return trim(std::move(s));
}

std::vector<Action> parse_actions(const std::string& line) {
  std::vector<Action> actions;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    auto a = parse_action(token);
    if (!a) throw ParseError("Decision contains unknown action '" + token + "'");
    actions.push_back(*a);
    token.clear();
  };
  for (char c : line) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      token.push_back(c);
    } else {
      flush();
    }
  }
  flush();
  return actions;
}

}  // namespace

DecisionTriple parse_triple(const std::string& reply, const ParseOptions& options) {
  static const std::regex desc_re(R"((\*\*)?(scene\s+description|description)(\*\*)?\s*:)", std::regex::icase);
  static const std::regex reason_re(R"((\*\*)?reasoning(\*\*)?\s*:)", std::regex::icase);
  static const std::regex decision_re(R"((\*\*)?decision(\*\*)?\s*:)", std::regex::icase);

  DecisionTriple t;
  const Label d = find_label(reply, desc_re, 0);
  const Label r = find_label(reply, reason_re, d.found() ? d.end : 0);
  std::size_t decision_from = r.found() ? r.end : (d.found() ? d.end : 0);
  Label s = find_label(reply, decision_re, decision_from);

  if (options.require_cot) {
    if (!d.found()) throw ParseError("reply is missing the Scene Description section");
    if (!r.found()) throw ParseError("reply is missing the Reasoning section");
  }
  if (d.found()) t.description = strip_markup(reply.substr(d.end, (r.found() ? r.begin : s.begin) - d.end));
  if (r.found()) t.reasoning = strip_markup(reply.substr(r.end, s.found() ? s.begin - r.end : std::string::npos));

  std::string decision_line;
  if (s.found()) {
    std::size_t stop = reply.find('\n', s.end);
    // allow the list to start on the following line
    if (trim(reply.substr(s.end, stop == std::string::npos ? std::string::npos : stop - s.end)).empty() &&
        stop != std::string::npos) {
      std::size_t next = reply.find('\n', stop + 1);
      decision_line = reply.substr(stop + 1, next == std::string::npos ? std::string::npos : next - stop - 1);
    } else {
      decision_line = reply.substr(s.end, stop == std::string::npos ? std::string::npos : stop - s.end);
    }
  } else if (!options.require_cot && !d.found() && !r.found()) {
    // direct mode may answer with the bare action list
    decision_line = trim(reply);
    if (decision_line.find('\n') != std::string::npos) decision_line.erase(decision_line.find('\n'));
  } else {
    throw ParseError("reply is missing the Decision section");
  }
  t.decision = parse_actions(decision_line);
  if (t.decision.size() < options.min_actions) throw ParseError("Decision lists no action");
  if (t.decision.size() > options.max_actions)
    throw ParseError("Decision lists " + std::to_string(t.decision.size()) + " actions, at most " +
                     std::to_string(options.max_actions) + " allowed");
  return t;
}

std::string format_triple(const DecisionTriple& t) {
  std::string out;
  out += "Scene Description: " + t.description + "\n";
  out += "Reasoning: " + t.reasoning + "\n";
  out += "Decision: " + join_actions(t.decision) + "\n";
  return out;
}

}  // namespace ddnav::llm
