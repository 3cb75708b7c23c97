#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ddnav/decision.hpp"

namespace ddnav::llm {

// ------------------------------------------------------------------ templates

struct PromptTemplate {
  std::string name;  // P_m, P_e, P_x, P_r or P_d
  std::string body;
  std::set<std::string> required_placeholders;

  // Parses a template file: leading '#' lines form the header, where
  // "# template: <name>" and "# requires: a, b" are recognised.
  static PromptTemplate parse(const std::string& text, const std::string& fallback_name = {});
  static PromptTemplate load(const std::filesystem::path& path);
};

// Placeholder names appearing in `body`, with multiplicity.
std::vector<std::string> placeholders(const std::string& body);
// Throws ValidationError unless each required placeholder occurs exactly once.
void validate(const PromptTemplate& t);

using Bindings = std::map<std::string, std::string>;

// Pure substitution of {name} placeholders; "{{" and "}}" are literal braces.
// Throws MissingBinding for an unbound placeholder. Unused bindings are
// reported through `warnings` (and the log) but are not an error.
std::string render(const PromptTemplate& t, const Bindings& bindings,
                   std::vector<std::string>* warnings = nullptr);

struct TemplateSet {
  PromptTemplate demand;    // P_m
  PromptTemplate explore;   // P_e
  PromptTemplate exploit;   // P_x
  PromptTemplate reflect;   // P_r
  PromptTemplate describe;  // P_d, description/reasoning for bootstrap records

  static TemplateSet load(const std::filesystem::path& dir);
  static TemplateSet load_default();
};

// Response-format instructions bound to {response_format}.
std::string response_format(bool chain_of_thought, bool multi_action);
inline constexpr const char* kDirectFormatMarker = "Reply with the Decision line only.";

// ------------------------------------------------------------------ transport

struct BackendConfig {
  std::string endpoint;  // full URL of the chat-completions route
  std::string model = "gpt-4";
  std::string token_env = "DDNAV_LLM_API_KEY";  // env var holding the bearer token
  double timeout_s = 30.0;
  int max_retries = 2;
  int backoff_ms = 50;

  // DDNAV_LLM_ENDPOINT, DDNAV_LLM_MODEL, DDNAV_LLM_TOKEN_ENV, DDNAV_LLM_TIMEOUT,
  // DDNAV_LLM_RETRIES override the defaults.
  static BackendConfig from_env();
  void validate() const;  // throws ConfigError
};

// One chat exchange. Implementations must allow concurrent calls.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const std::string& system, const std::string& user) = 0;
};

class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(BackendConfig config);
  std::string complete(const std::string& system, const std::string& user) override;
  const BackendConfig& config() const { return config_; }

 private:
  BackendConfig config_;
};

// Sends one chat-completions request, retrying transient failures (transport
// errors, 429, 5xx) with exponential backoff. Returns the reply text verbatim.
// Throws AuthError on 401/403 and BackendError once retries are exhausted.
std::string complete(const BackendConfig& config, const std::string& system, const std::string& user);

// ------------------------------------------------------------------ replies

struct ParseOptions {
  bool require_cot = true;  // Scene Description and Reasoning must be present
  std::size_t min_actions = 1;
  std::size_t max_actions = 6;
};

// Extracts the labelled Scene Description / Reasoning / Decision sections.
// Decision tokens must belong to the closed action set. Text after the
// Decision line is ignored. Throws ParseError naming what is wrong.
DecisionTriple parse_triple(const std::string& reply, const ParseOptions& options = {});
// Canonical serialisation; parse_triple(format_triple(t)) == t.
std::string format_triple(const DecisionTriple& t);

// ------------------------------------------------------------------ mock server

struct ChatRequest {
  std::string model;
  std::string system;
  std::string user;
};

// Deterministic local chat-completions server for offline tests. Replies are
// looked up by request digest first, then produced by the responder.
class MockChatServer {
 public:
  using Responder = std::function<std::optional<std::string>(const ChatRequest&)>;

  MockChatServer();
  ~MockChatServer();
  MockChatServer(const MockChatServer&) = delete;
  MockChatServer& operator=(const MockChatServer&) = delete;

  // Binds 127.0.0.1 on a free port and serves on a background thread.
  void start();
  void stop();
  int port() const { return port_; }
  std::string endpoint() const;

  void script(const std::string& digest, const std::string& reply);
  void set_responder(Responder responder);
  // The next `count` requests fail with `status` before normal handling.
  void fail_next(int count, int status = 500);
  int request_count() const;

  static std::string digest(const std::string& system, const std::string& user);
  // Scripts from JSON: {"pairs": [{"digest": ..., "reply": ...}], "default": "..."}.
  void load_script(const std::filesystem::path& path);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

// Responder returning the user content unchanged.
MockChatServer::Responder echo_responder();

}  // namespace ddnav::llm
