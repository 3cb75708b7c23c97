#include <atomic>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "ddnav/error.hpp"
#include "ddnav/llm.hpp"

namespace ddnav::llm {

using json = nlohmann::json;

struct MockChatServer::Impl {
  httplib::Server server;
  std::thread thread;
  mutable std::mutex mutex;
  std::map<std::string, std::string> scripted;
  Responder responder;
  std::optional<std::string> default_reply;
  int fail_count = 0;
  int fail_status = 500;
  std::atomic<int> requests{0};
};

MockChatServer::MockChatServer() : impl_(std::make_unique<Impl>()) {
  impl_->server.Post(R"(/.*)", [this](const httplib::Request& req, httplib::Response& res) {
    ++impl_->requests;
    {
      std::lock_guard lock(impl_->mutex);
      if (impl_->fail_count > 0) {
        --impl_->fail_count;
        res.status = impl_->fail_status;
        res.set_content(R"({"error":"scripted failure"})", "application/json");
        return;
      }
    }
    ChatRequest chat;
    try {
      const json body = json::parse(req.body);
      chat.model = body.value("model", "");
      for (const auto& m : body.at("messages")) {
        const auto role = m.at("role").get<std::string>();
        if (role == "system") chat.system += m.at("content").get<std::string>();
        if (role == "user") chat.user += m.at("content").get<std::string>();
      }
    } catch (const json::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      return;
    }
    std::optional<std::string> reply;
    Responder responder;
    {
      std::lock_guard lock(impl_->mutex);
      auto it = impl_->scripted.find(digest(chat.system, chat.user));
      if (it != impl_->scripted.end()) reply = it->second;
      responder = impl_->responder;
    }
    if (!reply && responder) reply = responder(chat);
    if (!reply) {
      std::lock_guard lock(impl_->mutex);
      reply = impl_->default_reply;
    }
    if (!reply) {
      res.status = 404;
      res.set_content(R"({"error":"no scripted reply for this request"})", "application/json");
      return;
    }
    json out;
    out["choices"] = json::array({{{"index", 0}, {"message", {{"role", "assistant"}, {"content", *reply}}}}});
    out["usage"] = {{"prompt_tokens", static_cast<int>((chat.system.size() + chat.user.size()) / 4)},
                    {"completion_tokens", static_cast<int>(reply->size() / 4)}};
    res.set_content(out.dump(), "application/json");
  });
}

MockChatServer::~MockChatServer() { stop(); }

void MockChatServer::start() {
  if (impl_->thread.joinable()) return;
  port_ = impl_->server.bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw BackendError("mock chat server could not bind a port");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void MockChatServer::stop() {
  if (!impl_->thread.joinable()) return;
  impl_->server.stop();
  impl_->thread.join();
}

std::string MockChatServer::endpoint() const {
  return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
}

void MockChatServer::script(const std::string& digest, const std::string& reply) {
  std::lock_guard lock(impl_->mutex);
  impl_->scripted[digest] = reply;
}

void MockChatServer::set_responder(Responder responder) {
  std::lock_guard lock(impl_->mutex);
  impl_->responder = std::move(responder);
}

void MockChatServer::fail_next(int count, int status) {
  std::lock_guard lock(impl_->mutex);
  impl_->fail_count = count;
  impl_->fail_status = status;
}

int MockChatServer::request_count() const { return impl_->requests.load(); }

std::string MockChatServer::digest(const std::string& system, const std::string& user) {
  const std::string data = system + '\x1f' + user;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

void MockChatServer::load_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mock script " + path.string());
  try {
    const json j = json::parse(in);
    std::lock_guard lock(impl_->mutex);
    for (const auto& p : j.value("pairs", json::array()))
      impl_->scripted[p.at("digest").get<std::string>()] = p.at("reply").get<std::string>();
    if (j.contains("default")) impl_->default_reply = j.at("default").get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

MockChatServer::Responder echo_responder() {
  return [](const ChatRequest& r) -> std::optional<std::string> { return r.user; };
}

}  // namespace ddnav::llm
