#include "llambo/llm.hpp"

#include <fstream>

#include <httplib.h>
#include <json.hpp>

namespace llambo {

namespace {

void validate(const BackendConfig& cfg) {
  if (cfg.max_retries < 0)
    throw ValidationError("backend max_retries must be >= 0, got " +
                          std::to_string(cfg.max_retries));
  if (cfg.timeout_seconds <= 0)
    throw ValidationError("backend timeout must be positive, got " +
                          std::to_string(cfg.timeout_seconds));
  if (cfg.temperature < 0.0)
    throw ValidationError("backend temperature must be >= 0, got " +
                          std::to_string(cfg.temperature));
}

}  // namespace

ScriptedBackend::ScriptedBackend(std::vector<std::string> replies, bool cycle)
    : replies_(std::move(replies)), cycle_(cycle) {}

ScriptedBackend ScriptedBackend::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scripted replies file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("scripted replies file " + path + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("replies") || !doc["replies"].is_array())
    throw SchemaError("scripted replies file " + path +
                      ": expected an object with a \"replies\" array");
  std::vector<std::string> replies;
  for (const auto& r : doc["replies"]) {
    if (!r.is_string())
      throw SchemaError("scripted replies file " + path + ": replies must be strings");
    replies.push_back(r.get<std::string>());
  }
  return ScriptedBackend(std::move(replies), doc.value("cycle", false));
}

std::string ScriptedBackend::complete(const PromptBundle&, double, std::uint64_t) {
  if (index_ >= replies_.size()) {
    if (!cycle_ || replies_.empty())
      throw BackendError("scripted backend exhausted after " + std::to_string(replies_.size()) +
                         " replies");
    index_ = 0;
  }
  ++calls_;
  return replies_[index_++];
}

HttpBackend::HttpBackend(BackendConfig cfg) : cfg_(std::move(cfg)) { validate(cfg_); }

std::string HttpBackend::complete(const PromptBundle& bundle, double temperature,
                                  std::uint64_t seed) {
  httplib::Client client(cfg_.endpoint);
  client.set_connection_timeout(cfg_.timeout_seconds, 0);
  client.set_read_timeout(cfg_.timeout_seconds, 0);
  client.set_write_timeout(cfg_.timeout_seconds, 0);

  const nlohmann::json body = {
      {"model", cfg_.model},
      {"system", bundle.system_text},
      {"prompt", bundle.user_text},
      {"stream", false},
      {"options",
       {{"temperature", temperature},
        // Servers expect a signed seed; fold ours into the positive range.
        {"seed", static_cast<std::int64_t>(seed & 0x7fffffffffffffffULL)}}}};

  const httplib::Result res = client.Post("/api/generate", body.dump(), "application/json");
  if (!res)
    throw BackendError("transport error contacting " + cfg_.endpoint + ": " +
                       httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw BackendError("server returned status " + std::to_string(res->status) + " for " +
                           cfg_.endpoint + "/api/generate",
                       res->status);
  const nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.contains("response") || !reply["response"].is_string())
    throw BackendError("malformed server reply: missing string field 'response'");
  return reply["response"].get<std::string>();
}

std::unique_ptr<Backend> make_backend(const BackendConfig& cfg) {
  validate(cfg);
  if (!cfg.scripted_replies.empty())
    return std::make_unique<ScriptedBackend>(ScriptedBackend::from_file(cfg.scripted_replies));
  return std::make_unique<HttpBackend>(cfg);
}

}  // namespace llambo
