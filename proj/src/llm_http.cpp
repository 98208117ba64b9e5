#include "slr/llm_http.hpp"

#include <cstdlib>

#include "httplib.h"
#include "json.hpp"

namespace slr {

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

}  // namespace

HttpLlmConfig HttpLlmConfig::from_env() {
  HttpLlmConfig c;
  c.endpoint = env_or("SLR_LLM_ENDPOINT", "");
  if (c.endpoint.empty()) throw std::invalid_argument("SLR_LLM_ENDPOINT is not set");
  c.api_key = env_or("SLR_LLM_API_KEY", "");
  c.model = env_or("SLR_LLM_MODEL", c.model);
  c.path = env_or("SLR_LLM_PATH", c.path);
  return c;
}

HttpLlmClient::HttpLlmClient(HttpLlmConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw std::invalid_argument("LLM endpoint is empty");
}

std::string HttpLlmClient::complete(const std::string& prompt) {
  httplib::Client cli(config_.endpoint);
  const auto secs = static_cast<time_t>(config_.timeout.count());
  cli.set_connection_timeout(secs, 0);
  cli.set_read_timeout(secs, 0);
  cli.set_write_timeout(secs, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  const nlohmann::json body = {{"model", config_.model},
                               {"temperature", config_.temperature},
                               {"messages", {{{"role", "user"}, {"content", prompt}}}}};
  auto res = cli.Post(config_.path, headers, body.dump(), "application/json");
  if (!res) throw LlmRequestError("request to " + config_.endpoint + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw LlmRequestError("LLM endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
  try {
    const auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw LlmRequestError(std::string("unexpected LLM response: ") + e.what());
  }
}

}  // namespace slr
