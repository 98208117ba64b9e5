// LlmClient over an OpenAI-style chat completions endpoint.
#pragma once

#include <chrono>
#include <stdexcept>
#include <string>

#include "slr/rules.hpp"

namespace slr {

class LlmRequestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HttpLlmConfig {
  /// Scheme, host and optional port, e.g. "https://api.openai.com".
  std::string endpoint;
  std::string path = "/v1/chat/completions";
  std::string api_key;
  std::string model = "gpt-4o";
  double temperature = 1.0;
  std::chrono::seconds timeout{60};

  /// SLR_LLM_ENDPOINT (required), SLR_LLM_API_KEY, SLR_LLM_MODEL and
  /// SLR_LLM_PATH. Throws std::invalid_argument when the endpoint is unset.
  static HttpLlmConfig from_env();
};

class HttpLlmClient : public LlmClient {
 public:
  explicit HttpLlmClient(HttpLlmConfig config);
  /// Sends the prompt as one user message and returns the first choice's
  /// content. Throws LlmRequestError on transport or HTTP errors.
  std::string complete(const std::string& prompt) override;

 private:
  HttpLlmConfig config_;
};

}  // namespace slr
