#pragma once

#include <atomic>
#include <chrono>
#include <string>

#include "hypmix/llm_backend.hpp"

namespace hypmix {

inline constexpr const char* kDefaultApiKeyEnv = "OPENAI_API_KEY";

struct RemoteConfig {
  // Base URL of a chat-completion compatible server, e.g. "https://api.openai.com/v1".
  std::string base_url = "https://api.openai.com/v1";
  // Name of the environment variable holding the bearer token. Unset or
  // empty variables mean no Authorization header.
  std::string api_key_env = kDefaultApiKeyEnv;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{8000};
  std::chrono::seconds timeout{120};
  bool send_seed = true;
};

// POST {base_url}/chat/completions with one user message holding the prompt.
// Retries network failures, 5xx and 429 with exponential backoff (429 honours
// Retry-After). Throws BackendUnavailable, RateLimited, MalformedResponse.
class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(RemoteConfig config);

  GenerationResponse complete(const GenerationRequest& request) override;
  std::string name() const override { return "remote"; }

  // HTTP requests attempted, retries included.
  std::int64_t network_calls() const noexcept { return network_calls_.load(); }

 private:
  RemoteConfig config_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;    // path prefix + /chat/completions
  std::atomic<std::int64_t> network_calls_{0};
};

// Builds the JSON request body; exposed for tests of the wire format.
std::string chat_completion_body(const GenerationRequest& request, bool send_seed);
// Extracts the first choice's message content. Throws MalformedResponse.
GenerationResponse parse_chat_completion(const std::string& body);

}  // namespace hypmix
