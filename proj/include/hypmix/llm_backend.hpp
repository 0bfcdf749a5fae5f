#pragma once

// Text generation: request/response types, the backend interface, a caching
// front end with in-flight deduplication, and parsing the model's answer.

#include <atomic>
#include <cstdint>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "hypmix/environment.hpp"
#include "hypmix/prompt.hpp"

namespace hypmix {

// Structured view of what the prompt describes. Remote backends ignore it;
// the synthetic backend reads it instead of the prompt text.
struct SimulationContext {
  std::map<std::string, int> persona;
  EnvState state;
  ActionLabeling labeling = ActionLabeling::builtin_a();
  std::vector<std::string> hypothesis_ids;
};

struct GenerationRequest {
  std::string prompt;       // rendered prompt
  std::string fingerprint;  // content hash of prompt
  std::string model_id;
  double temperature = 1.0;
  int max_tokens = 1024;
  int sample_index = 0;  // distinguishes repeated draws of the same prompt
  std::uint64_t seed = 0;
  std::optional<SimulationContext> context;

  static GenerationRequest from_prompt(const SimulationPrompt& prompt);
};

struct GenerationResponse {
  std::string text;
  std::string finish_reason;
  std::int64_t latency_ms = 0;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  friend bool operator==(const GenerationResponse&, const GenerationResponse&) = default;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // Throws BackendUnavailable, RateLimited, MalformedResponse.
  virtual GenerationResponse complete(const GenerationRequest& request) = 0;
  virtual std::string name() const = 0;
};

// Collision-resistant key over (fingerprint, model, temperature, sample index, seed).
std::string cache_key(const GenerationRequest& request);

struct CacheStats {
  std::int64_t hits = 0;
  std::int64_t misses = 0;
  std::int64_t entries = 0;
  friend bool operator==(const CacheStats&, const CacheStats&) = default;
};

class ResponseCache;

// Front end every caller goes through. With a cache, hits skip the backend;
// concurrent identical requests share one backend call; at most
// `parallelism` backend calls run at once.
class Generator {
 public:
  Generator(Backend& backend, ResponseCache* cache = nullptr, int parallelism = 4);

  GenerationResponse generate(const GenerationRequest& request);

  std::int64_t backend_calls() const noexcept { return backend_calls_.load(); }
  Backend& backend() noexcept { return backend_; }
  ResponseCache* cache() noexcept { return cache_; }

 private:
  Backend& backend_;
  ResponseCache* cache_;
  std::counting_semaphore<1024> slots_;
  std::mutex mutex_;
  std::map<std::string, std::shared_future<GenerationResponse>> in_flight_;
  std::atomic<std::int64_t> backend_calls_{0};
};

struct ParsedAction {
  Action action;
  std::string rationale;
  std::vector<std::string> warnings;
};

// Reads free-form reasoning followed by an "ACTION: <label>" line. The last
// ACTION line wins. Throws NoActionLine or UnrecognizedAction.
ParsedAction parse_action(const GenerationResponse& response, const ActionLabeling& labeling);

// Appended to the prompt for the single retry after a parse failure.
const std::string& format_reminder();

}  // namespace hypmix
