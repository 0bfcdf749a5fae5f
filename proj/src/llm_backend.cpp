#include "hypmix/llm_backend.hpp"

#include <cctype>
#include <cstdio>

#include "hypmix/errors.hpp"
#include "hypmix/hashing.hpp"
#include "hypmix/response_cache.hpp"

namespace hypmix {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// If the line is an ACTION line, returns what follows the sentinel.
std::optional<std::string_view> action_payload(std::string_view line) {
  line = trim(line);
  while (!line.empty() && (line.front() == '*' || line.front() == '#' || line.front() == '`')) line.remove_prefix(1);
  line = trim(line);
  constexpr std::string_view sentinel = kActionSentinel;
  if (line.size() < sentinel.size()) return std::nullopt;
  for (std::size_t i = 0; i < sentinel.size(); ++i) {
    if (std::toupper(static_cast<unsigned char>(line[i])) != sentinel[i]) return std::nullopt;
  }
  line.remove_prefix(sentinel.size());
  while (!line.empty() && line.front() == '*') line.remove_prefix(1);
  return trim(line);
}

}  // namespace

GenerationRequest GenerationRequest::from_prompt(const SimulationPrompt& prompt) {
  GenerationRequest r;
  r.prompt = prompt.rendered;
  r.fingerprint = prompt.fingerprint;
  return r;
}

std::string cache_key(const GenerationRequest& request) {
  char temperature[64];
  std::snprintf(temperature, sizeof temperature, "%.17g", request.temperature);
  std::string material = request.fingerprint;
  material += '\x1f';
  material += request.model_id;
  material += '\x1f';
  material += temperature;
  material += '\x1f';
  material += std::to_string(request.sample_index);
  material += '\x1f';
  material += std::to_string(request.seed);
  return sha256_hex(material);
}

Generator::Generator(Backend& backend, ResponseCache* cache, int parallelism)
    : backend_(backend), cache_(cache), slots_(std::max(1, std::min(parallelism, 1024))) {}

GenerationResponse Generator::generate(const GenerationRequest& request) {
  const std::string key = cache_key(request);
  std::promise<GenerationResponse> promise;
  {
    std::unique_lock lock(mutex_);
    if (cache_) {
      if (auto hit = cache_->lookup(key)) return *hit;
    }
    if (auto it = in_flight_.find(key); it != in_flight_.end()) {
      auto shared = it->second;
      lock.unlock();
      return shared.get();
    }
    in_flight_.emplace(key, promise.get_future().share());
  }

  try {
    slots_.acquire();
    GenerationResponse response;
    try {
      ++backend_calls_;
      response = backend_.complete(request);
    } catch (...) {
      slots_.release();
      throw;
    }
    slots_.release();
    if (response.text.empty()) throw MalformedResponse("backend returned an empty completion");
    if (cache_) cache_->store(key, request, response);
    promise.set_value(response);
    std::lock_guard lock(mutex_);
    in_flight_.erase(key);
    return response;
  } catch (...) {
    promise.set_exception(std::current_exception());
    std::lock_guard lock(mutex_);
    in_flight_.erase(key);
    throw;
  }
}

ParsedAction parse_action(const GenerationResponse& response, const ActionLabeling& labeling) {
  const std::string& text = response.text;
  std::vector<std::pair<std::size_t, std::string_view>> hits;  // (line start offset, payload)
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string_view line(text.data() + start, end - start);
    if (auto payload = action_payload(line)) hits.emplace_back(start, *payload);
    if (end == text.size()) break;
    start = end + 1;
  }
  if (hits.empty()) throw NoActionLine();

  ParsedAction parsed{parse_surface(hits.back().second, labeling), std::string(trim(text.substr(0, hits.back().first))),
                      {}};
  if (hits.size() > 1) {
    parsed.warnings.push_back("response has " + std::to_string(hits.size()) + " ACTION lines; using the last one");
  }
  return parsed;
}

const std::string& format_reminder() {
  static const std::string text =
      "REMINDER: your previous answer could not be read. End your response with a single final line of the form "
      "\"ACTION: <action label>\" using one of the available action labels exactly as written.";
  return text;
}

}  // namespace hypmix
