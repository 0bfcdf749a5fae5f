#include "hypmix/remote_backend.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "hypmix/errors.hpp"

namespace hypmix {
namespace {

using json = nlohmann::json;

// Splits "scheme://host[:port][/prefix]" into origin and path prefix.
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("backend URL needs a scheme: '" + url + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  std::string origin = url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {origin, prefix};
}

std::optional<std::chrono::milliseconds> parse_retry_after(const std::string& value) {
  if (value.empty()) return std::nullopt;
  char* end = nullptr;
  const double seconds = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || seconds < 0) return std::nullopt;
  return std::chrono::milliseconds(static_cast<std::int64_t>(seconds * 1000.0));
}

}  // namespace

std::string chat_completion_body(const GenerationRequest& request, bool send_seed) {
  json body{
      {"model", request.model_id},
      {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
      {"temperature", request.temperature},
      {"max_tokens", request.max_tokens},
  };
  if (send_seed) body["seed"] = request.seed;
  return body.dump();
}

GenerationResponse parse_chat_completion(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw MalformedResponse(std::string("completion body is not JSON: ") + e.what());
  }
  try {
    const auto& choice = j.at("choices").at(0);
    GenerationResponse r;
    const auto& content = choice.at("message").at("content");
    if (!content.is_string()) throw MalformedResponse("completion message content is not a string");
    r.text = content.get<std::string>();
    if (r.text.empty()) throw MalformedResponse("completion message content is empty");
    if (auto it = choice.find("finish_reason"); it != choice.end() && it->is_string()) r.finish_reason = *it;
    if (auto usage = j.find("usage"); usage != j.end() && usage->is_object()) {
      r.prompt_tokens = usage->value("prompt_tokens", std::int64_t{0});
      r.completion_tokens = usage->value("completion_tokens", std::int64_t{0});
    }
    return r;
  } catch (const json::exception& e) {
    throw MalformedResponse(std::string("completion body lacks choices[0].message.content: ") + e.what());
  }
}

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
  auto [origin, prefix] = split_url(config_.base_url);
  origin_ = std::move(origin);
  path_ = prefix + "/chat/completions";
}

GenerationResponse RemoteBackend::complete(const GenerationRequest& request) {
  httplib::Client client(origin_);
  if (!client.is_valid()) throw BackendUnavailable("cannot use backend URL '" + config_.base_url + "'");
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) client.set_bearer_token_auth(key);

  const std::string body = chat_completion_body(request, config_.send_seed);
  auto backoff = config_.initial_backoff;
  std::string last_error;
  std::optional<std::chrono::milliseconds> last_retry_after;
  bool last_was_rate_limit = false;

  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      auto wait = last_retry_after.value_or(backoff);
      std::this_thread::sleep_for(std::min(wait, config_.max_backoff));
      backoff = std::min(backoff * 2, config_.max_backoff);
    }
    ++network_calls_;
    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(path_, body, "application/json");
    const auto elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
    last_retry_after.reset();
    last_was_rate_limit = false;

    if (!res) {
      last_error = "request to " + config_.base_url + " failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429) {
      last_was_rate_limit = true;
      last_retry_after = parse_retry_after(res->get_header_value("Retry-After"));
      last_error = "rate limited by " + config_.base_url;
      continue;
    }
    if (res->status >= 500) {
      last_error = "server error " + std::to_string(res->status) + " from " + config_.base_url;
      continue;
    }
    if (res->status != 200) {
      throw BackendUnavailable("HTTP " + std::to_string(res->status) + " from " + config_.base_url + ": " +
                               res->body.substr(0, 200));
    }
    GenerationResponse out = parse_chat_completion(res->body);
    out.latency_ms = elapsed.count();
    return out;
  }
  if (last_was_rate_limit) throw RateLimited(last_error, last_retry_after);
  throw BackendUnavailable(last_error + " (after " + std::to_string(config_.max_retries + 1) + " attempts)");
}

}  // namespace hypmix
