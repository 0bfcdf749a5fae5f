#include "hypmix/response_cache.hpp"

#include <chrono>
#include <ctime>

#include <nlohmann/json.hpp>

#include "hypmix/errors.hpp"

namespace hypmix {
namespace {

using json = nlohmann::json;

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

GenerationResponse response_from_json(const json& j) {
  GenerationResponse r;
  r.text = j.at("text").get<std::string>();
  r.finish_reason = j.value("finish_reason", "");
  r.latency_ms = j.value("latency_ms", std::int64_t{0});
  r.prompt_tokens = j.value("prompt_tokens", std::int64_t{0});
  r.completion_tokens = j.value("completion_tokens", std::int64_t{0});
  return r;
}

// Returns the byte length of the intact prefix.
std::uintmax_t load_records(const std::filesystem::path& file, std::map<std::string, GenerationResponse>& entries) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return 0;
  std::string line;
  std::size_t line_no = 0;
  std::uintmax_t intact = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::uintmax_t length = line.size() + (in.eof() ? 0 : 1);
    if (line.empty()) {
      intact += length;
      continue;
    }
    try {
      const auto j = json::parse(line);
      entries.try_emplace(j.at("key").get<std::string>(), response_from_json(j.at("response")));
    } catch (const json::exception& e) {
      // An unterminated last line is an append cut short; drop it.
      if (in.eof()) return intact;
      throw ConfigError("cache file " + file.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
    intact += length;
  }
  return intact;
}

}  // namespace

ResponseCache::ResponseCache(std::filesystem::path directory) {
  std::filesystem::create_directories(directory);
  file_ = directory / kCacheFileName;
  const auto intact = load_records(*file_, entries_);
  if (std::filesystem::exists(*file_) && std::filesystem::file_size(*file_) > intact) {
    std::filesystem::resize_file(*file_, intact);
  }
  // Keep the next append on a line of its own.
  if (intact > 0) {
    std::ifstream tail(*file_, std::ios::binary);
    tail.seekg(-1, std::ios::end);
    if (tail.get() != '\n') std::ofstream(*file_, std::ios::app) << '\n';
  }
}

std::optional<GenerationResponse> ResponseCache::lookup(const std::string& key) {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    ++misses_;
    return std::nullopt;
  }
  ++hits_;
  return it->second;
}

void ResponseCache::store(const std::string& key, const GenerationRequest& request,
                          const GenerationResponse& response) {
  std::lock_guard lock(mutex_);
  if (!entries_.emplace(key, response).second) return;
  if (!file_) return;
  json record{
      {"key", key},
      {"request",
       {{"fingerprint", request.fingerprint},
        {"model", request.model_id},
        {"temperature", request.temperature},
        {"sample_index", request.sample_index},
        {"seed", request.seed}}},
      {"response",
       {{"text", response.text},
        {"finish_reason", response.finish_reason},
        {"latency_ms", response.latency_ms},
        {"prompt_tokens", response.prompt_tokens},
        {"completion_tokens", response.completion_tokens}}},
      {"created_at", utc_timestamp()},
  };
  std::ofstream out(*file_, std::ios::app);
  if (!out) throw ConfigError("cannot append to cache file " + file_->string());
  out << record.dump() << '\n';
}

CacheStats ResponseCache::stats() const {
  std::lock_guard lock(mutex_);
  return {hits_, misses_, static_cast<std::int64_t>(entries_.size())};
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

void ResponseCache::clear() {
  std::lock_guard lock(mutex_);
  entries_.clear();
  hits_ = 0;
  misses_ = 0;
  if (file_) std::ofstream(*file_, std::ios::trunc);
}

CacheStats inspect_cache(const std::filesystem::path& directory) {
  std::map<std::string, GenerationResponse> entries;
  load_records(directory / kCacheFileName, entries);
  return {0, 0, static_cast<std::int64_t>(entries.size())};
}

}  // namespace hypmix
