#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "hypmix/llm_backend.hpp"

namespace hypmix {

inline constexpr const char* kCacheDirEnv = "HYPMIX_CACHE_DIR";
inline constexpr const char* kCacheFileName = "responses.jsonl";

// Append-only response store. One JSON record per line:
//   {"key", "request": {...summary}, "response": {...}, "created_at"}
// Entries are never rewritten; a later record with an existing key is ignored
// on load. Without a directory the cache lives in memory only.
class ResponseCache {
 public:
  ResponseCache() = default;
  explicit ResponseCache(std::filesystem::path directory);

  // Counts a hit or a miss.
  std::optional<GenerationResponse> lookup(const std::string& key);
  // No-op if the key is already present.
  void store(const std::string& key, const GenerationRequest& request, const GenerationResponse& response);

  CacheStats stats() const;
  std::size_t size() const;
  // Drops every entry and truncates the file; counters restart at zero.
  void clear();

  const std::optional<std::filesystem::path>& file() const noexcept { return file_; }

 private:
  mutable std::mutex mutex_;
  std::optional<std::filesystem::path> file_;
  std::map<std::string, GenerationResponse> entries_;
  std::int64_t hits_ = 0;
  std::int64_t misses_ = 0;
};

// Stats of a cache directory without touching counters (for `cache stats`).
CacheStats inspect_cache(const std::filesystem::path& directory);

}  // namespace hypmix
