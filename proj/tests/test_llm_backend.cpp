#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <thread>

#include "hypmix/errors.hpp"
#include "hypmix/llm_backend.hpp"
#include "hypmix/response_cache.hpp"

using namespace hypmix;

namespace {

// Returns "echo <sample_index>" after an optional delay; counts calls.
class CountingBackend : public Backend {
 public:
  explicit CountingBackend(std::chrono::milliseconds delay = {}) : delay_(delay) {}
  GenerationResponse complete(const GenerationRequest& request) override {
    ++calls;
    const int now = ++active;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    if (delay_.count()) std::this_thread::sleep_for(delay_);
    --active;
    if (fail) throw BackendUnavailable("down");
    return {empty ? "" : "echo " + std::to_string(request.sample_index) + "\nACTION: EXIT", "stop", 1, 2, 3};
  }
  std::string name() const override { return "counting"; }

  std::atomic<int> calls{0}, active{0}, peak{0};
  bool fail = false;
  bool empty = false;

 private:
  std::chrono::milliseconds delay_;
};

GenerationRequest request(int sample_index = 0, std::uint64_t seed = 1) {
  GenerationRequest r;
  r.prompt = "prompt";
  r.fingerprint = "fp";
  r.model_id = "m";
  r.sample_index = sample_index;
  r.seed = seed;
  return r;
}

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("hypmix_test_" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

GenerationResponse text(std::string t) { return {std::move(t), "stop", 0, 0, 0}; }

}  // namespace

TEST(CacheKey, CoversEveryKeyedField) {
  const auto base = cache_key(request());
  EXPECT_EQ(base, cache_key(request()));
  EXPECT_EQ(base.size(), 64u);
  auto r = request();
  r.fingerprint = "other";
  EXPECT_NE(cache_key(r), base);
  r = request();
  r.model_id = "m2";
  EXPECT_NE(cache_key(r), base);
  r = request();
  r.temperature = 0.7;
  EXPECT_NE(cache_key(r), base);
  EXPECT_NE(cache_key(request(1)), base);
  EXPECT_NE(cache_key(request(0, 2)), base);
  // The prompt text itself is represented by its fingerprint.
  r = request();
  r.prompt = "changed";
  r.max_tokens = 5;
  EXPECT_EQ(cache_key(r), base);
}

TEST(ParseAction, ReasoningThenActionLine) {
  const auto p = parse_action(text("...thinking...\nACTION: EXIT"), ActionLabeling::builtin_a());
  EXPECT_EQ(p.action, Action::exit());
  EXPECT_EQ(p.rationale, "...thinking...");
  EXPECT_TRUE(p.warnings.empty());
}

TEST(ParseAction, LabelingSpecificLabels) {
  EXPECT_EQ(parse_action(text("ACTION: CALC(f1, o)"), ActionLabeling::builtin_c()).action,
            Action::measure(PointPair(KeyPoint::F1, KeyPoint::X)));
  EXPECT_EQ(parse_action(text("ok\naction:   submit(1, 2, 3)"), ActionLabeling::builtin_a()).action,
            Action::submit("1", "2", "3"));
  EXPECT_EQ(parse_action(text("**ACTION:** QUIT"), ActionLabeling::builtin_b()).action, Action::exit());
}

TEST(ParseAction, Failures) {
  EXPECT_THROW(parse_action(text("I give up"), ActionLabeling::builtin_a()), NoActionLine);
  EXPECT_THROW(parse_action(text("ACTION: QUIT"), ActionLabeling::builtin_a()), UnrecognizedAction);
  EXPECT_THROW(parse_action(text("ACTION:"), ActionLabeling::builtin_a()), UnrecognizedAction);
}

TEST(ParseAction, LastActionLineWins) {
  const auto p = parse_action(text("ACTION: EXIT\nOn second thought...\nACTION: MEASURE-A-P"),
                              ActionLabeling::builtin_a());
  EXPECT_EQ(p.action, Action::measure(PointPair(KeyPoint::A, KeyPoint::P)));
  EXPECT_EQ(p.warnings.size(), 1u);
  EXPECT_EQ(p.rationale, "ACTION: EXIT\nOn second thought...");
}

TEST(ResponseCache, Counters) {
  ResponseCache cache;
  EXPECT_EQ(cache.stats(), (CacheStats{0, 0, 0}));
  EXPECT_FALSE(cache.lookup("k"));
  cache.store("k", request(), text("a"));
  EXPECT_EQ(cache.lookup("k")->text, "a");
  EXPECT_EQ(cache.stats(), (CacheStats{1, 1, 1}));
  cache.store("k", request(), text("b"));  // entries are immutable
  EXPECT_EQ(cache.lookup("k")->text, "a");
  cache.clear();
  EXPECT_EQ(cache.stats(), (CacheStats{0, 0, 0}));
}

TEST(ResponseCache, PersistsAcrossInstances) {
  TempDir dir;
  const GenerationResponse r{"line one\nACTION: EXIT \"quoted\"", "length", 42, 100, 7};
  {
    ResponseCache cache(dir.path());
    cache.store("k1", request(), r);
    cache.store("k2", request(1), text("x"));
  }
  ResponseCache reopened(dir.path());
  EXPECT_EQ(reopened.size(), 2u);
  EXPECT_EQ(reopened.lookup("k1"), r);
  EXPECT_EQ(inspect_cache(dir.path()).entries, 2);
  EXPECT_EQ(inspect_cache(dir.path() / "missing").entries, 0);
  reopened.clear();
  EXPECT_EQ(ResponseCache(dir.path()).size(), 0u);
}

TEST(ResponseCache, IgnoresTornTrailingLine) {
  TempDir dir;
  {
    ResponseCache cache(dir.path());
    cache.store("k1", request(), text("x"));
  }
  std::ofstream(dir.path() / kCacheFileName, std::ios::app) << "{\"key\": \"k2\", \"resp";
  {
    ResponseCache recovered(dir.path());
    EXPECT_EQ(recovered.size(), 1u);
    recovered.store("k3", request(2), text("z"));
  }
  ResponseCache reopened(dir.path());
  EXPECT_EQ(reopened.size(), 2u);
  EXPECT_EQ(reopened.lookup("k3")->text, "z");
  // Damage before the last line is still an error.
  std::ofstream(dir.path() / kCacheFileName, std::ios::app) << "garbage\n{}\n";
  EXPECT_THROW(ResponseCache{dir.path()}, ConfigError);
}

TEST(Generator, CacheHitsSkipTheBackend) {
  CountingBackend backend;
  ResponseCache cache;
  Generator gen(backend, &cache, 2);
  const auto first = gen.generate(request());
  const auto second = gen.generate(request());
  EXPECT_EQ(first, second);
  EXPECT_EQ(backend.calls, 1);
  EXPECT_EQ(gen.backend_calls(), 1);
  EXPECT_EQ(cache.stats(), (CacheStats{1, 1, 1}));
  gen.generate(request(1));
  EXPECT_EQ(backend.calls, 2);
}

TEST(Generator, CacheIsTransparent) {
  CountingBackend a, b;
  ResponseCache cache;
  Generator with(a, &cache), without(b);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(with.generate(request(i)), without.generate(request(i)));
}

TEST(Generator, ConcurrentIdenticalRequestsShareOneCall) {
  CountingBackend backend(std::chrono::milliseconds(50));
  Generator gen(backend, nullptr, 4);
  std::vector<std::thread> threads;
  std::vector<GenerationResponse> out(8);
  for (int i = 0; i < 8; ++i) threads.emplace_back([&, i] { out[i] = gen.generate(request()); });
  for (auto& t : threads) t.join();
  EXPECT_EQ(backend.calls, 1);
  for (const auto& r : out) EXPECT_EQ(r, out[0]);
}

TEST(Generator, ParallelismBoundsBackendCalls) {
  CountingBackend backend(std::chrono::milliseconds(10));
  Generator gen(backend, nullptr, 2);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) threads.emplace_back([&, i] { gen.generate(request(i)); });
  for (auto& t : threads) t.join();
  EXPECT_EQ(backend.calls, 8);
  EXPECT_LE(backend.peak, 2);
}

TEST(Generator, ErrorsPropagateAndAreNotCached) {
  CountingBackend backend;
  ResponseCache cache;
  Generator gen(backend, &cache);
  backend.fail = true;
  EXPECT_THROW(gen.generate(request()), BackendUnavailable);
  backend.fail = false;
  backend.empty = true;
  EXPECT_THROW(gen.generate(request()), MalformedResponse);
  EXPECT_EQ(cache.size(), 0u);
  backend.empty = false;
  EXPECT_NO_THROW(gen.generate(request()));
  EXPECT_EQ(cache.size(), 1u);
}
