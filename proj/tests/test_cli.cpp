#include <gtest/gtest.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hypmix/config.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hypmix_cli_" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    fs::create_directories(dir_);
    for (const auto& e : fs::directory_iterator(fs::path(HYPMIX_SOURCE_DIR) / "configs" / "holoorbits")) {
      if (e.is_regular_file()) fs::copy_file(e.path(), dir_ / e.path().filename());
    }
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result cli(const std::string& args) const {
    const auto out = dir_ / "stdout.txt";
    const std::string cmd = "cd '" + dir_.string() + "' && env -u HYPMIX_CACHE_DIR '" + HYPMIX_CLI_PATH + "' " + args +
                            " > '" + out.string() + "' 2> '" + (dir_ / "stderr.txt").string() + "'";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read(out);
    return r;
  }

  static std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void write(const std::string& name, const std::string& text) const { std::ofstream(dir_ / name) << text; }

  static int lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, ValidateAcceptsTheShippedBundle) {
  const auto r = cli("--config hypmix.json validate");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("ok"), std::string::npos);
}

TEST_F(CliTest, ValidateReportsViolations) {
  write("learner_model.json", R"({"hypotheses": ["H_G1"], "persona": {"geometry_proficiency": 0}})");
  auto r = cli("--config hypmix.json validate");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("[1, 10]"), std::string::npos) << r.out;

  auto h = hypmix::read_json_file(dir_ / "hypotheses.json");
  h["hypotheses"][0]["class"] = "nonexistent";
  write("hypotheses.json", h.dump());
  write("learner_model.json", R"({"hypotheses": ["H_G1"]})");
  r = cli("--config hypmix.json validate");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("nonexistent"), std::string::npos) << r.out;
}

TEST_F(CliTest, BadArgumentsAndMissingFilesExitTwo) {
  EXPECT_EQ(cli("--config missing.json validate").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  EXPECT_EQ(cli("--config hypmix.json report --input nowhere.json").code, 2);
}

TEST_F(CliTest, RunWritesRecordsAndReplaysFromCache) {
  auto r = cli("--config hypmix.json --cache-dir cache run");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto records = read(dir_ / "out" / "records.jsonl");
  EXPECT_EQ(lines(records), 3000);
  EXPECT_NE(r.out.find("backend calls: 3000"), std::string::npos) << r.out;

  r = cli("--config hypmix.json --cache-dir cache run");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("backend calls: 0  cache hits: 3000  misses: 0"), std::string::npos) << r.out;
  EXPECT_EQ(read(dir_ / "out" / "records.jsonl"), records);

  r = cli("--config hypmix.json --cache-dir cache cache stats");
  EXPECT_NE(r.out.find("entries: 3000"), std::string::npos) << r.out;
  EXPECT_EQ(cli("--config hypmix.json --cache-dir cache cache clear").code, 0);
  EXPECT_NE(cli("--config hypmix.json --cache-dir cache cache stats").out.find("entries: 0"), std::string::npos);

  r = cli("--config hypmix.json evaluate");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("H_G1\tA\tmonotonic"), std::string::npos) << r.out;
}

TEST_F(CliTest, UnreachableBackendExitsThree) {
  auto b = hypmix::read_json_file(dir_ / "hypmix_remote.json");
  b["backend"]["base_url"] = "http://127.0.0.1:9/v1";
  b["backend"]["max_retries"] = 0;
  b["backend"]["timeout_s"] = 2;
  write("bad_remote.json", b.dump());
  EXPECT_EQ(cli("--config bad_remote.json run").code, 3);
}

TEST_F(CliTest, EditGraphHoldsAndReportRerendersIdentically) {
  auto r = cli("--config hypmix.json edit-graph");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto tsv = read(dir_ / "out" / "report.tsv");
  EXPECT_EQ(lines(tsv), 16);
  EXPECT_EQ(tsv.find("\tLost\t"), std::string::npos);

  r = cli("--config hypmix.json report --format tsv");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, tsv);
  r = cli("--config hypmix.json report --format text");
  EXPECT_EQ(r.out, read(dir_ / "out" / "report.txt"));
  for (const char* col : {"Operation", "Pre p", "Post p", "Classification", "Edge verdicts:"}) {
    EXPECT_NE(r.out.find(col), std::string::npos) << col;
  }
}

TEST_F(CliTest, FlattenedCombineExitsOne) {
  const auto r = cli("--config hypmix_flatten.json edit-graph");
  ASSERT_EQ(r.code, 1) << r.out;
  const auto tsv = read(dir_ / "out_flatten" / "report.tsv");
  std::istringstream in(tsv);
  std::string line;
  std::getline(in, line);
  int lost = 0;
  while (std::getline(in, line)) {
    const bool is_lost = line.find("\tLost\t") != std::string::npos;
    EXPECT_EQ(is_lost, line.rfind("combine\t", 0) == 0) << line;
    lost += is_lost;
  }
  EXPECT_EQ(lost, 3);
}

TEST_F(CliTest, EmptyGraphPrintsHeaderOnly) {
  write("empty_graph.json", R"({"nodes": [], "edges": []})");
  auto b = hypmix::read_json_file(dir_ / "hypmix.json");
  b["edit_graph"] = "empty_graph.json";
  b["out"] = "out_empty";
  write("empty.json", b.dump());
  const auto r = cli("--config empty.json edit-graph");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(lines(read(dir_ / "out_empty" / "report.tsv")), 1);
}
