// Command-line front end. Exit codes: 0 success, 1 calibration lost,
// 2 configuration error, 3 backend error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "hypmix/config.hpp"
#include "hypmix/errors.hpp"
#include "hypmix/experiment.hpp"
#include "hypmix/llm_backend.hpp"
#include "hypmix/remote_backend.hpp"
#include "hypmix/response_cache.hpp"
#include "hypmix/synthetic_policy.hpp"

namespace {

using namespace hypmix;

constexpr int kExitOk = 0;
constexpr int kExitLost = 1;
constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;

struct Options {
  std::string config = "hypmix.json";
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::string labelings;
  std::string backend;
  std::string cache_dir;
  std::string out;
  std::string records;
  std::string input;
  std::string format = "text";
  std::string output;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Bundle with command-line overrides applied.
Bundle load(const Options& o) {
  Bundle b = load_bundle(o.config);
  if (o.seed) b.plan.seed = *o.seed;
  if (o.alpha) b.plan.evaluation.alpha = *o.alpha;
  if (!o.labelings.empty()) b.plan.labelings = split_list(o.labelings);
  if (!o.backend.empty()) {
    if (o.backend != "synthetic" && o.backend != "remote") throw ConfigError("--backend must be synthetic or remote");
    b.backend = o.backend;
  }
  if (const char* env = std::getenv(kCacheDirEnv); env && *env) b.cache_dir = env;
  if (!o.cache_dir.empty()) b.cache_dir = o.cache_dir;
  if (!o.out.empty()) b.out_dir = o.out;
  return b;
}

struct Engine {
  std::unique_ptr<Backend> backend;
  std::unique_ptr<ResponseCache> cache;
  std::unique_ptr<Generator> generator;
};

Engine make_engine(const Bundle& b) {
  Engine e;
  if (b.backend == "remote") {
    e.backend = std::make_unique<RemoteBackend>(b.remote);
  } else {
    e.backend = std::make_unique<SyntheticBackend>(b.policy);
  }
  e.cache = b.cache_dir ? std::make_unique<ResponseCache>(*b.cache_dir) : std::make_unique<ResponseCache>();
  e.generator = std::make_unique<Generator>(*e.backend, e.cache.get(), b.plan.parallelism);
  return e;
}

const LearnerModel& require_model(const Bundle& b) {
  if (!b.learner_model) throw ConfigError(b.path.string() + " has no learner_model");
  return *b.learner_model;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

void print_cache_line(const Engine& e) {
  const auto s = e.cache->stats();
  std::cout << "backend calls: " << e.generator->backend_calls() << "  cache hits: " << s.hits
            << "  misses: " << s.misses << "  entries: " << s.entries << '\n';
}

int cmd_validate(const Options& o) {
  const Bundle b = load(o);
  std::vector<std::string> problems = validate_catalog(b.catalog);
  if (b.learner_model) {
    for (const auto& v : validate(*b.learner_model)) problems.push_back("learner model: " + v.to_string());
    if (problems.empty()) {
      for (const auto& p : validate_plan(b.plan, *b.learner_model, b.environment)) problems.push_back("plan: " + p);
    }
  }
  if (b.edit_graph) {
    try {
      const auto graph = edit_graph_from_json(*b.edit_graph, b.catalog);
      for (const auto& n : graph.nodes()) {
        for (const auto& v : validate(n.model)) problems.push_back("edit graph node " + n.id + ": " + v.to_string());
      }
    } catch (const ConfigError& e) {
      problems.push_back(e.what());
    }
  }
  for (const auto& p : problems) std::cout << "violation: " << p << '\n';
  if (!problems.empty()) {
    std::cout << problems.size() << " violation(s)\n";
    return kExitConfig;
  }
  std::cout << "ok\n";
  return kExitOk;
}

int cmd_run(const Options& o) {
  const Bundle b = load(o);
  const LearnerModel& model = require_model(b);
  if (auto v = validate(model); !v.empty()) throw ConfigError("learner model: " + v.front().to_string());
  Engine e = make_engine(b);

  const auto records_path = o.records.empty() ? b.out_dir / "records.jsonl" : std::filesystem::path(o.records);
  if (records_path.has_parent_path()) std::filesystem::create_directories(records_path.parent_path());
  std::ofstream sink_file(records_path, std::ios::binary | std::ios::trunc);
  if (!sink_file) throw ConfigError("cannot write " + records_path.string());

  RunContext ctx{*e.generator, b.environment, b.catalog.registry,
                 [&](const RunRecord& r) { sink_file << record_to_json(r).dump() << '\n'; }};
  std::vector<RunRecord> records;
  try {
    records = run(b.plan, model, ctx);
  } catch (const BackendUnavailable&) {
    sink_file.flush();
    print_cache_line(e);
    throw;
  }
  sink_file.close();

  const auto table = aggregate(records);
  std::cout << "swept\tlabeling\tlevel\tsamples\tdropped\tdrop_rate\n";
  for (const auto& [key, cell] : table.cells()) {
    char rate[16];
    std::snprintf(rate, sizeof rate, "%.3f", cell.drop_rate());
    std::cout << key.swept << '\t' << key.labeling << '\t' << key.level << '\t' << cell.total() << '\t'
              << cell.dropped << '\t' << rate << '\n';
  }
  std::cout << records.size() << " records written to " << records_path.string() << '\n';
  print_cache_line(e);
  return kExitOk;
}

int cmd_evaluate(const Options& o) {
  const Bundle b = load(o);
  const LearnerModel& model = require_model(b);
  const auto records_path = o.records.empty() ? b.out_dir / "records.jsonl" : std::filesystem::path(o.records);
  const auto records = read_records(records_path);
  const auto table = aggregate(records);
  const auto results = evaluate_model(model, table, b.catalog.registry, b.plan.evaluation);

  json out = json::array();
  std::cout << "hypothesis\tlabeling\ttest\tstatistic\tp_value\tsatisfied\n";
  for (const auto& r : results) {
    char stat[32], p[32];
    std::snprintf(stat, sizeof stat, "%.6g", r.result.statistic);
    std::snprintf(p, sizeof p, "%.6g", r.result.p_value);
    std::cout << r.hypothesis << '\t' << r.labeling << '\t' << to_string(r.result.kind) << '\t' << stat << '\t' << p
              << '\t' << (r.result.satisfied ? "yes" : "no") << (r.result.flagged ? "\t(drop rate too high)" : "")
              << '\n';
    json j = test_result_to_json(r.result);
    j["hypothesis"] = r.hypothesis;
    j["labeling"] = r.labeling;
    out.push_back(j);
  }
  // Informational trend checks over the state variable, per labeling at the
  // middle of the grid.
  for (const MDHyp* h : model.hypotheses()) {
    if (!h->trend_variable || b.plan.levels.empty()) continue;
    const int level = b.plan.levels[b.plan.levels.size() / 2];
    for (const auto& lid : table.labelings()) {
      try {
        const auto t = evaluate_trend(*h, records, lid, level);
        std::cout << "trend " << h->id << '\t' << lid << "\trho=" << t.statistic << "\tp=" << t.p_value << "\t("
                  << t.note << ")\n";
      } catch (const InsufficientData&) {
      }
    }
  }
  write_file(b.out_dir / "evaluation.json", out.dump(2) + "\n");
  return kExitOk;
}

int cmd_edit_graph(const Options& o) {
  const Bundle b = load(o);
  if (!b.edit_graph) throw ConfigError(b.path.string() + " has no edit_graph");
  const auto graph = edit_graph_from_json(*b.edit_graph, b.catalog);
  Engine e = make_engine(b);
  RunContext ctx{*e.generator, b.environment, b.catalog.registry, nullptr};

  const auto rep = run_edit_graph(graph, b.plan, ctx, [](const GraphEdge& edge) {
    std::cerr << "edge " << edge.id << " (" << describe(edge.op) << ")\n";
  });
  write_file(b.out_dir / "report.json", report_to_json(rep).dump(2) + "\n");
  write_file(b.out_dir / "report.tsv", render_tsv(rep));
  write_file(b.out_dir / "report.txt", render_text(rep));
  std::cout << render_text(rep);
  print_cache_line(e);
  return rep.any_lost() ? kExitLost : kExitOk;
}

int cmd_report(const Options& o) {
  std::filesystem::path input = o.input;
  if (input.empty()) input = load(o).out_dir / "report.json";
  const auto rep = report_from_json(read_json_file(input));
  std::string text;
  if (o.format == "tsv") {
    text = render_tsv(rep);
  } else if (o.format == "text") {
    text = render_text(rep);
  } else {
    throw ConfigError("--format must be tsv or text");
  }
  if (o.output.empty()) {
    std::cout << text;
  } else {
    write_file(o.output, text);
  }
  return rep.any_lost() ? kExitLost : kExitOk;
}

std::filesystem::path cache_dir_for(const Options& o) {
  if (!o.cache_dir.empty()) return o.cache_dir;
  if (const char* env = std::getenv(kCacheDirEnv); env && *env) return env;
  const Bundle b = load(o);
  if (!b.cache_dir) throw ConfigError("no cache directory: pass --cache-dir, set HYPMIX_CACHE_DIR, or set cache_dir");
  return *b.cache_dir;
}

int cmd_cache_stats(const Options& o) {
  const auto dir = cache_dir_for(o);
  const auto s = inspect_cache(dir);
  std::cout << "cache: " << (dir / kCacheFileName).string() << "\nentries: " << s.entries << '\n';
  return kExitOk;
}

int cmd_cache_clear(const Options& o) {
  const auto dir = cache_dir_for(o);
  ResponseCache cache(dir);
  const auto n = cache.size();
  cache.clear();
  std::cout << "removed " << n << " entries from " << (dir / kCacheFileName).string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated-learner hypothesis testing and prompt calibration checks"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("-c,--config", o.config, "Bundle file")->capture_default_str();
  app.add_option("--seed", o.seed, "Override the plan seed");
  app.add_option("--alpha", o.alpha, "Override the significance level")->check(CLI::Range(0.0, 1.0));
  app.add_option("--labelings", o.labelings, "Comma-separated labeling ids, e.g. A,B,C");
  app.add_option("--backend", o.backend, "synthetic or remote");
  app.add_option("--cache-dir", o.cache_dir, "Response cache directory (overrides HYPMIX_CACHE_DIR)");
  app.add_option("--out", o.out, "Output directory");

  auto* validate_cmd = app.add_subcommand("validate", "Check every configured file and print violations");
  auto* run_cmd = app.add_subcommand("run", "Run the plan against the learner model and write run records");
  run_cmd->add_option("--records", o.records, "Record file (default <out>/records.jsonl)");
  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate the learner model's hypotheses on recorded runs");
  eval_cmd->add_option("--records", o.records, "Record file (default <out>/records.jsonl)");
  auto* graph_cmd = app.add_subcommand("edit-graph", "Run every edge of the edit graph and write the report");
  auto* report_cmd = app.add_subcommand("report", "Render a saved calibration report");
  report_cmd->add_option("--input", o.input, "report.json (default <out>/report.json)");
  report_cmd->add_option("--format", o.format, "tsv or text")->capture_default_str();
  report_cmd->add_option("--output", o.output, "Write to a file instead of stdout");
  auto* cache_cmd = app.add_subcommand("cache", "Inspect or clear the response cache");
  cache_cmd->require_subcommand(1);
  cache_cmd->fallthrough();
  auto* stats_cmd = cache_cmd->add_subcommand("stats", "Print the number of cached responses");
  auto* clear_cmd = cache_cmd->add_subcommand("clear", "Delete every cached response");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*validate_cmd) return cmd_validate(o);
    if (*run_cmd) return cmd_run(o);
    if (*eval_cmd) return cmd_evaluate(o);
    if (*graph_cmd) return cmd_edit_graph(o);
    if (*report_cmd) return cmd_report(o);
    if (*stats_cmd) return cmd_cache_stats(o);
    if (*clear_cmd) return cmd_cache_clear(o);
  } catch (const BackendUnavailable& e) {
    std::cerr << "backend error: " << e.what() << '\n';
    return kExitBackend;
  } catch (const RateLimited& e) {
    std::cerr << "backend error: " << e.what() << '\n';
    return kExitBackend;
  } catch (const MalformedResponse& e) {
    std::cerr << "backend error: " << e.what() << '\n';
    return kExitBackend;
  } catch (const hypmix::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
