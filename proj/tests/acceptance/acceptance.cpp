// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "hypmix/config.hpp"
#include "hypmix/errors.hpp"
#include "hypmix/experiment.hpp"
#include "hypmix/remote_backend.hpp"
#include "hypmix/response_cache.hpp"
#include "hypmix/stats.hpp"
#include "hypmix/synthetic_policy.hpp"
#include "support/golden_prompts.hpp"
#include "support/oracles.hpp"
#include "support/stub_server.hpp"

using namespace hypmix;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

const Catalog& catalog() {
  static const auto c = Catalog::builtin();
  return c;
}

const EnvironmentSpec& env() {
  static const auto e = EnvironmentSpec::builtin();
  return e;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome stats_oracles() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  double worst_rho = 0;
  for (int i = 0; i < 50; ++i) {
    const int n = std::uniform_int_distribution<int>(3, 30)(rng);
    const bool ties = i % 2 == 0;
    std::vector<double> x(n), y(n);
    for (int k = 0; k < n; ++k) {
      x[k] = ties ? std::uniform_int_distribution<int>(0, 4)(rng) : std::uniform_real_distribution<double>()(rng);
      y[k] = ties ? std::uniform_int_distribution<int>(0, 4)(rng) : std::uniform_real_distribution<double>()(rng);
    }
    if (std::adjacent_find(x.begin(), x.end(), std::not_equal_to<>()) == x.end()) x[0] += 1;
    if (std::adjacent_find(y.begin(), y.end(), std::not_equal_to<>()) == y.end()) y[0] += 1;
    worst_rho = std::max(worst_rho, std::abs(stats::spearman_rho(x, y) - oracle::spearman(x, y)));
  }

  int exact_mismatches = 0, exact_checked = 0;
  for (int n = 3; n <= 9; ++n) {
    const std::int64_t max_d2 = static_cast<std::int64_t>(n) * (static_cast<std::int64_t>(n) * n - 1) / 3;
    for (std::int64_t d2 = 0; d2 <= max_d2; d2 += 2) {
      const auto expected = oracle::permutation_counts(d2, n);
      const auto got = stats::spearman_exact_count(oracle::rho_from_d2(d2, n), n);
      ++exact_checked;
      if (got.count != expected.two_sided || got.total != expected.total) ++exact_mismatches;
    }
  }

  double worst_chi2 = 0;
  for (double x = 0.1; x <= 50.0 + 1e-9; x += 0.1) {
    worst_chi2 = std::max(worst_chi2, std::abs(stats::chi2_sf(x, 2) - std::exp(-x / 2)));
  }
  const double crit = stats::chi2_sf(3.841459, 1);
  const double cauchy = stats::student_t_sf(1, 1);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  Outcome o;
  o.pass = worst_rho <= 1e-12 && exact_mismatches == 0 && worst_chi2 <= 1e-10 && std::abs(crit - 0.05) <= 5e-5 &&
           std::abs(cauchy - 0.25) <= 1e-10 && secs < 10;
  o.detail = "max|rho-oracle|=" + fmt("%.1e", worst_rho) + " exact " + std::to_string(exact_checked - exact_mismatches) +
             "/" + std::to_string(exact_checked) + " max|chi2_sf(x,2)-e^(-x/2)|=" + fmt("%.1e", worst_chi2) +
             " chi2_sf(3.841459,1)=" + fmt("%.6f", crit) + " t_sf(1,1)=" + fmt("%.12f", cauchy) + " " +
             fmt("%.2fs", secs);
  return o;
}

Outcome truth_tables() {
  struct Row {
    double rho, p;
    bool expected;
  };
  // Increasing direction, alpha 0.05: satisfied iff rho > 0 and p <= alpha.
  const Row mono[] = {{0.7, 0.01, true},   {0.7, 0.05, true},   {0.7, 0.20, false},
                      {0.0, 0.01, false},  {0.0, 0.05, false},  {0.0, 0.20, false},
                      {-0.7, 0.01, false}, {-0.7, 0.05, false}, {-0.7, 0.20, false}};
  int ok = 0;
  for (const auto& r : mono) {
    ok += t_mono(r.rho, r.p, Direction::Increasing) == r.expected;
    ok += t_mono(-r.rho, r.p, Direction::Decreasing) == r.expected;
  }
  // Satisfied iff p > alpha.
  const std::pair<double, bool> uniform[] = {{0.049, false}, {0.05, false}, {0.051, true}};
  for (const auto& [p, expected] : uniform) ok += t_uniform(p) == expected;
  return {ok == 21, std::to_string(ok) + "/21 truth-table cells"};
}

ExperimentPlan power_plan(const std::string& hypothesis, std::vector<int> levels, int states, int samples,
                          std::uint64_t seed) {
  ExperimentPlan p;
  p.hypothesis_ids = {hypothesis};
  p.sweep_characteristic = "geometry_proficiency";
  p.levels = std::move(levels);
  p.states_per_level = states;
  p.samples_per_state = samples;
  p.labelings = {"A"};
  p.seed = seed;
  p.parallelism = 1;
  return p;
}

// Replications of one hypothesis under a synthetic policy; returns how many
// evaluated satisfied.
int replications_satisfied(const SyntheticPolicy& policy, const std::string& hypothesis, std::vector<int> levels,
                           int states, int samples, int* min_in_set = nullptr) {
  const auto model = make_model(catalog(), {hypothesis});
  const MDHyp& hyp = *catalog().find_hypothesis(hypothesis);
  int satisfied = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    SyntheticBackend backend(policy);
    Generator gen(backend, nullptr, 1);
    RunContext ctx{gen, env(), catalog().registry, nullptr};
    const auto plan = power_plan(hypothesis, levels, states, samples, seed);
    const auto table = aggregate(run(plan, model, ctx));
    const auto results = evaluate_model(model, table, catalog().registry, plan.evaluation);
    satisfied += !results.empty() && results.front().result.satisfied;
    if (min_in_set) {
      std::int64_t in_set = 0;
      for (const auto& cell : table.sweep("geometry_proficiency", "A")) {
        for (auto a : hyp.action_set) in_set += cell.counts[a.index()];
      }
      *min_in_set = seed == 1 ? static_cast<int>(in_set) : std::min<int>(*min_in_set, static_cast<int>(in_set));
    }
  }
  return satisfied;
}

Outcome monotone_power() {
  const auto start = std::chrono::steady_clock::now();
  std::vector<double> q;
  for (int l = 1; l <= 10; ++l) q.push_back(0.30 + 0.05 * l);
  const auto rising = group_probability_policy(productive_measurement_set(), "geometry_proficiency", q);
  const std::vector<int> levels{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const int power = replications_satisfied(rising, "H_G1", levels, 20, 10);
  const int flat = replications_satisfied(uniform_policy(), "H_G1", levels, 20, 10);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {power >= 95 && flat <= 10 && secs < 120,
          "rising " + std::to_string(power) + "/100 (need >=95), flat " + std::to_string(flat) +
              "/100 (need <=10), " + fmt("%.1fs", secs)};
}

Outcome uniform_power() {
  const auto start = std::chrono::steady_clock::now();
  int min_in_set = 0;
  const int uniform = replications_satisfied(uniform_policy(), "H_G2", {1}, 20, 7, &min_in_set);
  const auto skewed = group_probability_policy({Action::measure(PointPair(KeyPoint::F1, KeyPoint::X)).category},
                                               "geometry_proficiency", std::vector<double>(10, 0.8));
  const int skew = replications_satisfied(skewed, "H_G2", {1}, 20, 7);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {uniform >= 93 && uniform <= 97 && skew <= 1 && min_in_set >= 100 && secs < 60,
          "uniform " + std::to_string(uniform) + "/100 (need 93-97), skewed " + std::to_string(skew) +
              "/100 (need <=1), min in-set samples " + std::to_string(min_in_set) + ", " + fmt("%.1fs", secs)};
}

CalibrationReport bundle_report(const fs::path& path) {
  const auto b = load_bundle(path);
  const auto graph = edit_graph_from_json(*b.edit_graph, b.catalog);
  SyntheticBackend backend(b.policy);
  Generator gen(backend, nullptr, b.plan.parallelism);
  RunContext ctx{gen, b.environment, b.catalog.registry, nullptr};
  return run_edit_graph(graph, b.plan, ctx);
}

Outcome edit_graph_end_to_end() {
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir = fs::path(HYPMIX_SOURCE_DIR) / "configs" / "holoorbits";
  const auto hold = bundle_report(dir / "hypmix.json");
  const auto again = bundle_report(dir / "hypmix.json");
  const auto flat = bundle_report(dir / "hypmix_flatten.json");
  int holds = 0;
  for (const auto& r : hold.rows) holds += r.classification == Classification::Hold;
  int combine_rows = 0, combine_lost = 0, other_lost = 0;
  for (const auto& r : flat.rows) {
    const bool is_combine = r.operation == "Combine";
    combine_rows += is_combine;
    if (r.classification == Classification::Lost) (is_combine ? combine_lost : other_lost)++;
  }
  bool verdicts_hold = hold.verdicts.size() == 5;
  for (const auto& [edge, v] : hold.verdicts) verdicts_hold = verdicts_hold && v == Classification::Hold;
  const bool deterministic = render_tsv(hold) == render_tsv(again);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {hold.rows.size() == 15 && holds == 15 && verdicts_hold && combine_rows > 0 && combine_lost == combine_rows &&
              other_lost == 0 && deterministic && secs < 120,
          "monotone " + std::to_string(holds) + "/" + std::to_string(hold.rows.size()) + " Hold; flatten Lost " +
              std::to_string(combine_lost) + "/" + std::to_string(combine_rows) + " Combine rows, " +
              std::to_string(other_lost) + " other; deterministic=" + (deterministic ? "yes" : "no") + ", " +
              fmt("%.1fs", secs)};
}

Outcome golden_prompts() {
  int ok = 0, total = 0;
  for (const auto& c : golden::cases()) {
    ++total;
    const auto path = golden::directory() / c.file_name();
    if (!fs::exists(path)) continue;
    const auto prompt = golden::compose_case(c);
    const bool same = golden::read_file(path) == prompt.rendered;
    const bool has_sentence =
        prompt.rendered.find(golden::table_sentence(c.hypothesis, env().labeling(c.labeling))) != std::string::npos;
    ok += same && has_sentence;
  }
  return {ok == total && total == 12, std::to_string(ok) + "/" + std::to_string(total) + " prompts match"};
}

Outcome labeling_round_trip() {
  int ok = 0;
  for (const auto* l : {&ActionLabeling::builtin_a(), &ActionLabeling::builtin_b(), &ActionLabeling::builtin_c()}) {
    for (auto c : canonical_actions()) {
      const Action a = c == ActionCategory::submit() ? Action::submit("f1-x + f2-x", "a-p", "f1-f2")
                       : c == ActionCategory::exit() ? Action::exit()
                                                     : Action::measure(c.pair());
      try {
        ok += parse_surface(surface_label(a, *l), *l) == a;
      } catch (const Error&) {
      }
    }
  }
  return {ok == 36, std::to_string(ok) + "/36 round trips"};
}

Outcome cache_replay() {
  const fs::path cache_dir =
      fs::temp_directory_path() /
      ("hypmix_acceptance_" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));

  std::vector<GraphNode> roots{{"g1", make_model(catalog(), {"H_G1"})}, {"g2", make_model(catalog(), {"H_G2"})}};
  const auto graph = EditGraph::build(
      roots,
      {{"append", "Append", "g1", "g1p1", edit::Append{"H_P1"}, "", std::nullopt},
       {"combine", "Combine", "g2", "g2g1", edit::Combine{}, "g1", std::vector<std::pair<std::string, std::string>>{
                                                                    {"H_G2", "H_G2"}}}},
      catalog());
  ExperimentPlan plan;
  plan.levels = {1, 2, 3};
  plan.states_per_level = 10;
  plan.samples_per_state = 2;
  plan.parallelism = 2;
  plan.seed = 5;

  RemoteConfig rc;
  rc.api_key_env = "HYPMIX_ACCEPTANCE_API_KEY";
  rc.max_retries = 0;
  rc.timeout = std::chrono::seconds(5);

  std::string recorded_tsv, recorded_json;
  std::int64_t recorded_calls = 0;
  {
    stub::ChatServer server;
    rc.base_url = server.base_url();
    RemoteBackend backend(rc);
    ResponseCache cache(cache_dir);
    Generator gen(backend, &cache, plan.parallelism);
    RunContext ctx{gen, env(), catalog().registry, nullptr};
    const auto rep = run_edit_graph(graph, plan, ctx);
    recorded_tsv = render_tsv(rep);
    recorded_json = report_to_json(rep).dump();
    recorded_calls = backend.network_calls();
    server.stop();
  }

  RemoteBackend backend(rc);  // endpoint is down now
  ResponseCache cache(cache_dir);
  Generator gen(backend, &cache, plan.parallelism);
  RunContext ctx{gen, env(), catalog().registry, nullptr};
  std::string replay_tsv, replay_json, error;
  try {
    const auto rep = run_edit_graph(graph, plan, ctx);
    replay_tsv = render_tsv(rep);
    replay_json = report_to_json(rep).dump();
  } catch (const std::exception& e) {
    error = e.what();
  }
  const auto s = cache.stats();
  fs::remove_all(cache_dir);

  const bool identical = error.empty() && replay_tsv == recorded_tsv && replay_json == recorded_json;
  return {recorded_calls > 0 && identical && backend.network_calls() == 0 && s.misses == 0,
          "recorded " + std::to_string(recorded_calls) + " calls; replay " + std::to_string(backend.network_calls()) +
              " network calls, " + std::to_string(s.misses) + " misses, " + std::to_string(s.hits) +
              " hits, report identical=" + (identical ? "yes" : "no") + (error.empty() ? "" : " (" + error + ")")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"statistics oracle equivalence", stats_oracles},
      {"success-criterion truth tables", truth_tables},
      {"monotone statistical power", monotone_power},
      {"uniform statistical power", uniform_power},
      {"edit-graph end to end", edit_graph_end_to_end},
      {"prompt golden files", golden_prompts},
      {"labeling round trip", labeling_round_trip},
      {"cache replay", cache_replay},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "criterion " << i + 1 << " (" << criteria[i].first << "): " << (o.pass ? "PASS" : "FAIL") << " — "
              << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
