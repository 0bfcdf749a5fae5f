#include "hypmix/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "hypmix/errors.hpp"
#include "hypmix/hashing.hpp"
#include "hypmix/random.hpp"

namespace hypmix {
namespace {

std::uint64_t label_hash(const std::string& id) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (unsigned char c : id) h = splitmix64(h ^ c);
  return h;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

bool is_parse_failure(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const NoActionLine&) {
    return true;
  } catch (const UnrecognizedAction&) {
    return true;
  } catch (...) {
    return false;
  }
}

struct Task {
  std::string swept;
  int level;
  const ActionLabeling* labeling;
  std::uint64_t labeling_hash;
  int state_index;
  const EnvState* state;
  int sample_index;
};

std::vector<const MDHyp*> hypotheses_under_test(const ExperimentPlan& plan, const LearnerModel& model) {
  std::vector<const MDHyp*> out;
  for (const MDHyp* h : model.hypotheses()) {
    if (plan.hypothesis_ids.empty() ||
        std::find(plan.hypothesis_ids.begin(), plan.hypothesis_ids.end(), h->id) != plan.hypothesis_ids.end()) {
      out.push_back(h);
    }
  }
  return out;
}

}  // namespace

std::size_t ExperimentPlan::expected_records(std::size_t sweeps) const {
  return sweeps * labelings.size() * levels.size() * static_cast<std::size_t>(states_per_level) *
         static_cast<std::size_t>(samples_per_state);
}

std::vector<std::string> validate_plan(const ExperimentPlan& plan, const LearnerModel& model,
                                       const EnvironmentSpec& env) {
  std::vector<std::string> problems;
  if (plan.states_per_level < 1) problems.push_back("states_per_level must be positive");
  if (plan.samples_per_state < 1) problems.push_back("samples_per_state must be positive");
  if (plan.parallelism < 1) problems.push_back("parallelism must be positive");
  if (plan.failure_budget < 0) problems.push_back("failure_budget must be non-negative");
  if (plan.max_tokens < 1) problems.push_back("max_tokens must be positive");
  if (!(plan.temperature >= 0.0)) problems.push_back("temperature must be non-negative");
  if (plan.levels.empty()) problems.push_back("level grid is empty");
  std::set<int> seen;
  for (int level : plan.levels) {
    if (level < kMinPersonaLevel || level > kMaxPersonaLevel) {
      problems.push_back("level " + std::to_string(level) + " outside [1, 10]");
    }
    if (!seen.insert(level).second) problems.push_back("level " + std::to_string(level) + " listed twice");
  }
  for (const auto& [id, level] : plan.fixed_levels) {
    if (level < kMinPersonaLevel || level > kMaxPersonaLevel) {
      problems.push_back("fixed level for " + id + " outside [1, 10]");
    }
  }
  if (plan.labelings.empty()) problems.push_back("no labelings selected");
  for (const auto& id : plan.labelings) {
    if (!env.labelings.count(id)) problems.push_back("unknown labeling '" + id + "'");
  }
  for (const auto& id : plan.hypothesis_ids) {
    if (!model.contains(id)) problems.push_back("hypothesis '" + id + "' is not in the learner model");
  }
  if (plan.sweep_characteristic && !model.characteristic(*plan.sweep_characteristic)) {
    problems.push_back("swept characteristic '" + *plan.sweep_characteristic + "' is not in the learner model");
  }
  const auto swept = swept_characteristics(plan, model);
  for (const MDHyp* h : hypotheses_under_test(plan, model)) {
    if (std::find(swept.begin(), swept.end(), h->characteristic) == swept.end()) continue;
    if (h->direction && seen.size() < 3) {
      problems.push_back("monotonic hypothesis " + h->id + " needs a grid of at least 3 levels");
    }
    if (h->spectrum_end) {
      const int extreme = *h->spectrum_end == SpectrumEnd::Low ? kMinPersonaLevel : kMaxPersonaLevel;
      if (!seen.count(extreme)) {
        problems.push_back("uniform hypothesis " + h->id + " needs level " + std::to_string(extreme) + " in the grid");
      }
    }
  }
  if (hypotheses_under_test(plan, model).empty()) problems.push_back("no hypotheses under test");
  return problems;
}

std::map<std::string, int> sweep_persona(const ExperimentPlan& plan, const LearnerModel& model,
                                         const std::string& swept, int level) {
  std::map<std::string, int> persona;
  for (const auto& c : model.characteristics) {
    if (c.id == swept) {
      persona[c.id] = level;
    } else if (auto it = plan.fixed_levels.find(c.id); it != plan.fixed_levels.end()) {
      persona[c.id] = it->second;
    } else {
      persona[c.id] = kDefaultPersonaLevel;
    }
  }
  return persona;
}

std::vector<std::string> swept_characteristics(const ExperimentPlan& plan, const LearnerModel& model) {
  if (plan.sweep_characteristic) return {*plan.sweep_characteristic};
  std::set<std::string> ids;
  for (const MDHyp* h : hypotheses_under_test(plan, model)) ids.insert(h->characteristic);
  return {ids.begin(), ids.end()};
}

std::vector<RunRecord> run(const ExperimentPlan& plan, const LearnerModel& model, RunContext& ctx) {
  if (auto problems = validate_plan(plan, model, ctx.env); !problems.empty()) {
    throw InvalidPlan(join(problems, "; "));
  }
  PromptConfig prompt_config = plan.prompt;
  if (prompt_config.environment_text.empty()) prompt_config.environment_text = ctx.env.description;
  const auto hypothesis_ids = model.hypothesis_ids();

  // States depend only on (seed, level) so every labeling, swept
  // characteristic and model edit sees the same ones.
  std::map<int, std::vector<EnvState>> states;
  for (int level : plan.levels) {
    states[level] = sample_states(static_cast<std::size_t>(plan.states_per_level),
                                  mix_seed(plan.seed, {static_cast<std::uint64_t>(level)}), plan.state_constraints,
                                  ctx.env.domain);
  }

  std::vector<Task> tasks;
  for (const auto& swept : swept_characteristics(plan, model)) {
    for (const auto& lid : plan.labelings) {
      const ActionLabeling& labeling = ctx.env.labeling(lid);
      for (int level : plan.levels) {
        const auto& level_states = states.at(level);
        for (int s = 0; s < plan.states_per_level; ++s) {
          for (int j = 0; j < plan.samples_per_state; ++j) {
            tasks.push_back({swept, level, &labeling, label_hash(lid), s, &level_states[static_cast<std::size_t>(s)],
                             s * plan.samples_per_state + j});
          }
        }
      }
    }
  }

  std::vector<std::optional<RunRecord>> results(tasks.size());
  std::atomic<std::size_t> next{0};
  std::atomic<int> failures{0};
  std::atomic<bool> aborted{false};
  std::mutex error_mutex;
  std::string first_error;

  auto execute = [&](const Task& task) {
    RunRecord rec;
    rec.swept = task.swept;
    rec.level = task.level;
    rec.persona = sweep_persona(plan, model, task.swept, task.level);
    rec.labeling = task.labeling->id();
    rec.state_index = task.state_index;
    rec.state = *task.state;
    rec.sample_index = task.sample_index;
    rec.seed = mix_seed(plan.seed, {task.labeling_hash, static_cast<std::uint64_t>(task.level),
                                    static_cast<std::uint64_t>(task.sample_index)});

    LearnerModel persona_model = model;
    persona_model.persona = rec.persona;
    const auto prompt = compose(persona_model, rec.state, *task.labeling, ctx.registry, prompt_config, rec.seed);

    GenerationRequest request = GenerationRequest::from_prompt(prompt);
    request.model_id = plan.model_id;
    request.temperature = plan.temperature;
    request.max_tokens = plan.max_tokens;
    request.sample_index = rec.sample_index;
    request.seed = rec.seed;
    request.context = SimulationContext{rec.persona, rec.state, *task.labeling, hypothesis_ids};

    for (int attempt = 1; attempt <= 2; ++attempt) {
      rec.attempts = attempt;
      rec.cache_key = cache_key(request);
      GenerationResponse response;
      try {
        response = ctx.generator.generate(request);
      } catch (const Error& e) {
        rec.drop_reason = std::string("backend: ") + e.what();
        if (failures.fetch_add(1) + 1 > plan.failure_budget) {
          std::lock_guard lock(error_mutex);
          if (first_error.empty()) first_error = e.what();
          aborted = true;
        }
        return std::optional<RunRecord>(std::move(rec));
      }
      try {
        auto parsed = parse_action(response, *task.labeling);
        rec.action = std::move(parsed.action);
        rec.warnings = std::move(parsed.warnings);
        rec.drop_reason.clear();
        break;
      } catch (...) {
        auto err = std::current_exception();
        if (!is_parse_failure(err)) throw;
        try {
          std::rethrow_exception(err);
        } catch (const Error& e) {
          rec.drop_reason = std::string("parse: ") + e.what();
        }
        request.prompt += std::string(kFragmentSeparator) + format_reminder();
        request.fingerprint = sha256_hex(request.prompt);
      }
    }
    return std::optional<RunRecord>(std::move(rec));
  };

  auto worker = [&] {
    for (;;) {
      if (aborted) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      results[i] = execute(tasks[i]);
    }
  };

  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(plan.parallelism), tasks.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          worker();
        } catch (...) {
          errors[t] = std::current_exception();
          aborted = true;
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<RunRecord> records;
  records.reserve(results.size());
  for (auto& r : results) {
    if (!r) continue;
    if (ctx.sink) ctx.sink(*r);
    records.push_back(std::move(*r));
  }
  if (aborted) {
    throw BackendUnavailable("run aborted after " + std::to_string(failures.load()) +
                             " backend failures (budget " + std::to_string(plan.failure_budget) + "): " + first_error);
  }
  return records;
}

void AggregateTable::add(const RunRecord& record) {
  auto& cell = cells_[CellKey{record.swept, record.labeling, record.level}];
  cell.level = record.level;
  if (record.action) {
    ++cell.counts[record.action->category.index()];
  } else {
    ++cell.dropped;
  }
}

std::vector<LevelCell> AggregateTable::sweep(const std::string& swept, const std::string& labeling) const {
  std::vector<LevelCell> out;
  for (const auto& [key, cell] : cells_) {
    if (key.swept == swept && key.labeling == labeling) out.push_back(cell);
  }
  return out;
}

std::vector<std::string> AggregateTable::labelings() const {
  std::set<std::string> ids;
  for (const auto& [key, cell] : cells_) ids.insert(key.labeling);
  return {ids.begin(), ids.end()};
}

std::vector<std::string> AggregateTable::swept() const {
  std::set<std::string> ids;
  for (const auto& [key, cell] : cells_) ids.insert(key.swept);
  return {ids.begin(), ids.end()};
}

AggregateTable aggregate(const std::vector<RunRecord>& records) {
  AggregateTable table;
  for (const auto& r : records) table.add(r);
  return table;
}

std::vector<HypothesisResult> evaluate_model(const LearnerModel& model, const AggregateTable& table,
                                             const HypothesisRegistry& registry, const EvaluationOptions& options) {
  std::vector<HypothesisResult> out;
  const auto labelings = table.labelings();
  for (const MDHyp* h : model.hypotheses()) {
    for (const auto& lid : labelings) {
      const auto cells = table.sweep(h->characteristic, lid);
      if (cells.empty()) continue;
      out.push_back({"", h->id, lid, evaluate(registry.at(h->class_id), *h, cells, options)});
    }
  }
  return out;
}

TestResult evaluate_trend(const MDHyp& hyp, const std::vector<RunRecord>& records, const std::string& labeling,
                          int level, double alpha) {
  if (!hyp.trend_variable) throw InsufficientData("hypothesis " + hyp.id + " has no trend variable");
  std::map<double, std::pair<double, double>> by_value;  // value -> (hits, valid)
  for (const auto& r : records) {
    if (r.labeling != labeling || r.level != level || r.swept != hyp.characteristic || !r.action) continue;
    const double v = state_variable(r.state, *hyp.trend_variable).value_or(0.0);
    auto& [hits, valid] = by_value[v];
    valid += 1;
    if (std::find(hyp.action_set.begin(), hyp.action_set.end(), r.action->category) != hyp.action_set.end()) {
      hits += 1;
    }
  }
  TestResult t;
  t.kind = CriterionKind::Monotonic;
  std::vector<double> xs;
  for (const auto& [v, hv] : by_value) {
    xs.push_back(v);
    t.sample_counts.push_back(hv.first);
    t.probabilities.push_back(hv.first / hv.second);
  }
  t.n_levels = static_cast<int>(xs.size());
  t.n_actions = static_cast<int>(hyp.action_set.size());
  if (xs.size() < 3) {
    throw InsufficientData("trend test for " + hyp.id + " needs at least 3 distinct values of " +
                           *hyp.trend_variable);
  }
  const bool flat = std::all_of(t.probabilities.begin(), t.probabilities.end(),
                                [&](double p) { return p == t.probabilities.front(); });
  if (!flat) {
    t.statistic = stats::spearman_rho(xs, t.probabilities);
    t.p_value = stats::spearman_p(t.statistic, t.n_levels);
  }
  t.satisfied = t.p_value <= alpha;
  t.note = "trend over " + *hyp.trend_variable + " at level " + std::to_string(level) + " (informational)";
  return t;
}

std::string to_string(Classification c) {
  switch (c) {
    case Classification::Hold:
      return "Hold";
    case Classification::Gained:
      return "Gained";
    case Classification::Degraded:
      return "Degraded";
    case Classification::Lost:
      return "Lost";
  }
  return "?";
}

std::optional<Classification> parse_classification(std::string_view s) {
  for (auto c : {Classification::Hold, Classification::Gained, Classification::Degraded, Classification::Lost}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

Classification classify(const TestResult& pre, const TestResult& post, const ClassifyOptions& options) {
  if (pre.kind != post.kind) {
    throw CriterionMismatch("cannot compare a " + to_string(pre.kind) + " result with a " + to_string(post.kind) +
                            " result");
  }
  if (pre.satisfied && !post.satisfied) return Classification::Lost;
  if (!pre.satisfied && post.satisfied) return Classification::Gained;
  if (pre.satisfied && post.satisfied) {
    if (pre.kind == CriterionKind::Monotonic && post.p_value > options.degradation_factor * pre.p_value) {
      return Classification::Degraded;
    }
    if (pre.kind == CriterionKind::Uniform && post.p_value < options.uniform_degradation_ratio * pre.p_value) {
      return Classification::Degraded;
    }
  }
  return Classification::Hold;
}

std::vector<std::pair<std::string, std::string>> default_tracking(const LearnerModel& source,
                                                                  const EditOperation& op,
                                                                  const LearnerModel& target) {
  std::vector<std::pair<std::string, std::string>> out;
  auto identity = [&](const LearnerModel& m, const std::string& skip) {
    for (const auto& id : m.hypothesis_ids()) {
      if (id != skip && target.contains(id)) out.emplace_back(id, id);
    }
  };
  auto rewritten = [&](const std::string& hyp) {
    for (const auto& id : target.hypothesis_ids()) {
      if (!source.contains(id)) {
        out.emplace_back(hyp, id);
        return;
      }
    }
    out.emplace_back(hyp, hyp);
  };
  std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, edit::Append> || std::is_same_v<T, edit::Remove>) {
          identity(source, e.hypothesis);
        } else if constexpr (std::is_same_v<T, edit::VariableSwap> || std::is_same_v<T, edit::LCSwap>) {
          rewritten(e.hypothesis);
        } else if constexpr (std::is_same_v<T, edit::ExSituIsolate>) {
          out.emplace_back(e.hypothesis, e.hypothesis);
        } else if constexpr (std::is_same_v<T, edit::Combine>) {
          identity(source, "");
          identity(e.other, "");
        }
      },
      op);
  return out;
}

EditGraph EditGraph::build(std::vector<GraphNode> roots, std::vector<EdgeSpec> specs, const Catalog& catalog) {
  EditGraph g;
  std::map<std::string, std::size_t> index;
  for (auto& n : roots) {
    if (!index.emplace(n.id, g.nodes_.size()).second) throw InvalidPlan("node '" + n.id + "' defined twice");
    g.nodes_.push_back(std::move(n));
  }

  std::set<std::string> edge_ids;
  std::set<std::string> derived;
  for (const auto& s : specs) {
    if (!edge_ids.insert(s.id).second) throw InvalidPlan("edge '" + s.id + "' defined twice");
    if (index.count(s.target)) throw InvalidPlan("edge '" + s.id + "' targets root node '" + s.target + "'");
    if (!derived.insert(s.target).second) throw InvalidPlan("node '" + s.target + "' is the target of two edges");
    const bool is_combine = std::holds_alternative<edit::Combine>(s.op);
    if (is_combine && s.other_node.empty()) throw InvalidPlan("combine edge '" + s.id + "' needs an other node");
  }

  // Derive targets once their inputs exist; leftovers mean a cycle or a
  // reference to a node nothing defines.
  std::vector<std::optional<GraphEdge>> built(specs.size());
  std::size_t remaining = specs.size();
  while (remaining > 0) {
    bool progress = false;
    for (std::size_t i = 0; i < specs.size(); ++i) {
      if (built[i]) continue;
      const auto& s = specs[i];
      if (!index.count(s.source) || (!s.other_node.empty() && !index.count(s.other_node))) continue;
      GraphEdge e{s.id, s.name, s.source, s.target, s.op, s.other_node, {}};
      if (auto* c = std::get_if<edit::Combine>(&e.op)) {
        c->other = g.nodes_[index.at(s.other_node)].model;
        c->other_ref = s.other_node;
      }
      const LearnerModel& source = g.nodes_[index.at(s.source)].model;
      LearnerModel target;
      try {
        target = apply_edit(source, e.op, catalog);
      } catch (const Error& err) {
        throw InvalidPlan("edge '" + s.id + "': " + err.what());
      }
      e.tracked = s.tracked ? *s.tracked : default_tracking(source, e.op, target);
      for (const auto& [pre, post] : e.tracked) {
        const bool in_source = source.contains(pre) ||
                               (!s.other_node.empty() && g.nodes_[index.at(s.other_node)].model.contains(pre));
        if (!in_source) throw InvalidPlan("edge '" + s.id + "' tracks " + pre + ", which its source lacks");
        if (!target.contains(post)) throw InvalidPlan("edge '" + s.id + "' tracks " + post + ", which its target lacks");
      }
      index.emplace(s.target, g.nodes_.size());
      g.nodes_.push_back({s.target, std::move(target)});
      built[i] = std::move(e);
      --remaining;
      progress = true;
    }
    if (!progress) {
      std::vector<std::string> stuck;
      for (std::size_t i = 0; i < specs.size(); ++i) {
        if (!built[i]) stuck.push_back(specs[i].id);
      }
      throw InvalidPlan("edges with undefined inputs or a cycle: " + join(stuck, ", "));
    }
  }
  for (auto& e : built) g.edges_.push_back(std::move(*e));
  return g;
}

const GraphNode& EditGraph::node(const std::string& id) const {
  for (const auto& n : nodes_) {
    if (n.id == id) return n;
  }
  throw InvalidPlan("unknown node '" + id + "'");
}

EdgeResults run_edit_edge(const EditGraph& graph, const GraphEdge& edge, const ExperimentPlan& plan,
                          RunContext& ctx) {
  ExperimentPlan p = plan;
  p.hypothesis_ids.clear();
  p.sweep_characteristic.reset();

  auto evaluate_node = [&](const std::string& node_id) {
    const auto& node = graph.node(node_id);
    auto results = evaluate_model(node.model, aggregate(run(p, node.model, ctx)), ctx.registry, p.evaluation);
    for (auto& r : results) r.node = node_id;
    return results;
  };

  EdgeResults out;
  out.edge = edge.id;
  out.pre = evaluate_node(edge.source);
  if (!edge.other.empty()) {
    auto other = evaluate_node(edge.other);
    out.pre.insert(out.pre.end(), other.begin(), other.end());
  }
  out.post = evaluate_node(edge.target);
  return out;
}

bool CalibrationReport::any_lost() const {
  return std::any_of(verdicts.begin(), verdicts.end(),
                     [](const auto& v) { return v.second == Classification::Lost; });
}

CalibrationReport report(const EditGraph& graph, const std::vector<EdgeResults>& results,
                         const std::vector<std::string>& labelings, const ClassifyOptions& options) {
  CalibrationReport rep;
  std::vector<std::string> missing;
  auto find = [](const std::vector<HypothesisResult>& rs, const std::string& hyp,
                 const std::string& lid) -> const HypothesisResult* {
    for (const auto& r : rs) {
      if (r.hypothesis == hyp && r.labeling == lid) return &r;
    }
    return nullptr;
  };

  for (const auto& edge : graph.edges()) {
    const auto it = std::find_if(results.begin(), results.end(), [&](const auto& r) { return r.edge == edge.id; });
    Classification verdict = Classification::Hold;
    for (const auto& [pre_id, post_id] : edge.tracked) {
      for (const auto& lid : labelings) {
        const HypothesisResult* pre = it == results.end() ? nullptr : find(it->pre, pre_id, lid);
        const HypothesisResult* post = it == results.end() ? nullptr : find(it->post, post_id, lid);
        if (!pre) missing.push_back(edge.id + "/" + pre_id + "/" + lid + "/pre");
        if (!post) missing.push_back(edge.id + "/" + post_id + "/" + lid + "/post");
        if (!pre || !post) continue;
        ReportRow row;
        row.edge = edge.id;
        row.operation = edge.name.empty() ? edit_kind(edge.op) : edge.name;
        row.pre_hypothesis = pre_id;
        row.post_hypothesis = post_id;
        row.kind = pre->result.kind;
        row.labeling = lid;
        row.pre_statistic = pre->result.statistic;
        row.pre_p = pre->result.p_value;
        row.pre_satisfied = pre->result.satisfied;
        row.post_statistic = post->result.statistic;
        row.post_p = post->result.p_value;
        row.post_satisfied = post->result.satisfied;
        row.classification = classify(pre->result, post->result, options);
        row.flagged = pre->result.flagged || post->result.flagged;
        verdict = std::max(verdict, row.classification);
        rep.rows.push_back(std::move(row));
      }
    }
    rep.verdicts.emplace_back(edge.id, verdict);
  }
  if (!missing.empty()) throw IncompleteResults("missing results: " + join(missing, ", "));

  for (const auto& node : graph.nodes()) {
    auto& marks = rep.annotations[node.id];
    for (const auto& id : node.model.hypothesis_ids()) marks[id] = '?';
  }
  for (const auto& er : results) {
    for (const auto* side : {&er.pre, &er.post}) {
      for (const auto& r : *side) {
        if (r.node.empty() || !rep.annotations.count(r.node)) continue;
        char& mark = rep.annotations[r.node][r.hypothesis];
        if (!r.result.satisfied) {
          mark = 'x';
        } else if (mark != 'x') {
          mark = '*';
        }
      }
    }
  }
  return rep;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string hypothesis_cell(const ReportRow& r) {
  return r.pre_hypothesis == r.post_hypothesis ? r.pre_hypothesis : r.pre_hypothesis + " -> " + r.post_hypothesis;
}

std::string yes_no(bool b) { return b ? "yes" : "no"; }

}  // namespace

CalibrationReport run_edit_graph(const EditGraph& graph, const ExperimentPlan& plan, RunContext& ctx,
                                 const std::function<void(const GraphEdge&)>& on_edge) {
  std::vector<EdgeResults> results;
  for (const auto& edge : graph.edges()) {
    if (on_edge) on_edge(edge);
    results.push_back(run_edit_edge(graph, edge, plan, ctx));
  }
  return report(graph, results, plan.labelings, {plan.degradation_factor, plan.uniform_degradation_ratio});
}

std::string render_tsv(const CalibrationReport& report) {
  std::ostringstream out;
  out << "edge\toperation\thypothesis\ttest\tlabeling\tpre_statistic\tpre_p\tpre_satisfied\tpost_statistic\tpost_p\t"
         "post_satisfied\tclassification\tflagged\n";
  for (const auto& r : report.rows) {
    out << r.edge << '\t' << r.operation << '\t' << hypothesis_cell(r) << '\t' << to_string(r.kind) << '\t'
        << r.labeling << '\t' << num(r.pre_statistic) << '\t' << num(r.pre_p) << '\t' << yes_no(r.pre_satisfied)
        << '\t' << num(r.post_statistic) << '\t' << num(r.post_p) << '\t' << yes_no(r.post_satisfied) << '\t'
        << to_string(r.classification) << '\t' << yes_no(r.flagged) << '\n';
  }
  return out.str();
}

std::string render_text(const CalibrationReport& report) {
  std::vector<std::vector<std::string>> table{
      {"Operation", "Hypothesis", "Test", "Labeling", "Pre stat", "Pre p", "Post stat", "Post p", "Classification"}};
  for (const auto& r : report.rows) {
    table.push_back({r.operation, hypothesis_cell(r), to_string(r.kind), r.labeling, num(r.pre_statistic),
                     num(r.pre_p) + (r.pre_satisfied ? "" : " (fail)"), num(r.post_statistic),
                     num(r.post_p) + (r.post_satisfied ? "" : " (fail)"),
                     to_string(r.classification) + (r.flagged ? " !" : "")});
  }
  std::vector<std::size_t> width(table.front().size(), 0);
  for (const auto& row : table) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::ostringstream out;
  for (std::size_t k = 0; k < table.size(); ++k) {
    std::string line;
    for (std::size_t i = 0; i < table[k].size(); ++i) {
      if (i) line += "  ";
      line += table[k][i] + std::string(width[i] - table[k][i].size(), ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
    if (k == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    }
  }
  out << "\nEdge verdicts:\n";
  for (const auto& [edge, verdict] : report.verdicts) out << "  " << edge << ": " << to_string(verdict) << '\n';
  out << "\nNodes (* calibrated, x not satisfied, ? untested):\n";
  for (const auto& [node, marks] : report.annotations) {
    out << "  " << node << ":";
    for (const auto& [hyp, mark] : marks) out << ' ' << hyp << mark;
    out << '\n';
  }
  return out.str();
}

}  // namespace hypmix
