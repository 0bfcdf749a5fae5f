#pragma once

// Experiment orchestration: persona sweeps over sampled states, aggregation
// into per-level action counts, hypothesis evaluation, and pre/post
// comparisons along a learner model edit graph.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "hypmix/environment.hpp"
#include "hypmix/hypothesis.hpp"
#include "hypmix/learner_model.hpp"
#include "hypmix/llm_backend.hpp"
#include "hypmix/prompt.hpp"

namespace hypmix {

struct ExperimentPlan {
  // Hypotheses to evaluate; empty means every hypothesis in the model.
  std::vector<std::string> hypothesis_ids;
  // Characteristic whose level is swept; unset means one sweep per
  // characteristic of the hypotheses under test.
  std::optional<std::string> sweep_characteristic;
  std::vector<int> levels{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  // Levels for characteristics that are not being swept (default 5).
  std::map<std::string, int> fixed_levels;
  int states_per_level = 20;
  int samples_per_state = 5;
  std::vector<std::string> labelings{"A", "B", "C"};
  std::uint64_t seed = 1;
  StateConstraints state_constraints;

  std::string model_id = "gpt-4-turbo";
  double temperature = 1.0;
  int max_tokens = 1024;
  int parallelism = 4;
  // Backend failures tolerated (recorded as drops) before the run aborts.
  int failure_budget = 0;

  PromptConfig prompt;
  EvaluationOptions evaluation;
  double degradation_factor = 10.0;
  double uniform_degradation_ratio = 0.5;

  std::size_t expected_records(std::size_t sweeps) const;
};

// Problems with the plan for this model; empty when runnable.
std::vector<std::string> validate_plan(const ExperimentPlan& plan, const LearnerModel& model,
                                       const EnvironmentSpec& env);

// Persona used for one cell of a sweep.
std::map<std::string, int> sweep_persona(const ExperimentPlan& plan, const LearnerModel& model,
                                         const std::string& swept, int level);

// Characteristics a plan sweeps for a model, in id order.
std::vector<std::string> swept_characteristics(const ExperimentPlan& plan, const LearnerModel& model);

struct RunRecord {
  std::string swept;  // characteristic whose level varies
  int level = 0;
  std::map<std::string, int> persona;
  std::string labeling;
  int state_index = 0;
  EnvState state;
  int sample_index = 0;
  std::uint64_t seed = 0;
  std::string cache_key;  // key of the response the action was read from
  std::optional<Action> action;
  std::string drop_reason;  // set when action is empty
  int attempts = 0;
  std::vector<std::string> warnings;

  bool dropped() const { return !action.has_value(); }
};

struct RunContext {
  Generator& generator;
  const EnvironmentSpec& env;
  const HypothesisRegistry& registry;
  // Receives every record in deterministic order, including the completed
  // prefix when a run aborts.
  std::function<void(const RunRecord&)> sink;
};

// For every swept characteristic x labeling x level x state x sample:
// compose, generate, parse (one reprompt with a format reminder), record.
// Throws InvalidPlan, and BackendUnavailable once failures exceed the budget.
std::vector<RunRecord> run(const ExperimentPlan& plan, const LearnerModel& model, RunContext& ctx);

struct CellKey {
  std::string swept;
  std::string labeling;
  int level = 0;
  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

class AggregateTable {
 public:
  void add(const RunRecord& record);

  const std::map<CellKey, LevelCell>& cells() const noexcept { return cells_; }
  bool empty() const noexcept { return cells_.empty(); }
  // Cells of one sweep under one labeling, ordered by level.
  std::vector<LevelCell> sweep(const std::string& swept, const std::string& labeling) const;
  std::vector<std::string> labelings() const;
  std::vector<std::string> swept() const;

 private:
  std::map<CellKey, LevelCell> cells_;
};

AggregateTable aggregate(const std::vector<RunRecord>& records);

struct HypothesisResult {
  std::string node;  // graph node the model came from; empty outside edit graphs
  std::string hypothesis;
  std::string labeling;
  TestResult result;
};

// Evaluates every hypothesis of the model whose characteristic was swept,
// once per labeling present in the table.
std::vector<HypothesisResult> evaluate_model(const LearnerModel& model, const AggregateTable& table,
                                             const HypothesisRegistry& registry, const EvaluationOptions& options);

// Secondary check for hypotheses with a trend variable: Spearman correlation
// between the state variable and the action-set probability among records at
// one persona level. Informational only; never part of a verdict.
TestResult evaluate_trend(const MDHyp& hyp, const std::vector<RunRecord>& records, const std::string& labeling,
                          int level, double alpha = kDefaultAlpha);

enum class Classification { Hold, Gained, Degraded, Lost };  // ordered best to worst

std::string to_string(Classification c);
std::optional<Classification> parse_classification(std::string_view s);

struct ClassifyOptions {
  double degradation_factor = 10.0;
  double uniform_degradation_ratio = 0.5;
};

// Throws CriterionMismatch when the two results are different tests.
Classification classify(const TestResult& pre, const TestResult& post, const ClassifyOptions& options = {});

struct GraphNode {
  std::string id;
  LearnerModel model;
};

struct GraphEdge {
  std::string id;
  std::string name;  // operation name shown in reports, e.g. "Ex-Situ Transfer"
  std::string source;
  std::string target;
  EditOperation op;
  std::string other;  // Combine partner node
  // (pre hypothesis, post hypothesis) pairs the report compares.
  std::vector<std::pair<std::string, std::string>> tracked;
};

// Hypotheses an edit carries through by default.
std::vector<std::pair<std::string, std::string>> default_tracking(const LearnerModel& source,
                                                                  const EditOperation& op,
                                                                  const LearnerModel& target);

class EditGraph {
 public:
  struct EdgeSpec {
    std::string id;
    std::string name;
    std::string source;
    std::string target;
    EditOperation op;  // a Combine's `other` model is filled from other_node
    std::string other_node;
    std::optional<std::vector<std::pair<std::string, std::string>>> tracked;
  };

  // Root nodes are given; every edge target is derived by apply_edit in
  // dependency order. Throws InvalidPlan for cycles, unknown nodes, targets
  // defined twice, or tracked hypotheses missing from their models.
  static EditGraph build(std::vector<GraphNode> roots, std::vector<EdgeSpec> edges, const Catalog& catalog);

  const std::vector<GraphNode>& nodes() const noexcept { return nodes_; }
  const std::vector<GraphEdge>& edges() const noexcept { return edges_; }
  const GraphNode& node(const std::string& id) const;  // throws InvalidPlan

 private:
  std::vector<GraphNode> nodes_;  // roots first, then targets in derivation order
  std::vector<GraphEdge> edges_;  // as given
};

struct EdgeResults {
  std::string edge;
  std::vector<HypothesisResult> pre;
  std::vector<HypothesisResult> post;
};

// Runs the plan on the source (plus a Combine partner) and on the target with
// the same seed schedule and templates, evaluating every hypothesis present.
EdgeResults run_edit_edge(const EditGraph& graph, const GraphEdge& edge, const ExperimentPlan& plan,
                          RunContext& ctx);

struct ReportRow {
  std::string edge;
  std::string operation;
  std::string pre_hypothesis;
  std::string post_hypothesis;
  CriterionKind kind = CriterionKind::Monotonic;
  std::string labeling;
  double pre_statistic = 0.0;
  double pre_p = 1.0;
  bool pre_satisfied = false;
  double post_statistic = 0.0;
  double post_p = 1.0;
  bool post_satisfied = false;
  Classification classification = Classification::Hold;
  bool flagged = false;
};

struct CalibrationReport {
  std::vector<ReportRow> rows;
  // Worst classification per edge, in graph edge order.
  std::vector<std::pair<std::string, Classification>> verdicts;
  // node id -> hypothesis id -> '*' satisfied under every labeling it was
  // evaluated with, 'x' unsatisfied under at least one, '?' never evaluated
  std::map<std::string, std::map<std::string, char>> annotations;

  bool any_lost() const;
};

// One row per edge x tracked hypothesis x labeling. Throws IncompleteResults
// naming the missing cells.
CalibrationReport report(const EditGraph& graph, const std::vector<EdgeResults>& results,
                         const std::vector<std::string>& labelings, const ClassifyOptions& options = {});

// Every edge in graph order, then the report over the plan's labelings.
CalibrationReport run_edit_graph(const EditGraph& graph, const ExperimentPlan& plan, RunContext& ctx,
                                 const std::function<void(const GraphEdge&)>& on_edge = nullptr);

// Tab-separated, header first. Byte-deterministic.
std::string render_tsv(const CalibrationReport& report);
// Aligned text table with per-edge verdicts and node annotations.
std::string render_text(const CalibrationReport& report);

}  // namespace hypmix
