#pragma once

// Marginal distributional hypotheses (MDHyps), the classes that group them,
// template instantiation, and the success criteria each class is judged by.

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "hypmix/environment.hpp"
#include "hypmix/stats.hpp"

namespace hypmix {

enum class Direction { Increasing, Decreasing };
enum class SpectrumEnd { Low, High };
enum class CriterionKind { Monotonic, Uniform };
enum class CalibrationStatus { Untested, Calibrated };

inline constexpr int kMinPersonaLevel = 1;
inline constexpr int kMaxPersonaLevel = 10;
inline constexpr double kDefaultAlpha = 0.05;

std::string to_string(Direction d);
std::string to_string(SpectrumEnd e);
std::string to_string(CriterionKind k);
std::optional<Direction> parse_direction(std::string_view s);
std::optional<SpectrumEnd> parse_spectrum_end(std::string_view s);
std::optional<CriterionKind> parse_criterion_kind(std::string_view s);

struct MDHyp {
  std::string id;
  std::string class_id;
  std::string characteristic;  // learner characteristic id, e.g. "geometry_proficiency"
  std::optional<Direction> direction;       // monotonic classes
  std::optional<SpectrumEnd> spectrum_end;  // uniform classes
  std::string behavior_short;
  std::string behavior_long;
  // Ordered as authored; the order is how the list renders in the prompt.
  std::vector<ActionCategory> action_set;
  std::optional<std::string> trend_variable;
  CalibrationStatus calibration_status = CalibrationStatus::Untested;

  // Equal in everything but id and calibration status.
  bool same_content(const MDHyp& other) const;
  friend bool operator==(const MDHyp&, const MDHyp&) = default;
};

// Characteristic id rendered for prose: underscores become spaces.
std::string characteristic_phrase(const std::string& characteristic_id);

struct HypothesisClass {
  std::string id;
  CriterionKind criterion = CriterionKind::Monotonic;
  double alpha = kDefaultAlpha;
  // revision number -> template text with {slot} placeholders.
  std::map<int, std::string> templates;

  int latest_revision() const;
  const std::string& template_text(int revision) const;  // throws std::out_of_range
};

// Problems with a class definition; empty when usable.
std::vector<std::string> validate_class(const HypothesisClass& cls);

class HypothesisRegistry {
 public:
  // Registers a class; throws DuplicateClassId. The returned pointer stays
  // valid for the registry's lifetime.
  const HypothesisClass* register_class(HypothesisClass cls);
  const HypothesisClass* find(const std::string& id) const;
  const HypothesisClass& at(const std::string& id) const;  // throws UnknownClass
  std::vector<std::string> ids() const;

  // mono and uniform, each with an uncalibrated (0) and calibrated (1) revision.
  static HypothesisRegistry builtin();

 private:
  std::map<std::string, std::shared_ptr<const HypothesisClass>> classes_;
};

// Problems with a hypothesis given the registry; empty when valid.
std::vector<std::string> validate_hypothesis(const MDHyp& hyp, const HypothesisRegistry& registry);

// The four shipped hypotheses: H_G1, H_P1, H_P2, H_G2.
std::vector<MDHyp> builtin_hypotheses();

// Slots the shipped templates use:
//   {characteristic} {more_or_less} {behavior_short} {behavior_long} {actions}
//   {low_or_high} {extreme_value} {random_action}
// {random_action} picks one element of the action set using pick_seed.
// Throws MissingSlot for slots the hypothesis cannot fill.
std::string instantiate_template(const HypothesisClass& cls, int revision, const MDHyp& hyp,
                                 const ActionLabeling& labeling, std::uint64_t pick_seed = 0);
std::string instantiate_template(const HypothesisClass& cls, const MDHyp& hyp, const ActionLabeling& labeling,
                                 std::uint64_t pick_seed = 0);

// Success criteria.
bool t_mono(double rho, double p_value, Direction direction, double alpha = kDefaultAlpha);
bool t_uniform(double p_value, double alpha = kDefaultAlpha);

// Action counts observed at one persona level.
struct LevelCell {
  int level = 0;
  std::array<std::int64_t, ActionCategory::kCount> counts{};
  std::int64_t dropped = 0;

  std::int64_t valid() const;
  std::int64_t total() const { return valid() + dropped; }
  double drop_rate() const;
  double probability(ActionCategory c) const;
};

struct TestResult {
  CriterionKind kind = CriterionKind::Monotonic;
  double statistic = 0.0;  // rho or chi-squared
  double p_value = 1.0;
  bool satisfied = false;
  int n_levels = 0;   // monotonic: levels correlated
  int n_actions = 0;  // uniform: cells compared
  // Monotonic: target-set counts per level. Uniform: count per listed action.
  std::vector<double> sample_counts;
  // Monotonic only: empirical probability of the action set per level.
  std::vector<double> probabilities;
  // A contributing cell dropped more than the allowed share of its samples.
  bool flagged = false;
  std::string note;
};

struct EvaluationOptions {
  std::optional<double> alpha;  // overrides the class alpha
  stats::Tail tail = stats::Tail::TwoSided;
  bool one_sided = false;  // when set, the tail follows the hypothesis direction
  int level_window = 1;    // uniform test: how many levels from the extreme to pool
  double max_drop_rate = 0.05;
};

// Evaluates hyp against per-level cells (any order, one per level). Throws
// InsufficientData naming the failed precondition, CriterionMismatch when the
// hypothesis does not belong to cls.
TestResult evaluate(const HypothesisClass& cls, const MDHyp& hyp, const std::vector<LevelCell>& cells,
                    const EvaluationOptions& options = {});

// Calibration status per (class, template revision, hypothesis).
class CalibrationLedger {
 public:
  void record(const std::string& class_id, int revision, const std::string& hypothesis_id, CalibrationStatus status);
  CalibrationStatus status(const std::string& class_id, int revision, const std::string& hypothesis_id) const;

 private:
  std::map<std::tuple<std::string, int, std::string>, CalibrationStatus> entries_;
};

}  // namespace hypmix
