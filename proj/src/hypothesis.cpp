#include "hypmix/hypothesis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "hypmix/errors.hpp"
#include "hypmix/random.hpp"

namespace hypmix {
namespace {

const std::set<std::string>& known_slots() {
  static const std::set<std::string> slots{"characteristic", "more_or_less",  "behavior_short", "behavior_long",
                                           "actions",        "low_or_high",   "extreme_value",  "random_action"};
  return slots;
}

// Slot names in order of appearance. "{{" and "}}" are literal braces.
std::vector<std::string> template_slots(const std::string& text) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{') continue;
    if (i + 1 < text.size() && text[i + 1] == '{') {
      ++i;
      continue;
    }
    const auto close = text.find('}', i);
    if (close == std::string::npos) break;
    out.push_back(text.substr(i + 1, close - i - 1));
    i = close;
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out;
  for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

std::string join_actions(const std::vector<ActionCategory>& actions, const ActionLabeling& labeling) {
  std::string out;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i) out += ", ";
    out += labeling.menu_label(actions[i]);
  }
  return out;
}

std::string fill_slot(const std::string& slot, const MDHyp& hyp, const ActionLabeling& labeling,
                      std::uint64_t pick_seed) {
  if (slot == "characteristic") {
    if (hyp.characteristic.empty()) throw MissingSlot(slot);
    return characteristic_phrase(hyp.characteristic);
  }
  if (slot == "more_or_less") {
    if (!hyp.direction) throw MissingSlot(slot);
    return *hyp.direction == Direction::Increasing ? "more" : "less";
  }
  if (slot == "behavior_short") {
    if (hyp.behavior_short.empty()) throw MissingSlot(slot);
    return hyp.behavior_short;
  }
  if (slot == "behavior_long") {
    if (hyp.behavior_long.empty()) throw MissingSlot(slot);
    return hyp.behavior_long;
  }
  if (slot == "actions") {
    if (hyp.action_set.empty()) throw MissingSlot(slot);
    return join_actions(hyp.action_set, labeling);
  }
  if (slot == "low_or_high") {
    if (!hyp.spectrum_end) throw MissingSlot(slot);
    return *hyp.spectrum_end == SpectrumEnd::Low ? "low" : "high";
  }
  if (slot == "extreme_value") {
    if (!hyp.spectrum_end) throw MissingSlot(slot);
    return std::to_string(*hyp.spectrum_end == SpectrumEnd::Low ? kMinPersonaLevel : kMaxPersonaLevel);
  }
  if (slot == "random_action") {
    if (hyp.action_set.empty()) throw MissingSlot(slot);
    Rng rng(pick_seed);
    return labeling.menu_label(hyp.action_set[uniform_below(rng, hyp.action_set.size())]);
  }
  throw MissingSlot(slot);
}

}  // namespace

std::string to_string(Direction d) { return d == Direction::Increasing ? "increasing" : "decreasing"; }
std::string to_string(SpectrumEnd e) { return e == SpectrumEnd::Low ? "low" : "high"; }
std::string to_string(CriterionKind k) { return k == CriterionKind::Monotonic ? "monotonic" : "uniform"; }

std::optional<Direction> parse_direction(std::string_view s) {
  const auto l = lower(s);
  if (l == "increasing") return Direction::Increasing;
  if (l == "decreasing") return Direction::Decreasing;
  return std::nullopt;
}

std::optional<SpectrumEnd> parse_spectrum_end(std::string_view s) {
  const auto l = lower(s);
  if (l == "low") return SpectrumEnd::Low;
  if (l == "high") return SpectrumEnd::High;
  return std::nullopt;
}

std::optional<CriterionKind> parse_criterion_kind(std::string_view s) {
  const auto l = lower(s);
  if (l == "monotonic" || l == "mono") return CriterionKind::Monotonic;
  if (l == "uniform") return CriterionKind::Uniform;
  return std::nullopt;
}

bool MDHyp::same_content(const MDHyp& o) const {
  return class_id == o.class_id && characteristic == o.characteristic && direction == o.direction &&
         spectrum_end == o.spectrum_end && behavior_short == o.behavior_short && behavior_long == o.behavior_long &&
         action_set == o.action_set && trend_variable == o.trend_variable;
}

std::string characteristic_phrase(const std::string& characteristic_id) {
  std::string out = characteristic_id;
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

int HypothesisClass::latest_revision() const {
  if (templates.empty()) throw std::out_of_range("hypothesis class " + id + " has no templates");
  return templates.rbegin()->first;
}

const std::string& HypothesisClass::template_text(int revision) const {
  auto it = templates.find(revision);
  if (it == templates.end()) {
    throw std::out_of_range("hypothesis class " + id + " has no template revision " + std::to_string(revision));
  }
  return it->second;
}

std::vector<std::string> validate_class(const HypothesisClass& cls) {
  std::vector<std::string> problems;
  if (cls.id.empty()) problems.push_back("class id is empty");
  if (!(cls.alpha > 0.0 && cls.alpha < 1.0)) problems.push_back("class " + cls.id + ": alpha must lie in (0, 1)");
  if (cls.templates.empty()) problems.push_back("class " + cls.id + ": no template revisions");
  for (const auto& [rev, text] : cls.templates) {
    const auto slots = template_slots(text);
    const std::set<std::string> used(slots.begin(), slots.end());
    const std::string where = "class " + cls.id + " revision " + std::to_string(rev) + ": ";
    for (const auto& s : used) {
      if (!known_slots().count(s)) problems.push_back(where + "unknown slot {" + s + "}");
    }
    if (!used.count("characteristic")) problems.push_back(where + "template never names the characteristic");
    if (!used.count("actions") && !used.count("random_action")) {
      problems.push_back(where + "template never lists the target actions");
    }
    if (cls.criterion == CriterionKind::Monotonic && !used.count("more_or_less")) {
      problems.push_back(where + "monotonic template must carry the {more_or_less} direction slot");
    }
  }
  return problems;
}

const HypothesisClass* HypothesisRegistry::register_class(HypothesisClass cls) {
  if (classes_.count(cls.id)) throw DuplicateClassId(cls.id);
  auto ptr = std::make_shared<const HypothesisClass>(std::move(cls));
  const auto* raw = ptr.get();
  classes_.emplace(raw->id, std::move(ptr));
  return raw;
}

const HypothesisClass* HypothesisRegistry::find(const std::string& id) const {
  auto it = classes_.find(id);
  return it == classes_.end() ? nullptr : it->second.get();
}

const HypothesisClass& HypothesisRegistry::at(const std::string& id) const {
  const auto* cls = find(id);
  if (!cls) throw UnknownClass(id);
  return *cls;
}

std::vector<std::string> HypothesisRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : classes_) out.push_back(id);
  return out;
}

HypothesisRegistry HypothesisRegistry::builtin() {
  const std::string mono =
      "A learner with a higher {characteristic} is {more_or_less} likely to {behavior_short} (i.e., "
      "{behavior_long}). To {behavior_short} is to make one of the following actions: {actions}.";
  const std::string uniform =
      "As learners get closer and closer to the {low_or_high}er end of the {characteristic} spectrum (value of "
      "{extreme_value}), they are equally likely to perform the following actions. In other words, such a learner "
      "exhibits a uniform distribution over these actions: {actions}.";

  HypothesisRegistry registry;
  registry.register_class(HypothesisClass{
      "mono",
      CriterionKind::Monotonic,
      kDefaultAlpha,
      {{0, mono},
       {1, mono + " In the event that your commonsense reasoning DIRECTLY conflicts with this hypothesis, use this "
                  "hypothesis."}}});
  registry.register_class(HypothesisClass{
      "uniform",
      CriterionKind::Uniform,
      kDefaultAlpha,
      {{0, uniform},
       {1, "We know for a fact that learners with {characteristic} of {extreme_value} mindlessly pick the following "
           "action: {random_action}. When picking an action, do not use your commonsense reasoning, just blindly "
           "pick this action. Trust me."}}});
  return registry;
}

std::vector<std::string> validate_hypothesis(const MDHyp& hyp, const HypothesisRegistry& registry) {
  std::vector<std::string> problems;
  const std::string where = "hypothesis " + hyp.id + ": ";
  if (hyp.id.empty()) problems.push_back("hypothesis with empty id");
  if (hyp.characteristic.empty()) problems.push_back(where + "no characteristic");
  if (hyp.action_set.empty()) problems.push_back(where + "action_set is empty");
  std::set<std::size_t> seen;
  for (auto a : hyp.action_set) {
    if (!seen.insert(a.index()).second) problems.push_back(where + "action " + a.token() + " listed twice");
  }
  if (hyp.trend_variable && !is_state_variable(*hyp.trend_variable)) {
    problems.push_back(where + "trend_variable '" + *hyp.trend_variable + "' is not a known state variable");
  }
  const auto* cls = registry.find(hyp.class_id);
  if (!cls) {
    problems.push_back(where + "unknown class '" + hyp.class_id + "'");
    return problems;
  }
  if (cls->criterion == CriterionKind::Monotonic) {
    if (!hyp.direction) problems.push_back(where + "monotonic hypothesis needs a direction");
    if (hyp.spectrum_end) problems.push_back(where + "monotonic hypothesis must not set spectrum_end");
  } else {
    if (!hyp.spectrum_end) problems.push_back(where + "uniform hypothesis needs a spectrum_end");
    if (hyp.direction) problems.push_back(where + "uniform hypothesis must not set direction");
  }
  return problems;
}

std::vector<MDHyp> builtin_hypotheses() {
  const auto exit_only = std::vector<ActionCategory>{ActionCategory::exit()};
  const std::string abandon_long = "to prematurely exit the session before submitting the right solution";
  return {
      MDHyp{"H_G1", "mono", "geometry_proficiency", Direction::Increasing, std::nullopt,
            "make productive measurements",
            "those that measure distances between pairs of points in the planetary system that are potentially useful "
            "to verify if the orbit is elliptical",
            productive_measurement_set(), std::nullopt},
      MDHyp{"H_P1", "mono", "persistence", Direction::Decreasing, std::nullopt,
            "abandon the task as the number of measurements increases", abandon_long, exit_only,
            std::string("number of measurements")},
      MDHyp{"H_P2", "mono", "persistence", Direction::Decreasing, std::nullopt,
            "abandon the task as the time elapsed increases", abandon_long, exit_only, std::string("time elapsed")},
      MDHyp{"H_G2", "uniform", "geometry_proficiency", std::nullopt, SpectrumEnd::Low, "", "", measurement_actions(),
            std::nullopt},
  };
}

std::string instantiate_template(const HypothesisClass& cls, int revision, const MDHyp& hyp,
                                 const ActionLabeling& labeling, std::uint64_t pick_seed) {
  const std::string& text = cls.template_text(revision);
  std::string out;
  out.reserve(text.size() + 256);
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if ((c == '{' || c == '}') && i + 1 < text.size() && text[i + 1] == c) {
      out.push_back(c);
      ++i;
      continue;
    }
    if (c != '{') {
      out.push_back(c);
      continue;
    }
    const auto close = text.find('}', i);
    if (close == std::string::npos) throw MissingSlot(text.substr(i + 1));
    out += fill_slot(text.substr(i + 1, close - i - 1), hyp, labeling, pick_seed);
    i = close;
  }
  return out;
}

std::string instantiate_template(const HypothesisClass& cls, const MDHyp& hyp, const ActionLabeling& labeling,
                                 std::uint64_t pick_seed) {
  return instantiate_template(cls, cls.latest_revision(), hyp, labeling, pick_seed);
}

bool t_mono(double rho, double p_value, Direction direction, double alpha) {
  if (!(p_value <= alpha)) return false;
  return direction == Direction::Increasing ? rho > 0.0 : rho < 0.0;
}

bool t_uniform(double p_value, double alpha) { return p_value > alpha; }

std::int64_t LevelCell::valid() const { return std::accumulate(counts.begin(), counts.end(), std::int64_t{0}); }

double LevelCell::drop_rate() const {
  const auto t = total();
  return t == 0 ? 0.0 : static_cast<double>(dropped) / static_cast<double>(t);
}

double LevelCell::probability(ActionCategory c) const {
  const auto v = valid();
  return v == 0 ? 0.0 : static_cast<double>(counts[c.index()]) / static_cast<double>(v);
}

namespace {

TestResult evaluate_monotonic(const MDHyp& hyp, std::vector<LevelCell> cells, double alpha,
                              const EvaluationOptions& options) {
  std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) { return a.level < b.level; });
  TestResult r;
  r.kind = CriterionKind::Monotonic;
  std::vector<double> levels;
  for (const auto& cell : cells) {
    if (cell.valid() == 0) continue;
    double hits = 0;
    for (auto a : hyp.action_set) hits += static_cast<double>(cell.counts[a.index()]);
    levels.push_back(cell.level);
    r.sample_counts.push_back(hits);
    r.probabilities.push_back(hits / static_cast<double>(cell.valid()));
    if (cell.drop_rate() > options.max_drop_rate) r.flagged = true;
  }
  r.n_levels = static_cast<int>(levels.size());
  r.n_actions = static_cast<int>(hyp.action_set.size());
  if (r.n_levels < 3) {
    throw InsufficientData("hypothesis " + hyp.id + ": monotonic test needs at least 3 persona levels with samples, got " +
                           std::to_string(r.n_levels));
  }
  const auto direction = hyp.direction.value_or(Direction::Increasing);
  stats::Tail tail = options.tail;
  if (options.one_sided) tail = direction == Direction::Increasing ? stats::Tail::Greater : stats::Tail::Less;

  const bool flat = std::all_of(r.probabilities.begin(), r.probabilities.end(),
                                [&](double p) { return p == r.probabilities.front(); });
  if (flat) {
    r.statistic = 0.0;
    r.p_value = 1.0;
    r.note = "empirical probability is identical at every level";
  } else {
    r.statistic = stats::spearman_rho(levels, r.probabilities);
    r.p_value = stats::spearman_p(r.statistic, r.n_levels, tail);
  }
  r.satisfied = t_mono(r.statistic, r.p_value, direction, alpha);
  return r;
}

TestResult evaluate_uniform(const MDHyp& hyp, const std::vector<LevelCell>& cells, double alpha,
                            const EvaluationOptions& options) {
  TestResult r;
  r.kind = CriterionKind::Uniform;
  const int window = std::max(1, options.level_window);
  const bool low = hyp.spectrum_end.value_or(SpectrumEnd::Low) == SpectrumEnd::Low;
  const int lo = low ? kMinPersonaLevel : kMaxPersonaLevel - window + 1;
  const int hi = low ? kMinPersonaLevel + window - 1 : kMaxPersonaLevel;

  r.sample_counts.assign(hyp.action_set.size(), 0.0);
  int levels_used = 0;
  for (const auto& cell : cells) {
    if (cell.level < lo || cell.level > hi) continue;
    ++levels_used;
    for (std::size_t i = 0; i < hyp.action_set.size(); ++i) {
      r.sample_counts[i] += static_cast<double>(cell.counts[hyp.action_set[i].index()]);
    }
    if (cell.drop_rate() > options.max_drop_rate) r.flagged = true;
  }
  r.n_levels = levels_used;
  r.n_actions = static_cast<int>(hyp.action_set.size());
  const double total = std::accumulate(r.sample_counts.begin(), r.sample_counts.end(), 0.0);
  if (levels_used == 0) {
    throw InsufficientData("hypothesis " + hyp.id + ": no samples at persona level " + std::to_string(low ? lo : hi));
  }
  if (hyp.action_set.size() < 2) {
    throw InsufficientData("hypothesis " + hyp.id + ": uniform test needs at least two listed actions");
  }
  if (total < static_cast<double>(hyp.action_set.size())) {
    throw InsufficientData("hypothesis " + hyp.id + ": uniform test needs at least one sample per listed action on " +
                           "average at the extreme level, got " + std::to_string(static_cast<long long>(total)) +
                           " for " + std::to_string(hyp.action_set.size()) + " actions");
  }
  const auto chi = stats::chi2_gof(r.sample_counts);
  r.statistic = chi.statistic;
  r.p_value = chi.p_value;
  r.satisfied = t_uniform(r.p_value, alpha);
  return r;
}

}  // namespace

TestResult evaluate(const HypothesisClass& cls, const MDHyp& hyp, const std::vector<LevelCell>& cells,
                    const EvaluationOptions& options) {
  if (hyp.class_id != cls.id) {
    throw CriterionMismatch("hypothesis " + hyp.id + " belongs to class " + hyp.class_id + ", not " + cls.id);
  }
  const double alpha = options.alpha.value_or(cls.alpha);
  if (cls.criterion == CriterionKind::Monotonic) return evaluate_monotonic(hyp, cells, alpha, options);
  return evaluate_uniform(hyp, cells, alpha, options);
}

void CalibrationLedger::record(const std::string& class_id, int revision, const std::string& hypothesis_id,
                               CalibrationStatus status) {
  entries_[{class_id, revision, hypothesis_id}] = status;
}

CalibrationStatus CalibrationLedger::status(const std::string& class_id, int revision,
                                            const std::string& hypothesis_id) const {
  auto it = entries_.find({class_id, revision, hypothesis_id});
  return it == entries_.end() ? CalibrationStatus::Untested : it->second;
}

}  // namespace hypmix
