#include "hypmix/environment.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

#include "hypmix/errors.hpp"
#include "hypmix/random.hpp"

namespace hypmix {
namespace {

struct PairDef {
  KeyPoint first;
  KeyPoint second;
};

// Canonical measurement order; matches the row order of the labeling table.
constexpr std::array<PairDef, PointPair::kCount> kPairs{{
    {KeyPoint::F1, KeyPoint::X},
    {KeyPoint::A, KeyPoint::F1},
    {KeyPoint::A, KeyPoint::P},
    {KeyPoint::A, KeyPoint::F2},
    {KeyPoint::A, KeyPoint::X},
    {KeyPoint::F1, KeyPoint::P},
    {KeyPoint::F1, KeyPoint::F2},
    {KeyPoint::F2, KeyPoint::P},
    {KeyPoint::F2, KeyPoint::X},
    {KeyPoint::P, KeyPoint::X},
}};

std::string normalize_label(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    auto u = static_cast<unsigned char>(c);
    if (std::isspace(u)) continue;
    out.push_back(static_cast<char>(std::toupper(u)));
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Models like to decorate the label: **EXIT**, `QUIT`, "CALC(a, p)." and so on.
std::string_view strip_decoration(std::string_view s) {
  s = trim(s);
  auto decoration = [](char c) { return c == '*' || c == '`' || c == '"' || c == '\'' || c == '<' || c == '>'; };
  while (!s.empty() && decoration(s.front())) s.remove_prefix(1);
  while (!s.empty() && (decoration(s.back()) || s.back() == '.')) s.remove_suffix(1);
  return trim(s);
}

// Splits on commas that are not nested inside parentheses.
std::vector<std::string> split_top_level(std::string_view s) {
  std::vector<std::string> parts;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') --depth;
    if (s[i] == ',' && depth == 0) {
      parts.emplace_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  parts.emplace_back(trim(s.substr(start)));
  return parts;
}

void check_range(const IntRange& r, const IntRange& domain, const char* field) {
  if (r.lo > r.hi || r.lo < domain.lo || r.hi > domain.hi) {
    std::ostringstream os;
    os << field << " range [" << r.lo << ", " << r.hi << "] is empty or outside [" << domain.lo << ", " << domain.hi
       << "]";
    throw InvalidConstraint(os.str());
  }
}

int draw_in(Rng& rng, const IntRange& r) {
  return r.lo + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(r.hi - r.lo) + 1));
}

}  // namespace

std::string_view key_point_token(KeyPoint p) {
  switch (p) {
    case KeyPoint::A: return "a";
    case KeyPoint::P: return "p";
    case KeyPoint::F1: return "f1";
    case KeyPoint::F2: return "f2";
    case KeyPoint::X: return "x";
  }
  return "?";
}

std::string_view key_point_name(KeyPoint p) {
  switch (p) {
    case KeyPoint::A: return "aphelion (a)";
    case KeyPoint::P: return "perihelion (p)";
    case KeyPoint::F1: return "focus 1 (f1)";
    case KeyPoint::F2: return "focus 2 (f2)";
    case KeyPoint::X: return "the fixed point on the orbit (x)";
  }
  return "?";
}

PointPair::PointPair(KeyPoint a, KeyPoint b) : index_(0) {
  if (a == b) throw std::invalid_argument("a point pair needs two distinct key points");
  for (std::size_t i = 0; i < kPairs.size(); ++i) {
    if ((kPairs[i].first == a && kPairs[i].second == b) || (kPairs[i].first == b && kPairs[i].second == a)) {
      index_ = i;
      return;
    }
  }
}

PointPair PointPair::from_index(std::size_t index) {
  if (index >= kCount) throw std::out_of_range("point pair index out of range");
  return PointPair(index);
}

const std::array<PointPair, PointPair::kCount>& PointPair::all() {
  static const std::array<PointPair, kCount> pairs = [] {
    std::array<PointPair, kCount> out{PointPair(0), PointPair(1), PointPair(2), PointPair(3), PointPair(4),
                                      PointPair(5), PointPair(6), PointPair(7), PointPair(8), PointPair(9)};
    return out;
  }();
  return pairs;
}

KeyPoint PointPair::first() const noexcept { return kPairs[index_].first; }
KeyPoint PointPair::second() const noexcept { return kPairs[index_].second; }

std::string PointPair::token() const {
  return std::string(key_point_token(first())) + "-" + std::string(key_point_token(second()));
}

ActionCategory ActionCategory::from_index(std::size_t index) {
  if (index >= kCount) throw std::out_of_range("action category index out of range");
  return ActionCategory(index);
}

std::optional<ActionCategory> ActionCategory::from_token(std::string_view token) {
  std::string t;
  for (char c : trim(token)) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "submit") return submit();
  if (t == "exit") return exit();
  constexpr std::string_view prefix = "measure-";
  if (t.rfind(prefix, 0) != 0) return std::nullopt;
  const std::string rest = t.substr(prefix.size());
  for (KeyPoint a : kKeyPoints) {
    for (KeyPoint b : kKeyPoints) {
      if (a == b) continue;
      if (rest == std::string(key_point_token(a)) + "-" + std::string(key_point_token(b))) {
        return measure(PointPair(a, b));
      }
    }
  }
  return std::nullopt;
}

ActionKind ActionCategory::kind() const noexcept {
  if (index_ == kSubmitIndex) return ActionKind::Submit;
  if (index_ == kExitIndex) return ActionKind::Exit;
  return ActionKind::Measure;
}

PointPair ActionCategory::pair() const {
  if (kind() != ActionKind::Measure) throw std::logic_error("only measurement actions carry a point pair");
  return PointPair::from_index(index_);
}

std::string ActionCategory::token() const {
  switch (kind()) {
    case ActionKind::Submit: return "submit";
    case ActionKind::Exit: return "exit";
    case ActionKind::Measure: break;
  }
  return "measure-" + pair().token();
}

const std::vector<ActionCategory>& canonical_actions() {
  static const std::vector<ActionCategory> all = [] {
    std::vector<ActionCategory> out;
    for (std::size_t i = 0; i < ActionCategory::kCount; ++i) out.push_back(ActionCategory::from_index(i));
    return out;
  }();
  return all;
}

const std::vector<ActionCategory>& measurement_actions() {
  static const std::vector<ActionCategory> all = [] {
    std::vector<ActionCategory> out;
    for (auto p : PointPair::all()) out.push_back(ActionCategory::measure(p));
    return out;
  }();
  return all;
}

const std::vector<ActionCategory>& productive_measurement_set() {
  using K = KeyPoint;
  static const std::vector<ActionCategory> set{
      ActionCategory::measure({K::F1, K::X}), ActionCategory::measure({K::F2, K::X}),
      ActionCategory::measure({K::F1, K::P}), ActionCategory::measure({K::F2, K::P}),
      ActionCategory::measure({K::A, K::F1}), ActionCategory::measure({K::A, K::F2}),
  };
  return set;
}

ActionLabeling::ActionLabeling(std::string id, std::array<std::string, ActionCategory::kCount> labels)
    : id_(std::move(id)), labels_(std::move(labels)) {
  if (id_.empty()) throw InvalidLabeling("labeling id must not be empty");
  std::vector<std::string> seen;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const std::string norm = normalize_label(labels_[i]);
    if (norm.empty()) throw InvalidLabeling("labeling " + id_ + " has an empty label");
    if (std::find(seen.begin(), seen.end(), norm) != seen.end()) {
      throw InvalidLabeling("labeling " + id_ + " maps two actions to '" + labels_[i] + "'");
    }
    seen.push_back(norm);
  }
  const std::string submit = normalize_label(labels_[ActionCategory::kSubmitIndex]) + "(";
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (i != ActionCategory::kSubmitIndex && normalize_label(labels_[i]).rfind(submit, 0) == 0) {
      throw InvalidLabeling("label '" + labels_[i] + "' collides with the submit slot in labeling " + id_);
    }
  }
}

const ActionLabeling& ActionLabeling::builtin_a() {
  static const ActionLabeling a("A", {"MEASURE-F1-X", "MEASURE-A-F1", "MEASURE-A-P", "MEASURE-A-F2", "MEASURE-A-X",
                                      "MEASURE-F1-P", "MEASURE-F1-F2", "MEASURE-F2-P", "MEASURE-F2-X", "MEASURE-P-X",
                                      "SUBMIT", "EXIT"});
  return a;
}

const ActionLabeling& ActionLabeling::builtin_b() {
  static const ActionLabeling b("B", {"MEASURE-X-F1", "MEASURE-F1-A", "MEASURE-P-A", "MEASURE-F2-A", "MEASURE-X-A",
                                      "MEASURE-P-F1", "MEASURE-F2-F1", "MEASURE-P-F2", "MEASURE-X-F2", "MEASURE-X-P",
                                      "SUBMIT", "QUIT"});
  return b;
}

const ActionLabeling& ActionLabeling::builtin_c() {
  static const ActionLabeling c("C", {"CALC(f1, o)", "CALC(a, f1)", "CALC(a, p)", "CALC(a, f2)", "CALC(a, o)",
                                      "CALC(f1, p)", "CALC(f1, f2)", "CALC(f2, p)", "CALC(f2, x)", "CALC(p, x)",
                                      "SUBMIT-SOLN", "QUIT"});
  return c;
}

const ActionLabeling* ActionLabeling::builtin(std::string_view id) {
  if (id == "A") return &builtin_a();
  if (id == "B") return &builtin_b();
  if (id == "C") return &builtin_c();
  return nullptr;
}

std::string ActionLabeling::menu_label(ActionCategory c) const {
  if (c.kind() == ActionKind::Submit) return label(c) + "(...)";
  return label(c);
}

std::string surface_label(const Action& action, const ActionLabeling& labeling) {
  if (action.category.kind() != ActionKind::Submit) return labeling.label(action.category);
  const auto& args = action.submit_args;
  if (std::all_of(args.begin(), args.end(), [](const std::string& a) { return a.empty(); })) {
    return labeling.menu_label(action.category);
  }
  return labeling.label(action.category) + "(" + args[0] + ", " + args[1] + ", " + args[2] + ")";
}

Action parse_surface(std::string_view label, const ActionLabeling& labeling) {
  const std::string_view cleaned = strip_decoration(label);
  const std::string norm = normalize_label(cleaned);
  if (norm.empty()) throw UnrecognizedAction(std::string(label));

  for (auto c : canonical_actions()) {
    if (c.kind() == ActionKind::Submit) continue;
    if (norm == normalize_label(labeling.label(c))) return Action{c, {}};
  }

  const std::string verb = normalize_label(labeling.label(ActionCategory::submit()));
  if (norm == verb || norm == verb + "()" || norm == verb + "(...)" || norm == verb + "(…)") {
    return Action{ActionCategory::submit(), {}};
  }
  if (norm.rfind(verb + "(", 0) == 0 && norm.back() == ')') {
    const auto open = cleaned.find('(');
    const auto close = cleaned.rfind(')');
    auto parts = split_top_level(cleaned.substr(open + 1, close - open - 1));
    if (parts.size() == 3) return Action::submit(parts[0], parts[1], parts[2]);
  }
  throw UnrecognizedAction(std::string(label));
}

int EnvState::measurement_count() const {
  return static_cast<int>(std::count(measured.begin(), measured.end(), true));
}

bool EnvState::valid() const {
  return num_submissions >= 0 && minutes_elapsed >= 0 && minutes_elapsed <= kClassPeriodMinutes;
}

std::vector<EnvState> sample_states(std::size_t count, std::uint64_t seed, const StateConstraints& constraints,
                                    const StateDomain& domain) {
  if (count == 0) throw InvalidConstraint("state count must be positive");
  check_range(domain.minutes, IntRange{0, kClassPeriodMinutes}, "minutes_elapsed domain");
  if (domain.submissions.lo < 0 || domain.submissions.lo > domain.submissions.hi) {
    throw InvalidConstraint("num_submissions domain is empty or negative");
  }
  const IntRange minutes = constraints.minutes.value_or(domain.minutes);
  const IntRange submissions = constraints.submissions.value_or(domain.submissions);
  check_range(minutes, domain.minutes, "minutes_elapsed");
  check_range(submissions, domain.submissions, "num_submissions");

  Rng rng(seed);
  std::vector<EnvState> states;
  states.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    EnvState s;
    for (std::size_t i = 0; i < PointPair::kCount; ++i) {
      const bool coin = fair_coin(rng);
      s.measured[i] = constraints.measured[i].value_or(coin);
    }
    s.num_submissions = draw_in(rng, submissions);
    s.minutes_elapsed = draw_in(rng, minutes);
    states.push_back(s);
  }
  return states;
}

std::string render_state(const EnvState& state) {
  std::ostringstream os;
  os << "Current state of the activity:\n";
  os << "Distance measurements made so far:\n";
  for (auto p : PointPair::all()) {
    os << "  - " << key_point_name(p.first()) << " to " << key_point_name(p.second()) << ": "
       << (state.is_measured(p) ? "measured" : "not measured") << "\n";
  }
  os << "Solution submissions so far: " << state.num_submissions << "\n";
  os << "Minutes elapsed: " << state.minutes_elapsed << " of " << kClassPeriodMinutes;
  return os.str();
}

Transition transition(const EnvState& state, const Action& action) {
  Transition t{state, false};
  switch (action.category.kind()) {
    case ActionKind::Measure: t.state.measured[action.category.index()] = true; break;
    case ActionKind::Submit: ++t.state.num_submissions; break;
    case ActionKind::Exit: t.terminal = true; break;
  }
  return t;
}

namespace {

enum class StateVar { Measurements, Minutes, Submissions };

std::optional<StateVar> lookup_state_variable(std::string_view name) {
  std::string n;
  for (char c : trim(name)) n.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  std::replace(n.begin(), n.end(), '_', ' ');
  if (n == "number of measurements" || n == "measurements" || n == "measurement count") return StateVar::Measurements;
  if (n == "time elapsed" || n == "minutes elapsed" || n == "number of minutes elapsed") return StateVar::Minutes;
  if (n == "number of submissions" || n == "submissions" || n == "num submissions") return StateVar::Submissions;
  return std::nullopt;
}

}  // namespace

std::optional<double> state_variable(const EnvState& state, std::string_view name) {
  const auto var = lookup_state_variable(name);
  if (!var) return std::nullopt;
  switch (*var) {
    case StateVar::Measurements: return state.measurement_count();
    case StateVar::Minutes: return state.minutes_elapsed;
    case StateVar::Submissions: return state.num_submissions;
  }
  return std::nullopt;
}

bool is_state_variable(std::string_view name) { return lookup_state_variable(name).has_value(); }

EnvironmentSpec EnvironmentSpec::builtin() {
  EnvironmentSpec spec;
  spec.description =
      "The learning environment is HoloOrbits, a simulated planetary system. The learner must check whether the "
      "planet's orbit obeys Kepler's First Law by submitting three arithmetic expressions that should all be equal. "
      "The expressions may combine distances between five key points: the aphelion (a), the perihelion (p), focus 1 "
      "(f1), focus 2 (f2), and a fixed point on the orbit (x). Each distance must be measured before it can be used. "
      "The learner may measure any pair of points, submit a solution, or leave the activity at any time.";
  for (const auto* l : {&ActionLabeling::builtin_a(), &ActionLabeling::builtin_b(), &ActionLabeling::builtin_c()}) {
    spec.labelings.emplace(l->id(), *l);
  }
  return spec;
}

const ActionLabeling& EnvironmentSpec::labeling(const std::string& id) const {
  auto it = labelings.find(id);
  if (it == labelings.end()) throw InvalidLabeling("unknown labeling '" + id + "'");
  return it->second;
}

}  // namespace hypmix
