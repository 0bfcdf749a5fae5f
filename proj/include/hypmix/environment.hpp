#pragma once

// The HoloOrbits task as seen by the simulator: five key points, the ten
// distance measurements between them, submission/exit actions, and the
// surface vocabularies ("labelings") the actions are shown to the model in.

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hypmix {

enum class KeyPoint : std::uint8_t { A, P, F1, F2, X };

inline constexpr std::array<KeyPoint, 5> kKeyPoints{KeyPoint::A, KeyPoint::P, KeyPoint::F1, KeyPoint::F2,
                                                    KeyPoint::X};

std::string_view key_point_token(KeyPoint p);  // "a", "p", "f1", "f2", "x"
std::string_view key_point_name(KeyPoint p);   // "aphelion (a)", ...

// Unordered pair of distinct key points. (A,F1) and (F1,A) compare equal.
class PointPair {
 public:
  static constexpr std::size_t kCount = 10;

  PointPair(KeyPoint a, KeyPoint b);  // throws std::invalid_argument when a == b

  static PointPair from_index(std::size_t index);
  static const std::array<PointPair, kCount>& all();

  // Position in the canonical measurement order (0..9).
  std::size_t index() const noexcept { return index_; }
  // Members in the order the canonical token names them ("f1-x" -> F1, X).
  KeyPoint first() const noexcept;
  KeyPoint second() const noexcept;
  std::string token() const;  // "f1-x"

  friend bool operator==(PointPair, PointPair) = default;
  friend auto operator<=>(PointPair, PointPair) = default;

 private:
  explicit PointPair(std::size_t index) : index_(index) {}
  std::size_t index_;
};

enum class ActionKind : std::uint8_t { Measure, Submit, Exit };

// One of the 12 statistical action categories. Submit is a single category
// regardless of its argument expressions.
class ActionCategory {
 public:
  static constexpr std::size_t kCount = 12;
  static constexpr std::size_t kSubmitIndex = 10;
  static constexpr std::size_t kExitIndex = 11;

  constexpr ActionCategory() = default;
  static ActionCategory from_index(std::size_t index);
  static ActionCategory measure(PointPair pair) { return ActionCategory(pair.index()); }
  static ActionCategory submit() { return ActionCategory(kSubmitIndex); }
  static ActionCategory exit() { return ActionCategory(kExitIndex); }
  // Accepts canonical tokens: "measure-f1-x" (either point order), "submit", "exit".
  static std::optional<ActionCategory> from_token(std::string_view token);

  std::size_t index() const noexcept { return index_; }
  ActionKind kind() const noexcept;
  PointPair pair() const;  // throws std::logic_error unless kind() == Measure
  std::string token() const;

  friend bool operator==(ActionCategory, ActionCategory) = default;
  friend auto operator<=>(ActionCategory, ActionCategory) = default;

 private:
  explicit constexpr ActionCategory(std::size_t index) : index_(index) {}
  std::size_t index_ = 0;
};

struct Action {
  ActionCategory category;
  // Verbatim expressions for Submit; empty for every other kind.
  std::array<std::string, 3> submit_args;

  static Action measure(PointPair pair) { return {ActionCategory::measure(pair), {}}; }
  static Action submit(std::string x, std::string y, std::string z) {
    return {ActionCategory::submit(), {std::move(x), std::move(y), std::move(z)}};
  }
  static Action exit() { return {ActionCategory::exit(), {}}; }

  friend bool operator==(const Action&, const Action&) = default;
};

// Ten measurements in table order, then Submit, then Exit.
const std::vector<ActionCategory>& canonical_actions();
const std::vector<ActionCategory>& measurement_actions();
// The six measurements useful for checking that the orbit is an ellipse.
const std::vector<ActionCategory>& productive_measurement_set();

// A bijective surface vocabulary over the 12 categories. The Submit entry is
// the bare verb ("SUBMIT"); arguments render in a parenthesized slot after it.
class ActionLabeling {
 public:
  ActionLabeling(std::string id, std::array<std::string, ActionCategory::kCount> labels);

  static const ActionLabeling& builtin_a();
  static const ActionLabeling& builtin_b();
  static const ActionLabeling& builtin_c();
  // nullptr for ids other than A, B, C.
  static const ActionLabeling* builtin(std::string_view id);

  const std::string& id() const noexcept { return id_; }
  const std::string& label(ActionCategory c) const { return labels_[c.index()]; }
  // The label as listed in an action menu; Submit shows "(...)".
  std::string menu_label(ActionCategory c) const;

 private:
  std::string id_;
  std::array<std::string, ActionCategory::kCount> labels_;
};

std::string surface_label(const Action& action, const ActionLabeling& labeling);
// Case-insensitive and whitespace-tolerant. Throws UnrecognizedAction.
Action parse_surface(std::string_view label, const ActionLabeling& labeling);

inline constexpr int kClassPeriodMinutes = 40;

struct EnvState {
  std::array<bool, PointPair::kCount> measured{};
  int num_submissions = 0;
  int minutes_elapsed = 0;

  bool is_measured(PointPair p) const { return measured[p.index()]; }
  int measurement_count() const;
  bool valid() const;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

struct IntRange {
  int lo = 0;
  int hi = 0;
  friend bool operator==(const IntRange&, const IntRange&) = default;
};

// Domains the sampler draws from. Time is capped by the class period.
struct StateDomain {
  IntRange minutes{0, kClassPeriodMinutes};
  IntRange submissions{0, 5};
};

// Optional per-field restrictions for sample_states. Unset fields use the
// full domain; measured entries can be forced true or false.
struct StateConstraints {
  std::array<std::optional<bool>, PointPair::kCount> measured{};
  std::optional<IntRange> minutes;
  std::optional<IntRange> submissions;
};

// Draws `count` states uniformly and independently per field. Pure in
// (count, seed, constraints, domain). Throws InvalidConstraint.
std::vector<EnvState> sample_states(std::size_t count, std::uint64_t seed, const StateConstraints& constraints = {},
                                    const StateDomain& domain = {});

std::string render_state(const EnvState& state);

struct Transition {
  EnvState state;
  bool terminal = false;
};

Transition transition(const EnvState& state, const Action& action);

// Named scalar state variables that hypotheses can trend over:
// "number of measurements", "time elapsed", "number of submissions"
// (plus a few aliases). nullopt for unknown names.
std::optional<double> state_variable(const EnvState& state, std::string_view name);
bool is_state_variable(std::string_view name);

// Everything an environment spec file can configure.
struct EnvironmentSpec {
  std::string description;
  std::map<std::string, ActionLabeling> labelings;
  StateDomain domain;

  static EnvironmentSpec builtin();
  const ActionLabeling& labeling(const std::string& id) const;  // throws InvalidLabeling
};

}  // namespace hypmix
