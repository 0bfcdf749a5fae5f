#pragma once

// Learner model L = (characteristics, persona levels, characteristic models)
// and the edit operations that move between snapshots of it.

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hypmix/hypothesis.hpp"

namespace hypmix {

inline constexpr int kDefaultPersonaLevel = 5;

struct LearnerCharacteristic {
  std::string id;
  std::string display_name;
  std::string definition;
  friend bool operator==(const LearnerCharacteristic&, const LearnerCharacteristic&) = default;
};

struct CharacteristicModel {
  std::string characteristic;
  std::vector<MDHyp> hypotheses;
  friend bool operator==(const CharacteristicModel&, const CharacteristicModel&) = default;
};

// A snapshot. Hypotheses are held by value so a snapshot stays meaningful
// after the catalog it was built from changes.
struct LearnerModel {
  std::vector<LearnerCharacteristic> characteristics;  // sorted by id
  std::map<std::string, int> persona;
  std::map<std::string, CharacteristicModel> models;

  const LearnerCharacteristic* characteristic(const std::string& id) const;
  const MDHyp* find_hypothesis(const std::string& id) const;
  bool contains(const std::string& hypothesis_id) const { return find_hypothesis(hypothesis_id) != nullptr; }
  // Characteristic order, then list order within each characteristic model.
  std::vector<const MDHyp*> hypotheses() const;
  std::vector<std::string> hypothesis_ids() const;

  friend bool operator==(const LearnerModel&, const LearnerModel&) = default;
};

struct Violation {
  std::string field;
  std::string rule;
  std::string to_string() const { return field + ": " + rule; }
};

// Empty iff every structural invariant holds.
std::vector<Violation> validate(const LearnerModel& model);

// What edits can draw on: known characteristics, hypotheses, and classes.
struct Catalog {
  HypothesisRegistry registry;
  std::map<std::string, LearnerCharacteristic> characteristics;
  std::vector<MDHyp> hypotheses;

  const MDHyp* find_hypothesis(const std::string& id) const;
  const MDHyp* find_by_content(const MDHyp& hyp) const;
  const LearnerCharacteristic* find_characteristic(const std::string& id) const;

  // Built-in classes, the two HoloOrbits characteristics, and H_G1/H_P1/H_P2/H_G2.
  static Catalog builtin();
};

// Builds a model holding the named catalog hypotheses at the given levels
// (default level for characteristics not in `levels`).
LearnerModel make_model(const Catalog& catalog, const std::vector<std::string>& hypothesis_ids,
                        const std::map<std::string, int>& levels = {});

namespace edit {
struct Append {
  std::string hypothesis;
};
struct Remove {
  std::string hypothesis;
};
struct VariableSwap {
  std::string hypothesis;
  std::string old_variable;
  std::string new_variable;
};
struct LCSwap {
  std::string hypothesis;
  std::string new_characteristic;
};
struct Combine {
  LearnerModel other;
  std::string other_ref;  // graph node id, informational
};
struct ExSituIsolate {
  std::string hypothesis;
};
}  // namespace edit

using EditOperation =
    std::variant<edit::Append, edit::Remove, edit::VariableSwap, edit::LCSwap, edit::Combine, edit::ExSituIsolate>;

std::string edit_kind(const EditOperation& op);  // "append", "variable_swap", ...
std::string describe(const EditOperation& op);

// Returns the edited snapshot; `model` is untouched. Throws
// UnknownHypothesis, UnknownCharacteristic, PersonaConflict, InvalidEdit.
LearnerModel apply_edit(const LearnerModel& model, const EditOperation& op, const Catalog& catalog);

// Identifier the edit gives to a rewritten hypothesis (VariableSwap, LCSwap)
// when the catalog has no hypothesis with the same content.
std::string derived_hypothesis_id(const std::string& base_id, const std::string& suffix);

struct UpdateRule {
  std::string action;
  std::string conditions;
  Direction direction = Direction::Increasing;
  std::string characteristic;
  std::string magnitude;
};

// "If the learner performs ACTION under CONDITIONS, then increase/decrease
// CHARACTERISTIC by VALUE" rewritten as a hypothesis sentence. The magnitude
// does not survive the rewrite.
std::string update_rule_to_mdh(const UpdateRule& rule);

}  // namespace hypmix
