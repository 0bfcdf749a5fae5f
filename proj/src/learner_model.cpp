#include "hypmix/learner_model.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "hypmix/errors.hpp"

namespace hypmix {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void replace_all(std::string& text, const std::string& from, const std::string& to) {
  if (from.empty()) return;
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
}

std::string slug(std::string s) {
  for (auto& c : s) {
    if (c == ' ') c = '_';
  }
  return s;
}

void add_characteristic(LearnerModel& m, const LearnerCharacteristic& c, int level) {
  if (m.characteristic(c.id)) return;
  m.characteristics.push_back(c);
  std::sort(m.characteristics.begin(), m.characteristics.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  m.persona[c.id] = level;
  m.models[c.id] = CharacteristicModel{c.id, {}};
}

void drop_characteristic(LearnerModel& m, const std::string& id) {
  std::erase_if(m.characteristics, [&](const auto& c) { return c.id == id; });
  m.persona.erase(id);
  m.models.erase(id);
}

// Finds the hypothesis and returns (characteristic id, position) or throws.
std::pair<std::string, std::size_t> locate(const LearnerModel& m, const std::string& hyp_id) {
  for (const auto& [cid, cm] : m.models) {
    for (std::size_t i = 0; i < cm.hypotheses.size(); ++i) {
      if (cm.hypotheses[i].id == hyp_id) return {cid, i};
    }
  }
  throw UnknownHypothesis(hyp_id);
}

const LearnerCharacteristic& resolve_characteristic(const LearnerModel& m, const Catalog& catalog,
                                                    const std::string& id) {
  if (const auto* c = m.characteristic(id)) return *c;
  if (const auto* c = catalog.find_characteristic(id)) return *c;
  throw UnknownCharacteristic(id);
}

// Takes the catalog's identity for rewritten content, or derives a new one.
void assign_identity(MDHyp& hyp, const Catalog& catalog, const std::string& base_id, const std::string& suffix) {
  if (const auto* known = catalog.find_by_content(hyp)) {
    hyp.id = known->id;
    hyp.calibration_status = known->calibration_status;
  } else {
    hyp.id = derived_hypothesis_id(base_id, suffix);
    hyp.calibration_status = CalibrationStatus::Untested;
  }
}

LearnerModel apply(const LearnerModel& model, const edit::Append& op, const Catalog& catalog) {
  const auto* hyp = catalog.find_hypothesis(op.hypothesis);
  if (!hyp) throw UnknownHypothesis(op.hypothesis);
  if (model.contains(op.hypothesis)) throw InvalidEdit("hypothesis " + op.hypothesis + " is already in the model");
  LearnerModel out = model;
  add_characteristic(out, resolve_characteristic(model, catalog, hyp->characteristic), kDefaultPersonaLevel);
  out.models[hyp->characteristic].hypotheses.push_back(*hyp);
  return out;
}

LearnerModel apply(const LearnerModel& model, const edit::Remove& op, const Catalog&) {
  const auto [cid, pos] = locate(model, op.hypothesis);
  LearnerModel out = model;
  auto& list = out.models[cid].hypotheses;
  list.erase(list.begin() + static_cast<std::ptrdiff_t>(pos));
  if (list.empty()) drop_characteristic(out, cid);
  return out;
}

LearnerModel apply(const LearnerModel& model, const edit::VariableSwap& op, const Catalog& catalog) {
  const auto [cid, pos] = locate(model, op.hypothesis);
  const MDHyp& source = model.models.at(cid).hypotheses[pos];
  if (!source.trend_variable || *source.trend_variable != op.old_variable) {
    throw InvalidEdit("hypothesis " + op.hypothesis + " does not trend over '" + op.old_variable + "'");
  }
  if (!is_state_variable(op.new_variable)) {
    throw InvalidEdit("'" + op.new_variable + "' is not a known state variable");
  }
  if (op.new_variable == op.old_variable) throw InvalidEdit("variable swap needs two different variables");

  MDHyp swapped = source;
  swapped.trend_variable = op.new_variable;
  replace_all(swapped.behavior_short, op.old_variable, op.new_variable);
  replace_all(swapped.behavior_long, op.old_variable, op.new_variable);
  assign_identity(swapped, catalog, source.id, slug(op.new_variable));
  if (swapped.id != source.id && model.contains(swapped.id)) {
    throw InvalidEdit("variable swap would duplicate hypothesis " + swapped.id);
  }

  LearnerModel out = model;
  out.models[cid].hypotheses[pos] = std::move(swapped);
  return out;
}

LearnerModel apply(const LearnerModel& model, const edit::LCSwap& op, const Catalog& catalog) {
  const auto [cid, pos] = locate(model, op.hypothesis);
  if (cid == op.new_characteristic) {
    throw InvalidEdit("hypothesis " + op.hypothesis + " already targets " + cid);
  }
  const auto& target = resolve_characteristic(model, catalog, op.new_characteristic);

  MDHyp moved = model.models.at(cid).hypotheses[pos];
  moved.characteristic = target.id;
  assign_identity(moved, catalog, op.hypothesis, target.id);
  if (model.contains(moved.id)) throw InvalidEdit("LC swap would duplicate hypothesis " + moved.id);

  LearnerModel out = model;
  const int carried_level = model.persona.at(cid);
  auto& list = out.models[cid].hypotheses;
  list.erase(list.begin() + static_cast<std::ptrdiff_t>(pos));
  if (list.empty()) drop_characteristic(out, cid);
  add_characteristic(out, target, carried_level);
  out.models[target.id].hypotheses.push_back(std::move(moved));
  return out;
}

LearnerModel apply(const LearnerModel& model, const edit::Combine& op, const Catalog&) {
  LearnerModel out = model;
  const LearnerModel& other = op.other;
  for (const auto& c : other.characteristics) {
    if (const auto* mine = out.characteristic(c.id)) {
      if (!(*mine == c)) throw InvalidEdit("characteristic " + c.id + " is defined differently in the two models");
      const int a = out.persona.at(c.id);
      const int b = other.persona.at(c.id);
      if (a != b) {
        throw PersonaConflict("characteristic " + c.id + " has persona level " + std::to_string(a) + " in one model and " +
                              std::to_string(b) + " in the other");
      }
    } else {
      add_characteristic(out, c, other.persona.at(c.id));
    }
  }
  for (const auto& [cid, cm] : other.models) {
    auto& list = out.models[cid].hypotheses;
    for (const auto& h : cm.hypotheses) {
      if (const auto* existing = out.find_hypothesis(h.id)) {
        if (!existing->same_content(h)) {
          throw InvalidEdit("hypothesis " + h.id + " has different content in the two models");
        }
        continue;
      }
      list.push_back(h);
    }
  }
  return out;
}

LearnerModel apply(const LearnerModel& model, const edit::ExSituIsolate& op, const Catalog&) {
  const auto [cid, pos] = locate(model, op.hypothesis);
  LearnerModel out;
  add_characteristic(out, *model.characteristic(cid), model.persona.at(cid));
  out.models[cid].hypotheses.push_back(model.models.at(cid).hypotheses[pos]);
  return out;
}

}  // namespace

const LearnerCharacteristic* LearnerModel::characteristic(const std::string& id) const {
  for (const auto& c : characteristics) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

const MDHyp* LearnerModel::find_hypothesis(const std::string& id) const {
  for (const auto& [_, cm] : models) {
    for (const auto& h : cm.hypotheses) {
      if (h.id == id) return &h;
    }
  }
  return nullptr;
}

std::vector<const MDHyp*> LearnerModel::hypotheses() const {
  std::vector<const MDHyp*> out;
  for (const auto& [_, cm] : models) {
    for (const auto& h : cm.hypotheses) out.push_back(&h);
  }
  return out;
}

std::vector<std::string> LearnerModel::hypothesis_ids() const {
  std::vector<std::string> out;
  for (const auto* h : hypotheses()) out.push_back(h->id);
  return out;
}

std::vector<Violation> validate(const LearnerModel& model) {
  std::vector<Violation> out;
  std::set<std::string> ids;
  for (const auto& c : model.characteristics) {
    if (c.id.empty()) out.push_back({"characteristics", "characteristic id must not be empty"});
    if (!ids.insert(c.id).second) out.push_back({"characteristics." + c.id, "duplicate characteristic id"});
    if (c.definition.empty()) out.push_back({"characteristics." + c.id + ".definition", "definition must not be empty"});
  }
  for (const auto& id : ids) {
    auto it = model.persona.find(id);
    if (it == model.persona.end()) {
      out.push_back({"persona." + id, "every characteristic needs exactly one persona level"});
    } else if (it->second < kMinPersonaLevel || it->second > kMaxPersonaLevel) {
      out.push_back({"persona." + id, "level " + std::to_string(it->second) + " is outside [" +
                                          std::to_string(kMinPersonaLevel) + ", " + std::to_string(kMaxPersonaLevel) +
                                          "]"});
    }
    auto mt = model.models.find(id);
    if (mt == model.models.end()) {
      out.push_back({"models." + id, "every characteristic needs a characteristic model"});
    } else if (mt->second.hypotheses.empty()) {
      out.push_back({"models." + id, "characteristic model holds no hypotheses"});
    }
  }
  for (const auto& [id, _] : model.persona) {
    if (!ids.count(id)) out.push_back({"persona." + id, "persona level for a characteristic not in the model"});
  }
  std::set<std::string> hyp_ids;
  for (const auto& [id, cm] : model.models) {
    if (!ids.count(id)) out.push_back({"models." + id, "characteristic model for a characteristic not in the model"});
    if (cm.characteristic != id) out.push_back({"models." + id, "characteristic model is keyed under the wrong id"});
    for (const auto& h : cm.hypotheses) {
      if (!hyp_ids.insert(h.id).second) out.push_back({"models." + id + "." + h.id, "duplicate hypothesis id"});
      if (h.characteristic != id) {
        out.push_back({"models." + id + "." + h.id, "hypothesis targets characteristic " + h.characteristic});
      }
    }
  }
  return out;
}

const MDHyp* Catalog::find_hypothesis(const std::string& id) const {
  for (const auto& h : hypotheses) {
    if (h.id == id) return &h;
  }
  return nullptr;
}

const MDHyp* Catalog::find_by_content(const MDHyp& hyp) const {
  for (const auto& h : hypotheses) {
    if (h.same_content(hyp)) return &h;
  }
  return nullptr;
}

const LearnerCharacteristic* Catalog::find_characteristic(const std::string& id) const {
  auto it = characteristics.find(id);
  return it == characteristics.end() ? nullptr : &it->second;
}

Catalog Catalog::builtin() {
  Catalog c;
  c.registry = HypothesisRegistry::builtin();
  c.characteristics["geometry_proficiency"] = {
      "geometry_proficiency", "Geometry Proficiency",
      "the ability to apply the knowledge of the properties of common shapes to solve problems"};
  c.characteristics["persistence"] = {
      "persistence", "Persistence",
      "maintaining a sustained effort toward completion of a goal-directed task despite challenges or difficulties"};
  c.hypotheses = builtin_hypotheses();
  return c;
}

LearnerModel make_model(const Catalog& catalog, const std::vector<std::string>& hypothesis_ids,
                        const std::map<std::string, int>& levels) {
  LearnerModel m;
  for (const auto& id : hypothesis_ids) {
    const auto* h = catalog.find_hypothesis(id);
    if (!h) throw UnknownHypothesis(id);
    const auto* c = catalog.find_characteristic(h->characteristic);
    if (!c) throw UnknownCharacteristic(h->characteristic);
    auto lvl = levels.find(c->id);
    add_characteristic(m, *c, lvl == levels.end() ? kDefaultPersonaLevel : lvl->second);
    m.models[c->id].hypotheses.push_back(*h);
  }
  return m;
}

std::string edit_kind(const EditOperation& op) {
  return std::visit(overloaded{
                        [](const edit::Append&) { return std::string("append"); },
                        [](const edit::Remove&) { return std::string("remove"); },
                        [](const edit::VariableSwap&) { return std::string("variable_swap"); },
                        [](const edit::LCSwap&) { return std::string("lc_swap"); },
                        [](const edit::Combine&) { return std::string("combine"); },
                        [](const edit::ExSituIsolate&) { return std::string("ex_situ_isolate"); },
                    },
                    op);
}

std::string describe(const EditOperation& op) {
  return std::visit(
      overloaded{
          [](const edit::Append& o) { return "Append(" + o.hypothesis + ")"; },
          [](const edit::Remove& o) { return "Remove(" + o.hypothesis + ")"; },
          [](const edit::VariableSwap& o) {
            return "VariableSwap(" + o.hypothesis + ": " + o.old_variable + " -> " + o.new_variable + ")";
          },
          [](const edit::LCSwap& o) { return "LCSwap(" + o.hypothesis + " -> " + o.new_characteristic + ")"; },
          [](const edit::Combine& o) { return "Combine(" + (o.other_ref.empty() ? std::string("model") : o.other_ref) + ")"; },
          [](const edit::ExSituIsolate& o) { return "ExSituIsolate(" + o.hypothesis + ")"; },
      },
      op);
}

LearnerModel apply_edit(const LearnerModel& model, const EditOperation& op, const Catalog& catalog) {
  return std::visit([&](const auto& o) { return apply(model, o, catalog); }, op);
}

std::string derived_hypothesis_id(const std::string& base_id, const std::string& suffix) {
  return base_id + "@" + suffix;
}

std::string update_rule_to_mdh(const UpdateRule& rule) {
  if (rule.action.empty() || rule.characteristic.empty()) {
    throw std::invalid_argument("update rule needs an action and a characteristic");
  }
  const bool up = rule.direction == Direction::Increasing;
  const std::string phrase = characteristic_phrase(rule.characteristic);
  std::string text = "Learners with a " + std::string(up ? "high" : "low") + " " + phrase +
                     " are more likely to perform " + rule.action;
  if (!rule.conditions.empty()) text += " when " + rule.conditions;
  text += " than learners with a " + std::string(up ? "low" : "high") + " " + phrase + ".";
  return text;
}

}  // namespace hypmix
