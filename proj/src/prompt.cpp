#include "hypmix/prompt.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "hypmix/hashing.hpp"
#include "hypmix/random.hpp"

namespace hypmix {

std::string to_string(FragmentKind kind) {
  switch (kind) {
    case FragmentKind::Global: return "global";
    case FragmentKind::Environment: return "environment";
    case FragmentKind::LearnerPersona: return "learner_persona";
    case FragmentKind::LcModel: return "lc_model";
    case FragmentKind::State: return "state";
    case FragmentKind::ActionMenu: return "action_menu";
    case FragmentKind::OutputFormat: return "output_format";
  }
  return "unknown";
}

const std::string& default_global_prompt() {
  static const std::string text =
      "You are a simulated learner agent working in a learning environment designed to test your understanding of "
      "Kepler's First Law. Given a scenario in the learning environment, you will generate the next action that a 13 "
      "year old human learner who possesses the given learner characteristics would most likely perform in the given "
      "situation. The stipulated class period for this activity is 40 minutes. The teacher has instructed you to work "
      "on the activity for the entire class period.";
  return text;
}

const std::string& default_output_format() {
  static const std::string text =
      "Before answering, think step by step about what this learner would most plausibly do next, using chain-of-"
      "thought reasoning grounded in the learner characteristics above. Write that reasoning first. Then end your "
      "response with one final line of the form\n"
      "ACTION: <action label>\n"
      "where <action label> is copied exactly from the list of available actions. For a submission, replace the "
      "\"...\" with your three arithmetic expressions separated by commas.";
  return text;
}

SimulationPrompt assemble(std::vector<PromptFragment> fragments) {
  std::stable_sort(fragments.begin(), fragments.end(),
                   [](const auto& a, const auto& b) { return static_cast<int>(a.kind) < static_cast<int>(b.kind); });
  SimulationPrompt p;
  for (std::size_t i = 0; i < fragments.size(); ++i) {
    if (fragments[i].text.empty()) {
      throw std::invalid_argument("prompt fragment '" + to_string(fragments[i].kind) + "' is empty");
    }
    if (i) p.rendered += kFragmentSeparator;
    p.rendered += fragments[i].text;
  }
  p.fragments = std::move(fragments);
  p.fingerprint = sha256_hex(p.rendered);
  return p;
}

std::string render_persona(const LearnerModel& model) {
  std::vector<const LearnerCharacteristic*> sorted;
  for (const auto& c : model.characteristics) sorted.push_back(&c);
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
  std::string out;
  for (const auto* c : sorted) {
    if (!out.empty()) out += "\n";
    const auto it = model.persona.find(c->id);
    const int level = it == model.persona.end() ? kDefaultPersonaLevel : it->second;
    out += c->display_name + ": " + std::to_string(level) + "/" + std::to_string(kMaxPersonaLevel);
  }
  return out;
}

std::string render_action_menu(const ActionLabeling& labeling) {
  std::string out = "Available actions (choose exactly one):";
  for (auto c : canonical_actions()) out += "\n- " + labeling.menu_label(c);
  return out;
}

std::string render_lc_model(const LearnerModel& model, const std::string& characteristic_id,
                            const ActionLabeling& labeling, const HypothesisRegistry& registry,
                            const PromptConfig& config, std::uint64_t pick_seed) {
  const auto* c = model.characteristic(characteristic_id);
  if (!c) throw std::invalid_argument("model has no characteristic " + characteristic_id);
  std::string out = "Learner characteristic model: " + c->display_name + "\n";
  out += c->display_name + " is " + c->definition + ".";
  const auto& hyps = model.models.at(characteristic_id).hypotheses;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    const auto& cls = registry.at(hyps[i].class_id);
    const auto rev = config.template_revisions.find(cls.id);
    const int revision = rev == config.template_revisions.end() ? cls.latest_revision() : rev->second;
    out += "\n" + instantiate_template(cls, revision, hyps[i], labeling, mix_seed(pick_seed, {i}));
  }
  return out;
}

SimulationPrompt compose(const LearnerModel& model, const EnvState& state, const ActionLabeling& labeling,
                         const HypothesisRegistry& registry, const PromptConfig& config, std::uint64_t pick_seed) {
  std::vector<PromptFragment> fragments;
  fragments.push_back({FragmentKind::Global, config.global_text, "global"});
  fragments.push_back({FragmentKind::Environment, config.environment_text, "environment"});

  std::string persona = config.learner_intro.empty() ? std::string() : config.learner_intro + "\n";
  persona += "Learner persona (each characteristic is rated from 1 to 10):\n" + render_persona(model);
  fragments.push_back({FragmentKind::LearnerPersona, persona, "learner"});

  std::uint64_t block = 0;
  for (const auto& c : model.characteristics) {
    std::string source = "lc:" + c.id;
    for (const auto& h : model.models.at(c.id).hypotheses) source += " " + h.id;
    fragments.push_back({FragmentKind::LcModel,
                         render_lc_model(model, c.id, labeling, registry, config, mix_seed(pick_seed, {block++})),
                         source});
  }
  fragments.push_back({FragmentKind::State, render_state(state), "state"});
  fragments.push_back({FragmentKind::ActionMenu, render_action_menu(labeling), "labeling:" + labeling.id()});
  fragments.push_back({FragmentKind::OutputFormat, config.output_format, "output_format"});
  return assemble(std::move(fragments));
}

}  // namespace hypmix
