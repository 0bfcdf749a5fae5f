#pragma once

// Builds the simulation prompt from its fragments:
//   global, environment, learner persona, one block per characteristic model,
//   state, action menu, output format
// joined by one blank line, in exactly that order.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hypmix/environment.hpp"
#include "hypmix/hypothesis.hpp"
#include "hypmix/learner_model.hpp"

namespace hypmix {

enum class FragmentKind { Global, Environment, LearnerPersona, LcModel, State, ActionMenu, OutputFormat };

std::string to_string(FragmentKind kind);

struct PromptFragment {
  FragmentKind kind = FragmentKind::Global;
  std::string text;
  std::string source;  // e.g. "global", "class:mono@1"
  friend bool operator==(const PromptFragment&, const PromptFragment&) = default;
};

struct SimulationPrompt {
  std::vector<PromptFragment> fragments;
  std::string rendered;
  std::string fingerprint;  // sha256 of rendered
};

inline constexpr std::string_view kFragmentSeparator = "\n\n";
inline constexpr std::string_view kActionSentinel = "ACTION:";

const std::string& default_global_prompt();
const std::string& default_output_format();

struct PromptConfig {
  std::string global_text = default_global_prompt();
  std::string environment_text;  // required
  std::string learner_intro;     // optional text ahead of the persona lines
  std::string output_format = default_output_format();
  // class id -> template revision; classes not listed use their latest revision.
  std::map<std::string, int> template_revisions;
};

// Orders fragments canonically (stable by kind) and renders them. Throws
// std::invalid_argument for an empty fragment.
SimulationPrompt assemble(std::vector<PromptFragment> fragments);

// "<display name>: <level>/10" per characteristic, sorted by id.
std::string render_persona(const LearnerModel& model);

std::string render_action_menu(const ActionLabeling& labeling);

// Text of one characteristic model: a header and its hypotheses' templates.
std::string render_lc_model(const LearnerModel& model, const std::string& characteristic_id,
                            const ActionLabeling& labeling, const HypothesisRegistry& registry,
                            const PromptConfig& config, std::uint64_t pick_seed);

// Propagates MissingSlot. pick_seed feeds {random_action} slots.
SimulationPrompt compose(const LearnerModel& model, const EnvState& state, const ActionLabeling& labeling,
                         const HypothesisRegistry& registry, const PromptConfig& config, std::uint64_t pick_seed = 0);

}  // namespace hypmix
