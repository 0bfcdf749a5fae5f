#pragma once

// Offline stand-in for the language model: a seeded softmax policy over the
// 12 canonical actions whose logits are linear in persona levels and state
// variables (or follow an explicit per-level table).

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hypmix/environment.hpp"
#include "hypmix/llm_backend.hpp"

namespace hypmix {

using ActionDistribution = std::array<double, ActionCategory::kCount>;

// Adds to the logit of every action in `actions`:
//   characteristic term: slope * (level - center), or level_offsets[level - 1]
//   state term:          slope * (state_variable - center)
struct PolicyTerm {
  std::vector<ActionCategory> actions;
  std::optional<std::string> characteristic;
  std::optional<std::string> state_variable;
  double slope = 0.0;
  double center = 0.0;
  std::vector<double> level_offsets;  // indexed by level - 1; overrides slope when non-empty
};

struct SyntheticPolicy {
  std::string name = "policy";
  ActionDistribution base{};  // base logit per canonical action
  std::vector<PolicyTerm> terms;
  // Level assumed for characteristics the persona does not mention.
  int default_level = 5;

  ActionDistribution logits(const std::map<std::string, int>& persona, const EnvState& state) const;
  ActionDistribution distribution(const std::map<std::string, int>& persona, const EnvState& state) const;
};

// All logits zero: every action has probability 1/12.
SyntheticPolicy uniform_policy();

// Policy where the listed actions jointly have probability
// group_probability[level - 1] (spread evenly inside the group, the rest spread
// evenly over the other actions), as a function of one characteristic.
SyntheticPolicy group_probability_policy(const std::vector<ActionCategory>& group, const std::string& characteristic,
                                         const std::vector<double>& group_probability);

// Chooses a policy by the hypotheses present in the simulated model: the
// first rule whose every listed hypothesis is present wins.
struct PolicyRule {
  std::vector<std::string> when_model_contains;
  SyntheticPolicy policy;
};

struct PolicySchedule {
  SyntheticPolicy default_policy = uniform_policy();
  std::vector<PolicyRule> rules;

  const SyntheticPolicy& select(const std::vector<std::string>& hypothesis_ids) const;
};

// Index drawn from a distribution with one uniform variate from `seed`.
ActionCategory sample_category(const ActionDistribution& dist, std::uint64_t seed);

// One simulated answer: a short templated rationale and a final ACTION line.
GenerationResponse synthetic_sample(const SyntheticPolicy& policy, const std::map<std::string, int>& persona,
                                    const EnvState& state, std::uint64_t seed, const ActionLabeling& labeling);

class SyntheticBackend : public Backend {
 public:
  explicit SyntheticBackend(PolicySchedule schedule) : schedule_(std::move(schedule)) {}
  explicit SyntheticBackend(SyntheticPolicy policy) : schedule_{std::move(policy), {}} {}

  // Requires request.context; throws BackendUnavailable without it.
  GenerationResponse complete(const GenerationRequest& request) override;
  std::string name() const override { return "synthetic"; }

  const PolicySchedule& schedule() const noexcept { return schedule_; }

 private:
  PolicySchedule schedule_;
};

}  // namespace hypmix
