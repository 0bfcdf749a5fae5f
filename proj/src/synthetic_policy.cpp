#include "hypmix/synthetic_policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hypmix/errors.hpp"
#include "hypmix/random.hpp"

namespace hypmix {
namespace {

int persona_level(const std::map<std::string, int>& persona, const std::string& id, int fallback) {
  auto it = persona.find(id);
  return it == persona.end() ? fallback : it->second;
}

double term_value(const PolicyTerm& term, const std::map<std::string, int>& persona, const EnvState& state,
                  int default_level) {
  double value = 0.0;
  bool any = false;
  if (term.characteristic) {
    any = true;
    const int level = persona_level(persona, *term.characteristic, default_level);
    if (!term.level_offsets.empty()) {
      const auto i = static_cast<std::size_t>(std::clamp(level, 1, static_cast<int>(term.level_offsets.size())) - 1);
      value += term.level_offsets[i];
    } else {
      value += term.slope * (level - term.center);
    }
  }
  if (term.state_variable) {
    any = true;
    const auto v = state_variable(state, *term.state_variable);
    if (!v) throw std::invalid_argument("unknown state variable '" + *term.state_variable + "' in policy term");
    value += term.slope * (*v - term.center);
  }
  if (!any) value = term.slope;  // bare bias
  return value;
}

const std::array<std::array<const char*, 3>, 3> kSubmitGuesses{{
    {"f1-a + f2-a", "f1-p + f2-p", "f1-x + f2-x"},
    {"a-p", "f1-f2", "f1-x + f2-x"},
    {"f1-a + a-f2", "f1-p + p-f2", "f1-x + x-f2"},
}};

std::string rationale(ActionCategory c) {
  switch (c.kind()) {
    case ActionKind::Measure:
      return "Thinking about what I know so far, measuring the distance between " +
             std::string(key_point_name(c.pair().first())) + " and " +
             std::string(key_point_name(c.pair().second())) + " seems like the thing to do next.";
    case ActionKind::Submit:
      return "I think I have enough to try an answer, so I will submit a solution.";
    case ActionKind::Exit:
      return "I have spent enough time on this activity and want to stop.";
  }
  return {};
}

}  // namespace

ActionDistribution SyntheticPolicy::logits(const std::map<std::string, int>& persona, const EnvState& state) const {
  ActionDistribution out = base;
  for (const auto& term : terms) {
    const double v = term_value(term, persona, state, default_level);
    for (auto a : term.actions) out[a.index()] += v;
  }
  return out;
}

ActionDistribution SyntheticPolicy::distribution(const std::map<std::string, int>& persona,
                                                 const EnvState& state) const {
  ActionDistribution l = logits(persona, state);
  const double m = *std::max_element(l.begin(), l.end());
  double z = 0.0;
  for (auto& v : l) {
    v = std::exp(v - m);
    z += v;
  }
  for (auto& v : l) v /= z;
  return l;
}

SyntheticPolicy uniform_policy() {
  SyntheticPolicy p;
  p.name = "uniform";
  return p;
}

SyntheticPolicy group_probability_policy(const std::vector<ActionCategory>& group, const std::string& characteristic,
                                         const std::vector<double>& group_probability) {
  const double k = static_cast<double>(group.size());
  if (group.empty() || group.size() >= ActionCategory::kCount) {
    throw std::invalid_argument("group must hold between 1 and 11 actions");
  }
  PolicyTerm term;
  term.actions = group;
  term.characteristic = characteristic;
  for (double q : group_probability) {
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("group probabilities must lie strictly inside (0, 1)");
    term.level_offsets.push_back(std::log(q * (ActionCategory::kCount - k) / (k * (1.0 - q))));
  }
  SyntheticPolicy p;
  p.name = "group_probability";
  p.terms.push_back(std::move(term));
  return p;
}

const SyntheticPolicy& PolicySchedule::select(const std::vector<std::string>& hypothesis_ids) const {
  for (const auto& rule : rules) {
    const bool all = std::all_of(rule.when_model_contains.begin(), rule.when_model_contains.end(), [&](const auto& id) {
      return std::find(hypothesis_ids.begin(), hypothesis_ids.end(), id) != hypothesis_ids.end();
    });
    if (all) return rule.policy;
  }
  return default_policy;
}

ActionCategory sample_category(const ActionDistribution& dist, std::uint64_t seed) {
  Rng rng(seed);
  const double u = uniform_unit(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    acc += dist[i];
    if (u < acc) return ActionCategory::from_index(i);
  }
  // Rounding left u above the running sum: take the last action with mass.
  for (std::size_t i = dist.size(); i-- > 0;) {
    if (dist[i] > 0.0) return ActionCategory::from_index(i);
  }
  return ActionCategory::from_index(0);
}

GenerationResponse synthetic_sample(const SyntheticPolicy& policy, const std::map<std::string, int>& persona,
                                    const EnvState& state, std::uint64_t seed, const ActionLabeling& labeling) {
  const ActionCategory c = sample_category(policy.distribution(persona, state), mix_seed(seed, {0}));
  Action action{c, {}};
  if (c.kind() == ActionKind::Submit) {
    Rng rng(mix_seed(seed, {1}));
    const auto& guess = kSubmitGuesses[uniform_below(rng, kSubmitGuesses.size())];
    action = Action::submit(guess[0], guess[1], guess[2]);
  }
  GenerationResponse r;
  r.text = rationale(c) + "\n" + std::string(kActionSentinel) + " " + surface_label(action, labeling);
  r.finish_reason = "stop";
  return r;
}

GenerationResponse SyntheticBackend::complete(const GenerationRequest& request) {
  if (!request.context) throw BackendUnavailable("synthetic backend needs a simulation context on the request");
  const auto& ctx = *request.context;
  return synthetic_sample(schedule_.select(ctx.hypothesis_ids), ctx.persona, ctx.state, request.seed, ctx.labeling);
}

}  // namespace hypmix
