#include "hypmix/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "hypmix/errors.hpp"

namespace hypmix {
namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return it->get<T>();
}

IntRange range_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(what + " must be a [lo, hi] pair");
  return {j[0].get<int>(), j[1].get<int>()};
}

json actions_to_json(const std::vector<ActionCategory>& actions) {
  json out = json::array();
  for (auto a : actions) out.push_back(a.token());
  return out;
}

MDHyp hypothesis_from_json(const json& j) {
  MDHyp h;
  h.id = j.at("id").get<std::string>();
  h.class_id = j.at("class").get<std::string>();
  h.characteristic = j.at("characteristic").get<std::string>();
  if (auto it = j.find("direction"); it != j.end() && !it->is_null()) {
    h.direction = parse_direction(it->get<std::string>());
    if (!h.direction) throw ConfigError("hypothesis " + h.id + ": unknown direction '" + it->get<std::string>() + "'");
  }
  if (auto it = j.find("spectrum_end"); it != j.end() && !it->is_null()) {
    h.spectrum_end = parse_spectrum_end(it->get<std::string>());
    if (!h.spectrum_end) {
      throw ConfigError("hypothesis " + h.id + ": unknown spectrum_end '" + it->get<std::string>() + "'");
    }
  }
  h.behavior_short = get_or<std::string>(j, "behavior_short", "");
  h.behavior_long = get_or<std::string>(j, "behavior_long", "");
  h.action_set = actions_from_json(j.at("actions"));
  if (auto it = j.find("trend_variable"); it != j.end() && !it->is_null()) h.trend_variable = it->get<std::string>();
  const auto status = get_or<std::string>(j, "calibration_status", "untested");
  if (status == "calibrated") {
    h.calibration_status = CalibrationStatus::Calibrated;
  } else if (status != "untested") {
    throw ConfigError("hypothesis " + h.id + ": calibration_status must be 'untested' or 'calibrated'");
  }
  return h;
}

json hypothesis_to_json(const MDHyp& h) {
  json j{{"id", h.id}, {"class", h.class_id}, {"characteristic", h.characteristic}};
  if (h.direction) j["direction"] = to_string(*h.direction);
  if (h.spectrum_end) j["spectrum_end"] = to_string(*h.spectrum_end);
  if (!h.behavior_short.empty()) j["behavior_short"] = h.behavior_short;
  if (!h.behavior_long.empty()) j["behavior_long"] = h.behavior_long;
  j["actions"] = actions_to_json(h.action_set);
  if (h.trend_variable) j["trend_variable"] = *h.trend_variable;
  j["calibration_status"] = h.calibration_status == CalibrationStatus::Calibrated ? "calibrated" : "untested";
  return j;
}

EditOperation op_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "append") return edit::Append{j.at("hypothesis").get<std::string>()};
  if (kind == "remove") return edit::Remove{j.at("hypothesis").get<std::string>()};
  if (kind == "variable_swap") {
    return edit::VariableSwap{j.at("hypothesis").get<std::string>(), j.at("old_variable").get<std::string>(),
                              j.at("new_variable").get<std::string>()};
  }
  if (kind == "lc_swap") {
    return edit::LCSwap{j.at("hypothesis").get<std::string>(), j.at("new_characteristic").get<std::string>()};
  }
  if (kind == "combine") return edit::Combine{};
  if (kind == "ex_situ_isolate") return edit::ExSituIsolate{j.at("hypothesis").get<std::string>()};
  throw ConfigError("unknown edit operation kind '" + kind + "'");
}

json state_to_json(const EnvState& s) {
  json measured = json::array();
  for (const auto& p : PointPair::all()) {
    if (s.is_measured(p)) measured.push_back(p.token());
  }
  return {{"measured", measured}, {"num_submissions", s.num_submissions}, {"minutes_elapsed", s.minutes_elapsed}};
}

EnvState state_from_json(const json& j) {
  EnvState s;
  for (const auto& token : j.at("measured")) {
    auto c = ActionCategory::from_token("measure-" + token.get<std::string>());
    if (!c || c->kind() != ActionKind::Measure) throw ConfigError("unknown point pair '" + token.get<std::string>() + "'");
    s.measured[c->pair().index()] = true;
  }
  s.num_submissions = j.at("num_submissions").get<int>();
  s.minutes_elapsed = j.at("minutes_elapsed").get<int>();
  return s;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

// A bundle entry is either an inline object or a path to a JSON file.
json section(const json& bundle, const char* key, const std::filesystem::path& base) {
  const auto& v = bundle.at(key);
  if (v.is_string()) return read_json_file(resolve(base, v.get<std::string>()));
  return v;
}

}  // namespace

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<ActionCategory> actions_from_json(const json& j) {
  std::vector<ActionCategory> out;
  auto append = [&](const std::vector<ActionCategory>& group) { out.insert(out.end(), group.begin(), group.end()); };
  for (const auto& item : j) {
    const auto token = item.get<std::string>();
    if (token == "@productive") {
      append(productive_measurement_set());
    } else if (token == "@measurements") {
      append(measurement_actions());
    } else if (auto c = ActionCategory::from_token(token)) {
      out.push_back(*c);
    } else {
      throw ConfigError("unknown action '" + token + "'");
    }
  }
  return out;
}

EnvironmentSpec environment_from_json(const json& j) {
  try {
    EnvironmentSpec spec = EnvironmentSpec::builtin();
    if (!get_or(j, "builtin_labelings", true)) spec.labelings.clear();
    if (auto it = j.find("description"); it != j.end()) spec.description = it->get<std::string>();
    if (auto it = j.find("labelings"); it != j.end()) {
      for (const auto& [id, table] : it->items()) {
        std::array<std::string, ActionCategory::kCount> labels;
        std::array<bool, ActionCategory::kCount> seen{};
        for (const auto& [token, label] : table.items()) {
          auto c = ActionCategory::from_token(token);
          if (!c) throw ConfigError("labeling " + id + ": unknown action '" + token + "'");
          labels[c->index()] = label.get<std::string>();
          seen[c->index()] = true;
        }
        for (auto c : canonical_actions()) {
          if (!seen[c.index()]) throw ConfigError("labeling " + id + ": no label for " + c.token());
        }
        spec.labelings.insert_or_assign(id, ActionLabeling(id, labels));
      }
    }
    if (auto it = j.find("domain"); it != j.end()) {
      if (auto m = it->find("minutes"); m != it->end()) spec.domain.minutes = range_from_json(*m, "domain.minutes");
      if (auto s = it->find("submissions"); s != it->end()) {
        spec.domain.submissions = range_from_json(*s, "domain.submissions");
      }
    }
    if (spec.domain.minutes.lo < 0 || spec.domain.minutes.hi > kClassPeriodMinutes ||
        spec.domain.minutes.lo > spec.domain.minutes.hi) {
      throw ConfigError("domain.minutes must lie within [0, 40]");
    }
    if (spec.domain.submissions.lo < 0 || spec.domain.submissions.lo > spec.domain.submissions.hi) {
      throw ConfigError("domain.submissions must be a non-negative range");
    }
    return spec;
  } catch (const InvalidLabeling& e) {
    throw ConfigError(e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("environment: ") + e.what());
  }
}

Catalog catalog_from_json(const json& j) {
  try {
    Catalog c = Catalog::builtin();
    if (auto it = j.find("classes"); it != j.end()) {
      c.registry = HypothesisRegistry{};
      for (const auto& cj : *it) {
        HypothesisClass cls;
        cls.id = cj.at("id").get<std::string>();
        const auto kind = parse_criterion_kind(cj.at("criterion").get<std::string>());
        if (!kind) throw ConfigError("class " + cls.id + ": unknown criterion");
        cls.criterion = *kind;
        cls.alpha = get_or(cj, "alpha", kDefaultAlpha);
        for (const auto& [rev, text] : cj.at("templates").items()) cls.templates[std::stoi(rev)] = text.get<std::string>();
        if (auto problems = validate_class(cls); !problems.empty()) throw ConfigError(problems.front());
        c.registry.register_class(std::move(cls));
      }
    }
    if (auto it = j.find("characteristics"); it != j.end()) {
      c.characteristics.clear();
      for (const auto& cj : *it) {
        LearnerCharacteristic lc{cj.at("id").get<std::string>(), get_or<std::string>(cj, "display_name", ""),
                                 get_or<std::string>(cj, "definition", "")};
        if (lc.display_name.empty()) lc.display_name = lc.id;
        c.characteristics[lc.id] = lc;
      }
    }
    if (auto it = j.find("hypotheses"); it != j.end()) {
      c.hypotheses.clear();
      for (const auto& hj : *it) c.hypotheses.push_back(hypothesis_from_json(hj));
    }
    return c;
  } catch (const DuplicateClassId& e) {
    throw ConfigError(e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("hypotheses: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("hypotheses: bad template revision: ") + e.what());
  }
}

json catalog_to_json(const Catalog& catalog) {
  json classes = json::array();
  for (const auto& id : catalog.registry.ids()) {
    const auto& cls = catalog.registry.at(id);
    json templates = json::object();
    for (const auto& [rev, text] : cls.templates) templates[std::to_string(rev)] = text;
    classes.push_back({{"id", cls.id}, {"criterion", to_string(cls.criterion)}, {"alpha", cls.alpha},
                       {"templates", templates}});
  }
  json chars = json::array();
  for (const auto& [id, c] : catalog.characteristics) {
    chars.push_back({{"id", c.id}, {"display_name", c.display_name}, {"definition", c.definition}});
  }
  json hyps = json::array();
  for (const auto& h : catalog.hypotheses) hyps.push_back(hypothesis_to_json(h));
  return {{"classes", classes}, {"characteristics", chars}, {"hypotheses", hyps}};
}

std::vector<std::string> validate_catalog(const Catalog& catalog) {
  std::vector<std::string> problems;
  for (const auto& id : catalog.registry.ids()) {
    for (auto& p : validate_class(catalog.registry.at(id))) problems.push_back("class " + id + ": " + p);
  }
  for (const auto& [id, c] : catalog.characteristics) {
    if (c.definition.empty()) problems.push_back("characteristic " + id + ": definition is empty");
  }
  std::set<std::string> ids;
  for (const auto& h : catalog.hypotheses) {
    if (!ids.insert(h.id).second) problems.push_back("hypothesis " + h.id + ": defined twice");
    for (auto& p : validate_hypothesis(h, catalog.registry)) problems.push_back(p);
    if (!catalog.find_characteristic(h.characteristic)) {
      problems.push_back("hypothesis " + h.id + ": unknown characteristic '" + h.characteristic + "'");
    }
  }
  return problems;
}

LearnerModel learner_model_from_json(const json& j, const Catalog& catalog) {
  try {
    LearnerModel m;
    const auto persona = get_or<std::map<std::string, int>>(j, "persona", {});
    auto add_characteristic = [&](const std::string& id) {
      if (m.characteristic(id)) return;
      const auto* c = catalog.find_characteristic(id);
      if (!c) throw ConfigError("learner model: unknown characteristic '" + id + "'");
      m.characteristics.push_back(*c);
      std::sort(m.characteristics.begin(), m.characteristics.end(),
                [](const auto& a, const auto& b) { return a.id < b.id; });
      auto lvl = persona.find(id);
      m.persona[id] = lvl == persona.end() ? kDefaultPersonaLevel : lvl->second;
      m.models[id].characteristic = id;
    };
    for (const auto& id : get_or<std::vector<std::string>>(j, "characteristics", {})) add_characteristic(id);
    for (const auto& id : j.at("hypotheses").get<std::vector<std::string>>()) {
      const auto* h = catalog.find_hypothesis(id);
      if (!h) throw ConfigError("learner model: unknown hypothesis '" + id + "'");
      add_characteristic(h->characteristic);
      m.models[h->characteristic].hypotheses.push_back(*h);
    }
    // Levels for characteristics the model lacks stay visible to validate().
    for (const auto& [id, level] : persona) {
      if (!m.persona.count(id)) m.persona[id] = level;
    }
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("learner model: ") + e.what());
  }
}

EditGraph edit_graph_from_json(const json& j, const Catalog& catalog) {
  try {
    std::vector<GraphNode> roots;
    const json nodes = get_or<json>(j, "nodes", json::array());
    for (const auto& nj : nodes) {
      roots.push_back({nj.at("id").get<std::string>(), learner_model_from_json(nj, catalog)});
    }
    std::vector<EditGraph::EdgeSpec> edges;
    const json edge_list = get_or<json>(j, "edges", json::array());
    for (const auto& ej : edge_list) {
      EditGraph::EdgeSpec s;
      s.id = ej.at("id").get<std::string>();
      s.name = get_or<std::string>(ej, "name", "");
      s.source = ej.at("source").get<std::string>();
      s.target = ej.at("target").get<std::string>();
      s.op = op_from_json(ej.at("op"));
      if (std::holds_alternative<edit::Combine>(s.op)) s.other_node = ej.at("op").at("other").get<std::string>();
      if (auto it = ej.find("track"); it != ej.end()) {
        std::vector<std::pair<std::string, std::string>> tracked;
        for (const auto& t : *it) {
          if (t.is_string()) {
            tracked.emplace_back(t.get<std::string>(), t.get<std::string>());
          } else {
            tracked.emplace_back(t.at(0).get<std::string>(), t.at(1).get<std::string>());
          }
        }
        s.tracked = std::move(tracked);
      }
      edges.push_back(std::move(s));
    }
    return EditGraph::build(std::move(roots), std::move(edges), catalog);
  } catch (const InvalidPlan& e) {
    throw ConfigError(std::string("edit graph: ") + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("edit graph: ") + e.what());
  }
}

ExperimentPlan plan_from_json(const json& j) {
  try {
    ExperimentPlan p;
    p.hypothesis_ids = get_or(j, "hypotheses", p.hypothesis_ids);
    if (auto it = j.find("sweep"); it != j.end() && !it->is_null()) p.sweep_characteristic = it->get<std::string>();
    p.levels = get_or(j, "levels", p.levels);
    p.fixed_levels = get_or(j, "fixed_levels", p.fixed_levels);
    p.states_per_level = get_or(j, "states_per_level", p.states_per_level);
    p.samples_per_state = get_or(j, "samples_per_state", p.samples_per_state);
    p.labelings = get_or(j, "labelings", p.labelings);
    p.seed = get_or(j, "seed", p.seed);
    p.model_id = get_or(j, "model", p.model_id);
    p.temperature = get_or(j, "temperature", p.temperature);
    p.max_tokens = get_or(j, "max_tokens", p.max_tokens);
    p.parallelism = get_or(j, "parallelism", p.parallelism);
    p.failure_budget = get_or(j, "failure_budget", p.failure_budget);
    p.degradation_factor = get_or(j, "degradation_factor", p.degradation_factor);
    p.uniform_degradation_ratio = get_or(j, "uniform_degradation_ratio", p.uniform_degradation_ratio);
    if (auto it = j.find("state_constraints"); it != j.end()) {
      if (auto m = it->find("minutes"); m != it->end()) p.state_constraints.minutes = range_from_json(*m, "minutes");
      if (auto s = it->find("submissions"); s != it->end()) {
        p.state_constraints.submissions = range_from_json(*s, "submissions");
      }
      if (auto m = it->find("measured"); m != it->end()) {
        for (const auto& [token, value] : m->items()) {
          auto c = ActionCategory::from_token("measure-" + token);
          if (!c || c->kind() != ActionKind::Measure) throw ConfigError("unknown point pair '" + token + "'");
          p.state_constraints.measured[c->pair().index()] = value.get<bool>();
        }
      }
    }
    if (auto it = j.find("prompt"); it != j.end()) {
      p.prompt.global_text = get_or(*it, "global_text", p.prompt.global_text);
      p.prompt.environment_text = get_or(*it, "environment_text", p.prompt.environment_text);
      p.prompt.learner_intro = get_or(*it, "learner_intro", p.prompt.learner_intro);
      p.prompt.output_format = get_or(*it, "output_format", p.prompt.output_format);
      p.prompt.template_revisions = get_or(*it, "template_revisions", p.prompt.template_revisions);
    }
    if (auto it = j.find("evaluation"); it != j.end()) {
      if (auto a = it->find("alpha"); a != it->end() && !a->is_null()) p.evaluation.alpha = a->get<double>();
      const auto tail = get_or<std::string>(*it, "tail", "two_sided");
      if (tail == "two_sided") {
        p.evaluation.one_sided = false;
      } else if (tail == "one_sided") {
        p.evaluation.one_sided = true;
      } else {
        throw ConfigError("evaluation.tail must be 'two_sided' or 'one_sided'");
      }
      p.evaluation.level_window = get_or(*it, "level_window", p.evaluation.level_window);
      p.evaluation.max_drop_rate = get_or(*it, "max_drop_rate", p.evaluation.max_drop_rate);
    }
    return p;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("plan: ") + e.what());
  }
}

SyntheticPolicy policy_from_json(const json& j) {
  try {
    const auto kind = get_or<std::string>(j, "kind", "linear");
    SyntheticPolicy p;
    if (kind == "uniform") {
      p = uniform_policy();
    } else if (kind == "group_probability") {
      p = group_probability_policy(actions_from_json(j.at("actions")), j.at("characteristic").get<std::string>(),
                                   j.at("probabilities").get<std::vector<double>>());
    } else if (kind == "linear") {
      const json base = get_or<json>(j, "base", json::object());
      for (const auto& [token, value] : base.items()) {
        for (auto a : actions_from_json(json::array({token}))) p.base[a.index()] += value.get<double>();
      }
      const json terms = get_or<json>(j, "terms", json::array());
      for (const auto& tj : terms) {
        PolicyTerm t;
        t.actions = actions_from_json(tj.at("actions"));
        if (auto it = tj.find("characteristic"); it != tj.end()) t.characteristic = it->get<std::string>();
        if (auto it = tj.find("state_variable"); it != tj.end()) {
          t.state_variable = it->get<std::string>();
          if (!is_state_variable(*t.state_variable)) {
            throw ConfigError("policy: unknown state variable '" + *t.state_variable + "'");
          }
        }
        t.slope = get_or(tj, "slope", 0.0);
        t.center = get_or(tj, "center", 0.0);
        t.level_offsets = get_or(tj, "level_offsets", t.level_offsets);
        p.terms.push_back(std::move(t));
      }
    } else {
      throw ConfigError("policy: unknown kind '" + kind + "'");
    }
    p.name = get_or(j, "name", p.name);
    p.default_level = get_or(j, "default_level", p.default_level);
    return p;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("policy: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("policy: ") + e.what());
  }
}

PolicySchedule schedule_from_json(const json& j) {
  if (!j.contains("default") && !j.contains("rules")) return PolicySchedule{policy_from_json(j), {}};
  PolicySchedule s;
  if (auto it = j.find("default"); it != j.end()) s.default_policy = policy_from_json(*it);
  const json rules = get_or<json>(j, "rules", json::array());
  for (const auto& rj : rules) {
    s.rules.push_back({rj.at("when_model_contains").get<std::vector<std::string>>(), policy_from_json(rj.at("policy"))});
  }
  return s;
}

RemoteConfig remote_config_from_json(const json& j) {
  RemoteConfig c;
  c.base_url = get_or(j, "base_url", c.base_url);
  c.api_key_env = get_or(j, "api_key_env", c.api_key_env);
  c.max_retries = get_or(j, "max_retries", c.max_retries);
  c.initial_backoff = std::chrono::milliseconds(get_or<std::int64_t>(j, "initial_backoff_ms", c.initial_backoff.count()));
  c.max_backoff = std::chrono::milliseconds(get_or<std::int64_t>(j, "max_backoff_ms", c.max_backoff.count()));
  c.timeout = std::chrono::seconds(get_or<std::int64_t>(j, "timeout_s", c.timeout.count()));
  c.send_seed = get_or(j, "send_seed", c.send_seed);
  if (j.contains("api_key")) {
    throw ConfigError("backend: put the API key in an environment variable and name it with api_key_env");
  }
  return c;
}

json record_to_json(const RunRecord& r) {
  json action = nullptr;
  if (r.action) {
    action = {{"category", r.action->category.token()}};
    if (r.action->category.kind() == ActionKind::Submit) action["submit_args"] = r.action->submit_args;
  }
  json j{{"swept", r.swept},
         {"level", r.level},
         {"persona", r.persona},
         {"labeling", r.labeling},
         {"state_index", r.state_index},
         {"state", state_to_json(r.state)},
         {"sample_index", r.sample_index},
         {"seed", r.seed},
         {"cache_key", r.cache_key},
         {"action", action},
         {"attempts", r.attempts}};
  if (!r.drop_reason.empty()) j["drop_reason"] = r.drop_reason;
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j;
}

RunRecord record_from_json(const json& j) {
  RunRecord r;
  r.swept = j.at("swept").get<std::string>();
  r.level = j.at("level").get<int>();
  r.persona = j.at("persona").get<std::map<std::string, int>>();
  r.labeling = j.at("labeling").get<std::string>();
  r.state_index = j.at("state_index").get<int>();
  r.state = state_from_json(j.at("state"));
  r.sample_index = j.at("sample_index").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.cache_key = j.at("cache_key").get<std::string>();
  if (const auto& a = j.at("action"); !a.is_null()) {
    auto c = ActionCategory::from_token(a.at("category").get<std::string>());
    if (!c) throw ConfigError("record: unknown action '" + a.at("category").get<std::string>() + "'");
    Action action{*c, {}};
    if (auto it = a.find("submit_args"); it != a.end()) action.submit_args = it->get<std::array<std::string, 3>>();
    r.action = action;
  }
  r.drop_reason = get_or<std::string>(j, "drop_reason", "");
  r.attempts = get_or(j, "attempts", 1);
  r.warnings = get_or(j, "warnings", r.warnings);
  return r;
}

std::vector<RunRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::vector<RunRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ConfigError(path.string() + " line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

json test_result_to_json(const TestResult& t) {
  json j{{"test", to_string(t.kind)},       {"statistic", t.statistic},         {"p_value", t.p_value},
         {"satisfied", t.satisfied},        {"n_levels", t.n_levels},           {"n_actions", t.n_actions},
         {"sample_counts", t.sample_counts}, {"flagged", t.flagged}};
  if (!t.probabilities.empty()) j["probabilities"] = t.probabilities;
  if (!t.note.empty()) j["note"] = t.note;
  return j;
}

json report_to_json(const CalibrationReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"edge", r.edge},
                    {"operation", r.operation},
                    {"pre_hypothesis", r.pre_hypothesis},
                    {"post_hypothesis", r.post_hypothesis},
                    {"test", to_string(r.kind)},
                    {"labeling", r.labeling},
                    {"pre_statistic", r.pre_statistic},
                    {"pre_p", r.pre_p},
                    {"pre_satisfied", r.pre_satisfied},
                    {"post_statistic", r.post_statistic},
                    {"post_p", r.post_p},
                    {"post_satisfied", r.post_satisfied},
                    {"classification", to_string(r.classification)},
                    {"flagged", r.flagged}});
  }
  json verdicts = json::array();
  for (const auto& [edge, v] : report.verdicts) verdicts.push_back({{"edge", edge}, {"verdict", to_string(v)}});
  json annotations = json::object();
  for (const auto& [node, marks] : report.annotations) {
    json m = json::object();
    for (const auto& [hyp, mark] : marks) m[hyp] = std::string(1, mark);
    annotations[node] = m;
  }
  return {{"rows", rows}, {"verdicts", verdicts}, {"annotations", annotations}};
}

CalibrationReport report_from_json(const json& j) {
  try {
    CalibrationReport rep;
    auto classification = [](const json& v) {
      auto c = parse_classification(v.get<std::string>());
      if (!c) throw ConfigError("report: unknown classification '" + v.get<std::string>() + "'");
      return *c;
    };
    for (const auto& rj : j.at("rows")) {
      ReportRow r;
      r.edge = rj.at("edge").get<std::string>();
      r.operation = rj.at("operation").get<std::string>();
      r.pre_hypothesis = rj.at("pre_hypothesis").get<std::string>();
      r.post_hypothesis = rj.at("post_hypothesis").get<std::string>();
      const auto kind = parse_criterion_kind(rj.at("test").get<std::string>());
      if (!kind) throw ConfigError("report: unknown test kind");
      r.kind = *kind;
      r.labeling = rj.at("labeling").get<std::string>();
      r.pre_statistic = rj.at("pre_statistic").get<double>();
      r.pre_p = rj.at("pre_p").get<double>();
      r.pre_satisfied = rj.at("pre_satisfied").get<bool>();
      r.post_statistic = rj.at("post_statistic").get<double>();
      r.post_p = rj.at("post_p").get<double>();
      r.post_satisfied = rj.at("post_satisfied").get<bool>();
      r.classification = classification(rj.at("classification"));
      r.flagged = rj.at("flagged").get<bool>();
      rep.rows.push_back(std::move(r));
    }
    for (const auto& vj : j.at("verdicts")) {
      rep.verdicts.emplace_back(vj.at("edge").get<std::string>(), classification(vj.at("verdict")));
    }
    for (const auto& [node, marks] : j.at("annotations").items()) {
      for (const auto& [hyp, mark] : marks.items()) {
        const auto s = mark.get<std::string>();
        rep.annotations[node][hyp] = s.empty() ? '?' : s.front();
      }
    }
    return rep;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("report: ") + e.what());
  }
}

Bundle load_bundle(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  const auto base = path.parent_path();
  Bundle b;
  b.path = path;
  try {
    if (j.contains("environment")) b.environment = environment_from_json(section(j, "environment", base));
    if (j.contains("hypotheses")) b.catalog = catalog_from_json(section(j, "hypotheses", base));
    if (j.contains("learner_model")) b.learner_model = learner_model_from_json(section(j, "learner_model", base), b.catalog);
    if (j.contains("edit_graph")) b.edit_graph = section(j, "edit_graph", base);
    if (j.contains("plan")) b.plan = plan_from_json(section(j, "plan", base));
    if (j.contains("backend")) {
      const json backend = section(j, "backend", base);
      b.backend = get_or<std::string>(backend, "kind", "synthetic");
      if (b.backend == "synthetic") {
        if (backend.contains("policy")) b.policy = schedule_from_json(section(backend, "policy", base));
      } else if (b.backend == "remote") {
        b.remote = remote_config_from_json(backend);
      } else {
        throw ConfigError("backend.kind must be 'synthetic' or 'remote'");
      }
    }
    if (auto it = j.find("cache_dir"); it != j.end() && !it->is_null()) {
      b.cache_dir = resolve(base, it->get<std::string>());
    }
    b.out_dir = resolve(base, get_or<std::string>(j, "out", "out"));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return b;
}

}  // namespace hypmix
