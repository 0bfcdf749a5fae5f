#include <gtest/gtest.h>

#include <cstdlib>

#include "hypmix/hashing.hpp"
#include "hypmix/prompt.hpp"
#include "support/golden_prompts.hpp"

using namespace hypmix;

namespace {

const Catalog& catalog() {
  static const auto c = Catalog::builtin();
  return c;
}

PromptConfig config() {
  PromptConfig c;
  c.environment_text = EnvironmentSpec::builtin().description;
  return c;
}

const PromptFragment* find(const SimulationPrompt& p, FragmentKind kind) {
  for (const auto& f : p.fragments) {
    if (f.kind == kind) return &f;
  }
  return nullptr;
}

}  // namespace

TEST(Assemble, CanonicalOrderAndSeparator) {
  const auto p = assemble({{FragmentKind::OutputFormat, "out", ""},
                           {FragmentKind::Global, "global", ""},
                           {FragmentKind::State, "state", ""},
                           {FragmentKind::LcModel, "lc1", ""},
                           {FragmentKind::LcModel, "lc2", ""}});
  EXPECT_EQ(p.rendered, "global\n\nlc1\n\nlc2\n\nstate\n\nout");
  EXPECT_EQ(p.fingerprint, sha256_hex(p.rendered));
  EXPECT_THROW(assemble({{FragmentKind::Global, "", ""}}), std::invalid_argument);
}

TEST(Compose, ContainsTheHypothesisSentenceAndIsDeterministic) {
  const auto model = make_model(catalog(), {"H_G1"});
  PromptConfig c = config();
  c.template_revisions["mono"] = 0;
  const auto p = compose(model, EnvState{}, ActionLabeling::builtin_a(), catalog().registry, c);
  EXPECT_NE(p.rendered.find(golden::table_sentence("H_G1", ActionLabeling::builtin_a())), std::string::npos);
  EXPECT_EQ(p.fingerprint, compose(model, EnvState{}, ActionLabeling::builtin_a(), catalog().registry, c).fingerprint);
}

TEST(Compose, FragmentOrderFollowsCharacteristics) {
  const auto model = make_model(catalog(), {"H_G1", "H_P1"});
  const auto p = compose(model, EnvState{}, ActionLabeling::builtin_a(), catalog().registry, config());
  const auto g = p.rendered.find("geometry proficiency is more likely");
  const auto per = p.rendered.find("persistence is less likely");
  ASSERT_NE(g, std::string::npos);
  ASSERT_NE(per, std::string::npos);
  EXPECT_LT(g, per);
  EXPECT_EQ(p.fragments.back().kind, FragmentKind::OutputFormat);
  EXPECT_EQ(p.rendered.substr(p.rendered.size() - p.fragments.back().text.size()), p.fragments.back().text);
}

TEST(Compose, RecomposingFromFragmentsIsByteIdentical) {
  const auto model = make_model(catalog(), {"H_G1", "H_P2"});
  const auto p = compose(model, golden::fixed_state(), ActionLabeling::builtin_c(), catalog().registry, config(), 9);
  // Fragments handed over out of order are put back in canonical order.
  auto rotated = p.fragments;
  std::rotate(rotated.begin(), rotated.end() - 2, rotated.end());
  const auto again = assemble(rotated);
  EXPECT_EQ(again.rendered, p.rendered);
  EXPECT_EQ(again.fingerprint, p.fingerprint);
}

TEST(Compose, LabelingOnlyTouchesMenuAndActionNames) {
  const auto model = make_model(catalog(), {"H_G1"});
  const auto a = compose(model, EnvState{}, ActionLabeling::builtin_a(), catalog().registry, config());
  const auto b = compose(model, EnvState{}, ActionLabeling::builtin_b(), catalog().registry, config());
  for (auto kind : {FragmentKind::Global, FragmentKind::Environment, FragmentKind::LearnerPersona, FragmentKind::State,
                    FragmentKind::OutputFormat}) {
    EXPECT_EQ(find(a, kind)->text, find(b, kind)->text) << to_string(kind);
  }
  EXPECT_NE(find(a, FragmentKind::ActionMenu)->text, find(b, FragmentKind::ActionMenu)->text);
  EXPECT_NE(find(a, FragmentKind::LcModel)->text, find(b, FragmentKind::LcModel)->text);
}

TEST(Compose, MissingEnvironmentTextIsAnError) {
  const auto model = make_model(catalog(), {"H_G1"});
  EXPECT_THROW(compose(model, EnvState{}, ActionLabeling::builtin_a(), catalog().registry, PromptConfig{}),
               std::invalid_argument);
}

TEST(RenderPersona, LinesSortedById) {
  auto model = make_model(catalog(), {"H_G1"}, {{"geometry_proficiency", 7}});
  EXPECT_EQ(render_persona(model), "Geometry Proficiency: 7/10");
  model.persona["geometry_proficiency"] = 1;
  EXPECT_EQ(render_persona(model), "Geometry Proficiency: 1/10");
  const auto two = make_model(catalog(), {"H_P1", "H_G1"}, {{"persistence", 2}});
  EXPECT_EQ(render_persona(two), "Geometry Proficiency: 5/10\nPersistence: 2/10");
}

TEST(RenderActionMenu, ListsEveryLabel) {
  const auto menu = render_action_menu(ActionLabeling::builtin_c());
  for (auto c : canonical_actions()) {
    EXPECT_NE(menu.find("\n- " + ActionLabeling::builtin_c().menu_label(c)), std::string::npos);
  }
}

TEST(Golden, ComposedPromptsMatchFrozenFiles) {
  const bool update = std::getenv("HYPMIX_UPDATE_GOLDEN") != nullptr;
  for (const auto& c : golden::cases()) {
    const auto prompt = golden::compose_case(c);
    const auto path = golden::directory() / c.file_name();
    if (update) {
      std::filesystem::create_directories(path.parent_path());
      std::ofstream(path, std::ios::binary) << prompt.rendered;
    }
    ASSERT_TRUE(std::filesystem::exists(path)) << path << " missing; run with HYPMIX_UPDATE_GOLDEN=1";
    EXPECT_EQ(golden::read_file(path), prompt.rendered) << c.file_name();
    EXPECT_NE(prompt.rendered.find(golden::table_sentence(c.hypothesis, EnvironmentSpec::builtin().labeling(c.labeling))),
              std::string::npos)
        << c.file_name();
  }
}
