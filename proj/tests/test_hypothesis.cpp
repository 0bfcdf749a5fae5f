#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "hypmix/errors.hpp"
#include "hypmix/hypothesis.hpp"
#include "hypmix/learner_model.hpp"

using namespace hypmix;

namespace {

const MDHyp& builtin(const std::string& id) {
  static const auto catalog = Catalog::builtin();
  return *catalog.find_hypothesis(id);
}

const HypothesisRegistry& registry() {
  static const auto r = HypothesisRegistry::builtin();
  return r;
}

// Cells whose target-set probability at level L is probability(L).
std::vector<LevelCell> cells_for(const MDHyp& hyp, const std::function<double(int)>& probability, int per_level = 100) {
  std::vector<LevelCell> cells;
  const auto other = std::find_if(canonical_actions().begin(), canonical_actions().end(), [&](ActionCategory c) {
    return std::find(hyp.action_set.begin(), hyp.action_set.end(), c) == hyp.action_set.end();
  });
  for (int level = 1; level <= 10; ++level) {
    LevelCell cell;
    cell.level = level;
    const auto hits = static_cast<std::int64_t>(std::llround(probability(level) * per_level));
    cell.counts[hyp.action_set.front().index()] = hits;
    cell.counts[other->index()] = per_level - hits;
    cells.push_back(cell);
  }
  return cells;
}

}  // namespace

TEST(Templates, MonoRevisionZeroReadsLikeTheTable) {
  const auto text = instantiate_template(registry().at("mono"), 0, builtin("H_G1"), ActionLabeling::builtin_a());
  EXPECT_EQ(text.rfind("A learner with a higher geometry proficiency is more likely to make productive measurements",
                       0),
            0u)
      << text;
}

TEST(Templates, MonoRevisionOneAddsTheConflictSentence) {
  const auto& cls = registry().at("mono");
  const auto r0 = instantiate_template(cls, 0, builtin("H_G1"), ActionLabeling::builtin_a());
  const auto r1 = instantiate_template(cls, 1, builtin("H_G1"), ActionLabeling::builtin_a());
  EXPECT_EQ(r1.rfind(r0, 0), 0u);
  EXPECT_NE(r1.find("DIRECTLY conflicts"), std::string::npos);
  EXPECT_EQ(instantiate_template(cls, builtin("H_G1"), ActionLabeling::builtin_a()), r1);
}

TEST(Templates, UniformMentionsTheUniformDistribution) {
  const auto text = instantiate_template(registry().at("uniform"), 0, builtin("H_G2"), ActionLabeling::builtin_a());
  EXPECT_NE(text.find("uniform distribution over these actions"), std::string::npos);
  EXPECT_NE(text.find("(value of 1)"), std::string::npos);
  EXPECT_NE(text.find("MEASURE-A-P"), std::string::npos);
}

TEST(Templates, RandomActionFollowsTheSeed) {
  const auto& cls = registry().at("uniform");
  std::set<std::string> seen;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto text = instantiate_template(cls, 1, builtin("H_G2"), ActionLabeling::builtin_a(), seed);
    EXPECT_EQ(text, instantiate_template(cls, 1, builtin("H_G2"), ActionLabeling::builtin_a(), seed));
    seen.insert(text);
  }
  EXPECT_GT(seen.size(), 3u);
}

TEST(Templates, LabelingChangesOnlyActionNames) {
  const auto& cls = registry().at("mono");
  const auto a = instantiate_template(cls, 0, builtin("H_P1"), ActionLabeling::builtin_a());
  const auto b = instantiate_template(cls, 0, builtin("H_P1"), ActionLabeling::builtin_b());
  EXPECT_NE(a.find("actions: EXIT."), std::string::npos) << a;
  EXPECT_NE(b.find("actions: QUIT."), std::string::npos) << b;
}

TEST(Templates, DistinctHypothesesGiveDistinctText) {
  std::set<std::string> texts;
  for (const auto& h : builtin_hypotheses()) {
    for (const auto& [rev, _] : registry().at(h.class_id).templates) {
      texts.insert(instantiate_template(registry().at(h.class_id), rev, h, ActionLabeling::builtin_a()));
    }
  }
  EXPECT_EQ(texts.size(), 8u);
}

TEST(Templates, MissingAndEscapedSlots) {
  HypothesisClass cls{"odd", CriterionKind::Monotonic, 0.05, {{0, "{{literal}} {characteristic} {nonsense}"}}};
  EXPECT_THROW(instantiate_template(cls, 0, builtin("H_G1"), ActionLabeling::builtin_a()), MissingSlot);
  cls.templates[0] = "{{literal}} {characteristic}";
  EXPECT_EQ(instantiate_template(cls, 0, builtin("H_G1"), ActionLabeling::builtin_a()), "{literal} geometry proficiency");
  // A monotonic template asking for the uniform-only slot cannot be filled.
  cls.templates[0] = "{low_or_high}";
  EXPECT_THROW(instantiate_template(cls, 0, builtin("H_G1"), ActionLabeling::builtin_a()), MissingSlot);
}

TEST(TMono, TruthTable) {
  EXPECT_TRUE(t_mono(0.9, 0.01, Direction::Increasing));
  EXPECT_FALSE(t_mono(-0.8, 0.01, Direction::Increasing));
  EXPECT_FALSE(t_mono(0.9, 0.2, Direction::Increasing));
  EXPECT_TRUE(t_mono(0.9, 0.05, Direction::Increasing));
  EXPECT_FALSE(t_mono(0.0, 0.01, Direction::Increasing));
  EXPECT_TRUE(t_mono(-0.8, 0.01, Direction::Decreasing));
}

TEST(TMono, SignSymmetryAndPThreshold) {
  for (double rho : {-1.0, -0.3, 0.0, 0.2, 1.0}) {
    for (double p : {0.0, 0.01, 0.05, 0.0500001, 0.5, 1.0}) {
      EXPECT_EQ(t_mono(rho, p, Direction::Increasing), t_mono(-rho, p, Direction::Decreasing));
      if (p > 0.05) EXPECT_FALSE(t_mono(rho, p, Direction::Increasing));
    }
  }
}

TEST(TUniform, StrictBoundary) {
  EXPECT_TRUE(t_uniform(0.30));
  EXPECT_FALSE(t_uniform(0.01));
  EXPECT_FALSE(t_uniform(0.05));
  bool prev = false;
  for (double p = 0.0; p <= 1.0; p += 0.001) {
    const bool now = t_uniform(p);
    EXPECT_TRUE(now || !prev);
    prev = now;
  }
}

TEST(Evaluate, PerfectMonotoneTable) {
  const auto& h = builtin("H_G1");
  const auto r = evaluate(registry().at("mono"), h, cells_for(h, [](int l) { return l / 10.0; }));
  EXPECT_EQ(r.kind, CriterionKind::Monotonic);
  EXPECT_DOUBLE_EQ(r.statistic, 1.0);
  EXPECT_TRUE(r.satisfied);
  EXPECT_EQ(r.n_levels, 10);
  EXPECT_EQ(r.probabilities.size(), 10u);
}

TEST(Evaluate, DecreasingHypothesisWantsFallingProbability) {
  const auto& h = builtin("H_P1");
  EXPECT_TRUE(evaluate(registry().at("mono"), h, cells_for(h, [](int l) { return 0.5 - l / 25.0; })).satisfied);
  EXPECT_FALSE(evaluate(registry().at("mono"), h, cells_for(h, [](int l) { return l / 25.0; })).satisfied);
}

TEST(Evaluate, FlatMonotoneTableIsNotSatisfied) {
  const auto& h = builtin("H_G1");
  const auto r = evaluate(registry().at("mono"), h, cells_for(h, [](int) { return 0.3; }));
  EXPECT_FALSE(r.satisfied);
  EXPECT_DOUBLE_EQ(r.p_value, 1.0);
}

TEST(Evaluate, MonotoneNeedsThreeLevels) {
  const auto& h = builtin("H_G1");
  auto cells = cells_for(h, [](int l) { return l / 10.0; });
  cells.resize(2);
  EXPECT_THROW(evaluate(registry().at("mono"), h, cells), InsufficientData);
}

TEST(Evaluate, UniformEqualCounts) {
  const auto& h = builtin("H_G2");
  LevelCell cell;
  cell.level = 1;
  for (auto a : measurement_actions()) cell.counts[a.index()] = 12;
  const auto r = evaluate(registry().at("uniform"), h, {cell});
  EXPECT_EQ(r.kind, CriterionKind::Uniform);
  EXPECT_DOUBLE_EQ(r.statistic, 0.0);
  EXPECT_DOUBLE_EQ(r.p_value, 1.0);
  EXPECT_TRUE(r.satisfied);
  EXPECT_EQ(r.n_actions, 10);
}

TEST(Evaluate, UniformSkewedCounts) {
  const auto& h = builtin("H_G2");
  LevelCell cell;
  cell.level = 1;
  const std::array<int, 10> counts{80, 2, 2, 2, 2, 2, 2, 2, 2, 4};
  for (std::size_t i = 0; i < counts.size(); ++i) cell.counts[measurement_actions()[i].index()] = counts[i];
  const auto r = evaluate(registry().at("uniform"), h, {cell});
  // (70^2 + 8 * 8^2 + 6^2) / 10
  EXPECT_NEAR(r.statistic, 544.8, 1e-9);
  EXPECT_LT(r.p_value, 1e-10);
  EXPECT_FALSE(r.satisfied);
}

TEST(Evaluate, UniformIgnoresCountsOutsideTheActionSet) {
  const auto& h = builtin("H_G2");
  LevelCell cell;
  cell.level = 1;
  for (std::size_t i = 0; i < 10; ++i) cell.counts[measurement_actions()[i].index()] = 10 + static_cast<int>(i);
  const auto base = evaluate(registry().at("uniform"), h, {cell});
  cell.counts[ActionCategory::exit().index()] = 500;
  cell.counts[ActionCategory::submit().index()] = 3;
  const auto more = evaluate(registry().at("uniform"), h, {cell});
  EXPECT_DOUBLE_EQ(base.statistic, more.statistic);
  // Only the extreme level counts.
  LevelCell far;
  far.level = 5;
  far.counts[measurement_actions()[0].index()] = 1000;
  EXPECT_DOUBLE_EQ(evaluate(registry().at("uniform"), h, {cell, far}).statistic, base.statistic);
}

TEST(Evaluate, UniformWithoutExtremeLevel) {
  LevelCell cell;
  cell.level = 4;
  cell.counts[0] = 50;
  EXPECT_THROW(evaluate(registry().at("uniform"), builtin("H_G2"), {cell}), InsufficientData);
}

TEST(Evaluate, ClassMismatchAndAlphaOverride) {
  EXPECT_THROW(evaluate(registry().at("uniform"), builtin("H_G1"), {}), CriterionMismatch);
  const auto& h = builtin("H_G1");
  // rho = 7/15 over 10 levels: p ~ 0.174, so a looser alpha flips the verdict.
  const std::array<double, 10> p{0.3, 0.1, 0.2, 0.5, 0.4, 0.15, 0.25, 0.6, 0.35, 0.45};
  const auto cells = cells_for(h, [&](int l) { return p[l - 1]; });
  const auto strict = evaluate(registry().at("mono"), h, cells);
  EvaluationOptions loose;
  loose.alpha = 0.2;
  const auto relaxed = evaluate(registry().at("mono"), h, cells, loose);
  EXPECT_EQ(strict.p_value, relaxed.p_value);
  EXPECT_NEAR(strict.statistic, 7.0 / 15.0, 1e-12);
  EXPECT_NEAR(strict.p_value, 0.1739385971650663, 1e-9);
  EXPECT_FALSE(strict.satisfied);
  EXPECT_TRUE(relaxed.satisfied);
}

TEST(Evaluate, DropRateFlagsCells) {
  const auto& h = builtin("H_G1");
  auto cells = cells_for(h, [](int l) { return l / 10.0; });
  cells[4].dropped = 20;
  EXPECT_TRUE(evaluate(registry().at("mono"), h, cells).flagged);
}

TEST(Registry, RegisterFindAndDuplicates) {
  HypothesisRegistry r;
  const auto* mono = r.register_class(registry().at("mono"));
  ASSERT_NE(mono, nullptr);
  EXPECT_EQ(r.find("mono"), mono);
  EXPECT_TRUE(validate_hypothesis(builtin("H_G1"), r).empty());
  EXPECT_FALSE(validate_hypothesis(builtin("H_G2"), r).empty());
  EXPECT_THROW(r.register_class(registry().at("mono")), DuplicateClassId);
  EXPECT_THROW(r.at("nope"), UnknownClass);
  EXPECT_EQ(registry().ids(), (std::vector<std::string>{"mono", "uniform"}));
}

TEST(Registry, ClassValidation) {
  for (const auto& id : registry().ids()) EXPECT_TRUE(validate_class(registry().at(id)).empty()) << id;
  HypothesisClass bad{"bad", CriterionKind::Monotonic, 1.5, {{0, "{characteristic} {nonsense}"}}};
  EXPECT_GE(validate_class(bad).size(), 3u);
}

TEST(Hypotheses, BuiltinsValidateAndDirectionsMatchClasses) {
  for (const auto& h : builtin_hypotheses()) EXPECT_TRUE(validate_hypothesis(h, registry()).empty()) << h.id;
  MDHyp h = builtin("H_G1");
  h.spectrum_end = SpectrumEnd::Low;
  EXPECT_FALSE(validate_hypothesis(h, registry()).empty());
  h = builtin("H_G1");
  h.action_set.clear();
  EXPECT_FALSE(validate_hypothesis(h, registry()).empty());
  h = builtin("H_P1");
  h.trend_variable = "weather";
  EXPECT_FALSE(validate_hypothesis(h, registry()).empty());
}

TEST(CalibrationLedger, TracksPerRevisionAndHypothesis) {
  CalibrationLedger ledger;
  EXPECT_EQ(ledger.status("mono", 1, "H_G1"), CalibrationStatus::Untested);
  ledger.record("mono", 1, "H_G1", CalibrationStatus::Calibrated);
  EXPECT_EQ(ledger.status("mono", 1, "H_G1"), CalibrationStatus::Calibrated);
  EXPECT_EQ(ledger.status("mono", 0, "H_G1"), CalibrationStatus::Untested);
  EXPECT_EQ(ledger.status("mono", 1, "H_P1"), CalibrationStatus::Untested);
}
