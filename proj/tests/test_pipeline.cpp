#include <gtest/gtest.h>

#include "reflect/report.hpp"
#include "reflect/triggers.hpp"
#include "support/test_support.hpp"

namespace reflect {
namespace {

using nlohmann::json;

std::set<TriggerId> fired(const std::string& fixture) {
  const auto f = testing::load_fixture(fixture);
  const auto& in = f.inputs;
  const auto e = build_evidence(in.model, in.case_instance, in.datasheet, in.model_card, in.background,
                                f.config.triggers);
  std::set<TriggerId> ids;
  for (const auto& firing : evaluate_triggers(e, f.config.triggers)) ids.insert(firing.trigger);
  return ids;
}

const TriggerFiring* find_firing(const std::vector<TriggerFiring>& fs, TriggerId id) {
  for (const auto& f : fs) {
    if (f.trigger == id) return &f;
  }
  return nullptr;
}

TEST(Triggers, EveryQuestionTypeFiresAcrossFixtures) {
  std::set<QuestionTypeId> candidates;
  std::set<QuestionTypeId> selected;
  for (const auto& name : testing::fixture_names()) {
    const auto f = testing::load_fixture(name);
    const auto r = run_pipeline(f.inputs, f.config);
    for (const auto& q : r.candidates) candidates.insert(q.qtype);
    for (const auto& q : r.questions) selected.insert(q.qtype);
  }
  EXPECT_EQ(candidates.size(), 10u);
  EXPECT_EQ(selected.size(), 10u);
}

TEST(Triggers, AgeFixture) {
  const auto ids = fired("health-age");
  for (auto id : {TriggerId::kQ3a, TriggerId::kQ10a, TriggerId::kQ10b, TriggerId::kQ5b, TriggerId::kQ2a}) {
    EXPECT_TRUE(ids.contains(id)) << to_string(id);
  }
  EXPECT_FALSE(ids.contains(TriggerId::kQ9));  // age is immutable
  EXPECT_FALSE(ids.contains(TriggerId::kQ1a));
}

TEST(Triggers, AgeProximityBindings) {
  const auto f = testing::load_fixture("health-age");
  const auto& in = f.inputs;
  const auto e = build_evidence(in.model, in.case_instance, in.datasheet, in.model_card, in.background,
                                f.config.triggers);
  const auto firings = evaluate_triggers(e, f.config.triggers);
  const auto* q10 = find_firing(firings, TriggerId::kQ10a);
  ASSERT_NE(q10, nullptr);
  EXPECT_EQ(q10->bindings.at("delta_years"), "2");
  EXPECT_EQ(q10->bindings.at("new_outcome"), "positive");
  EXPECT_EQ(q10->evidence_refs.front(), "prox:age");
  const auto* err = find_firing(firings, TriggerId::kQ10b);
  ASSERT_NE(err, nullptr);
  EXPECT_EQ(err->bindings.at("one_in_n"), "10");
  EXPECT_EQ(to_string(TriggerId::kQ10a), "T-Q10a");
}

TEST(Triggers, FluFixture) {
  const auto ids = fired("health-flu");
  for (auto id : {TriggerId::kQ1b, TriggerId::kQ3b, TriggerId::kQ3c, TriggerId::kQ6b, TriggerId::kQ8a,
                  TriggerId::kQ4, TriggerId::kQ9}) {
    EXPECT_TRUE(ids.contains(id)) << to_string(id);
  }
}

TEST(Triggers, EducationFixture) {
  const auto ids = fired("education");
  for (auto id : {TriggerId::kQ1a, TriggerId::kQ5a, TriggerId::kQ7a, TriggerId::kQ9, TriggerId::kQ6b,
                  TriggerId::kQ8a, TriggerId::kQ10b}) {
    EXPECT_TRUE(ids.contains(id)) << to_string(id);
  }
}

TEST(Triggers, ConstantFixtureFallsBackToGeneralQuestions) {
  const auto ids = fired("constant");
  for (auto id : {TriggerId::kQ5a, TriggerId::kQ6a, TriggerId::kQ7b, TriggerId::kQ8b}) {
    EXPECT_TRUE(ids.contains(id)) << to_string(id);
  }
  EXPECT_FALSE(ids.contains(TriggerId::kQ2a));  // all attributions are zero
  EXPECT_FALSE(ids.contains(TriggerId::kQ10a));
  EXPECT_FALSE(ids.contains(TriggerId::kQ10b));  // error rate 0
}

TEST(Triggers, FiringScoresAreInUnitInterval) {
  for (const auto& name : testing::fixture_names()) {
    const auto f = testing::load_fixture(name);
    const auto& in = f.inputs;
    const auto e = build_evidence(in.model, in.case_instance, in.datasheet, in.model_card, in.background,
                                  f.config.triggers);
    for (const auto& firing : evaluate_triggers(e, f.config.triggers)) {
      EXPECT_GE(firing.score, 0.0);
      EXPECT_LE(firing.score, 1.0);
      for (const auto& ref : firing.evidence_refs) EXPECT_NE(e.find(ref), nullptr) << ref;
    }
  }
}

TEST(Pipeline, QuestionsCiteExistingEvidenceOfTheRequiredKinds) {
  for (const auto& name : testing::fixture_names()) {
    const auto f = testing::load_fixture(name);
    const auto r = run_pipeline(f.inputs, f.config);
    std::map<std::string, const QuestionTemplate*> templates;
    for (const auto& p : f.inputs.packs) {
      for (const auto& t : p.templates) templates[t.id] = &t;
    }
    for (const auto& q : r.candidates) {
      const auto* tpl = templates.at(q.template_id);
      EXPECT_EQ(tpl->qtype, q.qtype);
      std::set<EvidenceKind> cited;
      for (const auto& ref : q.evidence_refs) {
        const auto* item = r.evidence.find(ref);
        ASSERT_NE(item, nullptr) << ref;
        cited.insert(item->kind);
      }
      for (auto k : tpl->required_evidence) EXPECT_TRUE(cited.contains(k)) << q.template_id;
      EXPECT_EQ(q.text.find('{'), std::string::npos) << q.text;
    }
  }
}

TEST(Pipeline, DomainPackWinsOverGeneric) {
  const auto f = testing::load_fixture("health-age");
  const auto r = run_pipeline(f.inputs, f.config);
  bool found = false;
  for (const auto& q : r.questions) {
    if (q.qtype == QuestionTypeId::Q10) {
      EXPECT_EQ(q.template_id, "health.q10.older");
      EXPECT_EQ(q.text, "Would you suggest the same treatment if the patient were 2 years older?");
      found = true;
    }
  }
  EXPECT_TRUE(found);
  // With only the generic pack the same trigger uses the generic template.
  auto generic_only = f.inputs;
  generic_only.packs.erase(generic_only.packs.begin());
  const auto g = run_pipeline(generic_only, f.config);
  for (const auto& q : g.candidates) EXPECT_EQ(q.template_id.rfind("generic.", 0), 0u);
}

TEST(Pipeline, MissingTemplateIsReportedWithStage) {
  auto f = testing::load_fixture("constant");
  TemplatePack tiny{"tiny", "generic", {}};
  tiny.templates.push_back({"tiny.q1", QuestionTypeId::Q1, "generic", "Is the input complete?", {},
                            {EvidenceKind::kInputData}, "r"});
  f.inputs.packs = {tiny};
  try {
    run_pipeline(f.inputs, f.config);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingTemplate);
    EXPECT_EQ(e.stage(), "fire_triggers");
  }
}

TEST(Pipeline, MissingReadFeatureSkipsModelStages) {
  auto f = testing::load_fixture("health-flu");
  f.inputs.case_instance.values["fever"] = Missing{};
  const auto r = run_pipeline(f.inputs, f.config);
  EXPECT_FALSE(r.evidence.recommendation.has_value());
  EXPECT_FALSE(r.evidence.shapley.has_value());
  const auto& u = r.evidence.unavailable;
  EXPECT_NE(std::find(u.begin(), u.end(), "predict"), u.end());
  EXPECT_NE(std::find(u.begin(), u.end(), "counterfactual"), u.end());
  ASSERT_FALSE(r.questions.empty());
  EXPECT_TRUE(std::any_of(r.questions.begin(), r.questions.end(),
                          [](const auto& q) { return q.qtype == QuestionTypeId::Q1; }));
  const json report = question_report(r);
  EXPECT_TRUE(report.at("recommendation").is_null());
  EXPECT_NE(render_markdown(report).find("unavailable"), std::string::npos);
}

TEST(Pipeline, DeterministicReports) {
  for (const auto& name : testing::fixture_names()) {
    const auto a = testing::load_fixture(name);
    const auto b = testing::load_fixture(name);
    EXPECT_EQ(question_report(run_pipeline(a.inputs, a.config)).dump(),
              question_report(run_pipeline(b.inputs, b.config)).dump())
        << name;
  }
}

TEST(Pipeline, BudgetOverride) {
  const auto f = testing::load_fixture("health-flu");
  for (int budget : {1, 2, 3, 7}) {
    const auto cfg = apply_config_overrides({{"budget", budget}}, f.config);
    const auto r = run_pipeline(f.inputs, cfg);
    EXPECT_LE(r.questions.size(), static_cast<std::size_t>(budget));
    EXPECT_TRUE(std::any_of(r.questions.begin(), r.questions.end(),
                            [](const auto& q) { return is_creating_level(q.qtype); }));
  }
}

TEST(Pipeline, WhatIfEvidenceForOlderPatient) {
  const auto f = testing::load_fixture("health-age");
  const std::map<std::string, FeatureValue> changes = {{"age", 53.0}};
  const auto moved = apply_changes(f.inputs.model, f.inputs.case_instance, changes);
  const auto e = build_whatif_evidence(f.inputs.model, moved, f.inputs.model_card, changes, f.config.triggers);
  ASSERT_TRUE(e.recommendation.has_value());
  EXPECT_EQ(e.recommendation->predicted, "positive");
  EXPECT_NE(e.find("whatif:perturbation"), nullptr);
  for (const auto& firing : evaluate_whatif_triggers(e, f.config.triggers)) {
    EXPECT_TRUE(firing.trigger == TriggerId::kQ9 || firing.trigger == TriggerId::kQ10a);
  }
}

TEST(Config, OverridesAreValidated) {
  const auto cfg = apply_config_overrides({{"top_k", 2}, {"alt_margin", 0.3}, {"as_of", "2020-01-01"}});
  EXPECT_EQ(cfg.triggers.top_k, 2);
  EXPECT_DOUBLE_EQ(cfg.triggers.alt_margin, 0.3);
  ASSERT_TRUE(cfg.triggers.as_of.has_value());
  EXPECT_EQ(cfg.triggers.as_of->to_string(), "2020-01-01");
  EXPECT_EQ(apply_config_overrides(to_json(cfg)).triggers.top_k, 2);
  for (const json& bad : {json{{"nope", 1}}, json{{"top_k", "two"}}, json{{"budget", 0}},
                          json{{"alt_margin", -1.0}}, json{{"as_of", "2020-02-30"}}}) {
    EXPECT_THROW(apply_config_overrides(bad), Error) << bad.dump();
  }
}

TEST(Report, MarkdownGroupsByTypeAndMarksCreating) {
  const auto f = testing::load_fixture("education");
  const auto md = render_markdown(question_report(run_pipeline(f.inputs, f.config)));
  EXPECT_NE(md.find("# Reflection questions for case student-7b-12"), std::string::npos);
  EXPECT_NE(md.find("## Q9* Change Intervention"), std::string::npos);
  EXPECT_NE(md.find("## Q1 Case Information"), std::string::npos);
  EXPECT_LT(md.find("## Q1 "), md.find("## Q9*"));
}

}  // namespace
}  // namespace reflect
