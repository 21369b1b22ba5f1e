#include <gtest/gtest.h>

#include <fstream>

#include "reflect/question_template.hpp"
#include "support/test_support.hpp"

namespace reflect {
namespace {

using nlohmann::json;
using Kind = TemplateViolation::Kind;

QuestionTemplate make(std::string text, std::set<std::string> slots, QuestionTypeId q = QuestionTypeId::Q2,
                      std::set<EvidenceKind> req = {EvidenceKind::kFeatureContribution}) {
  return {"t.1", q, "generic", std::move(text), std::move(slots), std::move(req), "because"};
}

TEST(SlotMarkers, InOrderOfFirstAppearance) {
  EXPECT_EQ(slot_markers("{b} and {a} then {b}"), (std::vector<std::string>{"b", "a"}));
  EXPECT_EQ(slot_markers("no slots"), std::vector<std::string>{});
  EXPECT_EQ(slot_markers("{Bad} {ok_1}"), std::vector<std::string>{"ok_1"});
  EXPECT_TRUE(is_valid_slot_name("delta_years"));
  EXPECT_FALSE(is_valid_slot_name("1x"));
  EXPECT_FALSE(is_valid_slot_name(""));
}

TEST(ValidateTemplate, AcceptsWellFormed) {
  EXPECT_TRUE(validate_template(make("Is {feature} relevant?", {"feature"}), builtin_taxonomy()).ok());
}

TEST(ValidateTemplate, ReportsEachViolationKind) {
  const auto& t = builtin_taxonomy();
  EXPECT_TRUE(validate_template(make("Is {feature} relevant?", {}), t).has(Kind::kUndeclaredSlot));
  EXPECT_TRUE(validate_template(make("Is it relevant?", {"feature"}), t).has(Kind::kUnusedSlot));
  EXPECT_TRUE(validate_template(make("Is {Feature} relevant?", {}), t).has(Kind::kMalformedSlot));
  EXPECT_TRUE(validate_template(make("", {}), t).has(Kind::kEmptyText));
  auto no_rationale = make("Fine?", {});
  no_rationale.rationale = "  ";
  EXPECT_TRUE(validate_template(no_rationale, t).has(Kind::kEmptyRationale));
  // Partial dependence is not useful information for Q2.
  EXPECT_TRUE(validate_template(make("Fine?", {}, QuestionTypeId::Q2, {EvidenceKind::kPartialDependence}), t)
                  .has(Kind::kEvidenceNotUseful));
}

TEST(RenderTemplate, SubstitutesVerbatimWithoutRescanning) {
  const auto tpl = make("Is {feature} relevant to {outcome}?", {"feature", "outcome"});
  const auto q = render_template(tpl, {{"feature", "{outcome}"}, {"outcome", "flu"}}, {"attr:shapley"}, 0.5);
  EXPECT_EQ(q.text, "Is {outcome} relevant to flu?");
  EXPECT_EQ(q.template_id, "t.1");
  EXPECT_EQ(q.evidence_refs, std::vector<std::string>{"attr:shapley"});
  EXPECT_DOUBLE_EQ(q.score, 0.5);
}

TEST(RenderTemplate, MissingBindingNamesTheSlot) {
  const auto tpl = make("Is {feature} relevant to {outcome}?", {"feature", "outcome"});
  try {
    render_template(tpl, {{"feature", "age"}}, {}, 1.0);
    FAIL() << "expected MissingBinding";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingBinding);
    EXPECT_NE(e.detail().find("outcome"), std::string::npos);
  }
}

TEST(TemplatePack, RejectsInvalidTemplateWithReport) {
  const json doc = {{"pack", "p"},
                    {"domain", "generic"},
                    {"templates",
                     {{{"id", "p.bad"}, {"qtype", "Q2"}, {"text", "Is {x} ok?"}, {"slots", json::array()},
                       {"required_evidence", json::array()}, {"rationale", "r"}}}}};
  try {
    load_template_pack(doc.dump());
    FAIL() << "expected InvalidTemplateError";
  } catch (const InvalidTemplateError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidTemplate);
    EXPECT_EQ(e.template_id(), "p.bad");
    EXPECT_TRUE(e.report().has(Kind::kUndeclaredSlot));
  }
}

TEST(TemplatePack, UnknownQuestionTypeAndParseErrors) {
  const json doc = {{"pack", "p"},
                    {"domain", "generic"},
                    {"templates",
                     {{{"id", "p.q11"}, {"qtype", "Q11"}, {"text", "Ok?"}, {"slots", json::array()},
                       {"required_evidence", json::array()}, {"rationale", "r"}}}}};
  EXPECT_THROW(load_template_pack(doc.dump()), InvalidTemplateError);
  try {
    load_template_pack("{not json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
  }
}

TEST(TemplatePack, SerializationRoundTrips) {
  for (const char* name : {"generic", "health", "education"}) {
    const auto pack = load_template_pack_file((testing::packs_dir() / (std::string(name) + ".json")).string());
    EXPECT_EQ(load_template_pack(serialize_template_pack(pack)), pack) << name;
  }
}

TEST(ShippedPacks, LoadWithZeroViolationsAndUniqueIds) {
  std::set<std::string> ids;
  for (const char* name : {"generic", "health", "education"}) {
    const auto pack = load_template_pack_file((testing::packs_dir() / (std::string(name) + ".json")).string());
    EXPECT_EQ(pack.pack, name);
    for (const auto& t : pack.templates) {
      EXPECT_TRUE(validate_template(t, builtin_taxonomy()).ok()) << t.id;
      EXPECT_TRUE(ids.insert(t.id).second) << "duplicate id " << t.id;
      EXPECT_EQ(t.id.rfind(std::string(name) + ".", 0), 0u) << t.id;
    }
  }
}

TEST(ShippedPacks, GenericCoversEveryQuestionType) {
  const auto pack = load_template_pack_file((testing::packs_dir() / "generic.json").string());
  std::set<QuestionTypeId> types;
  for (const auto& t : pack.templates) types.insert(t.qtype);
  EXPECT_EQ(types.size(), 10u);
}

// Every domain sample question ships as a template of the right type, and
// binding the placeholders reproduces the sample sentence.
TEST(ShippedPacks, DomainSampleQuestionsShipVerbatim) {
  std::ifstream in(testing::data_dir() / "sample_questions.json");
  ASSERT_TRUE(in) << "golden list missing";
  const json golden = json::parse(in);
  ASSERT_EQ(golden.size(), 67u);
  std::map<std::string, TemplatePack> packs;
  for (const char* name : {"health", "education"}) {
    packs[name] = load_template_pack_file((testing::packs_dir() / (std::string(name) + ".json")).string());
  }
  for (const auto& g : golden) {
    const auto& pack = packs.at(g.at("pack").get<std::string>());
    const auto qtype = *parse_question_type(g.at("qtype").get<std::string>());
    const std::string text = g.at("template");
    const auto it = std::find_if(pack.templates.begin(), pack.templates.end(), [&](const QuestionTemplate& t) {
      return t.text == text && t.qtype == qtype;
    });
    ASSERT_NE(it, pack.templates.end()) << g.dump();
    const auto q = render_template(*it, g.at("bindings").get<std::map<std::string, std::string>>(), {}, 1.0);
    EXPECT_EQ(q.text, g.at("sample").get<std::string>());
  }
}

TEST(ReflectionQuestion, JsonRoundTrip) {
  ReflectionQuestion q{"health.q4.follow", QuestionTypeId::Q4, "Does diagnosis flu follow from symptom fever?",
                       "why", {"attr:shapley"}, 0.8};
  EXPECT_EQ(question_from_json(to_json(q)), q);
}

}  // namespace
}  // namespace reflect
