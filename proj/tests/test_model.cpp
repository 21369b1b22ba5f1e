#include <gtest/gtest.h>

#include <cmath>

#include "reflect/metadata.hpp"
#include "reflect/model.hpp"
#include "support/test_support.hpp"

namespace reflect {
namespace {

using nlohmann::json;

json age_model_json() {
  return json::parse(read_file((testing::fixtures_dir() / "health-age" / "model.json").string()));
}

CaseInstance with_age(double age) {
  CaseInstance c;
  c.id = "c";
  c.values["age"] = age;
  return c;
}

TEST(Model, LinearThresholdPicksFirstLabelAtOrAbove) {
  const auto m = model_from_json(age_model_json());
  EXPECT_EQ(predict(m, with_age(49.999)).predicted, "negative");
  EXPECT_EQ(predict(m, with_age(50)).predicted, "positive");
  const auto r = predict(m, with_age(48));
  // s - threshold = -2, so the first label scores sigma(-2).
  const double expected = 1.0 / (1.0 + std::exp(2.0));
  EXPECT_NEAR(r.score_of("positive"), expected, 1e-12);
  EXPECT_NEAR(r.score_of("negative"), 1.0 - expected, 1e-12);
  EXPECT_NEAR(r.margin, 1.0 - 2.0 * expected, 1e-12);
  EXPECT_EQ(r.runner_up(), "positive");
}

TEST(Model, OutputIsSignedLogitPerLabel) {
  const auto m = model_from_json(age_model_json());
  const Row row{53.0};
  EXPECT_DOUBLE_EQ(m.output(row, 0), 3.0);
  EXPECT_DOUBLE_EQ(m.output(row, 1), -3.0);
}

TEST(Model, JsonRoundTripPreservesEveryFixtureModel) {
  for (const auto& name : testing::fixture_names()) {
    const auto m = parse_model_spec(read_file((testing::fixtures_dir() / name / "model.json").string()));
    EXPECT_EQ(model_from_json(to_json(m)), m) << name;
  }
}

TEST(Model, TreeFixturePredictsFlu) {
  const auto f = testing::load_fixture("health-flu");
  const auto r = predict(f.inputs.model, f.inputs.case_instance);
  EXPECT_EQ(r.predicted, "flu");
  EXPECT_NEAR(r.margin, 0.2, 1e-12);
  EXPECT_EQ(r.runner_up(), "cold");
}

TEST(Model, SchemaErrorsNameTheField) {
  auto j = age_model_json();
  j["outcome_labels"] = {"only"};
  try {
    model_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchemaError);
    EXPECT_NE(e.detail().find("outcome_labels"), std::string::npos);
  }
  EXPECT_THROW(parse_model_spec("{"), Error);
  j = age_model_json();
  j["features"][0]["range"] = {10, 5};
  EXPECT_THROW(model_from_json(j), Error);
}

TEST(Model, ValidateCaseReportsEachFindingKind) {
  const auto f = testing::load_fixture("health-flu");
  CaseInstance c = f.inputs.case_instance;
  c.values["fever"] = 50.0;
  c.values["headache"] = std::string("extreme");
  c.values["smoking"] = 1.0;
  c.values.erase("sneezing");
  c.values["shoe_size"] = 44.0;
  const auto report = validate_case(f.inputs.model, c);
  std::set<CaseFinding::Kind> kinds;
  for (const auto& finding : report.findings) kinds.insert(finding.kind);
  EXPECT_EQ(kinds, (std::set<CaseFinding::Kind>{CaseFinding::Kind::kOutOfRange, CaseFinding::Kind::kUnknownCategory,
                                                CaseFinding::Kind::kTypeMismatch, CaseFinding::Kind::kMissing,
                                                CaseFinding::Kind::kUnknownFeature}));
  EXPECT_TRUE(validate_case(f.inputs.model, f.inputs.case_instance).ok());
}

TEST(Model, EncodeCaseSkipsUnreadFeaturesButNeedsReadOnes) {
  const auto f = testing::load_fixture("education");
  EXPECT_TRUE(f.inputs.case_instance.is_missing("attendance"));
  EXPECT_NO_THROW(encode_case(f.inputs.model, f.inputs.case_instance));
  EXPECT_THROW(encode_complete(f.inputs.model, f.inputs.case_instance), Error);
  CaseInstance c = f.inputs.case_instance;
  c.values["failed_exercises"] = Missing{};
  try {
    encode_case(f.inputs.model, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingFeature);
  }
}

TEST(Model, ApplyChangesValidates) {
  const auto m = model_from_json(age_model_json());
  EXPECT_EQ(std::get<double>(apply_changes(m, with_age(48), {{"age", 53.0}}).values.at("age")), 53.0);
  EXPECT_THROW(apply_changes(m, with_age(48), {{"age", 130.0}}), Error);
  EXPECT_THROW(apply_changes(m, with_age(48), {{"height", 1.0}}), Error);
}

TEST(Model, CaseJsonRoundTripWithMissing) {
  const auto f = testing::load_fixture("education");
  EXPECT_EQ(case_from_json(to_json(f.inputs.case_instance)), f.inputs.case_instance);
}

TEST(Model, FormatNumber) {
  EXPECT_EQ(format_number(2.0), "2");
  EXPECT_EQ(format_number(0.15), "0.15");
  EXPECT_EQ(format_number(-3.5), "-3.5");
  EXPECT_EQ(format_number(38.2), "38.2");
}

TEST(Metadata, DateArithmetic) {
  const Date d = Date::parse("2015-06-30");
  EXPECT_EQ(d.to_string(), "2015-06-30");
  EXPECT_NEAR(years_between(Date::parse("2015-06-30"), Date::parse("2024-06-01")), 8.92, 0.01);
  EXPECT_THROW(Date::parse("2015-13-01"), Error);
  EXPECT_THROW(Date::parse("yesterday"), Error);
}

TEST(Metadata, OutliersAgainstDatasheet) {
  const auto f = testing::load_fixture("health-flu");
  const auto r = distribution_report(f.inputs.datasheet, f.inputs.case_instance, {});
  const auto* fever = r.find("fever");
  ASSERT_NE(fever, nullptr);
  // (38.2 - 37.1) / 0.5
  EXPECT_NEAR(fever->z, 2.2, 1e-9);
  EXPECT_TRUE(fever->flagged);
}

TEST(Metadata, DatasheetFindingsForFluFixture) {
  const auto f = testing::load_fixture("health-flu");
  const auto findings = datasheet_findings(f.inputs.datasheet, f.config.triggers.metadata, Date::parse("2024-06-01"));
  std::multiset<DatasheetFinding::Kind> kinds;
  for (const auto& x : findings.findings) kinds.insert(x.kind);
  EXPECT_TRUE(kinds.contains(DatasheetFinding::Kind::kSmallSample));
  EXPECT_TRUE(kinds.contains(DatasheetFinding::Kind::kSubgroupImbalance));
  EXPECT_TRUE(kinds.contains(DatasheetFinding::Kind::kMissingFactor));
}

TEST(Metadata, StaleDatasheetForAgeFixture) {
  const auto f = testing::load_fixture("health-age");
  const auto findings = datasheet_findings(f.inputs.datasheet, f.config.triggers.metadata, Date::parse("2024-06-01"));
  ASSERT_FALSE(findings.empty());
  EXPECT_EQ(findings.findings.front().kind, DatasheetFinding::Kind::kStale);
  EXPECT_GT(findings.findings.front().value, 5.0);
}

TEST(Metadata, JsonRoundTrips) {
  for (const auto& name : testing::fixture_names()) {
    const auto f = testing::load_fixture(name);
    EXPECT_EQ(datasheet_from_json(to_json(f.inputs.datasheet)), f.inputs.datasheet) << name;
    EXPECT_EQ(model_card_from_json(to_json(f.inputs.model_card)), f.inputs.model_card) << name;
  }
}

}  // namespace
}  // namespace reflect
