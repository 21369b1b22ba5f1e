#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "support/temp_dir.hpp"
#include "reflect/report.hpp"
#include "support/test_support.hpp"

namespace reflect {
namespace {

using nlohmann::json;

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  testing::TempDir dir;

  CliRun invoke(const std::string& args) {
    const auto err_path = dir.path() / "stderr.txt";
    const std::string cmd = std::string(REFLECT_CLI_PATH) + " " + args + " 2>" + err_path.string();
    CliRun r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(err_path);
    std::stringstream ss;
    ss << in.rdbuf();
    r.err = ss.str();
    return r;
  }

  static std::string fixture_flags(const std::string& name, const std::vector<std::string>& packs) {
    const auto d = testing::fixtures_dir() / name;
    std::string s = "--model " + (d / "model.json").string() + " --case " + (d / "case.json").string() +
                    " --datasheet " + (d / "datasheet.json").string() + " --model-card " +
                    (d / "model_card.json").string() + " --background " + (d / "background.json").string();
    for (const auto& p : packs) s += " --packs " + (testing::packs_dir() / (p + ".json")).string();
    return s;
  }

  std::string data() const { return "--data-dir " + (dir.path() / "store").string(); }
};

TEST_F(CliTest, DemoRendersMarkdown) {
  const auto r = invoke("demo health-age --format markdown");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("Would you suggest the same treatment if the patient were 2 years older?"), std::string::npos);
  EXPECT_NE(r.out.find("## Q10 Model Behaviour"), std::string::npos);
}

TEST_F(CliTest, AskPrintsJsonReport) {
  const auto r = invoke("ask " + fixture_flags("health-age", {"health", "generic"}) + " --as-of 2024-06-01 --budget 3");
  ASSERT_EQ(r.code, 0) << r.err;
  const json report = json::parse(r.out);
  EXPECT_EQ(report.at("case_id"), "patient-048");
  EXPECT_LE(report.at("questions").size(), 3u);
  EXPECT_EQ(report.at("recommendation").at("predicted"), "negative");
}

TEST_F(CliTest, AskMatchesLibraryOutput) {
  const auto r = invoke("demo health-flu --format json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto f = testing::load_fixture("health-flu");
  EXPECT_EQ(json::parse(r.out), question_report(run_pipeline(f.inputs, f.config)));
}

TEST_F(CliTest, CaseFindingsExitTwo) {
  const auto r = invoke("demo education");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("attendance"), std::string::npos);
}

TEST_F(CliTest, HardFailuresExitOneWithStage) {
  auto r = invoke("ask --model /nonexistent/model.json --case x --datasheet x --model-card x --background x --packs x");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("/nonexistent/model.json"), std::string::npos);
  EXPECT_NE(r.err.find("["), std::string::npos);
  r = invoke("ask");
  EXPECT_EQ(r.code, 1);
  r = invoke("demo no-such-fixture");
  EXPECT_EQ(r.code, 1);
}

TEST_F(CliTest, ExplainDumpsEvidence) {
  const auto r = invoke("explain " + fixture_flags("health-age", {}) + " --as-of 2024-06-01");
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j.at("evidence").at("prox:age").at("kind"), "BoundaryProximity");
  EXPECT_TRUE(j.at("evidence").contains("datasheet:stale"));
}

TEST_F(CliTest, ValidatePacksAndCase) {
  auto r = invoke("validate --packs " + (testing::packs_dir() / "health.json").string() + " --packs " +
               (testing::packs_dir() / "generic.json").string());
  EXPECT_EQ(r.code, 0) << r.err;
  const auto bad = dir.path() / "bad.json";
  std::ofstream(bad) << R"({"pack":"bad","domain":"generic","templates":[{"id":"bad.1","qtype":"Q2","text":"Is {x} ok?","slots":[],"required_evidence":[],"rationale":"r"}]})";
  r = invoke("validate --packs " + bad.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("bad.1"), std::string::npos);
  const auto edu = testing::fixtures_dir() / "education";
  r = invoke("validate --model " + (edu / "model.json").string() + " --case " + (edu / "case.json").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("attendance"), std::string::npos);
}

TEST_F(CliTest, SessionLifecycle) {
  auto r = invoke("session " + data() + " new " + fixture_flags("health-age", {"health", "generic"}) +
               " --as-of 2024-06-01");
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string id = json::parse(r.out).at("id");

  r = invoke("session " + data() + " answer --id " + id + " --index 0 --text 'Age is not decisive'");
  EXPECT_EQ(r.code, 0) << r.err;
  r = invoke("session " + data() + " whatif --id " + id + " --set age=53");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("predicted: positive"), std::string::npos);
  r = invoke("session " + data() + " finalize --id " + id + " --chosen positive --rationale 'Fit for surgery'");
  EXPECT_EQ(r.code, 0) << r.err;

  r = invoke("session " + data() + " answer --id " + id + " --index 0 --text late");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("SessionFinalized"), std::string::npos);

  r = invoke("session " + data() + " show --id " + id + " --format markdown");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("finalized"), std::string::npos);

  r = invoke("session " + data() + " export --id " + id);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto log = dir.path() / "exported.jsonl";
  std::ofstream(log) << r.out;
  r = invoke("session " + data() + " replay --log " + log.string());
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("replay OK"), std::string::npos);

  // Drop the answered record: the sequence now has a gap.
  std::ifstream in(log);
  std::string line, kept;
  int n = 0;
  while (std::getline(in, line)) {
    if (n++ != 2) kept += line + "\n";
  }
  const auto gap = dir.path() / "gap.jsonl";
  std::ofstream(gap) << kept;
  r = invoke("session " + data() + " replay --log " + gap.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("CorruptLog"), std::string::npos);
}

TEST_F(CliTest, SessionErrors) {
  auto r = invoke("session " + data() + " show --id 0123456789abcdef0123456789abcdef");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("UnknownSession"), std::string::npos);
  r = invoke("session " + data() + " new " + fixture_flags("health-age", {"health", "generic"}));
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string id = json::parse(r.out).at("id");
  r = invoke("session " + data() + " whatif --id " + id + " --set age");
  EXPECT_EQ(r.code, 2);
  r = invoke("session " + data() + " finalize --id " + id + " --chosen positive --rationale ' '");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("EmptyRationale"), std::string::npos);
}

}  // namespace
}  // namespace reflect
