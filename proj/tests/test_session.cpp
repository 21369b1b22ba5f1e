#include <gtest/gtest.h>

#include <thread>

#include "reflect/session.hpp"
#include "support/temp_dir.hpp"
#include "support/test_support.hpp"

namespace reflect {
namespace {

using nlohmann::json;

class SessionTest : public ::testing::Test {
 protected:
  testing::TempDir dir;
  SessionStore store{dir.path()};
  testing::LoadedFixture age = testing::load_fixture("health-age");

  std::string new_session() { return store.create_session(age.inputs, age.config).id; }
};

std::vector<AuditRecord> tampered(std::vector<AuditRecord> records, std::size_t index,
                                  const std::function<void(json&)>& edit) {
  edit(records.at(index).payload);
  return records;
}

TEST_F(SessionTest, CreateAttachesQuestionsAndLogsTwoRecords) {
  const auto s = store.create_session(age.inputs, age.config);
  EXPECT_EQ(s.id.size(), 32u);
  EXPECT_EQ(s.status, SessionStatus::kOpen);
  ASSERT_TRUE(s.recommendation.has_value());
  EXPECT_EQ(s.recommendation->predicted, "negative");
  EXPECT_FALSE(s.questions.empty());
  EXPECT_EQ(s.model_ref, model_ref(age.inputs.model));
  EXPECT_EQ(s.model_ref.rfind("sha256:", 0), 0u);
  const auto records = store.records(s.id);
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].kind, RecordKind::kCreated);
  EXPECT_EQ(records[1].kind, RecordKind::kQuestionsAttached);
  EXPECT_EQ(records[0].seq, 0);
  EXPECT_EQ(records[1].seq, 1);
  EXPECT_EQ(store.load(s.id), s);
  EXPECT_EQ(store.list(), std::vector<std::string>{s.id});
}

TEST_F(SessionTest, FullLifecycleAppendsOneRecordPerMutation) {
  const auto id = new_session();
  store.record_answer(id, 0, "Age alone should not decide this.");
  EXPECT_EQ(store.records(id).size(), 3u);
  const auto w = store.record_whatif(id, {{"age", 53.0}});
  EXPECT_EQ(w.result.predicted, "positive");
  EXPECT_EQ(store.records(id).size(), 4u);
  const auto fin = store.finalize(id, "positive", "Borderline age, patient fit for surgery.");
  EXPECT_EQ(fin.kind, RecordKind::kFinalized);
  const auto s = store.load(id);
  EXPECT_EQ(s.status, SessionStatus::kFinalized);
  ASSERT_TRUE(s.decision.has_value());
  EXPECT_EQ(s.decision->chosen, "positive");
  EXPECT_EQ(s.responses.size(), 1u);
  EXPECT_EQ(s.unanswered(), s.questions.size() - 1);
  EXPECT_EQ(fin.payload.at("unanswered"), s.unanswered());
  EXPECT_EQ(store.records(id).size(), 5u);
}

TEST_F(SessionTest, FailedMutationsAppendNothing) {
  const auto id = new_session();
  const auto before = store.records(id).size();
  auto expect_code = [&](ErrorCode code, const std::function<void()>& fn) {
    try {
      fn();
      ADD_FAILURE() << "expected " << error_code_name(code);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), code);
    }
    EXPECT_EQ(store.records(id).size(), before);
  };
  expect_code(ErrorCode::kIndexOutOfRange, [&] { store.record_answer(id, 999, "x"); });
  expect_code(ErrorCode::kEmptyRationale, [&] { store.finalize(id, "positive", "   "); });
  expect_code(ErrorCode::kSchemaError, [&] { store.finalize(id, "", "because"); });
  expect_code(ErrorCode::kSchemaError, [&] { store.record_whatif(id, {{"age", 500.0}}); });
  expect_code(ErrorCode::kUnknownSession, [&] { store.record_answer("0123456789abcdef0123456789abcdef", 0, "x"); });
  expect_code(ErrorCode::kUnknownSession, [&] { store.load("../etc/passwd"); });
}

TEST_F(SessionTest, FinalizedSessionRejectsMutations) {
  const auto id = new_session();
  store.finalize(id, "negative", "Agree with the model.");
  const auto n = store.records(id).size();
  EXPECT_THROW(store.record_answer(id, 0, "late"), Error);
  EXPECT_THROW(store.record_whatif(id, {{"age", 53.0}}), Error);
  try {
    store.finalize(id, "negative", "again");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSessionFinalized);
  }
  EXPECT_EQ(store.records(id).size(), n);
}

TEST_F(SessionTest, AnsweringTwiceKeepsTheLatestText) {
  const auto id = new_session();
  store.record_answer(id, 0, "first");
  const auto s = store.record_answer(id, 0, "second");
  EXPECT_EQ(s.responses.at(0), "second");
}

TEST_F(SessionTest, ExportedLogReplaysToAnEqualSession) {
  const auto id = new_session();
  store.record_answer(id, 1, "considered");
  store.record_whatif(id, {{"age", 53.0}});
  store.finalize(id, "positive", "fit");
  const auto log = store.export_log(id);
  const auto records = parse_audit_log(log);
  EXPECT_EQ(to_jsonl(records), log);
  EXPECT_EQ(replay(records), store.load(id));
  EXPECT_EQ(replay(records, age.inputs, embedded_inputs(records).config),
            store.load(id));
  EXPECT_EQ(fold_records(records), store.load(id));
}

TEST_F(SessionTest, ReplayDetectsTampering) {
  const auto id = new_session();
  store.record_whatif(id, {{"age", 53.0}});
  const auto records = store.records(id);
  auto expect_mismatch = [](const std::vector<AuditRecord>& r) {
    try {
      replay(r);
      ADD_FAILURE() << "expected ReplayMismatch";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kReplayMismatch) << e.what();
    }
  };
  expect_mismatch(tampered(records, 0, [](json& p) { p["recommendation"]["predicted"] = "positive"; }));
  expect_mismatch(tampered(records, 1, [](json& p) { p["questions"][0]["text"] = "Something else?"; }));
  expect_mismatch(tampered(records, 2, [](json& p) { p["result"]["predicted"] = "negative"; }));
  expect_mismatch(tampered(records, 0, [](json& p) { p["model_ref"] = "sha256:00"; }));
  // Changing the embedded model changes what the questions are derived from.
  expect_mismatch(tampered(records, 0, [](json& p) { p["model"]["linear"]["threshold"] = 40.0; }));
  // Replaying against different inputs.
  auto other = age.inputs;
  other.case_instance.values["age"] = 30.0;
  EXPECT_THROW(replay(records, other, age.config), Error);
}

TEST_F(SessionTest, StructuralCorruptionIsCorruptLog) {
  const auto id = new_session();
  store.record_answer(id, 0, "a");
  store.record_answer(id, 1, "b");
  auto records = store.records(id);
  auto expect_corrupt = [](const std::vector<AuditRecord>& r) {
    try {
      replay(r);
      ADD_FAILURE() << "expected CorruptLog";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kCorruptLog) << e.what();
    }
  };
  auto gap = records;
  gap.erase(gap.begin() + 2);
  expect_corrupt(gap);
  auto reordered = records;
  std::swap(reordered[0], reordered[1]);
  expect_corrupt(reordered);
  auto foreign = records;
  foreign[3].session_id = "ffffffffffffffffffffffffffffffff";
  expect_corrupt(foreign);
  auto bad_index = records;
  bad_index[2].payload["question_index"] = 1000;
  expect_corrupt(bad_index);
  expect_corrupt({});

  auto line_error = [](const std::string& text) {
    try {
      parse_audit_log(text);
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kCorruptLog);
    }
  };
  line_error("not json\n");
  line_error(R"({"session_id":"x","seq":0,"kind":"created","payload":{}})" "\n");
  line_error(R"({"session_id":"x","seq":"0","kind":"created","payload":{},"timestamp":"t"})" "\n");
  line_error(R"({"session_id":"x","seq":0,"kind":"renamed","payload":{},"timestamp":"t"})" "\n");
}

TEST_F(SessionTest, RecordsAfterFinalizeAreCorrupt) {
  const auto id = new_session();
  store.finalize(id, "negative", "ok");
  auto records = store.records(id);
  AuditRecord extra = records.back();
  extra.seq = static_cast<long>(records.size());
  extra.kind = RecordKind::kAnswered;
  extra.payload = {{"question_index", 0}, {"text", "late"}};
  records.push_back(extra);
  EXPECT_THROW(fold_records(records), Error);
}

TEST_F(SessionTest, ConcurrentSessionsKeepLogsDense) {
  std::vector<std::string> ids;
  for (int i = 0; i < 4; ++i) ids.push_back(new_session());
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      const auto& id = ids[t % ids.size()];
      for (int k = 0; k < 10; ++k) store.record_answer(id, 0, "t" + std::to_string(t) + "-" + std::to_string(k));
    });
  }
  for (auto& th : threads) th.join();
  for (const auto& id : ids) {
    const auto records = store.records(id);
    EXPECT_EQ(records.size(), 2u + 20u);
    EXPECT_NO_THROW(replay(records));
  }
}

TEST_F(SessionTest, SecondStoreOnSameRootSeesSessions) {
  const auto id = new_session();
  SessionStore other(dir.path());
  EXPECT_TRUE(other.exists(id));
  EXPECT_EQ(other.load(id), store.load(id));
  other.record_answer(id, 0, "from another handle");
  EXPECT_EQ(store.load(id).responses.at(0), "from another handle");
}

TEST(SessionJson, WhatIfAndStatusSerialization) {
  EXPECT_EQ(to_string(SessionStatus::kFinalized), "finalized");
  EXPECT_EQ(parse_record_kind(to_string(RecordKind::kQuestionsAttached)), RecordKind::kQuestionsAttached);
  EXPECT_FALSE(parse_record_kind("bogus").has_value());
}

}  // namespace
}  // namespace reflect
