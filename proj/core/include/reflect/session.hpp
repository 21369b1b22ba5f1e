#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "reflect/pipeline.hpp"

namespace reflect {

struct WhatIfResult {
  std::map<std::string, FeatureValue> changes;
  Recommendation result;
  std::vector<ReflectionQuestion> extra_questions;

  friend bool operator==(const WhatIfResult&, const WhatIfResult&) = default;
};

struct Decision {
  std::string chosen;
  std::string rationale;
  std::string finalized_at;
};

enum class SessionStatus { kOpen, kFinalized };
std::string to_string(SessionStatus s);

struct DecisionSession {
  std::string id;
  std::string created_at;
  CaseInstance case_instance;
  std::string model_ref;
  std::optional<Recommendation> recommendation;
  std::vector<ReflectionQuestion> questions;
  std::map<std::size_t, std::string> responses;
  std::vector<WhatIfResult> whatifs;
  SessionStatus status = SessionStatus::kOpen;
  std::optional<Decision> decision;

  std::size_t unanswered() const { return questions.size() - responses.size(); }

  // Content equality; wall-clock timestamps are ignored.
  friend bool operator==(const DecisionSession& a, const DecisionSession& b);
};

enum class RecordKind { kCreated, kQuestionsAttached, kAnswered, kWhatIf, kFinalized };
std::string to_string(RecordKind k);
std::optional<RecordKind> parse_record_kind(std::string_view s);

struct AuditRecord {
  std::string session_id;
  long seq = 0;
  RecordKind kind = RecordKind::kCreated;
  nlohmann::json payload;
  std::string timestamp;
};

nlohmann::json to_json(const AuditRecord& r);
std::string to_jsonl(const std::vector<AuditRecord>& records);
// Throws Error(kCorruptLog) on malformed lines or records.
std::vector<AuditRecord> parse_audit_log(std::string_view jsonl);

nlohmann::json to_json(const WhatIfResult& w);
nlohmann::json to_json(const DecisionSession& s);

// Content hash of the canonical model serialization, "sha256:<hex>".
std::string model_ref(const TabularModel& model);

// Inputs and configuration embedded in a session's created record.
struct SessionInputs {
  PipelineInputs inputs;
  PipelineConfig config;
};
SessionInputs embedded_inputs(const std::vector<AuditRecord>& records);

// Rebuilds a session from its log without re-deriving anything. Checks the
// structural invariants (dense seq, created first, nothing after finalized).
DecisionSession fold_records(const std::vector<AuditRecord>& records);

// Folds the log and re-derives recommendation, questions and what-if results
// from `inputs`. Throws Error(kReplayMismatch) on any difference and
// Error(kCorruptLog) for structural problems.
DecisionSession replay(const std::vector<AuditRecord>& records, const PipelineInputs& inputs,
                       const PipelineConfig& config);
// Same, using the inputs embedded in the created record.
DecisionSession replay(const std::vector<AuditRecord>& records);

// Append-only store: <root>/sessions/<id>.jsonl plus <root>/index.jsonl.
// Mutations on one session are serialized; distinct sessions proceed in parallel.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path root);

  // $REFLECT_DATA_DIR, or ./reflect-data.
  static std::filesystem::path default_root();
  const std::filesystem::path& root() const { return root_; }

  DecisionSession create_session(const PipelineInputs& inputs, const PipelineConfig& config);
  DecisionSession record_answer(const std::string& id, std::size_t question_index, const std::string& text);
  WhatIfResult record_whatif(const std::string& id, const std::map<std::string, FeatureValue>& changes);
  AuditRecord finalize(const std::string& id, const std::string& chosen, const std::string& rationale);

  DecisionSession load(const std::string& id);
  std::vector<AuditRecord> records(const std::string& id);
  std::string export_log(const std::string& id);
  bool exists(const std::string& id) const;
  std::vector<std::string> list() const;

 private:
  std::filesystem::path log_path(const std::string& id) const;
  std::shared_ptr<std::mutex> session_mutex(const std::string& id);
  std::vector<AuditRecord> read_records(const std::string& id) const;
  void append(const std::string& id, const std::vector<AuditRecord>& records, bool create);

  std::filesystem::path root_;
  std::mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<std::mutex>> session_mutexes_;
  std::mutex index_mutex_;
};

}  // namespace reflect
