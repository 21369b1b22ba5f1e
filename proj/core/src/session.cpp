#include "reflect/session.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include "reflect/report.hpp"

namespace reflect {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string hex(const unsigned char* data, std::size_t n) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    out += kDigits[data[i] >> 4];
    out += kDigits[data[i] & 0xf];
  }
  return out;
}

std::string new_session_id() {
  unsigned char bytes[16];
  if (RAND_bytes(bytes, sizeof(bytes)) != 1) {
    throw Error(ErrorCode::kIo, "random source unavailable", "create_session");
  }
  return hex(bytes, sizeof(bytes));
}

bool valid_id(const std::string& id) {
  return id.size() == 32 &&
         std::all_of(id.begin(), id.end(), [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
}

std::string now_utc() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[80];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

[[noreturn]] void corrupt(const std::string& message) { throw Error(ErrorCode::kCorruptLog, message, "replay"); }
[[noreturn]] void mismatch(const std::string& message) {
  throw Error(ErrorCode::kReplayMismatch, message, "replay");
}

json changes_json(const std::map<std::string, FeatureValue>& changes) {
  json out = json::object();
  for (const auto& [k, v] : changes) out[k] = to_json(v);
  return out;
}

std::map<std::string, FeatureValue> changes_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kSchemaError, "changes must be an object", "whatif");
  std::map<std::string, FeatureValue> out;
  for (const auto& [k, v] : j.items()) out[k] = value_from_json(v);
  return out;
}

std::vector<ReflectionQuestion> questions_from_json(const json& j) {
  std::vector<ReflectionQuestion> out;
  for (const auto& q : j) out.push_back(question_from_json(q));
  return out;
}

json created_payload(const PipelineInputs& in, const PipelineConfig& cfg, const std::string& ref,
                     const std::optional<Recommendation>& rec) {
  json background = json::array();
  for (const auto& row : in.background) background.push_back(to_json(row));
  json packs = json::array();
  for (const auto& p : in.packs) packs.push_back(to_json(p));
  return {{"case", to_json(in.case_instance)},
          {"model", to_json(in.model)},
          {"model_ref", ref},
          {"datasheet", to_json(in.datasheet)},
          {"model_card", to_json(in.model_card)},
          {"background", background},
          {"packs", packs},
          {"config", to_json(cfg)},
          {"recommendation", rec ? to_json(*rec) : json(nullptr)}};
}

WhatIfResult whatif_result_from_json(const json& p) {
  WhatIfResult w;
  w.changes = changes_from_json(p.at("changes"));
  w.result = recommendation_from_json(p.at("result"));
  w.extra_questions = questions_from_json(p.at("extra_questions"));
  return w;
}

WhatIfResult run_whatif(const SessionInputs& s, const std::map<std::string, FeatureValue>& changes) {
  const auto& in = s.inputs;
  const CaseInstance modified = apply_changes(in.model, in.case_instance, changes);
  const auto bundle = build_whatif_evidence(in.model, modified, in.model_card, changes, s.config.triggers);
  WhatIfResult w;
  w.changes = changes;
  w.result = *bundle.recommendation;
  w.extra_questions = fire_whatif_triggers(bundle, in.packs, s.config.triggers);
  return w;
}

SessionInputs inputs_from_payload(const json& p) {
  try {
    std::vector<TemplatePack> packs;
    for (const auto& pack : p.at("packs")) packs.push_back(load_template_pack(pack.dump()));
    SessionInputs s{PipelineInputs{model_from_json(p.at("model")), case_from_json(p.at("case")),
                                   datasheet_from_json(p.at("datasheet")), model_card_from_json(p.at("model_card")),
                                   background_from_json(p.at("background")), std::move(packs)},
                    apply_config_overrides(p.at("config"))};
    return s;
  } catch (const json::exception& e) {
    corrupt(std::string("created record: ") + e.what());
  }
}

}  // namespace

std::string to_string(SessionStatus s) { return s == SessionStatus::kOpen ? "open" : "finalized"; }

std::string to_string(RecordKind k) {
  switch (k) {
    case RecordKind::kCreated: return "created";
    case RecordKind::kQuestionsAttached: return "questions_attached";
    case RecordKind::kAnswered: return "answered";
    case RecordKind::kWhatIf: return "whatif";
    case RecordKind::kFinalized: return "finalized";
  }
  return "?";
}

std::optional<RecordKind> parse_record_kind(std::string_view s) {
  for (auto k : {RecordKind::kCreated, RecordKind::kQuestionsAttached, RecordKind::kAnswered, RecordKind::kWhatIf,
                 RecordKind::kFinalized}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

bool operator==(const DecisionSession& a, const DecisionSession& b) {
  const auto decision_eq = [](const std::optional<Decision>& x, const std::optional<Decision>& y) {
    if (x.has_value() != y.has_value()) return false;
    return !x || (x->chosen == y->chosen && x->rationale == y->rationale);
  };
  return a.id == b.id && a.case_instance == b.case_instance && a.model_ref == b.model_ref &&
         a.recommendation == b.recommendation && a.questions == b.questions && a.responses == b.responses &&
         a.whatifs == b.whatifs && a.status == b.status && decision_eq(a.decision, b.decision);
}

json to_json(const AuditRecord& r) {
  return {{"session_id", r.session_id},
          {"seq", r.seq},
          {"kind", to_string(r.kind)},
          {"payload", r.payload},
          {"timestamp", r.timestamp}};
}

std::string to_jsonl(const std::vector<AuditRecord>& records) {
  std::string out;
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  return out;
}

std::vector<AuditRecord> parse_audit_log(std::string_view jsonl) {
  std::vector<AuditRecord> out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json j = json::parse(line, nullptr, false);
    const std::string where = "line " + std::to_string(line_no);
    if (j.is_discarded() || !j.is_object()) corrupt(where + ": not a JSON object");
    if (j.size() != 5) corrupt(where + ": unexpected fields");
    for (const char* field : {"session_id", "seq", "kind", "payload", "timestamp"}) {
      if (!j.contains(field)) corrupt(where + ": missing " + field);
    }
    if (!j["session_id"].is_string() || !j["seq"].is_number_integer() || !j["kind"].is_string() ||
        !j["timestamp"].is_string() || !j["payload"].is_object()) {
      corrupt(where + ": wrongly typed field");
    }
    const auto kind = parse_record_kind(j["kind"].get<std::string>());
    if (!kind) corrupt(where + ": unknown kind " + j["kind"].get<std::string>());
    out.push_back({j["session_id"].get<std::string>(), j["seq"].get<long>(), *kind, j["payload"],
                   j["timestamp"].get<std::string>()});
  }
  return out;
}

json to_json(const WhatIfResult& w) {
  return {{"changes", changes_json(w.changes)},
          {"result", to_json(w.result)},
          {"extra_questions", questions_json(w.extra_questions)}};
}

json to_json(const DecisionSession& s) {
  json responses = json::object();
  for (const auto& [i, text] : s.responses) responses[std::to_string(i)] = text;
  json whatifs = json::array();
  for (const auto& w : s.whatifs) whatifs.push_back(to_json(w));
  json out = {{"id", s.id},
              {"created_at", s.created_at},
              {"case", to_json(s.case_instance)},
              {"model_ref", s.model_ref},
              {"recommendation", s.recommendation ? to_json(*s.recommendation) : json(nullptr)},
              {"questions", questions_json(s.questions)},
              {"responses", responses},
              {"whatifs", whatifs},
              {"status", to_string(s.status)},
              {"unanswered", s.unanswered()}};
  out["decision"] = s.decision ? json{{"chosen", s.decision->chosen},
                                      {"rationale", s.decision->rationale},
                                      {"finalized_at", s.decision->finalized_at}}
                               : json(nullptr);
  return out;
}

std::string model_ref(const TabularModel& model) {
  const std::string canonical = to_json(model).dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(canonical.data(), canonical.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "sha256 failed", "model_ref");
  }
  return "sha256:" + hex(digest, len);
}

DecisionSession fold_records(const std::vector<AuditRecord>& records) {
  if (records.size() < 2) corrupt("log must start with created and questions_attached records");
  DecisionSession s;
  s.id = records.front().session_id;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const std::string where = "record " + std::to_string(i);
    if (r.session_id != s.id) corrupt(where + ": session id changes");
    if (r.seq != static_cast<long>(i)) {
      corrupt(where + ": expected seq " + std::to_string(i) + ", found " + std::to_string(r.seq));
    }
    if (s.status == SessionStatus::kFinalized) corrupt(where + ": record after finalized");
    const bool head = i == 0 ? r.kind == RecordKind::kCreated : i == 1 ? r.kind == RecordKind::kQuestionsAttached
                                                                       : true;
    if (!head || (i > 1 && (r.kind == RecordKind::kCreated || r.kind == RecordKind::kQuestionsAttached))) {
      corrupt(where + ": unexpected " + to_string(r.kind) + " record");
    }
    try {
      switch (r.kind) {
        case RecordKind::kCreated:
          s.created_at = r.timestamp;
          s.case_instance = case_from_json(r.payload.at("case"));
          s.model_ref = r.payload.at("model_ref").get<std::string>();
          if (!r.payload.at("recommendation").is_null()) {
            s.recommendation = recommendation_from_json(r.payload.at("recommendation"));
          }
          break;
        case RecordKind::kQuestionsAttached:
          s.questions = questions_from_json(r.payload.at("questions"));
          break;
        case RecordKind::kAnswered: {
          const auto index = r.payload.at("question_index").get<std::size_t>();
          if (index >= s.questions.size()) corrupt(where + ": answer index out of range");
          s.responses[index] = r.payload.at("text").get<std::string>();
          break;
        }
        case RecordKind::kWhatIf:
          s.whatifs.push_back(whatif_result_from_json(r.payload));
          break;
        case RecordKind::kFinalized:
          s.status = SessionStatus::kFinalized;
          s.decision = Decision{r.payload.at("chosen").get<std::string>(),
                                r.payload.at("rationale").get<std::string>(), r.timestamp};
          break;
      }
    } catch (const json::exception& e) {
      corrupt(where + ": " + e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kCorruptLog) throw;
      corrupt(where + ": " + e.what());
    }
  }
  return s;
}

SessionInputs embedded_inputs(const std::vector<AuditRecord>& records) {
  if (records.empty() || records.front().kind != RecordKind::kCreated) corrupt("log has no created record");
  return inputs_from_payload(records.front().payload);
}

DecisionSession replay(const std::vector<AuditRecord>& records, const PipelineInputs& inputs,
                       const PipelineConfig& config) {
  DecisionSession s = fold_records(records);
  if (model_ref(inputs.model) != s.model_ref) mismatch("model does not match the logged model_ref");
  if (!(inputs.case_instance == s.case_instance)) mismatch("case differs from the logged case");

  const PipelineResult derived = run_pipeline(inputs, config);
  if (derived.evidence.recommendation != s.recommendation) mismatch("recommendation differs");
  if (questions_json(derived.questions) != records[1].payload.at("questions")) {
    mismatch("re-derived questions differ from the questions_attached record");
  }
  const SessionInputs session_inputs{inputs, config};
  for (const auto& w : s.whatifs) {
    if (!(run_whatif(session_inputs, w.changes) == w)) mismatch("what-if result differs");
  }
  return s;
}

DecisionSession replay(const std::vector<AuditRecord>& records) {
  const SessionInputs s = embedded_inputs(records);
  return replay(records, s.inputs, s.config);
}

SessionStore::SessionStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_ / "sessions", ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create data directory " + root_.string() + ": " + ec.message());
}

fs::path SessionStore::default_root() {
  const char* env = std::getenv("REFLECT_DATA_DIR");
  return env && *env ? fs::path(env) : fs::path("reflect-data");
}

fs::path SessionStore::log_path(const std::string& id) const { return root_ / "sessions" / (id + ".jsonl"); }

bool SessionStore::exists(const std::string& id) const { return valid_id(id) && fs::exists(log_path(id)); }

std::shared_ptr<std::mutex> SessionStore::session_mutex(const std::string& id) {
  std::lock_guard lock(registry_mutex_);
  auto& m = session_mutexes_[id];
  if (!m) m = std::make_shared<std::mutex>();
  return m;
}

std::vector<AuditRecord> SessionStore::read_records(const std::string& id) const {
  if (!exists(id)) throw Error(ErrorCode::kUnknownSession, "unknown session " + id, "session");
  return parse_audit_log(read_file(log_path(id).string()));
}

void SessionStore::append(const std::string& id, const std::vector<AuditRecord>& records, bool create) {
  const auto mode = create ? std::ios::out | std::ios::trunc : std::ios::out | std::ios::app;
  std::ofstream out(log_path(id), mode | std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + log_path(id).string(), "session");
  out << to_jsonl(records);
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + log_path(id).string(), "session");
}

DecisionSession SessionStore::create_session(const PipelineInputs& inputs, const PipelineConfig& config) {
  PipelineConfig cfg = config;
  if (!cfg.triggers.as_of) cfg.triggers.as_of = Date::today_utc();
  const PipelineResult r = run_pipeline(inputs, cfg);

  const std::string id = new_session_id();
  const std::string ts = now_utc();
  const std::string ref = model_ref(inputs.model);
  std::vector<AuditRecord> recs = {
      {id, 0, RecordKind::kCreated, created_payload(inputs, cfg, ref, r.evidence.recommendation), ts},
      {id, 1, RecordKind::kQuestionsAttached, {{"questions", questions_json(r.questions)}}, ts},
  };
  {
    auto m = session_mutex(id);
    std::lock_guard lock(*m);
    append(id, recs, true);
  }
  {
    std::lock_guard lock(index_mutex_);
    std::ofstream index(root_ / "index.jsonl", std::ios::app | std::ios::binary);
    index << json{{"session_id", id}, {"case_id", inputs.case_instance.id}, {"model_ref", ref}, {"created_at", ts}}
                 .dump()
          << "\n";
  }
  return fold_records(recs);
}

DecisionSession SessionStore::record_answer(const std::string& id, std::size_t question_index,
                                            const std::string& text) {
  auto m = session_mutex(id);
  std::lock_guard lock(*m);
  auto recs = read_records(id);
  DecisionSession s = fold_records(recs);
  if (s.status == SessionStatus::kFinalized) {
    throw Error(ErrorCode::kSessionFinalized, "session " + id + " is finalized", "record_answer");
  }
  if (question_index >= s.questions.size()) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "question index " + std::to_string(question_index) + " of " + std::to_string(s.questions.size()),
                "record_answer");
  }
  AuditRecord rec{id, static_cast<long>(recs.size()), RecordKind::kAnswered,
                  {{"question_index", question_index}, {"text", text}}, now_utc()};
  append(id, {rec}, false);
  s.responses[question_index] = text;
  return s;
}

WhatIfResult SessionStore::record_whatif(const std::string& id, const std::map<std::string, FeatureValue>& changes) {
  auto m = session_mutex(id);
  std::lock_guard lock(*m);
  auto recs = read_records(id);
  const DecisionSession s = fold_records(recs);
  if (s.status == SessionStatus::kFinalized) {
    throw Error(ErrorCode::kSessionFinalized, "session " + id + " is finalized", "record_whatif");
  }
  const WhatIfResult w = run_whatif(embedded_inputs(recs), changes);
  append(id, {{id, static_cast<long>(recs.size()), RecordKind::kWhatIf, to_json(w), now_utc()}}, false);
  return w;
}

AuditRecord SessionStore::finalize(const std::string& id, const std::string& chosen, const std::string& rationale) {
  auto m = session_mutex(id);
  std::lock_guard lock(*m);
  auto recs = read_records(id);
  const DecisionSession s = fold_records(recs);
  if (s.status == SessionStatus::kFinalized) {
    throw Error(ErrorCode::kSessionFinalized, "session " + id + " is finalized", "finalize");
  }
  const auto blank = [](const std::string& t) {
    return std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isspace(c); });
  };
  if (blank(rationale)) throw Error(ErrorCode::kEmptyRationale, "rationale must not be empty", "finalize");
  if (blank(chosen)) throw Error(ErrorCode::kSchemaError, "chosen: must name an outcome", "finalize");
  AuditRecord rec{id, static_cast<long>(recs.size()), RecordKind::kFinalized,
                  {{"chosen", chosen}, {"rationale", rationale}, {"unanswered", s.unanswered()}}, now_utc()};
  append(id, {rec}, false);
  return rec;
}

DecisionSession SessionStore::load(const std::string& id) {
  auto m = session_mutex(id);
  std::lock_guard lock(*m);
  return fold_records(read_records(id));
}

std::vector<AuditRecord> SessionStore::records(const std::string& id) {
  auto m = session_mutex(id);
  std::lock_guard lock(*m);
  return read_records(id);
}

std::string SessionStore::export_log(const std::string& id) { return to_jsonl(records(id)); }

std::vector<std::string> SessionStore::list() const {
  std::vector<std::string> out;
  std::ifstream in(root_ / "index.jsonl");
  std::string line;
  while (std::getline(in, line)) {
    const json j = json::parse(line, nullptr, false);
    if (j.is_object() && j.contains("session_id")) out.push_back(j["session_id"].get<std::string>());
  }
  return out;
}

}  // namespace reflect
