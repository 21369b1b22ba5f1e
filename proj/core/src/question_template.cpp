#include "reflect/question_template.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace reflect {

using nlohmann::json;

namespace {

bool is_slot_start(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }
bool is_slot_char(char c) { return is_slot_start(c) || (c >= '0' && c <= '9'); }

struct Marker {
  std::size_t begin;  // position of '{'
  std::size_t end;    // one past '}'
  std::string name;
  bool valid;
};

// Scans for {...} spans. An unterminated '{' is reported as a malformed marker.
std::vector<Marker> scan_markers(std::string_view text) {
  std::vector<Marker> out;
  std::size_t pos = 0;
  while ((pos = text.find('{', pos)) != std::string_view::npos) {
    const auto close = text.find('}', pos + 1);
    if (close == std::string_view::npos) {
      out.push_back({pos, text.size(), std::string(text.substr(pos + 1)), false});
      break;
    }
    std::string name(text.substr(pos + 1, close - pos - 1));
    out.push_back({pos, close + 1, name, is_valid_slot_name(name)});
    pos = close + 1;
  }
  return out;
}

}  // namespace

bool is_valid_slot_name(std::string_view name) {
  if (name.empty() || !is_slot_start(name.front())) return false;
  for (char c : name) {
    if (!is_slot_char(c)) return false;
  }
  return true;
}

std::vector<std::string> slot_markers(std::string_view text) {
  std::vector<std::string> names;
  for (const auto& m : scan_markers(text)) {
    if (!m.valid) continue;
    if (std::find(names.begin(), names.end(), m.name) == names.end()) names.push_back(m.name);
  }
  return names;
}

bool ValidationReport::has(TemplateViolation::Kind kind) const {
  for (const auto& v : violations) {
    if (v.kind == kind) return true;
  }
  return false;
}

std::string ValidationReport::summary() const {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v.message;
  }
  return out;
}

ValidationReport validate_template(const QuestionTemplate& tpl, const Taxonomy& taxonomy) {
  using Kind = TemplateViolation::Kind;
  ValidationReport report;

  const QuestionType* type = nullptr;
  for (const auto& t : taxonomy.types) {
    if (t.id == tpl.qtype) type = &t;
  }
  if (type == nullptr) {
    report.violations.push_back({Kind::kUnknownQuestionType, "unknown qtype " + to_string(tpl.qtype)});
  }

  if (tpl.text.empty()) report.violations.push_back({Kind::kEmptyText, "empty text"});

  std::set<std::string> in_text;
  for (const auto& m : scan_markers(tpl.text)) {
    if (!m.valid) {
      report.violations.push_back({Kind::kMalformedSlot, "malformed slot marker {" + m.name + "}"});
      continue;
    }
    in_text.insert(m.name);
  }
  for (const auto& name : in_text) {
    if (!tpl.slots.contains(name)) {
      report.violations.push_back({Kind::kUndeclaredSlot, "undeclared slot " + name});
    }
  }
  for (const auto& name : tpl.slots) {
    if (!in_text.contains(name)) {
      report.violations.push_back({Kind::kUnusedSlot, "declared slot " + name + " not in text"});
    }
  }

  if (tpl.rationale.find_first_not_of(" \t\r\n") == std::string::npos) {
    report.violations.push_back({Kind::kEmptyRationale, "empty rationale"});
  }

  if (type != nullptr) {
    for (EvidenceKind kind : tpl.required_evidence) {
      if (!type->useful_info_kinds.contains(kind)) {
        report.violations.push_back({Kind::kEvidenceNotUseful,
                                     "required evidence " + to_string(kind) +
                                         " is not useful information for " + to_string(tpl.qtype)});
      }
    }
  }
  return report;
}

ReflectionQuestion render_template(const QuestionTemplate& tpl,
                                   const std::map<std::string, std::string>& bindings,
                                   std::vector<std::string> evidence_refs, double score) {
  std::string out;
  out.reserve(tpl.text.size() + 32);
  std::size_t cursor = 0;
  for (const auto& m : scan_markers(tpl.text)) {
    if (!m.valid) continue;
    const auto it = bindings.find(m.name);
    if (it == bindings.end()) {
      throw Error(ErrorCode::kMissingBinding, "slot '" + m.name + "' of template " + tpl.id,
                  "render_template");
    }
    out.append(tpl.text, cursor, m.begin - cursor);
    out += it->second;
    cursor = m.end;
  }
  out.append(tpl.text, cursor, std::string::npos);

  ReflectionQuestion q;
  q.template_id = tpl.id;
  q.qtype = tpl.qtype;
  q.text = std::move(out);
  q.rationale = tpl.rationale;
  q.evidence_refs = std::move(evidence_refs);
  q.score = score;
  return q;
}

InvalidTemplateError::InvalidTemplateError(std::string template_id, ValidationReport report)
    : Error(ErrorCode::kInvalidTemplate, template_id + ": " + report.summary(),
            "load_template_pack"),
      template_id_(std::move(template_id)),
      report_(std::move(report)) {}

namespace {

std::string require_string(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj.at(key).is_string()) {
    throw Error(ErrorCode::kParseError, where + ": field '" + key + "' must be a string",
                "load_template_pack");
  }
  return obj.at(key).get<std::string>();
}

QuestionTemplate template_from_json(const json& j, const std::string& domain, std::size_t index) {
  const std::string where = "templates[" + std::to_string(index) + "]";
  if (!j.is_object()) {
    throw Error(ErrorCode::kParseError, where + " must be an object", "load_template_pack");
  }
  QuestionTemplate tpl;
  tpl.id = require_string(j, "id", where);
  const auto qtype = require_string(j, "qtype", where);
  const auto parsed = parse_question_type(qtype);
  if (!parsed) {
    // Unknown types are a validation failure, not a syntax failure.
    ValidationReport report;
    report.violations.push_back(
        {TemplateViolation::Kind::kUnknownQuestionType, "unknown qtype " + qtype});
    throw InvalidTemplateError(tpl.id, report);
  }
  tpl.qtype = *parsed;
  tpl.domain_tag = domain;
  tpl.text = require_string(j, "text", where);
  tpl.rationale = require_string(j, "rationale", where);
  if (!j.contains("slots") || !j.at("slots").is_array()) {
    throw Error(ErrorCode::kParseError, where + ": 'slots' must be an array", "load_template_pack");
  }
  for (const auto& s : j.at("slots")) {
    if (!s.is_string()) {
      throw Error(ErrorCode::kParseError, where + ": slot names must be strings",
                  "load_template_pack");
    }
    tpl.slots.insert(s.get<std::string>());
  }
  if (!j.contains("required_evidence") || !j.at("required_evidence").is_array()) {
    throw Error(ErrorCode::kParseError, where + ": 'required_evidence' must be an array",
                "load_template_pack");
  }
  for (const auto& e : j.at("required_evidence")) {
    const auto kind = e.is_string() ? parse_evidence_kind(e.get<std::string>()) : std::nullopt;
    if (!kind) {
      throw Error(ErrorCode::kParseError, where + ": unknown evidence kind " + e.dump(),
                  "load_template_pack");
    }
    tpl.required_evidence.insert(*kind);
  }
  return tpl;
}

}  // namespace

TemplatePack load_template_pack(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, e.what(), "load_template_pack");
  }
  if (!doc.is_object()) {
    throw Error(ErrorCode::kParseError, "top level must be an object", "load_template_pack");
  }
  TemplatePack pack;
  pack.pack = require_string(doc, "pack", "pack");
  pack.domain = require_string(doc, "domain", "pack");
  if (!doc.contains("templates") || !doc.at("templates").is_array()) {
    throw Error(ErrorCode::kParseError, "'templates' must be an array", "load_template_pack");
  }
  std::set<std::string> ids;
  const auto& taxonomy = builtin_taxonomy();
  std::size_t index = 0;
  for (const auto& entry : doc.at("templates")) {
    auto tpl = template_from_json(entry, pack.domain, index++);
    if (!ids.insert(tpl.id).second) {
      throw Error(ErrorCode::kParseError, "duplicate template id " + tpl.id, "load_template_pack");
    }
    auto report = validate_template(tpl, taxonomy);
    if (!report.ok()) throw InvalidTemplateError(tpl.id, std::move(report));
    pack.templates.push_back(std::move(tpl));
  }
  return pack;
}

TemplatePack load_template_pack_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read template pack " + path, "load_template_pack");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_template_pack(buf.str());
}

json to_json(const TemplatePack& pack) {
  json templates = json::array();
  for (const auto& tpl : pack.templates) {
    json slots = json::array();
    for (const auto& s : tpl.slots) slots.push_back(s);
    json evidence = json::array();
    for (auto k : tpl.required_evidence) evidence.push_back(to_string(k));
    templates.push_back({{"id", tpl.id},
                         {"qtype", to_string(tpl.qtype)},
                         {"text", tpl.text},
                         {"slots", slots},
                         {"required_evidence", evidence},
                         {"rationale", tpl.rationale}});
  }
  return {{"pack", pack.pack}, {"domain", pack.domain}, {"templates", templates}};
}

std::string serialize_template_pack(const TemplatePack& pack) { return to_json(pack).dump(2); }

json to_json(const ReflectionQuestion& q) {
  return {{"template_id", q.template_id},
          {"qtype", to_string(q.qtype)},
          {"text", q.text},
          {"rationale", q.rationale},
          {"score", q.score},
          {"evidence_refs", q.evidence_refs}};
}

ReflectionQuestion question_from_json(const json& j) {
  ReflectionQuestion q;
  q.template_id = j.value("template_id", std::string{});
  const auto qtype = parse_question_type(j.at("qtype").get<std::string>());
  if (!qtype) throw Error(ErrorCode::kParseError, "bad qtype in question");
  q.qtype = *qtype;
  q.text = j.at("text").get<std::string>();
  q.rationale = j.at("rationale").get<std::string>();
  q.score = j.at("score").get<double>();
  q.evidence_refs = j.at("evidence_refs").get<std::vector<std::string>>();
  return q;
}

}  // namespace reflect
