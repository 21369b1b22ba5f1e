#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "reflect/error.hpp"
#include "reflect/taxonomy.hpp"

namespace reflect {

// Slot-bearing question text. Slot markers have the form {name} with
// name matching [a-z_][a-z0-9_]*.
struct QuestionTemplate {
  std::string id;
  QuestionTypeId qtype = QuestionTypeId::Q1;
  std::string domain_tag;
  std::string text;
  std::set<std::string> slots;
  std::set<EvidenceKind> required_evidence;
  std::string rationale;

  friend bool operator==(const QuestionTemplate&, const QuestionTemplate&) = default;
};

struct ReflectionQuestion {
  std::string template_id;
  QuestionTypeId qtype = QuestionTypeId::Q1;
  std::string text;
  std::string rationale;
  std::vector<std::string> evidence_refs;
  double score = 0.0;

  friend bool operator==(const ReflectionQuestion&, const ReflectionQuestion&) = default;
};

struct TemplateViolation {
  enum class Kind {
    kUnknownQuestionType,
    kUndeclaredSlot,
    kUnusedSlot,
    kMalformedSlot,
    kEmptyRationale,
    kEvidenceNotUseful,
    kEmptyText,
  };
  Kind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<TemplateViolation> violations;

  bool ok() const { return violations.empty(); }
  bool has(TemplateViolation::Kind kind) const;
  std::string summary() const;
};

struct TemplatePack {
  std::string pack;
  std::string domain;
  std::vector<QuestionTemplate> templates;

  friend bool operator==(const TemplatePack&, const TemplatePack&) = default;
};

class InvalidTemplateError : public Error {
 public:
  InvalidTemplateError(std::string template_id, ValidationReport report);
  const std::string& template_id() const noexcept { return template_id_; }
  const ValidationReport& report() const noexcept { return report_; }

 private:
  std::string template_id_;
  ValidationReport report_;
};

// Slot names in order of first appearance. Malformed markers are skipped.
std::vector<std::string> slot_markers(std::string_view text);
bool is_valid_slot_name(std::string_view name);

ValidationReport validate_template(const QuestionTemplate& tpl, const Taxonomy& taxonomy);

// Substitutes every {slot}. Bound values are inserted verbatim and not rescanned.
// Throws Error(kMissingBinding) naming the first unbound slot.
ReflectionQuestion render_template(const QuestionTemplate& tpl,
                                   const std::map<std::string, std::string>& bindings,
                                   std::vector<std::string> evidence_refs, double score);

// Parses and validates a template-pack document. Throws Error(kParseError) or
// InvalidTemplateError.
TemplatePack load_template_pack(std::string_view document);
TemplatePack load_template_pack_file(const std::string& path);
nlohmann::json to_json(const TemplatePack& pack);
std::string serialize_template_pack(const TemplatePack& pack);

nlohmann::json to_json(const ReflectionQuestion& q);
ReflectionQuestion question_from_json(const nlohmann::json& j);

}  // namespace reflect
