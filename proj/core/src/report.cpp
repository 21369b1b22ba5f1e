#include "reflect/report.hpp"

#include <cstdio>
#include <sstream>

namespace reflect {

using nlohmann::json;

namespace {

std::string two_decimals(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return buf;
}

}  // namespace

json questions_json(const std::vector<ReflectionQuestion>& qs) {
  json out = json::array();
  for (const auto& q : qs) out.push_back(to_json(q));
  return out;
}

json question_report(const PipelineResult& r) {
  json report;
  report["case_id"] = r.evidence.case_instance.id;
  report["recommendation"] = r.evidence.recommendation ? to_json(*r.evidence.recommendation) : json(nullptr);
  report["questions"] = questions_json(r.questions);
  report["evidence"] = evidence_json(r.evidence);
  return report;
}

std::string render_markdown(const json& report) {
  std::ostringstream md;
  md << "# Reflection questions for case " << report.value("case_id", std::string{}) << "\n\n";

  const json& rec = report.at("recommendation");
  if (rec.is_null()) {
    md << "**Recommendation:** unavailable (the case has unusable input values)\n\n";
  } else {
    md << "**Recommendation:** " << rec.at("predicted").get<std::string>() << " (";
    bool first = true;
    for (const auto& s : rec.at("scores")) {
      md << (first ? "" : ", ") << s.at("label").get<std::string>() << " "
         << two_decimals(s.at("score").get<double>());
      first = false;
    }
    md << "; margin " << two_decimals(rec.at("margin").get<double>()) << ")\n\n";
  }

  const auto& questions = report.at("questions");
  if (questions.empty()) {
    md << "_No questions were triggered._\n";
    return md.str();
  }
  const Taxonomy& tax = builtin_taxonomy();
  for (const auto id : kAllQuestionTypes) {
    const std::string code = to_string(id);
    bool header = false;
    for (const auto& q : questions) {
      if (q.at("qtype").get<std::string>() != code) continue;
      if (!header) {
        const auto& type = lookup_type(tax, id);
        md << "## " << code << (type.is_creating() ? "*" : "") << " " << type.name << "\n\n";
        header = true;
      }
      md << "- " << q.at("text").get<std::string>() << " (score " << two_decimals(q.at("score").get<double>())
         << ")\n";
      md << "  - Why: " << q.at("rationale").get<std::string>() << "\n";
      const auto& refs = q.at("evidence_refs");
      if (!refs.empty()) {
        md << "  - Evidence:";
        for (const auto& ref : refs) md << " `" << ref.get<std::string>() << "`";
        md << "\n";
      }
    }
    if (header) md << "\n";
  }
  return md.str();
}

}  // namespace reflect
