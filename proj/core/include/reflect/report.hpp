#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reflect/pipeline.hpp"

namespace reflect {

// {"case_id", "recommendation", "questions", "evidence"}; recommendation is
// null when the case could not be scored.
nlohmann::json question_report(const PipelineResult& r);

// Markdown with questions grouped by type in Q1..Q10 order.
std::string render_markdown(const nlohmann::json& report);

nlohmann::json questions_json(const std::vector<ReflectionQuestion>& qs);

}  // namespace reflect
