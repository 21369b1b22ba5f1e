#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reflect/evidence.hpp"
#include "reflect/selection.hpp"
#include "reflect/triggers.hpp"

namespace reflect {

struct PipelineConfig {
  TriggerConfig triggers;
  SelectionPolicy selection;

  void validate() const;
};

// Applies a flat JSON object of overrides ({"top_k": 2, "budget": 4, "as_of":
// "2024-01-01", ...}) on top of `base`. Unknown keys and wrongly typed values
// raise Error(kSchemaError); the result is validated.
PipelineConfig apply_config_overrides(const nlohmann::json& overrides, PipelineConfig base = {});
nlohmann::json to_json(const PipelineConfig& cfg);

struct PipelineInputs {
  TabularModel model;
  CaseInstance case_instance;
  Datasheet datasheet;
  ModelCard model_card;
  std::vector<CaseInstance> background;
  std::vector<TemplatePack> packs;
};

struct PipelineResult {
  EvidenceBundle evidence;
  std::vector<ReflectionQuestion> candidates;  // every instantiated question
  std::vector<ReflectionQuestion> questions;   // the selected ones
};

// build_evidence -> fire_triggers -> select_questions.
PipelineResult run_pipeline(const PipelineInputs& in, const PipelineConfig& cfg);

}  // namespace reflect
