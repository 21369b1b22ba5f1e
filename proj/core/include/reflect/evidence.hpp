#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "reflect/metadata.hpp"
#include "reflect/model.hpp"
#include "reflect/taxonomy.hpp"
#include "reflect/xai.hpp"

namespace reflect {

struct TriggerConfig {
  int top_k = 3;
  double alt_margin = 0.15;
  double prox_frac = 0.10;
  double err_threshold = 0.05;
  MetadataConfig metadata;

  // Explanation settings used while building evidence.
  std::size_t shapley_cap = kDefaultShapleyCap;
  int cf_grid_steps = 21;
  int cf_max_changed = 2;
  std::size_t max_counterfactuals = 5;  // kept per target label and mode
  double proximity_search_frac = 0.5;
  int pd_grid_steps = 11;

  // Reference date for datasheet staleness; today (UTC) when unset.
  std::optional<Date> as_of;

  // Throws Error(kSchemaError) naming the offending field.
  void validate() const;
};

// A single addressable piece of evidence cited by questions.
struct EvidenceItem {
  std::string id;
  EvidenceKind kind;
  nlohmann::json artifact;
};

struct EvidenceBundle {
  std::vector<FeatureSpec> schema;
  std::vector<std::string> outcome_labels;
  CaseInstance case_instance;
  Date as_of;

  CaseValidationReport case_report;
  OutlierReport outliers;
  DatasheetFindings datasheet_findings;
  std::optional<Recommendation> recommendation;
  std::optional<Attribution> shapley;
  std::optional<Attribution> occlusion;
  std::optional<DisagreementReport> disagreement;
  std::vector<Counterfactual> counterfactuals_any;
  std::vector<Counterfactual> counterfactuals_mutable;
  std::optional<ProximityReport> proximity;
  std::optional<Attribution> global_imp;
  std::optional<PDCurve> partial_dependence;
  ModelCard model_card;

  std::vector<std::string> unavailable;  // stages skipped for this case
  std::vector<EvidenceItem> items;       // every item has a unique id

  const EvidenceItem* find(std::string_view id) const;
  const FeatureSpec* feature(std::string_view name) const;
  void add(std::string id, EvidenceKind kind, nlohmann::json artifact);
};

// Runs case validation, distribution and datasheet checks, prediction and every
// explanation method once, and indexes the results as evidence items. When the
// case has missing or unusable values the model-dependent stages are skipped and
// listed in `unavailable`. Errors carry the producing stage.
EvidenceBundle build_evidence(const TabularModel& model, const CaseInstance& c, const Datasheet& d,
                              const ModelCard& mc, const std::vector<CaseInstance>& background,
                              const TriggerConfig& cfg);

// Evidence restricted to what the what-if flow needs: prediction,
// counterfactuals and boundary proximity for a modified case.
EvidenceBundle build_whatif_evidence(const TabularModel& model, const CaseInstance& modified,
                                     const ModelCard& mc,
                                     const std::map<std::string, FeatureValue>& changes,
                                     const TriggerConfig& cfg);

nlohmann::json evidence_json(const EvidenceBundle& bundle);

}  // namespace reflect
