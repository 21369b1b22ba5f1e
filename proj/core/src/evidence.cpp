#include "reflect/evidence.hpp"

#include <algorithm>

namespace reflect {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& message) {
  throw Error(ErrorCode::kSchemaError, field + ": " + message, "config");
}

void require_fraction(double v, const char* field) {
  if (!(v >= 0.0 && v <= 1.0)) config_error(field, "must lie in [0, 1]");
}

// Runs `fn`, attributing any library error to `stage`.
template <typename Fn>
auto staged(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw e.with_stage(stage);
  }
}

// Unusable values only matter for features the scorer actually reads.
bool blocks_prediction(const TabularModel& model, const CaseFinding& f) {
  using Kind = CaseFinding::Kind;
  if (f.kind != Kind::kMissing && f.kind != Kind::kTypeMismatch && f.kind != Kind::kUnknownCategory) {
    return false;
  }
  const auto idx = model.feature_index(f.feature);
  return idx && model.reads_feature(*idx);
}

json case_finding_json(const CaseFinding& f, const CaseInstance& c) {
  json out = {{"kind", to_string(f.kind)}, {"feature", f.feature}, {"message", f.message}};
  const auto it = c.values.find(f.feature);
  if (it != c.values.end()) out["value"] = to_json(it->second);
  return out;
}

void add_counterfactuals(EvidenceBundle& b, const TabularModel& model, const CaseInstance& c,
                         const TriggerConfig& cfg) {
  for (const auto& label : model.outcome_labels()) {
    if (label == b.recommendation->predicted) continue;
    for (bool mutable_only : {false, true}) {
      CounterfactualConstraints cons{mutable_only, cfg.cf_max_changed, cfg.cf_grid_steps};
      auto found = counterfactual_search(model, c, label, cons);
      if (found.size() > cfg.max_counterfactuals) found.resize(cfg.max_counterfactuals);
      auto& dest = mutable_only ? b.counterfactuals_mutable : b.counterfactuals_any;
      dest.insert(dest.end(), found.begin(), found.end());
    }
  }
  auto by_distance = [](const Counterfactual& l, const Counterfactual& r) {
    return l.distance < r.distance;
  };
  std::stable_sort(b.counterfactuals_any.begin(), b.counterfactuals_any.end(), by_distance);
  std::stable_sort(b.counterfactuals_mutable.begin(), b.counterfactuals_mutable.end(), by_distance);
  for (std::size_t i = 0; i < b.counterfactuals_any.size(); ++i) {
    b.add("cf:any:" + std::to_string(i), EvidenceKind::kCounterfactual, to_json(b.counterfactuals_any[i]));
  }
  for (std::size_t i = 0; i < b.counterfactuals_mutable.size(); ++i) {
    b.add("cf:mutable:" + std::to_string(i), EvidenceKind::kCounterfactual,
          to_json(b.counterfactuals_mutable[i]));
  }
}

void add_proximity(EvidenceBundle& b, const TabularModel& model, const CaseInstance& c,
                   const TriggerConfig& cfg) {
  b.proximity = boundary_proximity(model, c, cfg.proximity_search_frac);
  for (const auto& [name, entry] : b.proximity->per_feature) {
    if (!entry) continue;
    json artifact = {{"feature", name}, {"new_outcome", entry->new_outcome}};
    if (entry->flip_delta) artifact["flip_delta"] = *entry->flip_delta;
    if (entry->flip_category) artifact["flip_category"] = *entry->flip_category;
    b.add("prox:" + name, EvidenceKind::kBoundaryProximity, std::move(artifact));
  }
}

EvidenceBundle empty_bundle(const TabularModel& model, const CaseInstance& c, const ModelCard& mc,
                            const TriggerConfig& cfg) {
  EvidenceBundle b;
  b.schema = model.schema();
  b.outcome_labels = model.outcome_labels();
  b.case_instance = c;
  b.as_of = cfg.as_of.value_or(Date::today_utc());
  b.model_card = mc;
  return b;
}

}  // namespace

void TriggerConfig::validate() const {
  if (top_k < 1) config_error("top_k", "must be >= 1");
  require_fraction(alt_margin, "alt_margin");
  require_fraction(prox_frac, "prox_frac");
  require_fraction(err_threshold, "err_threshold");
  require_fraction(metadata.rare_frac, "rare_frac");
  require_fraction(metadata.imbalance_frac, "imbalance_frac");
  require_fraction(proximity_search_frac, "proximity_search_frac");
  if (!(metadata.z_out > 0.0)) config_error("z_out", "must be > 0");
  if (metadata.stale_years < 0.0) config_error("stale_years", "must be >= 0");
  if (metadata.min_sample < 0) config_error("min_sample", "must be >= 0");
  if (shapley_cap < 1) config_error("shapley_cap", "must be >= 1");
  if (cf_grid_steps < 1) config_error("cf_grid_steps", "must be >= 1");
  if (cf_max_changed < 1) config_error("cf_max_changed", "must be >= 1");
  if (max_counterfactuals < 1) config_error("max_counterfactuals", "must be >= 1");
  if (pd_grid_steps < 1) config_error("pd_grid_steps", "must be >= 1");
}

const EvidenceItem* EvidenceBundle::find(std::string_view id) const {
  for (const auto& item : items) {
    if (item.id == id) return &item;
  }
  return nullptr;
}

const FeatureSpec* EvidenceBundle::feature(std::string_view name) const {
  for (const auto& f : schema) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

void EvidenceBundle::add(std::string id, EvidenceKind kind, json artifact) {
  if (find(id) != nullptr) throw Error(ErrorCode::kSchemaError, "duplicate evidence id " + id, "evidence");
  items.push_back({std::move(id), kind, std::move(artifact)});
}

EvidenceBundle build_evidence(const TabularModel& model, const CaseInstance& c, const Datasheet& d,
                              const ModelCard& mc, const std::vector<CaseInstance>& background,
                              const TriggerConfig& cfg) {
  staged("config", [&] { cfg.validate(); });
  EvidenceBundle b = empty_bundle(model, c, mc, cfg);

  b.case_report = staged("validate_case", [&] { return validate_case(model, c); });
  for (const auto& f : b.case_report.findings) {
    b.add("case:" + to_string(f.kind) + ":" + f.feature, EvidenceKind::kInputData, case_finding_json(f, c));
  }

  b.outliers = staged("distribution", [&] { return distribution_report(d, c, cfg.metadata); });
  for (const auto& e : b.outliers.entries) {
    if (!e.flagged) continue;
    json artifact = {{"feature", e.feature}};
    if (e.categorical) {
      artifact["category"] = e.category;
      artifact["frequency"] = e.frequency;
    } else {
      artifact["value"] = e.value;
      artifact["z"] = e.z;
    }
    b.add("outlier:" + e.feature, EvidenceKind::kDatasheetFinding, std::move(artifact));
  }

  b.datasheet_findings = staged("datasheet", [&] { return datasheet_findings(d, cfg.metadata, b.as_of); });
  std::size_t factor_index = 0;
  for (const auto& f : b.datasheet_findings.findings) {
    std::string id;
    switch (f.kind) {
      case DatasheetFinding::Kind::kStale: id = "datasheet:stale"; break;
      case DatasheetFinding::Kind::kSmallSample: id = "datasheet:small_sample"; break;
      case DatasheetFinding::Kind::kSubgroupImbalance: id = "datasheet:imbalance:" + f.subject; break;
      case DatasheetFinding::Kind::kMissingFactor:
        id = "datasheet:missing_factor:" + std::to_string(factor_index++);
        break;
    }
    b.add(std::move(id), EvidenceKind::kDatasheetFinding,
          {{"kind", to_string(f.kind)}, {"subject", f.subject}, {"value", f.value}, {"message", f.message}});
  }

  for (std::size_t i = 0; i < mc.limitations.size(); ++i) {
    b.add("modelcard:limitation:" + std::to_string(i), EvidenceKind::kModelCardFact,
          {{"text", mc.limitations[i].text}, {"applies_tags", mc.limitations[i].applies_tags}});
  }
  b.add("modelcard:error_rate", EvidenceKind::kModelCardFact,
        {{"error_rate", mc.error_rate}, {"intended_use", mc.intended_use}});
  b.add("context:stakeholder_prefs", EvidenceKind::kStakeholderContext, c.stakeholder_prefs);
  if (c.operator_prior) {
    b.add("context:operator_prior", EvidenceKind::kOperatorPrior, *c.operator_prior);
  }

  b.global_imp = staged("global_importance",
                        [&] { return global_importance(model, background, cfg.shapley_cap); });
  b.add("global_importance", EvidenceKind::kGlobalImportance, to_json(*b.global_imp));

  const bool usable = std::none_of(b.case_report.findings.begin(), b.case_report.findings.end(),
                                   [&](const CaseFinding& f) { return blocks_prediction(model, f); });
  if (!usable) {
    b.unavailable = {"predict",        "shapley",   "occlusion",          "disagreement",
                     "counterfactual", "proximity", "partial_dependence"};
    return b;
  }

  b.recommendation = staged("predict", [&] { return predict(model, c); });
  b.add("recommendation", EvidenceKind::kContextualInfo, to_json(*b.recommendation));
  const std::string& predicted = b.recommendation->predicted;

  b.shapley = staged("shapley", [&] {
    return shapley_exact(model, c, background, cfg.shapley_cap, predicted);
  });
  b.add("attr:shapley", EvidenceKind::kFeatureContribution, to_json(*b.shapley));
  b.occlusion = staged("occlusion", [&] { return occlusion_attribution(model, c, background, predicted); });
  b.add("attr:occlusion", EvidenceKind::kFeatureContribution, to_json(*b.occlusion));
  b.disagreement = staged("disagreement", [&] { return rank_disagreement(*b.shapley, *b.occlusion); });
  b.add("attr:disagreement", EvidenceKind::kAttributionDisagreement, to_json(*b.disagreement));

  staged("counterfactual", [&] { add_counterfactuals(b, model, c, cfg); });
  staged("proximity", [&] { add_proximity(b, model, c, cfg); });

  const std::string top = b.shapley->top_feature();
  const auto top_idx = model.feature_index(top);
  if (top_idx && model.feature(*top_idx).numeric()) {
    b.partial_dependence = staged("partial_dependence", [&] {
      return partial_dependence(model, top, background, cfg.pd_grid_steps, predicted);
    });
    b.add("pd:" + top, EvidenceKind::kPartialDependence, to_json(*b.partial_dependence));
  }
  return b;
}

EvidenceBundle build_whatif_evidence(const TabularModel& model, const CaseInstance& modified,
                                     const ModelCard& mc,
                                     const std::map<std::string, FeatureValue>& changes,
                                     const TriggerConfig& cfg) {
  staged("config", [&] { cfg.validate(); });
  EvidenceBundle b = empty_bundle(model, modified, mc, cfg);
  json perturbation = json::object();
  for (const auto& [name, v] : changes) perturbation[name] = to_json(v);
  b.add("whatif:perturbation", EvidenceKind::kPerturbation, {{"changes", perturbation}});

  b.recommendation = staged("predict", [&] { return predict(model, modified); });
  b.add("recommendation", EvidenceKind::kContextualInfo, to_json(*b.recommendation));
  staged("counterfactual", [&] { add_counterfactuals(b, model, modified, cfg); });
  staged("proximity", [&] { add_proximity(b, model, modified, cfg); });
  return b;
}

json evidence_json(const EvidenceBundle& bundle) {
  json out = json::object();
  for (const auto& item : bundle.items) {
    out[item.id] = {{"kind", to_string(item.kind)}, {"artifact", item.artifact}};
  }
  return out;
}

}  // namespace reflect
