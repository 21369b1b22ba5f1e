#include "reflect/pipeline.hpp"

namespace reflect {

using nlohmann::json;

namespace {

[[noreturn]] void bad_override(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::kSchemaError, key + ": " + what, "config");
}

double as_number(const std::string& key, const json& v) {
  if (!v.is_number()) bad_override(key, "expected a number");
  return v.get<double>();
}

long as_integer(const std::string& key, const json& v) {
  if (!v.is_number_integer()) bad_override(key, "expected an integer");
  return v.get<long>();
}

}  // namespace

void PipelineConfig::validate() const {
  triggers.validate();
  selection.validate();
}

PipelineConfig apply_config_overrides(const json& overrides, PipelineConfig base) {
  if (overrides.is_null()) return base;
  if (!overrides.is_object()) bad_override("config", "expected an object");
  auto& t = base.triggers;
  auto& m = t.metadata;
  auto& s = base.selection;
  for (const auto& [key, v] : overrides.items()) {
    if (key == "top_k") t.top_k = static_cast<int>(as_integer(key, v));
    else if (key == "alt_margin") t.alt_margin = as_number(key, v);
    else if (key == "prox_frac") t.prox_frac = as_number(key, v);
    else if (key == "err_threshold") t.err_threshold = as_number(key, v);
    else if (key == "z_out") m.z_out = as_number(key, v);
    else if (key == "rare_frac") m.rare_frac = as_number(key, v);
    else if (key == "stale_years") m.stale_years = as_number(key, v);
    else if (key == "min_sample") m.min_sample = as_integer(key, v);
    else if (key == "imbalance_frac") m.imbalance_frac = as_number(key, v);
    else if (key == "shapley_cap") {
      const long cap = as_integer(key, v);
      if (cap < 1) bad_override(key, "must be >= 1");
      t.shapley_cap = static_cast<std::size_t>(cap);
    } else if (key == "cf_grid_steps") t.cf_grid_steps = static_cast<int>(as_integer(key, v));
    else if (key == "cf_max_changed") t.cf_max_changed = static_cast<int>(as_integer(key, v));
    else if (key == "max_counterfactuals") {
      const long n = as_integer(key, v);
      if (n < 1) bad_override(key, "must be >= 1");
      t.max_counterfactuals = static_cast<std::size_t>(n);
    } else if (key == "proximity_search_frac") t.proximity_search_frac = as_number(key, v);
    else if (key == "pd_grid_steps") t.pd_grid_steps = static_cast<int>(as_integer(key, v));
    else if (key == "as_of") {
      if (v.is_null()) t.as_of.reset();
      else if (v.is_string()) t.as_of = Date::parse(v.get<std::string>());
      else bad_override(key, "expected a YYYY-MM-DD string");
    } else if (key == "budget") s.budget = static_cast<int>(as_integer(key, v));
    else if (key == "max_per_type") s.max_per_type = static_cast<int>(as_integer(key, v));
    else if (key == "require_creating") {
      if (!v.is_boolean()) bad_override(key, "expected a boolean");
      s.require_creating = v.get<bool>();
    } else {
      bad_override(key, "unknown configuration key");
    }
  }
  base.validate();
  return base;
}

json to_json(const PipelineConfig& cfg) {
  const auto& t = cfg.triggers;
  json j = {
      {"top_k", t.top_k},
      {"alt_margin", t.alt_margin},
      {"prox_frac", t.prox_frac},
      {"err_threshold", t.err_threshold},
      {"z_out", t.metadata.z_out},
      {"rare_frac", t.metadata.rare_frac},
      {"stale_years", t.metadata.stale_years},
      {"min_sample", t.metadata.min_sample},
      {"imbalance_frac", t.metadata.imbalance_frac},
      {"shapley_cap", t.shapley_cap},
      {"cf_grid_steps", t.cf_grid_steps},
      {"cf_max_changed", t.cf_max_changed},
      {"max_counterfactuals", t.max_counterfactuals},
      {"proximity_search_frac", t.proximity_search_frac},
      {"pd_grid_steps", t.pd_grid_steps},
      {"budget", cfg.selection.budget},
      {"max_per_type", cfg.selection.max_per_type},
      {"require_creating", cfg.selection.require_creating},
  };
  j["as_of"] = t.as_of ? json(t.as_of->to_string()) : json(nullptr);
  return j;
}

PipelineResult run_pipeline(const PipelineInputs& in, const PipelineConfig& cfg) {
  cfg.validate();
  PipelineResult r;
  r.evidence = build_evidence(in.model, in.case_instance, in.datasheet, in.model_card, in.background,
                              cfg.triggers);
  r.candidates = fire_triggers(r.evidence, in.packs, cfg.triggers);
  r.questions = select_questions(r.candidates, cfg.selection);
  return r;
}

}  // namespace reflect
