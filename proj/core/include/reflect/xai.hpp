#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "reflect/model.hpp"

namespace reflect {

inline constexpr std::size_t kDefaultShapleyCap = 15;

enum class AttributionMethod { kShapleyExact, kOcclusion };

// Per-feature contributions to the model output for `target_label`.
struct Attribution {
  AttributionMethod method = AttributionMethod::kShapleyExact;
  std::vector<std::pair<std::string, double>> values;  // schema order
  double baseline_value = 0.0;  // mean output over the background
  double output = 0.0;          // output for the explained case
  std::string target_label;

  double value(std::string_view feature) const;
  // Feature with the largest |value|; ties go to the lexicographically smaller name.
  std::string top_feature() const;
  // Features ordered by |value| descending, name ascending on ties.
  std::vector<std::string> ranking() const;
};

struct DisagreementReport {
  std::string top_a;
  std::string top_b;
  bool top1_differs = false;
};

struct Counterfactual {
  std::map<std::string, FeatureValue> changes;
  double distance = 0.0;
  std::string achieved;

  friend bool operator==(const Counterfactual&, const Counterfactual&) = default;
};

struct CounterfactualConstraints {
  bool mutable_only = false;
  int max_changed = 2;
  int grid_steps = 21;
};

struct PDCurve {
  std::string feature;
  std::vector<double> grid;
  std::vector<double> means;
  std::string target_label;
};

struct ProximityEntry {
  std::optional<double> flip_delta;        // numeric features
  std::optional<std::string> flip_category;  // categorical features
  std::string new_outcome;
};

struct ProximityReport {
  // One entry per schema feature; absent when no flip exists within reach.
  std::vector<std::pair<std::string, std::optional<ProximityEntry>>> per_feature;

  const ProximityEntry* find(std::string_view feature) const;
  bool empty() const;
};

// Grid of `steps` points spanning [min, max]; the midpoint when steps == 1.
std::vector<double> feature_grid(const FeatureSpec& spec, int steps);

// Range-normalized L1 for numerics plus one per changed categorical.
double counterfactual_distance(const TabularModel& model, const CaseInstance& c,
                               const std::map<std::string, FeatureValue>& changes);

// Exact interventional Shapley values by enumerating all 2^n coalitions, where
// absent features take background values. Explains the output for
// `target_label`, defaulting to the case's predicted label.
Attribution shapley_exact(const TabularModel& model, const CaseInstance& c,
                          const std::vector<CaseInstance>& background,
                          std::size_t cap = kDefaultShapleyCap,
                          std::optional<std::string> target_label = std::nullopt);

// Output change when one feature at a time is replaced by background values.
Attribution occlusion_attribution(const TabularModel& model, const CaseInstance& c,
                                  const std::vector<CaseInstance>& background,
                                  std::optional<std::string> target_label = std::nullopt);

DisagreementReport rank_disagreement(const Attribution& a, const Attribution& b);

// All Pareto-minimal counterfactuals on the discretized grid, ascending by
// distance, ties broken by the lexicographic change set.
std::vector<Counterfactual> counterfactual_search(const TabularModel& model, const CaseInstance& c,
                                                  const std::string& target,
                                                  const CounterfactualConstraints& constraints);

PDCurve partial_dependence(const TabularModel& model, const std::string& feature,
                           const std::vector<CaseInstance>& background, int grid_steps,
                           std::optional<std::string> target_label = std::nullopt);

inline constexpr double kProximityResolution = 1e-6;  // fraction of feature range

ProximityReport boundary_proximity(const TabularModel& model, const CaseInstance& c,
                                   double search_frac);

// Mean |Shapley value| over background rows, each explained for its own
// predicted label.
Attribution global_importance(const TabularModel& model, const std::vector<CaseInstance>& background,
                              std::size_t cap = kDefaultShapleyCap);

std::string to_string(AttributionMethod m);
nlohmann::json to_json(const Attribution& a);
nlohmann::json to_json(const DisagreementReport& d);
nlohmann::json to_json(const Counterfactual& cf);
nlohmann::json to_json(const PDCurve& pd);
nlohmann::json to_json(const ProximityReport& p);

}  // namespace reflect
