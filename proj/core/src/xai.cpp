#include "reflect/xai.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>

#include "xai_internal.hpp"

namespace reflect {

using nlohmann::json;

namespace detail {

std::vector<Row> encode_background(const TabularModel& model,
                                   const std::vector<CaseInstance>& background,
                                   const std::string& stage) {
  if (background.empty()) {
    throw Error(ErrorCode::kIncompleteBackground, "background is empty", stage);
  }
  std::vector<Row> rows;
  rows.reserve(background.size());
  for (std::size_t r = 0; r < background.size(); ++r) {
    try {
      rows.push_back(encode_complete(model, background[r]));
    } catch (const Error& e) {
      throw Error(ErrorCode::kIncompleteBackground,
                  "background row " + std::to_string(r) + ": " + e.detail(), stage);
    }
  }
  return rows;
}

std::size_t resolve_label(const TabularModel& model, const Row& x,
                          const std::optional<std::string>& target, const std::string& stage) {
  if (target) {
    const auto idx = model.label_index(*target);
    if (!idx) throw Error(ErrorCode::kSchemaError, "unknown outcome label " + *target, stage);
    return *idx;
  }
  return *model.label_index(predict_row(model, x).predicted);
}

}  // namespace detail

namespace {

// Neumaier-compensated sum taken in ascending order. Sorting first makes the
// result independent of the order in which the terms were produced.
double ordered_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  double comp = 0.0;
  for (double t : terms) {
    const double next = sum + t;
    if (std::abs(sum) >= std::abs(t)) {
      comp += (sum - next) + t;
    } else {
      comp += (t - next) + sum;
    }
    sum = next;
  }
  return sum + comp;
}

double mean_output(const TabularModel& model, const std::vector<Row>& rows, std::size_t label) {
  double total = 0.0;
  for (const auto& r : rows) total += model.output(r, label);
  return total / static_cast<double>(rows.size());
}

std::vector<double> shapley_values(const TabularModel& model, const Row& x,
                                   const std::vector<Row>& background, std::size_t label) {
  const std::size_t n = model.feature_count();
  const std::size_t coalitions = std::size_t{1} << n;

  // value[mask]: mean output with the features in mask taken from x and the
  // rest from each background row.
  std::vector<double> value(coalitions, 0.0);
  Row z(n);
  for (std::size_t mask = 0; mask < coalitions; ++mask) {
    double total = 0.0;
    for (const auto& b : background) {
      for (std::size_t i = 0; i < n; ++i) z[i] = ((mask >> i) & 1U) ? x[i] : b[i];
      total += model.output(z, label);
    }
    value[mask] = total / static_cast<double>(background.size());
  }

  // weight[k] = k! (n-k-1)! / n!
  std::vector<double> weight(n, 0.0);
  if (n > 0) weight[0] = 1.0 / static_cast<double>(n);
  for (std::size_t k = 1; k < n; ++k) {
    weight[k] = weight[k - 1] * static_cast<double>(k) / static_cast<double>(n - k);
  }

  std::vector<double> phi(n, 0.0);
  std::vector<std::vector<double>> by_size(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& bucket : by_size) bucket.clear();
    const std::size_t bit = std::size_t{1} << i;
    for (std::size_t mask = 0; mask < coalitions; ++mask) {
      if (mask & bit) continue;
      const auto size = static_cast<std::size_t>(std::popcount(mask));
      by_size[size].push_back(value[mask | bit] - value[mask]);
    }
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) total += weight[k] * ordered_sum(by_size[k]);
    phi[i] = total;
  }
  return phi;
}

}  // namespace

double Attribution::value(std::string_view feature) const {
  for (const auto& [name, v] : values) {
    if (name == feature) return v;
  }
  return 0.0;
}

std::vector<std::string> Attribution::ranking() const {
  auto sorted = values;
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    const double fa = std::abs(a.second);
    const double fb = std::abs(b.second);
    if (fa != fb) return fa > fb;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  for (const auto& [name, _] : sorted) out.push_back(name);
  return out;
}

std::string Attribution::top_feature() const {
  const auto r = ranking();
  return r.empty() ? std::string{} : r.front();
}

const ProximityEntry* ProximityReport::find(std::string_view feature) const {
  for (const auto& [name, entry] : per_feature) {
    if (name == feature) return entry ? &*entry : nullptr;
  }
  return nullptr;
}

bool ProximityReport::empty() const {
  return std::none_of(per_feature.begin(), per_feature.end(),
                      [](const auto& e) { return e.second.has_value(); });
}

std::vector<double> feature_grid(const FeatureSpec& spec, int steps) {
  std::vector<double> grid;
  if (steps <= 1) {
    grid.push_back(spec.min + spec.range() / 2.0);
    return grid;
  }
  const double span = spec.max - spec.min;
  for (int j = 0; j < steps; ++j) {
    grid.push_back(j == steps - 1 ? spec.max : spec.min + span * j / (steps - 1));
  }
  return grid;
}

double counterfactual_distance(const TabularModel& model, const CaseInstance& c,
                               const std::map<std::string, FeatureValue>& changes) {
  double total = 0.0;
  for (const auto& spec : model.schema()) {
    const auto it = changes.find(spec.name);
    if (it == changes.end()) continue;
    if (spec.numeric()) {
      const auto cur = c.values.find(spec.name);
      const double from = cur != c.values.end() && std::holds_alternative<double>(cur->second)
                              ? std::get<double>(cur->second)
                              : spec.min;
      total += std::abs(std::get<double>(it->second) - from) / spec.range();
    } else {
      total += 1.0;
    }
  }
  return total;
}

Attribution shapley_exact(const TabularModel& model, const CaseInstance& c,
                          const std::vector<CaseInstance>& background, std::size_t cap,
                          std::optional<std::string> target_label) {
  const std::string stage = "shapley";
  if (model.feature_count() > cap) {
    throw Error(ErrorCode::kTooManyFeatures,
                std::to_string(model.feature_count()) + " features exceed cap " + std::to_string(cap),
                stage);
  }
  const auto rows = detail::encode_background(model, background, stage);
  Row x;
  try {
    x = encode_case(model, c);
  } catch (const Error& e) {
    throw e.with_stage(stage);
  }
  const auto label = detail::resolve_label(model, x, target_label, stage);
  const auto phi = shapley_values(model, x, rows, label);

  Attribution a;
  a.method = AttributionMethod::kShapleyExact;
  a.target_label = model.outcome_labels()[label];
  a.baseline_value = mean_output(model, rows, label);
  a.output = model.output(x, label);
  for (std::size_t i = 0; i < model.feature_count(); ++i) {
    a.values.emplace_back(model.feature(i).name, phi[i]);
  }
  return a;
}

Attribution occlusion_attribution(const TabularModel& model, const CaseInstance& c,
                                  const std::vector<CaseInstance>& background,
                                  std::optional<std::string> target_label) {
  const std::string stage = "occlusion";
  const auto rows = detail::encode_background(model, background, stage);
  Row x;
  try {
    x = encode_case(model, c);
  } catch (const Error& e) {
    throw e.with_stage(stage);
  }
  const auto label = detail::resolve_label(model, x, target_label, stage);

  Attribution a;
  a.method = AttributionMethod::kOcclusion;
  a.target_label = model.outcome_labels()[label];
  a.baseline_value = mean_output(model, rows, label);
  a.output = model.output(x, label);
  Row z = x;
  for (std::size_t i = 0; i < model.feature_count(); ++i) {
    double total = 0.0;
    for (const auto& b : rows) {
      z[i] = b[i];
      total += model.output(z, label);
    }
    z[i] = x[i];
    a.values.emplace_back(model.feature(i).name, a.output - total / static_cast<double>(rows.size()));
  }
  return a;
}

DisagreementReport rank_disagreement(const Attribution& a, const Attribution& b) {
  std::set<std::string> fa, fb;
  for (const auto& [name, _] : a.values) fa.insert(name);
  for (const auto& [name, _] : b.values) fb.insert(name);
  if (fa != fb) {
    throw Error(ErrorCode::kFeatureSetMismatch, "attributions cover different features",
                "disagreement");
  }
  DisagreementReport r;
  r.top_a = a.top_feature();
  r.top_b = b.top_feature();
  r.top1_differs = r.top_a != r.top_b;
  return r;
}

PDCurve partial_dependence(const TabularModel& model, const std::string& feature,
                           const std::vector<CaseInstance>& background, int grid_steps,
                           std::optional<std::string> target_label) {
  const std::string stage = "partial_dependence";
  const auto idx = model.feature_index(feature);
  if (!idx) throw Error(ErrorCode::kSchemaError, "unknown feature " + feature, stage);
  const auto& spec = model.feature(*idx);
  if (!spec.numeric()) throw Error(ErrorCode::kNotNumeric, feature, stage);
  auto rows = detail::encode_background(model, background, stage);
  std::size_t label = 0;
  if (target_label) {
    const auto li = model.label_index(*target_label);
    if (!li) throw Error(ErrorCode::kSchemaError, "unknown outcome label " + *target_label, stage);
    label = *li;
  }

  PDCurve pd;
  pd.feature = feature;
  pd.target_label = model.outcome_labels()[label];
  pd.grid = feature_grid(spec, grid_steps);
  for (double g : pd.grid) {
    double total = 0.0;
    for (auto& r : rows) {
      const double saved = r[*idx];
      r[*idx] = g;
      total += model.output(r, label);
      r[*idx] = saved;
    }
    pd.means.push_back(total / static_cast<double>(rows.size()));
  }
  return pd;
}

namespace {

// Simplest decimal in (lo, hi] satisfying `flips`, or hi when none is found.
template <typename Pred>
double snap_decimal(double lo, double hi, double resolution, Pred flips) {
  if (!(hi > 0.0)) return hi;
  for (double step = std::pow(10.0, std::floor(std::log10(hi))); step >= resolution * 1e-3;
       step /= 10.0) {
    const double candidate = std::floor(hi / step) * step;
    if (candidate > lo && candidate <= hi && flips(candidate)) return candidate;
  }
  return hi;
}

}  // namespace

ProximityReport boundary_proximity(const TabularModel& model, const CaseInstance& c,
                                   double search_frac) {
  constexpr int kScanSteps = 512;
  const Row x = encode_case(model, c);
  const std::string base = predict_row(model, x).predicted;

  ProximityReport report;
  Row z = x;
  for (std::size_t i = 0; i < model.feature_count(); ++i) {
    const auto& spec = model.feature(i);
    std::optional<ProximityEntry> found;
    if (!model.reads_feature(i) || c.is_missing(spec.name)) {
      report.per_feature.emplace_back(spec.name, std::nullopt);
      continue;
    }
    if (!spec.numeric()) {
      for (std::size_t cat = 0; cat < spec.categories.size(); ++cat) {
        if (static_cast<double>(cat) == x[i]) continue;
        z[i] = static_cast<double>(cat);
        const auto rec = predict_row(model, z);
        if (rec.predicted != base) {
          found = ProximityEntry{std::nullopt, spec.categories[cat], rec.predicted};
          break;
        }
      }
      z[i] = x[i];
      report.per_feature.emplace_back(spec.name, std::move(found));
      continue;
    }

    const double reach = search_frac * spec.range();
    const double resolution = kProximityResolution * spec.range();
    std::optional<double> best;
    std::string best_outcome;
    for (double dir : {+1.0, -1.0}) {
      const double limit = std::min(reach, dir > 0 ? spec.max - x[i] : x[i] - spec.min);
      if (!(limit > 0.0)) continue;
      std::string outcome;
      auto flips = [&](double t) {
        z[i] = x[i] + dir * t;
        const auto rec = predict_row(model, z);
        z[i] = x[i];
        if (rec.predicted != base) {
          outcome = rec.predicted;
          return true;
        }
        return false;
      };
      double lo = 0.0;
      double hi = -1.0;
      for (int k = 1; k <= kScanSteps; ++k) {
        const double t = k == kScanSteps ? limit : limit * k / kScanSteps;
        if (flips(t)) {
          hi = t;
          break;
        }
        lo = t;
      }
      if (hi < 0.0) continue;
      while (hi - lo > resolution) {
        const double mid = lo + (hi - lo) / 2.0;
        if (flips(mid)) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      const double t = snap_decimal(lo, hi, resolution, flips);
      flips(t);  // records the outcome at the chosen point
      if (!best || t < std::abs(*best)) {
        best = dir * t;
        best_outcome = outcome;
      }
    }
    if (best) found = ProximityEntry{*best, std::nullopt, best_outcome};
    report.per_feature.emplace_back(spec.name, std::move(found));
  }
  return report;
}

Attribution global_importance(const TabularModel& model, const std::vector<CaseInstance>& background,
                              std::size_t cap) {
  const std::string stage = "global_importance";
  if (model.feature_count() > cap) {
    throw Error(ErrorCode::kTooManyFeatures,
                std::to_string(model.feature_count()) + " features exceed cap " + std::to_string(cap),
                stage);
  }
  const auto rows = detail::encode_background(model, background, stage);
  std::vector<double> total(model.feature_count(), 0.0);
  double baseline = 0.0;
  for (const auto& row : rows) {
    const auto label = *model.label_index(predict_row(model, row).predicted);
    const auto phi = shapley_values(model, row, rows, label);
    for (std::size_t i = 0; i < phi.size(); ++i) total[i] += std::abs(phi[i]);
    baseline += mean_output(model, rows, label);
  }
  Attribution a;
  a.method = AttributionMethod::kShapleyExact;
  a.baseline_value = baseline / static_cast<double>(rows.size());
  for (std::size_t i = 0; i < model.feature_count(); ++i) {
    a.values.emplace_back(model.feature(i).name, total[i] / static_cast<double>(rows.size()));
  }
  return a;
}

std::string to_string(AttributionMethod m) {
  return m == AttributionMethod::kShapleyExact ? "ShapleyExact" : "Occlusion";
}

json to_json(const Attribution& a) {
  json values = json::object();
  for (const auto& [name, v] : a.values) values[name] = v;
  json out = {{"method", to_string(a.method)},
              {"values", values},
              {"baseline_value", a.baseline_value},
              {"ranking", a.ranking()}};
  if (!a.target_label.empty()) {
    out["target_label"] = a.target_label;
    out["output"] = a.output;
  }
  return out;
}

json to_json(const DisagreementReport& d) {
  return {{"top_a", d.top_a}, {"top_b", d.top_b}, {"top1_differs", d.top1_differs}};
}

json to_json(const Counterfactual& cf) {
  json changes = json::object();
  for (const auto& [name, v] : cf.changes) changes[name] = to_json(v);
  return {{"changes", changes}, {"distance", cf.distance}, {"achieved", cf.achieved}};
}

json to_json(const PDCurve& pd) {
  return {{"feature", pd.feature}, {"grid", pd.grid}, {"means", pd.means}, {"target_label", pd.target_label}};
}

json to_json(const ProximityReport& p) {
  json out = json::object();
  for (const auto& [name, entry] : p.per_feature) {
    if (!entry) {
      out[name] = nullptr;
      continue;
    }
    json e = {{"new_outcome", entry->new_outcome}};
    if (entry->flip_delta) e["flip_delta"] = *entry->flip_delta;
    if (entry->flip_category) e["flip_category"] = *entry->flip_category;
    out[name] = std::move(e);
  }
  return out;
}

}  // namespace reflect
