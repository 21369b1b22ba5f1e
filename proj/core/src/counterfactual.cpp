#include <algorithm>
#include <cmath>

#include "reflect/xai.hpp"

namespace reflect {

namespace {

struct Option {
  double encoded;
  double cost;
};

struct Candidate {
  std::vector<std::pair<std::size_t, double>> changes;  // (feature index, encoded value)
  std::vector<double> cost;                             // per schema feature
  double distance = 0.0;
};

// Lexicographic order on change sets viewed as (feature name, value) sequences
// sorted by name; values compare numerically or by category name.
bool change_set_less(const TabularModel& model, const Candidate& a, const Candidate& b) {
  auto named = [&](const Candidate& c) {
    std::vector<std::pair<const FeatureSpec*, double>> out;
    for (const auto& [idx, v] : c.changes) out.emplace_back(&model.feature(idx), v);
    std::sort(out.begin(), out.end(),
              [](const auto& l, const auto& r) { return l.first->name < r.first->name; });
    return out;
  };
  const auto na = named(a);
  const auto nb = named(b);
  const std::size_t n = std::min(na.size(), nb.size());
  for (std::size_t k = 0; k < n; ++k) {
    const auto& fa = *na[k].first;
    const auto& fb = *nb[k].first;
    if (fa.name != fb.name) return fa.name < fb.name;
    if (fa.numeric()) {
      if (na[k].second != nb[k].second) return na[k].second < nb[k].second;
    } else {
      const auto& ca = fa.categories[static_cast<std::size_t>(na[k].second)];
      const auto& cb = fb.categories[static_cast<std::size_t>(nb[k].second)];
      if (ca != cb) return ca < cb;
    }
  }
  return na.size() < nb.size();
}

bool dominates(const Candidate& a, const Candidate& b) {
  bool strict = false;
  for (std::size_t i = 0; i < a.cost.size(); ++i) {
    if (a.cost[i] > b.cost[i]) return false;
    if (a.cost[i] < b.cost[i]) strict = true;
  }
  return strict;
}

}  // namespace

std::vector<Counterfactual> counterfactual_search(const TabularModel& model, const CaseInstance& c,
                                                  const std::string& target,
                                                  const CounterfactualConstraints& constraints) {
  const std::string stage = "counterfactual";
  if (!model.label_index(target)) {
    throw Error(ErrorCode::kSchemaError, "unknown outcome label " + target, stage);
  }
  Row x;
  try {
    x = encode_case(model, c);
  } catch (const Error& e) {
    throw e.with_stage(stage);
  }
  const std::string current = predict_row(model, x).predicted;
  if (current == target) {
    throw Error(ErrorCode::kTargetEqualsCurrent, "case is already predicted " + target, stage);
  }

  // Only features the scorer reads can move the prediction; any change to an
  // unread feature would be strictly dominated.
  std::vector<std::size_t> features;
  std::vector<std::vector<Option>> options;
  for (std::size_t i = 0; i < model.feature_count(); ++i) {
    const auto& spec = model.feature(i);
    if (!model.reads_feature(i) || c.is_missing(spec.name)) continue;
    if (constraints.mutable_only && !spec.is_mutable) continue;
    std::vector<Option> opts;
    if (spec.numeric()) {
      for (double g : feature_grid(spec, constraints.grid_steps)) {
        if (g != x[i]) opts.push_back({g, std::abs(g - x[i]) / spec.range()});
      }
    } else {
      for (std::size_t cat = 0; cat < spec.categories.size(); ++cat) {
        if (static_cast<double>(cat) != x[i]) opts.push_back({static_cast<double>(cat), 1.0});
      }
    }
    if (opts.empty()) continue;
    features.push_back(i);
    options.push_back(std::move(opts));
  }

  std::vector<Candidate> hits;
  const std::size_t m = features.size();
  const std::size_t max_changed = std::min<std::size_t>(
      m, static_cast<std::size_t>(std::max(0, constraints.max_changed)));
  Row z = x;

  // Subsets of the candidate features in lexicographic index order, each
  // expanded into the Cartesian product of its features' options.
  std::vector<std::size_t> subset;
  for (std::size_t size = 1; size <= max_changed; ++size) {
    subset.resize(size);
    for (std::size_t k = 0; k < size; ++k) subset[k] = k;
    while (true) {
      std::vector<std::size_t> pick(size, 0);
      auto advance = [&] {
        for (std::size_t k = size; k-- > 0;) {
          if (++pick[k] < options[subset[k]].size()) return true;
          pick[k] = 0;
        }
        return false;
      };
      do {
        for (std::size_t k = 0; k < size; ++k) {
          z[features[subset[k]]] = options[subset[k]][pick[k]].encoded;
        }
        if (predict_row(model, z).predicted == target) {
          Candidate cand;
          cand.cost.assign(model.feature_count(), 0.0);
          for (std::size_t k = 0; k < size; ++k) {
            const auto& opt = options[subset[k]][pick[k]];
            cand.changes.emplace_back(features[subset[k]], opt.encoded);
            cand.cost[features[subset[k]]] = opt.cost;
          }
          for (double cost : cand.cost) cand.distance += cost;
          hits.push_back(std::move(cand));
        }
      } while (advance());
      for (std::size_t k = 0; k < size; ++k) z[features[subset[k]]] = x[features[subset[k]]];

      // Next combination.
      std::size_t k = size;
      while (k > 0 && subset[k - 1] == m - size + (k - 1)) --k;
      if (k == 0) break;
      ++subset[k - 1];
      for (std::size_t j = k; j < size; ++j) subset[j] = subset[j - 1] + 1;
    }
  }

  std::sort(hits.begin(), hits.end(), [&](const Candidate& a, const Candidate& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return change_set_less(model, a, b);
  });

  std::vector<const Candidate*> frontier;
  for (const auto& cand : hits) {
    const bool dominated = std::any_of(frontier.begin(), frontier.end(),
                                       [&](const Candidate* k) { return dominates(*k, cand); });
    if (!dominated) frontier.push_back(&cand);
  }

  std::vector<Counterfactual> out;
  out.reserve(frontier.size());
  for (const Candidate* cand : frontier) {
    Counterfactual cf;
    for (const auto& [idx, encoded] : cand->changes) {
      cf.changes[model.feature(idx).name] = decode_value(model.feature(idx), encoded);
    }
    cf.distance = cand->distance;
    cf.achieved = target;
    out.push_back(std::move(cf));
  }
  return out;
}

}  // namespace reflect
