#include "reflect/triggers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace reflect {

namespace {

std::string fixed(double x, int decimals) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, x);
  return buf;
}

std::string percent(double share) { return format_number(std::round(share * 1000.0) / 10.0) + "%"; }

std::string signed_number(double x) { return (x > 0 ? "+" : "") + format_number(x); }

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

std::string case_value(const EvidenceBundle& e, const std::string& feature) {
  const auto it = e.case_instance.values.find(feature);
  return it == e.case_instance.values.end() ? "MISSING" : format_value(it->second);
}

std::string issue_phrase(CaseFinding::Kind kind) {
  switch (kind) {
    case CaseFinding::Kind::kMissing: return "missing";
    case CaseFinding::Kind::kOutOfRange: return "out of range";
    case CaseFinding::Kind::kUnknownCategory: return "an unknown category";
    case CaseFinding::Kind::kTypeMismatch: return "of the wrong type";
    case CaseFinding::Kind::kUnknownFeature: return "unknown to the model";
  }
  return "invalid";
}

std::string describe_changes(const std::map<std::string, FeatureValue>& changes) {
  std::string out;
  for (const auto& [name, v] : changes) {
    if (!out.empty()) out += ", ";
    out += name + " = " + format_value(v);
  }
  return out;
}

// Features with a nonzero Shapley value, strongest first.
std::vector<std::string> contributing(const Attribution& a, int limit) {
  std::vector<std::string> out;
  for (const auto& name : a.ranking()) {
    if (static_cast<int>(out.size()) >= limit || a.value(name) == 0.0) break;
    out.push_back(name);
  }
  return out;
}

class Catalog {
 public:
  Catalog(const EvidenceBundle& e, const TriggerConfig& cfg) : e_(e), cfg_(cfg) {
    if (e.recommendation) outcome_ = e.recommendation->predicted;
  }

  std::vector<TriggerFiring> take() { return std::move(out_); }

  void fire(TriggerId id, QuestionTypeId q, std::map<std::string, std::string> bindings,
            std::vector<std::string> refs, double score) {
    out_.push_back({id, q, std::move(bindings), std::move(refs), clamp01(score)});
  }

  // Adds the predicted label as {outcome} when there is one.
  std::map<std::string, std::string> with_outcome(std::map<std::string, std::string> b = {}) const {
    if (outcome_) b.emplace("outcome", *outcome_);
    return b;
  }

  void case_information() {
    using Kind = CaseFinding::Kind;
    for (const auto& f : e_.case_report.findings) {
      if (f.kind == Kind::kUnknownFeature) continue;
      fire(TriggerId::kQ1a, QuestionTypeId::Q1,
           {{"feature", f.feature}, {"issue", issue_phrase(f.kind)}, {"detail", f.message},
            {"value", case_value(e_, f.feature)}},
           {"case:" + to_string(f.kind) + ":" + f.feature}, 1.0);
    }
    for (const auto& o : e_.outliers.entries) {
      if (!o.flagged) continue;
      if (o.categorical) {
        fire(TriggerId::kQ1b, QuestionTypeId::Q1,
             {{"feature", o.feature}, {"value", o.category}, {"share", percent(o.frequency)}},
             {"outlier:" + o.feature}, 0.5);
      } else {
        fire(TriggerId::kQ1b, QuestionTypeId::Q1,
             {{"feature", o.feature}, {"value", format_number(o.value)}, {"z", fixed(o.z, 2)}},
             {"outlier:" + o.feature}, std::min(1.0, std::abs(o.z) / 4.0));
      }
    }
  }

  void relevance() {
    if (!e_.shapley) return;
    const auto top = contributing(*e_.shapley, cfg_.top_k);
    if (!top.empty()) {
      const double max_abs = std::abs(e_.shapley->value(top.front()));
      for (const auto& name : top) {
        const double phi = e_.shapley->value(name);
        fire(TriggerId::kQ2a, QuestionTypeId::Q2,
             with_outcome({{"feature", name}, {"value", case_value(e_, name)},
                           {"contribution", signed_number(phi)}}),
             {"attr:shapley"}, std::abs(phi) / max_abs);
      }
    }
    if (e_.disagreement && e_.disagreement->top1_differs) {
      fire(TriggerId::kQ2b, QuestionTypeId::Q2,
           with_outcome({{"x", e_.disagreement->top_a}, {"z", e_.disagreement->top_b}}),
           {"attr:disagreement", "attr:shapley", "attr:occlusion"}, 0.9);
    }
  }

  void dataset() {
    std::size_t factor_index = 0;
    for (const auto& f : e_.datasheet_findings.findings) {
      switch (f.kind) {
        case DatasheetFinding::Kind::kStale:
          fire(TriggerId::kQ3a, QuestionTypeId::Q3,
               {{"years", format_number(cfg_.metadata.stale_years)}, {"elapsed_years", fixed(f.value, 1)}},
               {"datasheet:stale"}, 0.7);
          break;
        case DatasheetFinding::Kind::kSmallSample: {
          const std::string n = format_number(f.value);
          fire(TriggerId::kQ3b, QuestionTypeId::Q3,
               {{"sample_size", n}, {"limitation", "a small sample of " + n + " records"}},
               {"datasheet:small_sample"}, 0.7);
          break;
        }
        case DatasheetFinding::Kind::kSubgroupImbalance:
          fire(TriggerId::kQ3b, QuestionTypeId::Q3,
               {{"subgroup", f.subject},
                {"share", percent(f.value)},
                {"limitation", "under-representation of " + f.subject + " (" + percent(f.value) + ")"}},
               {"datasheet:imbalance:" + f.subject}, 0.7);
          break;
        case DatasheetFinding::Kind::kMissingFactor:
          fire(TriggerId::kQ3c, QuestionTypeId::Q3, {{"factor", f.subject}},
               {"datasheet:missing_factor:" + std::to_string(factor_index++)}, 0.6);
          break;
      }
    }
  }

  void causal_structure() {
    if (!e_.shapley || !outcome_) return;
    const auto top = contributing(*e_.shapley, 1);
    if (top.empty()) return;
    fire(TriggerId::kQ4, QuestionTypeId::Q4,
         with_outcome({{"feature", top.front()}, {"value", case_value(e_, top.front())}}),
         {"attr:shapley"}, 0.8);
  }

  void alternatives() {
    if (!e_.recommendation) return;
    const auto& rec = *e_.recommendation;
    const std::string alternative = rec.runner_up();
    if (alternative.empty()) return;

    if (rec.margin <= cfg_.alt_margin) {
      auto b = with_outcome({{"alternative", alternative}, {"margin", fixed(rec.margin, 2)}});
      if (e_.shapley) {
        std::string findings;
        for (const auto& name : contributing(*e_.shapley, cfg_.top_k)) {
          findings += (findings.empty() ? "" : ", ") + name;
        }
        if (!findings.empty()) b.emplace("findings", findings);
      }
      std::vector<std::string> refs = {"recommendation"};
      if (e_.partial_dependence) refs.push_back("pd:" + e_.partial_dependence->feature);
      const double score = cfg_.alt_margin > 0 ? 1.0 - rec.margin / cfg_.alt_margin : 1.0;
      fire(TriggerId::kQ5a, QuestionTypeId::Q5, std::move(b), std::move(refs), score);
    }

    const auto& cfs = e_.counterfactuals_any;
    if (cfs.empty()) return;
    std::vector<double> distances;
    for (const auto& cf : cfs) distances.push_back(cf.distance);
    std::sort(distances.begin(), distances.end());
    const std::size_t n = distances.size();
    const double median = n % 2 ? distances[n / 2] : (distances[n / 2 - 1] + distances[n / 2]) / 2.0;
    for (std::size_t i = 0; i < cfs.size(); ++i) {
      if (cfs[i].achieved != alternative || cfs[i].changes.empty()) continue;
      if (cfs[i].distance > median) break;
      const auto& [feature, value] = *cfs[i].changes.begin();
      fire(TriggerId::kQ5b, QuestionTypeId::Q5,
           with_outcome({{"alternative", alternative},
                         {"changes", describe_changes(cfs[i].changes)},
                         {"feature", feature},
                         {"value", format_value(value)}}),
           {"cf:any:" + std::to_string(i)}, 0.6);
      break;
    }
  }

  void assumptions() {
    fire(TriggerId::kQ6a, QuestionTypeId::Q6, with_outcome(), {}, 0.3);
    const auto& prior = e_.case_instance.operator_prior;
    if (prior && outcome_ && *prior != *outcome_) {
      fire(TriggerId::kQ6b, QuestionTypeId::Q6, with_outcome({{"prior", *prior}}),
           {"context:operator_prior"}, 0.9);
    }
  }

  void stakeholders() {
    if (e_.case_instance.stakeholder_prefs.empty()) {
      fire(TriggerId::kQ7a, QuestionTypeId::Q7, with_outcome(), {"context:stakeholder_prefs"}, 0.7);
    }
    fire(TriggerId::kQ7b, QuestionTypeId::Q7, with_outcome(), {}, 0.3);
  }

  void consequences() {
    const auto& tags = e_.case_instance.context_tags;
    const auto& limitations = e_.model_card.limitations;
    for (std::size_t i = 0; i < limitations.size(); ++i) {
      const bool applies = std::any_of(limitations[i].applies_tags.begin(), limitations[i].applies_tags.end(),
                                       [&](const std::string& t) { return tags.count(t) > 0; });
      if (!applies) continue;
      fire(TriggerId::kQ8a, QuestionTypeId::Q8, with_outcome({{"limitation", limitations[i].text}}),
           {"modelcard:limitation:" + std::to_string(i)}, 0.8);
    }
    fire(TriggerId::kQ8b, QuestionTypeId::Q8, with_outcome(), {}, 0.3);
  }

  void intervention() {
    if (e_.counterfactuals_mutable.empty()) return;
    const auto& cf = e_.counterfactuals_mutable.front();
    if (cf.changes.empty()) return;
    const auto& [feature, value] = *cf.changes.begin();
    std::map<std::string, std::string> b = {
        {"feature", feature}, {"outcome", cf.achieved}, {"changes", describe_changes(cf.changes)}};
    const FeatureSpec* spec = e_.feature(feature);
    const auto* target = std::get_if<double>(&value);
    const auto current = e_.case_instance.values.find(feature);
    const double* now = current == e_.case_instance.values.end() ? nullptr : std::get_if<double>(&current->second);
    if (spec && spec->numeric() && target && now) {
      // Numeric moves are phrased by direction; only categorical targets are offered as {value}.
      b.emplace(*target < *now ? "reduce_feature" : "increase_feature", feature);
    } else {
      b.emplace("value", format_value(value));
    }
    std::vector<std::string> refs = {"cf:mutable:0"};
    if (e_.find("whatif:perturbation")) refs.push_back("whatif:perturbation");
    fire(TriggerId::kQ9, QuestionTypeId::Q9, std::move(b), std::move(refs), 1.0 - cf.distance);
  }

  void near_threshold() {
    if (!e_.proximity || !outcome_) return;
    for (const auto& [name, entry] : e_.proximity->per_feature) {
      if (!entry || !entry->flip_delta) continue;
      const FeatureSpec* spec = e_.feature(name);
      if (!spec || !spec->numeric()) continue;
      const double reach = cfg_.prox_frac * spec->range();
      const double delta = *entry->flip_delta;
      if (!(reach > 0) || std::abs(delta) > reach) continue;

      auto b = with_outcome({{"feature", name}, {"value", case_value(e_, name)},
                             {"new_outcome", entry->new_outcome}});
      if (spec->unit == "years" && delta > 0) {
        // Age-like features read better as "N years older" than as a boundary value.
        b.emplace("delta_years", format_number(delta));
      } else {
        const auto it = e_.case_instance.values.find(name);
        const double now = std::get<double>(it->second);
        b.emplace("delta", signed_number(delta));
        b.emplace("boundary", format_number(now + delta));
      }
      std::vector<std::string> refs = {"prox:" + name};
      if (e_.find("global_importance")) refs.push_back("global_importance");
      if (e_.find("whatif:perturbation")) refs.push_back("whatif:perturbation");
      fire(TriggerId::kQ10a, QuestionTypeId::Q10, std::move(b), std::move(refs),
           1.0 - std::abs(delta) / reach);
    }
  }

  void error_rate() {
    const double rate = e_.model_card.error_rate;
    if (!(rate > 0) || rate < cfg_.err_threshold) return;
    fire(TriggerId::kQ10b, QuestionTypeId::Q10,
         with_outcome({{"one_in_n", std::to_string(std::llround(1.0 / rate))}, {"rate", format_number(rate)}}),
         {"modelcard:error_rate"}, 0.5);
  }

 private:
  const EvidenceBundle& e_;
  const TriggerConfig& cfg_;
  std::optional<std::string> outcome_;
  std::vector<TriggerFiring> out_;
};

std::set<EvidenceKind> offered_kinds(const TriggerFiring& f, const EvidenceBundle& e) {
  std::set<EvidenceKind> kinds;
  for (const auto& ref : f.evidence_refs) {
    const EvidenceItem* item = e.find(ref);
    if (item == nullptr) {
      throw Error(ErrorCode::kSchemaError, to_string(f.trigger) + " cites unknown evidence " + ref,
                  "fire_triggers");
    }
    kinds.insert(item->kind);
  }
  return kinds;
}

bool compatible(const QuestionTemplate& t, const TriggerFiring& f, const std::set<EvidenceKind>& kinds) {
  if (t.qtype != f.qtype) return false;
  for (const auto& slot : t.slots) {
    if (!f.bindings.count(slot)) return false;
  }
  if (!std::includes(kinds.begin(), kinds.end(), t.required_evidence.begin(), t.required_evidence.end())) {
    return false;
  }
  // An evidence-backed firing wants a template that actually leans on that evidence.
  if (kinds.empty()) return true;
  return std::any_of(t.required_evidence.begin(), t.required_evidence.end(),
                     [&](EvidenceKind k) { return kinds.count(k) > 0; });
}

}  // namespace

std::string to_string(TriggerId id) {
  switch (id) {
    case TriggerId::kQ1a: return "T-Q1a";
    case TriggerId::kQ1b: return "T-Q1b";
    case TriggerId::kQ2a: return "T-Q2a";
    case TriggerId::kQ2b: return "T-Q2b";
    case TriggerId::kQ3a: return "T-Q3a";
    case TriggerId::kQ3b: return "T-Q3b";
    case TriggerId::kQ3c: return "T-Q3c";
    case TriggerId::kQ4: return "T-Q4";
    case TriggerId::kQ5a: return "T-Q5a";
    case TriggerId::kQ5b: return "T-Q5b";
    case TriggerId::kQ6a: return "T-Q6a";
    case TriggerId::kQ6b: return "T-Q6b";
    case TriggerId::kQ7a: return "T-Q7a";
    case TriggerId::kQ7b: return "T-Q7b";
    case TriggerId::kQ8a: return "T-Q8a";
    case TriggerId::kQ8b: return "T-Q8b";
    case TriggerId::kQ9: return "T-Q9";
    case TriggerId::kQ10a: return "T-Q10a";
    case TriggerId::kQ10b: return "T-Q10b";
  }
  return "T-?";
}

std::vector<TriggerFiring> evaluate_triggers(const EvidenceBundle& e, const TriggerConfig& cfg) {
  Catalog c(e, cfg);
  c.case_information();
  c.relevance();
  c.dataset();
  c.causal_structure();
  c.alternatives();
  c.assumptions();
  c.stakeholders();
  c.consequences();
  c.intervention();
  c.near_threshold();
  c.error_rate();
  return c.take();
}

std::vector<TriggerFiring> evaluate_whatif_triggers(const EvidenceBundle& e, const TriggerConfig& cfg) {
  Catalog c(e, cfg);
  c.intervention();
  c.near_threshold();
  return c.take();
}

const QuestionTemplate* choose_template(const TriggerFiring& firing, const EvidenceBundle& e,
                                        const std::vector<TemplatePack>& packs) {
  const auto kinds = offered_kinds(firing, e);
  for (const auto& pack : packs) {
    const QuestionTemplate* best = nullptr;
    std::size_t best_weight = 0;
    for (const auto& t : pack.templates) {
      if (!compatible(t, firing, kinds)) continue;
      const std::size_t weight = t.slots.size() + t.required_evidence.size();
      if (best == nullptr || weight > best_weight) {
        best = &t;
        best_weight = weight;
      }
    }
    if (best) return best;
  }
  return nullptr;
}

std::vector<ReflectionQuestion> instantiate(const std::vector<TriggerFiring>& firings,
                                            const EvidenceBundle& e,
                                            const std::vector<TemplatePack>& packs) {
  std::vector<ReflectionQuestion> out;
  for (const auto& f : firings) {
    const QuestionTemplate* t = choose_template(f, e, packs);
    if (t == nullptr) {
      throw Error(ErrorCode::kMissingTemplate,
                  "no usable template of type " + to_string(f.qtype) + " for " + to_string(f.trigger),
                  "fire_triggers");
    }
    ReflectionQuestion q = render_template(*t, f.bindings, f.evidence_refs, f.score);
    auto dup = std::find_if(out.begin(), out.end(), [&](const ReflectionQuestion& o) {
      return o.qtype == q.qtype && o.text == q.text;
    });
    if (dup == out.end()) {
      out.push_back(std::move(q));
    } else if (q.score > dup->score) {
      dup->score = q.score;
    }
  }
  return out;
}

std::vector<ReflectionQuestion> fire_triggers(const EvidenceBundle& e, const std::vector<TemplatePack>& packs,
                                              const TriggerConfig& cfg) {
  return instantiate(evaluate_triggers(e, cfg), e, packs);
}

std::vector<ReflectionQuestion> fire_whatif_triggers(const EvidenceBundle& e,
                                                     const std::vector<TemplatePack>& packs,
                                                     const TriggerConfig& cfg) {
  return instantiate(evaluate_whatif_triggers(e, cfg), e, packs);
}

}  // namespace reflect
