#pragma once

#include <map>
#include <string>
#include <vector>

#include "reflect/evidence.hpp"
#include "reflect/question_template.hpp"

namespace reflect {

enum class TriggerId {
  kQ1a, kQ1b,
  kQ2a, kQ2b,
  kQ3a, kQ3b, kQ3c,
  kQ4,
  kQ5a, kQ5b,
  kQ6a, kQ6b,
  kQ7a, kQ7b,
  kQ8a, kQ8b,
  kQ9,
  kQ10a, kQ10b,
};

std::string to_string(TriggerId id);  // "T-Q10a"

// One firing of a catalog rule: slot values it can offer, the evidence it
// cites and its salience.
struct TriggerFiring {
  TriggerId trigger;
  QuestionTypeId qtype;
  std::map<std::string, std::string> bindings;
  std::vector<std::string> evidence_refs;
  double score = 0.0;  // in [0, 1]
};

// Evaluates every catalog rule in catalog order.
std::vector<TriggerFiring> evaluate_triggers(const EvidenceBundle& e, const TriggerConfig& cfg);
// Only the intervention rules (T-Q9, T-Q10a), used after a what-if change.
std::vector<TriggerFiring> evaluate_whatif_triggers(const EvidenceBundle& e, const TriggerConfig& cfg);

// Template for a firing: the first pack holding a compatible template wins;
// within it the template using the most slots and required evidence, earlier
// position on ties. A template is compatible when its type matches, its slots
// are all offered and its required evidence is all cited. Returns nullptr if
// none fits.
const QuestionTemplate* choose_template(const TriggerFiring& firing, const EvidenceBundle& e,
                                        const std::vector<TemplatePack>& packs);

// Instantiates questions for all firings. Duplicate (qtype, text) pairs are
// merged, keeping the first occurrence with the highest score.
// Throws Error(kMissingTemplate) when a firing type has no usable template.
std::vector<ReflectionQuestion> fire_triggers(const EvidenceBundle& e,
                                              const std::vector<TemplatePack>& packs,
                                              const TriggerConfig& cfg);
std::vector<ReflectionQuestion> fire_whatif_triggers(const EvidenceBundle& e,
                                                     const std::vector<TemplatePack>& packs,
                                                     const TriggerConfig& cfg);

std::vector<ReflectionQuestion> instantiate(const std::vector<TriggerFiring>& firings,
                                            const EvidenceBundle& e,
                                            const std::vector<TemplatePack>& packs);

}  // namespace reflect
