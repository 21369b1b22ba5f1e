#include "reflect/taxonomy.hpp"

#include <cassert>

namespace reflect {

namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> parse_enum(std::string_view s, const std::array<Enum, N>& all) {
  for (Enum e : all) {
    if (to_string(e) == s) return e;
  }
  return std::nullopt;
}

using SE = SocraticElement;
using XC = XaiBankCategory;
using EK = EvidenceKind;

Taxonomy make_taxonomy() {
  const std::set<BloomLevel> kAnalyseEvaluate = {BloomLevel::kAnalysing, BloomLevel::kEvaluating};
  const std::set<BloomLevel> kAll = {BloomLevel::kAnalysing, BloomLevel::kEvaluating,
                                     BloomLevel::kCreating};

  Taxonomy t;
  t.types = {
      {QuestionTypeId::Q1,
       "Case Information",
       "Inspect and contextualise the case data points to check their quality, reliability "
       "and completeness.",
       {SE::kInformation},
       {XC::kData},
       kAnalyseEvaluate,
       {EK::kInputData, EK::kDatasheetFinding}},
      {QuestionTypeId::Q2,
       "Relevance of Data",
       "Judge whether the data adequately supports the recommendation and which data points "
       "actually matter for this case.",
       {SE::kInformation, SE::kInterpretationInference},
       {XC::kWhy},
       kAnalyseEvaluate,
       {EK::kFeatureContribution, EK::kAttributionDisagreement}},
      {QuestionTypeId::Q3,
       "Dataset",
       "Assess whether the training data represents the phenomenon, surfacing dataset "
       "limitations and characteristics.",
       {SE::kConcepts},
       {XC::kData},
       kAnalyseEvaluate,
       {EK::kDatasheetFinding}},
      {QuestionTypeId::Q4,
       "Causal Structure of Recommendation",
       "Check whether the outcome follows from the data, i.e. whether the causal structure of "
       "the model and recommendation is sound.",
       {SE::kInterpretationInference},
       {XC::kWhy, XC::kWhyNot},
       kAnalyseEvaluate,
       {EK::kFeatureContribution, EK::kCounterfactual}},
      {QuestionTypeId::Q5,
       "Alternatives to Recommendation",
       "Consider other possibilities so that the wider solution space is explored.",
       {SE::kQuestion, SE::kPurpose},
       {XC::kWhyNot, XC::kHowToBeThat, XC::kOutput},
       kAll,
       {EK::kContextualInfo, EK::kPartialDependence, EK::kCounterfactual}},
      {QuestionTypeId::Q6,
       "Assumptions and Expectations of Decision-Maker",
       "Surface the decision-maker's taken-for-granted assumptions, expectations and possible "
       "cognitive biases.",
       {SE::kAssumptions},
       {XC::kOutput},
       kAnalyseEvaluate,
       {EK::kOperatorPrior}},
      {QuestionTypeId::Q7,
       "Stakeholder Preferences",
       "Enquire about and account for the preferences and needs of the people concerned.",
       {SE::kPointOfView},
       {XC::kOutput},
       kAll,
       {EK::kStakeholderContext}},
      {QuestionTypeId::Q8,
       "Consequences of Decision",
       "Anticipate intended and unintended consequences and trade-offs of the decision and "
       "how to mitigate them.",
       {SE::kImplications},
       {XC::kPerformance, XC::kOutput},
       kAll,
       {EK::kModelCardFact}},
      {QuestionTypeId::Q9,
       "Change Intervention",
       "Explore feasible, smaller interventions that would make a desired outcome more likely.",
       {SE::kPurpose},
       {XC::kHowToBeThat, XC::kWhatIf},
       kAll,
       {EK::kPerturbation, EK::kCounterfactual}},
      {QuestionTypeId::Q10,
       "Model Behaviour",
       "Assess the assumptions, rules and thresholds built into the model, in particular where "
       "the decision limits lie and when the result would change.",
       {SE::kAssumptions, SE::kPurpose, SE::kConcepts},
       {XC::kHow, XC::kHowToStillBeThis, XC::kWhatIf, XC::kPerformance},
       kAnalyseEvaluate,
       {EK::kBoundaryProximity, EK::kPerturbation, EK::kCounterfactual, EK::kModelCardFact,
        EK::kGlobalImportance}},
  };
  for (const auto& type : t.types) {
    for (SE e : type.socratic_elements) t.edges_socratic.emplace(e, type.id);
    for (XC c : type.xai_bank_categories) t.edges_xai.emplace(type.id, c);
  }
  return t;
}

}  // namespace

std::string to_string(QuestionTypeId id) { return "Q" + std::to_string(static_cast<int>(id)); }

std::string to_string(SocraticElement e) {
  switch (e) {
    case SE::kPurpose: return "Purpose";
    case SE::kQuestion: return "Question";
    case SE::kInformation: return "Information";
    case SE::kInterpretationInference: return "InterpretationInference";
    case SE::kConcepts: return "Concepts";
    case SE::kAssumptions: return "Assumptions";
    case SE::kImplications: return "Implications";
    case SE::kPointOfView: return "PointOfView";
  }
  return "?";
}

std::string to_string(XaiBankCategory c) {
  switch (c) {
    case XC::kHow: return "How";
    case XC::kWhy: return "Why";
    case XC::kWhyNot: return "WhyNot";
    case XC::kHowToBeThat: return "HowToBeThat";
    case XC::kHowToStillBeThis: return "HowToStillBeThis";
    case XC::kWhatIf: return "WhatIf";
    case XC::kPerformance: return "Performance";
    case XC::kData: return "Data";
    case XC::kOutput: return "Output";
    case XC::kOthers: return "Others";
  }
  return "?";
}

std::string to_string(BloomLevel b) {
  switch (b) {
    case BloomLevel::kAnalysing: return "Analysing";
    case BloomLevel::kEvaluating: return "Evaluating";
    case BloomLevel::kCreating: return "Creating";
  }
  return "?";
}

std::string to_string(EvidenceKind k) {
  switch (k) {
    case EK::kInputData: return "InputData";
    case EK::kDatasheetFinding: return "DatasheetFinding";
    case EK::kFeatureContribution: return "FeatureContribution";
    case EK::kAttributionDisagreement: return "AttributionDisagreement";
    case EK::kCounterfactual: return "Counterfactual";
    case EK::kPartialDependence: return "PartialDependence";
    case EK::kPerturbation: return "Perturbation";
    case EK::kBoundaryProximity: return "BoundaryProximity";
    case EK::kGlobalImportance: return "GlobalImportance";
    case EK::kModelCardFact: return "ModelCardFact";
    case EK::kStakeholderContext: return "StakeholderContext";
    case EK::kOperatorPrior: return "OperatorPrior";
    case EK::kContextualInfo: return "ContextualInfo";
  }
  return "?";
}

std::optional<QuestionTypeId> parse_question_type(std::string_view s) {
  return parse_enum(s, kAllQuestionTypes);
}
std::optional<SocraticElement> parse_socratic_element(std::string_view s) {
  return parse_enum(s, kAllSocraticElements);
}
std::optional<XaiBankCategory> parse_xai_category(std::string_view s) {
  return parse_enum(s, kAllXaiBankCategories);
}
std::optional<BloomLevel> parse_bloom_level(std::string_view s) {
  return parse_enum(s, kAllBloomLevels);
}
std::optional<EvidenceKind> parse_evidence_kind(std::string_view s) {
  return parse_enum(s, kAllEvidenceKinds);
}

const Taxonomy& builtin_taxonomy() {
  static const Taxonomy taxonomy = make_taxonomy();
  return taxonomy;
}

const QuestionType& lookup_type(const Taxonomy& taxonomy, QuestionTypeId id) {
  // types are stored in id order; fall back to a scan for hand-built taxonomies.
  const auto index = static_cast<std::size_t>(id) - 1;
  if (index < taxonomy.types.size() && taxonomy.types[index].id == id) {
    return taxonomy.types[index];
  }
  for (const auto& type : taxonomy.types) {
    if (type.id == id) return type;
  }
  assert(false && "question type missing from taxonomy");
  return taxonomy.types.front();
}

bool is_creating_level(QuestionTypeId id) {
  return lookup_type(builtin_taxonomy(), id).is_creating();
}

}  // namespace reflect
