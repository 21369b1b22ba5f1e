#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace reflect {

// The ten elements for reflection. Values are ordered Q1 < Q2 < ... < Q10.
enum class QuestionTypeId { Q1 = 1, Q2, Q3, Q4, Q5, Q6, Q7, Q8, Q9, Q10 };

// Elements of thought from Socratic questioning.
enum class SocraticElement {
  kPurpose,
  kQuestion,
  kInformation,
  kInterpretationInference,
  kConcepts,
  kAssumptions,
  kImplications,
  kPointOfView,
};

// Categories of the XAI question bank.
enum class XaiBankCategory {
  kHow,
  kWhy,
  kWhyNot,
  kHowToBeThat,
  kHowToStillBeThis,
  kWhatIf,
  kPerformance,
  kData,
  kOutput,
  kOthers,
};

enum class BloomLevel { kAnalysing, kEvaluating, kCreating };

// Kinds of information that can back a reflection question.
enum class EvidenceKind {
  kInputData,
  kDatasheetFinding,
  kFeatureContribution,
  kAttributionDisagreement,
  kCounterfactual,
  kPartialDependence,
  kPerturbation,
  kBoundaryProximity,
  kGlobalImportance,
  kModelCardFact,
  kStakeholderContext,
  kOperatorPrior,
  kContextualInfo,
};

inline constexpr std::array<QuestionTypeId, 10> kAllQuestionTypes = {
    QuestionTypeId::Q1, QuestionTypeId::Q2, QuestionTypeId::Q3, QuestionTypeId::Q4,
    QuestionTypeId::Q5, QuestionTypeId::Q6, QuestionTypeId::Q7, QuestionTypeId::Q8,
    QuestionTypeId::Q9, QuestionTypeId::Q10};

inline constexpr std::array<SocraticElement, 8> kAllSocraticElements = {
    SocraticElement::kPurpose,      SocraticElement::kQuestion,
    SocraticElement::kInformation,  SocraticElement::kInterpretationInference,
    SocraticElement::kConcepts,     SocraticElement::kAssumptions,
    SocraticElement::kImplications, SocraticElement::kPointOfView};

inline constexpr std::array<XaiBankCategory, 10> kAllXaiBankCategories = {
    XaiBankCategory::kHow,         XaiBankCategory::kWhy,
    XaiBankCategory::kWhyNot,      XaiBankCategory::kHowToBeThat,
    XaiBankCategory::kHowToStillBeThis, XaiBankCategory::kWhatIf,
    XaiBankCategory::kPerformance, XaiBankCategory::kData,
    XaiBankCategory::kOutput,      XaiBankCategory::kOthers};

inline constexpr std::array<BloomLevel, 3> kAllBloomLevels = {
    BloomLevel::kAnalysing, BloomLevel::kEvaluating, BloomLevel::kCreating};

inline constexpr std::array<EvidenceKind, 13> kAllEvidenceKinds = {
    EvidenceKind::kInputData,          EvidenceKind::kDatasheetFinding,
    EvidenceKind::kFeatureContribution, EvidenceKind::kAttributionDisagreement,
    EvidenceKind::kCounterfactual,     EvidenceKind::kPartialDependence,
    EvidenceKind::kPerturbation,       EvidenceKind::kBoundaryProximity,
    EvidenceKind::kGlobalImportance,   EvidenceKind::kModelCardFact,
    EvidenceKind::kStakeholderContext, EvidenceKind::kOperatorPrior,
    EvidenceKind::kContextualInfo};

// String forms used in JSON documents ("Q7", "PointOfView", "WhatIf", "Creating",
// "BoundaryProximity").
std::string to_string(QuestionTypeId id);
std::string to_string(SocraticElement e);
std::string to_string(XaiBankCategory c);
std::string to_string(BloomLevel b);
std::string to_string(EvidenceKind k);

std::optional<QuestionTypeId> parse_question_type(std::string_view s);
std::optional<SocraticElement> parse_socratic_element(std::string_view s);
std::optional<XaiBankCategory> parse_xai_category(std::string_view s);
std::optional<BloomLevel> parse_bloom_level(std::string_view s);
std::optional<EvidenceKind> parse_evidence_kind(std::string_view s);

struct QuestionType {
  QuestionTypeId id;
  std::string name;
  std::string description;
  std::set<SocraticElement> socratic_elements;
  std::set<XaiBankCategory> xai_bank_categories;
  std::set<BloomLevel> bloom_levels;
  std::set<EvidenceKind> useful_info_kinds;

  bool is_creating() const { return bloom_levels.contains(BloomLevel::kCreating); }

  friend bool operator==(const QuestionType&, const QuestionType&) = default;
};

struct Taxonomy {
  std::vector<QuestionType> types;  // ordered Q1..Q10
  std::set<std::pair<SocraticElement, QuestionTypeId>> edges_socratic;
  std::set<std::pair<QuestionTypeId, XaiBankCategory>> edges_xai;

  friend bool operator==(const Taxonomy&, const Taxonomy&) = default;
};

// The fixed ten-element taxonomy. Returns the same immutable instance on every call.
const Taxonomy& builtin_taxonomy();

const QuestionType& lookup_type(const Taxonomy& taxonomy, QuestionTypeId id);

// True for question types that reach the creating level (Q5, Q7, Q8, Q9).
bool is_creating_level(QuestionTypeId id);

}  // namespace reflect
