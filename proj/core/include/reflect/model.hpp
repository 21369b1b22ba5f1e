#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "reflect/error.hpp"

namespace reflect {

enum class FeatureKind { kNumeric, kCategorical };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kNumeric;
  double min = 0.0;  // numeric only
  double max = 1.0;
  std::vector<std::string> categories;  // categorical only
  std::string unit;
  bool is_mutable = true;  // actionable by an intervention

  bool numeric() const { return kind == FeatureKind::kNumeric; }
  double range() const { return max - min; }
  // Index into categories, or -1.
  int category_index(std::string_view value) const;

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

// Per-feature coefficient of a linear scorer. Categorical features carry one
// weight per category instead of `weight`.
struct LinearTerm {
  double weight = 0.0;
  std::vector<double> category_weights;

  friend bool operator==(const LinearTerm&, const LinearTerm&) = default;
};

// Two-outcome linear scorer: s = intercept + sum of terms. The first outcome
// label is predicted when s >= threshold.
struct LinearForm {
  std::vector<LinearTerm> terms;  // aligned with schema
  double intercept = 0.0;
  double threshold = 0.0;

  friend bool operator==(const LinearForm&, const LinearForm&) = default;
};

// Numeric split: value < split goes left. Categorical split: value == category
// at index `split` goes left. Leaves have feature == -1 and one score per label.
struct TreeNode {
  int feature = -1;
  double split = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> scores;

  bool leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct TreeForm {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  friend bool operator==(const TreeForm&, const TreeForm&) = default;
};

// Dense, schema-aligned encoding of a complete case. Categorical values are
// stored as category indices.
using Row = std::vector<double>;

class TabularModel {
 public:
  TabularModel(std::vector<FeatureSpec> schema, std::variant<LinearForm, TreeForm> form,
               std::vector<std::string> outcome_labels);

  const std::vector<FeatureSpec>& schema() const { return schema_; }
  const std::variant<LinearForm, TreeForm>& form() const { return form_; }
  const std::vector<std::string>& outcome_labels() const { return outcome_labels_; }
  bool is_linear() const { return std::holds_alternative<LinearForm>(form_); }

  std::size_t feature_count() const { return schema_.size(); }
  std::optional<std::size_t> feature_index(std::string_view name) const;
  std::optional<std::size_t> label_index(std::string_view label) const;
  const FeatureSpec& feature(std::size_t i) const { return schema_[i]; }

  // Whether the scorer can ever consult feature i.
  bool reads_feature(std::size_t i) const { return reads_[i]; }

  // Per-label scores for a complete row (probabilities for the linear form,
  // leaf scores for the tree form).
  std::vector<double> label_scores(const Row& row) const;

  // Scalar output explained by attribution methods for the given label: the
  // signed logit s - threshold (negated for the second label) for the linear
  // form, the leaf score of that label for the tree form.
  double output(const Row& row, std::size_t label) const;

  friend bool operator==(const TabularModel& a, const TabularModel& b) {
    return a.schema_ == b.schema_ && a.form_ == b.form_ && a.outcome_labels_ == b.outcome_labels_;
  }

 private:
  const TreeNode& leaf_for(const Row& row) const;

  std::vector<FeatureSpec> schema_;
  std::variant<LinearForm, TreeForm> form_;
  std::vector<std::string> outcome_labels_;
  std::vector<bool> reads_;
};

struct Missing {
  friend bool operator==(Missing, Missing) { return true; }
};
using FeatureValue = std::variant<Missing, double, std::string>;

struct CaseInstance {
  std::string id;
  std::map<std::string, FeatureValue> values;
  std::set<std::string> context_tags;
  std::map<std::string, std::string> stakeholder_prefs;
  std::optional<std::string> operator_prior;

  bool is_missing(const std::string& feature) const;
  friend bool operator==(const CaseInstance&, const CaseInstance&) = default;
};

struct Recommendation {
  std::string predicted;
  std::vector<std::pair<std::string, double>> scores;  // outcome-label order
  double margin = 0.0;

  // Highest-scoring label other than the predicted one (label order breaks ties).
  std::string runner_up() const;
  double score_of(std::string_view label) const;
  friend bool operator==(const Recommendation&, const Recommendation&) = default;
};

struct CaseFinding {
  enum class Kind { kMissing, kOutOfRange, kUnknownCategory, kTypeMismatch, kUnknownFeature };
  Kind kind;
  std::string feature;
  std::string message;
  friend bool operator==(const CaseFinding&, const CaseFinding&) = default;
};

struct CaseValidationReport {
  std::vector<CaseFinding> findings;
  bool ok() const { return findings.empty(); }
  friend bool operator==(const CaseValidationReport&, const CaseValidationReport&) = default;
};

std::string to_string(CaseFinding::Kind kind);

// Throws Error(kParseError) for malformed JSON and Error(kSchemaError) naming
// the offending field for invariant violations.
TabularModel parse_model_spec(std::string_view document);
TabularModel model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TabularModel& model);

CaseInstance parse_case(std::string_view document);
CaseInstance case_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CaseInstance& c);

// Background rows: either a JSON array of value maps or {"rows": [...]}.
std::vector<CaseInstance> parse_background(std::string_view document);
std::vector<CaseInstance> background_from_json(const nlohmann::json& j);

FeatureValue value_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FeatureValue& v);
std::string format_value(const FeatureValue& v);

// Shortest decimal rendering with at most six significant digits ("2", "0.15").
std::string format_number(double x);

nlohmann::json to_json(const Recommendation& r);
Recommendation recommendation_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CaseValidationReport& r);

// Encodes features the model reads. Throws Error(kMissingFeature) when one of
// them is missing and Error(kSchemaError) for a wrongly typed or unknown value.
Row encode_case(const TabularModel& model, const CaseInstance& c);
// Strict variant requiring every schema feature to be present and valid.
Row encode_complete(const TabularModel& model, const CaseInstance& c);
FeatureValue decode_value(const FeatureSpec& spec, double encoded);

Recommendation predict(const TabularModel& model, const CaseInstance& c);
Recommendation predict_row(const TabularModel& model, const Row& row);

CaseValidationReport validate_case(const TabularModel& model, const CaseInstance& c);

// Applies feature changes to a copy of the case. Throws Error(kSchemaError)
// for unknown features, out-of-range numerics or unknown categories.
CaseInstance apply_changes(const TabularModel& model, const CaseInstance& c,
                           const std::map<std::string, FeatureValue>& changes);

std::string read_file(const std::string& path);

}  // namespace reflect
