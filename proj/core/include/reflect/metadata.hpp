#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "reflect/model.hpp"

namespace reflect {

// Calendar date (proleptic Gregorian), serialized as YYYY-MM-DD.
struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  static Date parse(std::string_view iso);  // throws Error(kParseError)
  static Date today_utc();
  std::string to_string() const;
  long days_since_epoch() const;

  friend auto operator<=>(const Date&, const Date&) = default;
};

struct FeatureStats {
  bool categorical = false;
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::map<std::string, double> frequencies;  // category -> count

  friend bool operator==(const FeatureStats&, const FeatureStats&) = default;
};

struct Datasheet {
  long sample_size = 0;
  Date collection_start;
  Date collection_end;
  std::string provenance;
  std::map<std::string, FeatureStats> per_feature;
  std::map<std::string, long> subgroup_counts;
  std::vector<std::string> known_missing_factors;

  friend bool operator==(const Datasheet&, const Datasheet&) = default;
};

struct ModelLimitation {
  std::string text;
  std::set<std::string> applies_tags;
  friend bool operator==(const ModelLimitation&, const ModelLimitation&) = default;
};

struct ModelCard {
  double error_rate = 0.0;
  std::string intended_use;
  std::vector<ModelLimitation> limitations;
  friend bool operator==(const ModelCard&, const ModelCard&) = default;
};

struct MetadataConfig {
  double z_out = 2.0;
  double rare_frac = 0.05;
  double stale_years = 5.0;
  long min_sample = 100;
  double imbalance_frac = 0.10;
};

struct OutlierEntry {
  std::string feature;
  bool categorical = false;
  double value = 0.0;  // numeric value
  double z = 0.0;
  std::string category;
  double frequency = 0.0;  // share of sample_size
  bool flagged = false;
};

struct OutlierReport {
  std::vector<OutlierEntry> entries;     // evaluated features, by feature name
  std::vector<std::string> degenerate;   // numeric features with stddev 0

  const OutlierEntry* find(std::string_view feature) const;
};

struct DatasheetFinding {
  enum class Kind { kStale, kSmallSample, kSubgroupImbalance, kMissingFactor };
  Kind kind;
  std::string subject;  // subgroup label or missing factor; empty otherwise
  double value = 0.0;   // elapsed years, sample size or subgroup share
  std::string message;
};

struct DatasheetFindings {
  std::vector<DatasheetFinding> findings;
  bool empty() const { return findings.empty(); }
};

std::string to_string(DatasheetFinding::Kind kind);

Datasheet parse_datasheet(std::string_view document);
Datasheet datasheet_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Datasheet& d);

ModelCard parse_model_card(std::string_view document);
ModelCard model_card_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModelCard& m);

// z-scores of numeric case values against the datasheet, and rarity of
// categorical values. Features without stats or values are skipped.
OutlierReport distribution_report(const Datasheet& d, const CaseInstance& c,
                                  const MetadataConfig& cfg = {});

DatasheetFindings datasheet_findings(const Datasheet& d, const MetadataConfig& cfg, const Date& now);

// Fractional years between two dates (365.2425-day years).
double years_between(const Date& from, const Date& to);

nlohmann::json to_json(const OutlierReport& r);
nlohmann::json to_json(const DatasheetFindings& f);

}  // namespace reflect
