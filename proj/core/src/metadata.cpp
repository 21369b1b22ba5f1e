#include "reflect/metadata.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

namespace reflect {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& stage, const std::string& message) {
  throw Error(ErrorCode::kSchemaError, message, stage);
}

json parse_document(std::string_view document, const std::string& stage) {
  try {
    return json::parse(document);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, e.what(), stage);
  }
}

}  // namespace

Date Date::parse(std::string_view iso) {
  int y = 0, m = 0, d = 0;
  char tail = 0;
  const std::string s(iso);
  if (s.size() != 10 || std::sscanf(s.c_str(), "%4d-%2d-%2d%c", &y, &m, &d, &tail) != 3) {
    throw Error(ErrorCode::kParseError, "expected YYYY-MM-DD date, got '" + s + "'", "date");
  }
  const std::chrono::year_month_day ymd{std::chrono::year(y), std::chrono::month(static_cast<unsigned>(m)),
                                        std::chrono::day(static_cast<unsigned>(d))};
  if (!ymd.ok()) throw Error(ErrorCode::kParseError, "invalid calendar date '" + s + "'", "date");
  return {y, m, d};
}

Date Date::today_utc() {
  const auto today = std::chrono::floor<std::chrono::days>(std::chrono::system_clock::now());
  const std::chrono::year_month_day ymd{today};
  return {static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month())),
          static_cast<int>(static_cast<unsigned>(ymd.day()))};
}

std::string Date::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
  return buf;
}

long Date::days_since_epoch() const {
  const std::chrono::year_month_day ymd{std::chrono::year(year),
                                        std::chrono::month(static_cast<unsigned>(month)),
                                        std::chrono::day(static_cast<unsigned>(day))};
  return std::chrono::sys_days(ymd).time_since_epoch().count();
}

double years_between(const Date& from, const Date& to) {
  return static_cast<double>(to.days_since_epoch() - from.days_since_epoch()) / 365.2425;
}

const OutlierEntry* OutlierReport::find(std::string_view feature) const {
  for (const auto& e : entries) {
    if (e.feature == feature) return &e;
  }
  return nullptr;
}

std::string to_string(DatasheetFinding::Kind kind) {
  switch (kind) {
    case DatasheetFinding::Kind::kStale: return "stale";
    case DatasheetFinding::Kind::kSmallSample: return "small_sample";
    case DatasheetFinding::Kind::kSubgroupImbalance: return "subgroup_imbalance";
    case DatasheetFinding::Kind::kMissingFactor: return "missing_factor";
  }
  return "?";
}

Datasheet datasheet_from_json(const json& j) {
  const std::string stage = "parse_datasheet";
  if (!j.is_object()) throw Error(ErrorCode::kParseError, "datasheet must be an object", stage);
  try {
    Datasheet d;
    d.sample_size = j.at("sample_size").get<long>();
    if (d.sample_size < 0) schema_error(stage, "sample_size must be >= 0");
    d.collection_start = Date::parse(j.at("collection_start").get<std::string>());
    d.collection_end = Date::parse(j.at("collection_end").get<std::string>());
    if (d.collection_end < d.collection_start) {
      schema_error(stage, "collection_start must not be after collection_end");
    }
    d.provenance = j.value("provenance", std::string{});
    if (j.contains("per_feature")) {
      for (const auto& [name, s] : j.at("per_feature").items()) {
        FeatureStats stats;
        if (s.contains("frequencies")) {
          stats.categorical = true;
          for (const auto& [cat, n] : s.at("frequencies").items()) {
            const double count = n.get<double>();
            if (count < 0) schema_error(stage, "per_feature." + name + ": negative frequency");
            stats.frequencies[cat] = count;
          }
        } else {
          stats.mean = s.at("mean").get<double>();
          stats.stddev = s.at("stddev").get<double>();
          stats.min = s.value("min", stats.mean);
          stats.max = s.value("max", stats.mean);
          if (stats.stddev < 0) schema_error(stage, "per_feature." + name + ".stddev must be >= 0");
        }
        d.per_feature[name] = std::move(stats);
      }
    }
    long total = 0;
    if (j.contains("subgroup_counts")) {
      for (const auto& [label, n] : j.at("subgroup_counts").items()) {
        const long count = n.get<long>();
        if (count < 0) schema_error(stage, "subgroup_counts." + label + " must be >= 0");
        d.subgroup_counts[label] = count;
        total += count;
      }
    }
    if (total > d.sample_size) schema_error(stage, "subgroup counts exceed sample_size");
    if (j.contains("known_missing_factors")) {
      d.known_missing_factors = j.at("known_missing_factors").get<std::vector<std::string>>();
    }
    return d;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what(), stage);
  }
}

Datasheet parse_datasheet(std::string_view document) {
  return datasheet_from_json(parse_document(document, "parse_datasheet"));
}

json to_json(const Datasheet& d) {
  json per_feature = json::object();
  for (const auto& [name, s] : d.per_feature) {
    if (s.categorical) {
      per_feature[name] = {{"frequencies", s.frequencies}};
    } else {
      per_feature[name] = {{"mean", s.mean}, {"stddev", s.stddev}, {"min", s.min}, {"max", s.max}};
    }
  }
  return {{"sample_size", d.sample_size},
          {"collection_start", d.collection_start.to_string()},
          {"collection_end", d.collection_end.to_string()},
          {"provenance", d.provenance},
          {"per_feature", per_feature},
          {"subgroup_counts", d.subgroup_counts},
          {"known_missing_factors", d.known_missing_factors}};
}

ModelCard model_card_from_json(const json& j) {
  const std::string stage = "parse_model_card";
  if (!j.is_object()) throw Error(ErrorCode::kParseError, "model card must be an object", stage);
  try {
    ModelCard m;
    m.error_rate = j.at("error_rate").get<double>();
    if (!(m.error_rate >= 0.0 && m.error_rate <= 1.0)) {
      schema_error(stage, "error_rate must lie in [0, 1]");
    }
    m.intended_use = j.value("intended_use", std::string{});
    if (j.contains("limitations")) {
      for (const auto& l : j.at("limitations")) {
        ModelLimitation lim;
        lim.text = l.at("text").get<std::string>();
        if (l.contains("applies_tags")) {
          for (const auto& t : l.at("applies_tags")) lim.applies_tags.insert(t.get<std::string>());
        }
        m.limitations.push_back(std::move(lim));
      }
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what(), stage);
  }
}

ModelCard parse_model_card(std::string_view document) {
  return model_card_from_json(parse_document(document, "parse_model_card"));
}

json to_json(const ModelCard& m) {
  json limitations = json::array();
  for (const auto& l : m.limitations) {
    limitations.push_back({{"text", l.text}, {"applies_tags", l.applies_tags}});
  }
  return {{"error_rate", m.error_rate},
          {"intended_use", m.intended_use},
          {"limitations", limitations}};
}

OutlierReport distribution_report(const Datasheet& d, const CaseInstance& c, const MetadataConfig& cfg) {
  OutlierReport report;
  for (const auto& [name, stats] : d.per_feature) {
    const auto it = c.values.find(name);
    if (it == c.values.end()) continue;
    if (!stats.categorical) {
      const auto* v = std::get_if<double>(&it->second);
      if (v == nullptr) continue;
      if (!(stats.stddev > 0.0)) {
        report.degenerate.push_back(name);
        continue;
      }
      OutlierEntry e;
      e.feature = name;
      e.value = *v;
      e.z = (*v - stats.mean) / stats.stddev;
      e.flagged = std::abs(e.z) >= cfg.z_out;
      report.entries.push_back(std::move(e));
    } else {
      const auto* v = std::get_if<std::string>(&it->second);
      if (v == nullptr || d.sample_size <= 0) continue;
      OutlierEntry e;
      e.feature = name;
      e.categorical = true;
      e.category = *v;
      const auto f = stats.frequencies.find(*v);
      const double count = f == stats.frequencies.end() ? 0.0 : f->second;
      e.frequency = count / static_cast<double>(d.sample_size);
      e.flagged = e.frequency < cfg.rare_frac;
      report.entries.push_back(std::move(e));
    }
  }
  return report;
}

DatasheetFindings datasheet_findings(const Datasheet& d, const MetadataConfig& cfg, const Date& now) {
  using Kind = DatasheetFinding::Kind;
  DatasheetFindings out;
  const double age = years_between(d.collection_end, now);
  if (age > cfg.stale_years) {
    out.findings.push_back({Kind::kStale, "", age,
                            "data collection ended " + format_number(std::floor(age)) +
                                " years before " + now.to_string()});
  }
  if (d.sample_size < cfg.min_sample) {
    out.findings.push_back({Kind::kSmallSample, "", static_cast<double>(d.sample_size),
                            "sample size " + std::to_string(d.sample_size) + " below " +
                                std::to_string(cfg.min_sample)});
  }
  for (const auto& [label, count] : d.subgroup_counts) {
    const double share = d.sample_size > 0 ? static_cast<double>(count) / d.sample_size : 0.0;
    if (static_cast<double>(count) < cfg.imbalance_frac * static_cast<double>(d.sample_size)) {
      out.findings.push_back({Kind::kSubgroupImbalance, label, share,
                              "subgroup " + label + " makes up " + format_number(share * 100.0) +
                                  "% of the data"});
    }
  }
  for (const auto& factor : d.known_missing_factors) {
    out.findings.push_back({Kind::kMissingFactor, factor, 0.0, factor + " is not in the dataset"});
  }
  return out;
}

json to_json(const OutlierReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    json je = {{"feature", e.feature}, {"flagged", e.flagged}};
    if (e.categorical) {
      je["category"] = e.category;
      je["frequency"] = e.frequency;
    } else {
      je["value"] = e.value;
      je["z"] = e.z;
    }
    entries.push_back(std::move(je));
  }
  return {{"entries", entries}, {"degenerate", r.degenerate}};
}

json to_json(const DatasheetFindings& f) {
  json out = json::array();
  for (const auto& x : f.findings) {
    out.push_back({{"kind", to_string(x.kind)},
                   {"subject", x.subject},
                   {"value", x.value},
                   {"message", x.message}});
  }
  return out;
}

}  // namespace reflect
