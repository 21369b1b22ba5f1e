#include "reflect/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace reflect {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& field, const std::string& message) {
  throw Error(ErrorCode::kSchemaError, field + ": " + message, "parse_model_spec");
}

[[noreturn]] void parse_error(const std::string& message, const std::string& stage) {
  throw Error(ErrorCode::kParseError, message, stage);
}

json parse_document(std::string_view document, const std::string& stage) {
  try {
    return json::parse(document);
  } catch (const json::parse_error& e) {
    parse_error(e.what(), stage);
  }
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

FeatureSpec feature_from_json(const json& j, std::size_t index) {
  const std::string where = "features[" + std::to_string(index) + "]";
  if (!j.is_object()) schema_error(where, "must be an object");
  FeatureSpec f;
  if (!j.contains("name") || !j.at("name").is_string()) schema_error(where + ".name", "missing");
  f.name = j.at("name").get<std::string>();
  if (f.name.empty()) schema_error(where + ".name", "empty");
  const auto kind = j.value("kind", std::string("numeric"));
  if (kind == "numeric") {
    f.kind = FeatureKind::kNumeric;
    const auto& range = j.contains("range") ? j.at("range") : json();
    if (!range.is_array() || range.size() != 2 || !range[0].is_number() || !range[1].is_number()) {
      schema_error(where + ".range", "numeric features need [min, max]");
    }
    f.min = range[0].get<double>();
    f.max = range[1].get<double>();
    if (!(f.min < f.max)) schema_error(where + ".range", "min must be < max");
  } else if (kind == "categorical") {
    f.kind = FeatureKind::kCategorical;
    if (!j.contains("categories") || !j.at("categories").is_array()) {
      schema_error(where + ".categories", "categorical features need a category list");
    }
    for (const auto& c : j.at("categories")) {
      if (!c.is_string()) schema_error(where + ".categories", "categories must be strings");
      f.categories.push_back(c.get<std::string>());
    }
    if (f.categories.empty()) schema_error(where + ".categories", "empty");
    auto sorted = f.categories;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      schema_error(where + ".categories", "duplicate category");
    }
  } else {
    schema_error(where + ".kind", "must be numeric or categorical");
  }
  f.unit = j.value("unit", std::string{});
  f.is_mutable = j.value("mutable", true);
  return f;
}

LinearForm linear_from_json(const json& j, const std::vector<FeatureSpec>& schema) {
  if (!j.is_object()) schema_error("linear", "must be an object");
  LinearForm form;
  form.intercept = j.value("intercept", 0.0);
  form.threshold = j.value("threshold", 0.0);
  if (!j.contains("weights") || !j.at("weights").is_object()) {
    schema_error("linear.weights", "must be an object keyed by feature name");
  }
  const auto& weights = j.at("weights");
  for (const auto& [name, _] : weights.items()) {
    const bool known = std::any_of(schema.begin(), schema.end(),
                                   [&](const FeatureSpec& f) { return f.name == name; });
    if (!known) schema_error("linear.weights." + name, "unknown feature");
  }
  for (const auto& f : schema) {
    const std::string where = "linear.weights." + f.name;
    if (!weights.contains(f.name)) schema_error(where, "missing weight");
    const auto& w = weights.at(f.name);
    LinearTerm term;
    if (f.numeric()) {
      if (!w.is_number()) schema_error(where, "numeric features take a number");
      term.weight = w.get<double>();
    } else {
      if (!w.is_object()) schema_error(where, "categorical features take {category: weight}");
      term.category_weights.assign(f.categories.size(), 0.0);
      for (const auto& [cat, cw] : w.items()) {
        const int idx = f.category_index(cat);
        if (idx < 0) schema_error(where + "." + cat, "unknown category");
        if (!cw.is_number()) schema_error(where + "." + cat, "weight must be a number");
        term.category_weights[static_cast<std::size_t>(idx)] = cw.get<double>();
      }
    }
    form.terms.push_back(std::move(term));
  }
  return form;
}

TreeForm tree_from_json(const json& j, const std::vector<FeatureSpec>& schema,
                        std::size_t label_count) {
  if (!j.is_object() || !j.contains("nodes") || !j.at("nodes").is_array()) {
    schema_error("tree.nodes", "must be an array");
  }
  const auto& nodes = j.at("nodes");
  if (nodes.empty()) schema_error("tree.nodes", "empty tree");
  TreeForm form;
  const int count = static_cast<int>(nodes.size());
  for (int i = 0; i < count; ++i) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    const std::string where = "tree.nodes[" + std::to_string(i) + "]";
    TreeNode node;
    if (n.contains("scores")) {
      if (!n.at("scores").is_array()) schema_error(where + ".scores", "must be an array");
      for (const auto& s : n.at("scores")) {
        if (!s.is_number()) schema_error(where + ".scores", "must be numbers");
        node.scores.push_back(s.get<double>());
      }
      if (node.scores.size() != label_count) {
        schema_error(where + ".scores", "one score per outcome label required");
      }
    } else {
      if (!n.contains("feature") || !n.at("feature").is_string()) {
        schema_error(where + ".feature", "split nodes need a feature");
      }
      const auto name = n.at("feature").get<std::string>();
      const auto it = std::find_if(schema.begin(), schema.end(),
                                   [&](const FeatureSpec& f) { return f.name == name; });
      if (it == schema.end()) schema_error(where + ".feature", "unknown feature " + name);
      node.feature = static_cast<int>(it - schema.begin());
      if (!n.contains("split")) schema_error(where + ".split", "missing");
      const auto& split = n.at("split");
      if (it->numeric()) {
        if (!split.is_number()) schema_error(where + ".split", "numeric split needs a number");
        node.split = split.get<double>();
      } else {
        if (!split.is_string()) schema_error(where + ".split", "categorical split needs a category");
        const int idx = it->category_index(split.get<std::string>());
        if (idx < 0) schema_error(where + ".split", "unknown category");
        node.split = idx;
      }
      for (const char* side : {"left", "right"}) {
        if (!n.contains(side) || !n.at(side).is_number_integer()) {
          schema_error(where + "." + side, "child index required");
        }
      }
      node.left = n.at("left").get<int>();
      node.right = n.at("right").get<int>();
      for (int child : {node.left, node.right}) {
        if (child < 0 || child >= count) schema_error(where, "child index out of range");
      }
    }
    form.nodes.push_back(std::move(node));
  }

  // Every node must be reached exactly once from the root.
  std::vector<int> seen(form.nodes.size(), 0);
  std::vector<int> stack = {0};
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    if (seen[static_cast<std::size_t>(i)]++ > 0) {
      schema_error("tree.nodes[" + std::to_string(i) + "]", "reached twice (cycle or shared node)");
    }
    const auto& node = form.nodes[static_cast<std::size_t>(i)];
    if (!node.leaf()) {
      stack.push_back(node.right);
      stack.push_back(node.left);
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (seen[i] == 0) schema_error("tree.nodes[" + std::to_string(i) + "]", "unreachable node");
  }
  return form;
}

}  // namespace

int FeatureSpec::category_index(std::string_view value) const {
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (categories[i] == value) return static_cast<int>(i);
  }
  return -1;
}

TabularModel::TabularModel(std::vector<FeatureSpec> schema, std::variant<LinearForm, TreeForm> form,
                           std::vector<std::string> outcome_labels)
    : schema_(std::move(schema)),
      form_(std::move(form)),
      outcome_labels_(std::move(outcome_labels)),
      reads_(schema_.size(), false) {
  if (outcome_labels_.size() < 2) schema_error("outcome_labels", "at least two labels required");
  {
    auto sorted = outcome_labels_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      schema_error("outcome_labels", "duplicate label");
    }
    std::vector<std::string> names;
    for (const auto& f : schema_) names.push_back(f.name);
    std::sort(names.begin(), names.end());
    if (std::adjacent_find(names.begin(), names.end()) != names.end()) {
      schema_error("features", "duplicate feature name");
    }
  }
  if (const auto* linear = std::get_if<LinearForm>(&form_)) {
    if (outcome_labels_.size() != 2) schema_error("outcome_labels", "linear form needs exactly two");
    if (linear->terms.size() != schema_.size()) schema_error("linear.weights", "must align with schema");
    for (std::size_t i = 0; i < schema_.size(); ++i) {
      const auto& t = linear->terms[i];
      if (schema_[i].numeric()) {
        reads_[i] = t.weight != 0.0;
      } else {
        if (t.category_weights.size() != schema_[i].categories.size()) {
          schema_error("linear.weights." + schema_[i].name, "one weight per category required");
        }
        reads_[i] = std::any_of(t.category_weights.begin(), t.category_weights.end(),
                                [](double w) { return w != 0.0; });
      }
    }
  } else {
    for (const auto& node : std::get<TreeForm>(form_).nodes) {
      if (node.leaf()) {
        if (node.scores.size() != outcome_labels_.size()) {
          schema_error("tree.nodes", "leaf scores must match outcome labels");
        }
      } else {
        if (node.feature >= static_cast<int>(schema_.size())) schema_error("tree.nodes", "bad feature");
        reads_[static_cast<std::size_t>(node.feature)] = true;
      }
    }
  }
}

std::optional<std::size_t> TabularModel::feature_index(std::string_view name) const {
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    if (schema_[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> TabularModel::label_index(std::string_view label) const {
  for (std::size_t i = 0; i < outcome_labels_.size(); ++i) {
    if (outcome_labels_[i] == label) return i;
  }
  return std::nullopt;
}

const TreeNode& TabularModel::leaf_for(const Row& row) const {
  const auto& nodes = std::get<TreeForm>(form_).nodes;
  std::size_t i = 0;
  while (!nodes[i].leaf()) {
    const auto& n = nodes[i];
    const double v = row[static_cast<std::size_t>(n.feature)];
    const bool left = schema_[static_cast<std::size_t>(n.feature)].numeric() ? v < n.split
                                                                            : v == n.split;
    i = static_cast<std::size_t>(left ? n.left : n.right);
  }
  return nodes[i];
}

namespace {
double linear_logit(const LinearForm& form, const std::vector<FeatureSpec>& schema, const Row& row) {
  double s = form.intercept;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& t = form.terms[i];
    if (schema[i].numeric()) {
      s += t.weight * row[i];
    } else {
      s += t.category_weights[static_cast<std::size_t>(row[i])];
    }
  }
  return s - form.threshold;
}
}  // namespace

std::vector<double> TabularModel::label_scores(const Row& row) const {
  if (const auto* linear = std::get_if<LinearForm>(&form_)) {
    const double d = linear_logit(*linear, schema_, row);
    return {logistic(d), logistic(-d)};
  }
  return leaf_for(row).scores;
}

double TabularModel::output(const Row& row, std::size_t label) const {
  if (const auto* linear = std::get_if<LinearForm>(&form_)) {
    const double d = linear_logit(*linear, schema_, row);
    return label == 0 ? d : -d;
  }
  return leaf_for(row).scores[label];
}

bool CaseInstance::is_missing(const std::string& feature) const {
  const auto it = values.find(feature);
  return it == values.end() || std::holds_alternative<Missing>(it->second);
}

std::string Recommendation::runner_up() const {
  const std::pair<std::string, double>* best = nullptr;
  for (const auto& entry : scores) {
    if (entry.first == predicted) continue;
    if (best == nullptr || entry.second > best->second) best = &entry;
  }
  return best ? best->first : std::string{};
}

double Recommendation::score_of(std::string_view label) const {
  for (const auto& [l, s] : scores) {
    if (l == label) return s;
  }
  return 0.0;
}

std::string to_string(CaseFinding::Kind kind) {
  switch (kind) {
    case CaseFinding::Kind::kMissing: return "missing";
    case CaseFinding::Kind::kOutOfRange: return "out_of_range";
    case CaseFinding::Kind::kUnknownCategory: return "unknown_category";
    case CaseFinding::Kind::kTypeMismatch: return "type_mismatch";
    case CaseFinding::Kind::kUnknownFeature: return "unknown_feature";
  }
  return "?";
}

TabularModel model_from_json(const json& j) {
  if (!j.is_object()) parse_error("model spec must be an object", "parse_model_spec");
  if (!j.contains("outcome_labels") || !j.at("outcome_labels").is_array()) {
    schema_error("outcome_labels", "must be an array of labels");
  }
  std::vector<std::string> labels;
  for (const auto& l : j.at("outcome_labels")) {
    if (!l.is_string()) schema_error("outcome_labels", "labels must be strings");
    labels.push_back(l.get<std::string>());
  }
  if (!j.contains("features") || !j.at("features").is_array()) {
    schema_error("features", "must be an array");
  }
  std::vector<FeatureSpec> schema;
  std::size_t index = 0;
  for (const auto& f : j.at("features")) schema.push_back(feature_from_json(f, index++));

  const auto form = j.value("form", std::string{});
  if (form == "linear") {
    if (!j.contains("linear")) schema_error("linear", "missing");
    auto linear = linear_from_json(j.at("linear"), schema);
    return TabularModel(std::move(schema), std::move(linear), std::move(labels));
  }
  if (form == "tree") {
    if (!j.contains("tree")) schema_error("tree", "missing");
    auto tree = tree_from_json(j.at("tree"), schema, labels.size());
    return TabularModel(std::move(schema), std::move(tree), std::move(labels));
  }
  schema_error("form", "must be \"linear\" or \"tree\"");
}

TabularModel parse_model_spec(std::string_view document) {
  return model_from_json(parse_document(document, "parse_model_spec"));
}

json to_json(const TabularModel& model) {
  json features = json::array();
  for (const auto& f : model.schema()) {
    json jf = {{"name", f.name}, {"unit", f.unit}, {"mutable", f.is_mutable}};
    if (f.numeric()) {
      jf["kind"] = "numeric";
      jf["range"] = {f.min, f.max};
    } else {
      jf["kind"] = "categorical";
      jf["categories"] = f.categories;
    }
    features.push_back(std::move(jf));
  }
  json out = {{"outcome_labels", model.outcome_labels()}, {"features", features}};
  if (const auto* linear = std::get_if<LinearForm>(&model.form())) {
    json weights = json::object();
    for (std::size_t i = 0; i < model.feature_count(); ++i) {
      const auto& f = model.feature(i);
      if (f.numeric()) {
        weights[f.name] = linear->terms[i].weight;
      } else {
        json cw = json::object();
        for (std::size_t c = 0; c < f.categories.size(); ++c) {
          cw[f.categories[c]] = linear->terms[i].category_weights[c];
        }
        weights[f.name] = cw;
      }
    }
    out["form"] = "linear";
    out["linear"] = {{"weights", weights},
                     {"intercept", linear->intercept},
                     {"threshold", linear->threshold}};
  } else {
    json nodes = json::array();
    for (const auto& n : std::get<TreeForm>(model.form()).nodes) {
      if (n.leaf()) {
        nodes.push_back({{"scores", n.scores}});
        continue;
      }
      const auto& f = model.feature(static_cast<std::size_t>(n.feature));
      json split = f.numeric() ? json(n.split) : json(f.categories[static_cast<std::size_t>(n.split)]);
      nodes.push_back({{"feature", f.name}, {"split", split}, {"left", n.left}, {"right", n.right}});
    }
    out["form"] = "tree";
    out["tree"] = {{"nodes", nodes}};
  }
  return out;
}

FeatureValue value_from_json(const json& j) {
  if (j.is_null()) return Missing{};
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  if (j.is_boolean()) return std::string(j.get<bool>() ? "true" : "false");
  parse_error("feature values must be numbers, strings or null", "parse_case");
}

json to_json(const FeatureValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return nullptr;
}

std::string format_number(double x) {
  if (x == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

std::string format_value(const FeatureValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return format_number(*d);
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return "MISSING";
}

CaseInstance case_from_json(const json& j) {
  if (!j.is_object()) parse_error("case must be an object", "parse_case");
  CaseInstance c;
  c.id = j.value("id", std::string{});
  const json& values = j.contains("values") ? j.at("values") : j;
  if (!values.is_object()) parse_error("'values' must be an object", "parse_case");
  if (j.contains("values")) {
    for (const auto& [name, v] : values.items()) c.values[name] = value_from_json(v);
  } else {
    // Bare value map, as used for background rows.
    for (const auto& [name, v] : values.items()) c.values[name] = value_from_json(v);
    return c;
  }
  if (j.contains("context_tags")) {
    for (const auto& t : j.at("context_tags")) c.context_tags.insert(t.get<std::string>());
  }
  if (j.contains("stakeholder_prefs")) {
    if (!j.at("stakeholder_prefs").is_object()) {
      parse_error("'stakeholder_prefs' must be an object", "parse_case");
    }
    for (const auto& [k, v] : j.at("stakeholder_prefs").items()) {
      c.stakeholder_prefs[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  if (j.contains("operator_prior") && !j.at("operator_prior").is_null()) {
    c.operator_prior = j.at("operator_prior").get<std::string>();
  }
  return c;
}

CaseInstance parse_case(std::string_view document) {
  try {
    return case_from_json(parse_document(document, "parse_case"));
  } catch (const json::exception& e) {
    parse_error(e.what(), "parse_case");
  }
}

json to_json(const CaseInstance& c) {
  json values = json::object();
  for (const auto& [name, v] : c.values) values[name] = to_json(v);
  json out = {{"id", c.id},
              {"values", values},
              {"context_tags", c.context_tags},
              {"stakeholder_prefs", c.stakeholder_prefs}};
  out["operator_prior"] = c.operator_prior ? json(*c.operator_prior) : json(nullptr);
  return out;
}

std::vector<CaseInstance> background_from_json(const json& j) {
  const json& rows = j.is_object() && j.contains("rows") ? j.at("rows") : j;
  if (!rows.is_array()) parse_error("background must be an array of rows", "parse_background");
  std::vector<CaseInstance> out;
  for (const auto& row : rows) {
    if (!row.is_object()) parse_error("background rows must be objects", "parse_background");
    CaseInstance c;
    const json& values = row.contains("values") ? row.at("values") : row;
    for (const auto& [name, v] : values.items()) c.values[name] = value_from_json(v);
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<CaseInstance> parse_background(std::string_view document) {
  try {
    return background_from_json(parse_document(document, "parse_background"));
  } catch (const json::exception& e) {
    parse_error(e.what(), "parse_background");
  }
}

json to_json(const Recommendation& r) {
  json scores = json::array();
  for (const auto& [label, s] : r.scores) scores.push_back({{"label", label}, {"score", s}});
  return {{"predicted", r.predicted}, {"scores", scores}, {"margin", r.margin}};
}

Recommendation recommendation_from_json(const json& j) {
  Recommendation r;
  r.predicted = j.at("predicted").get<std::string>();
  r.margin = j.at("margin").get<double>();
  for (const auto& s : j.at("scores")) {
    r.scores.emplace_back(s.at("label").get<std::string>(), s.at("score").get<double>());
  }
  return r;
}

json to_json(const CaseValidationReport& r) {
  json out = json::array();
  for (const auto& f : r.findings) {
    out.push_back({{"kind", to_string(f.kind)}, {"feature", f.feature}, {"message", f.message}});
  }
  return out;
}

namespace {

double encode_value(const FeatureSpec& spec, const FeatureValue& v, const std::string& stage) {
  if (spec.numeric()) {
    const auto* d = std::get_if<double>(&v);
    if (d == nullptr) {
      throw Error(ErrorCode::kSchemaError, spec.name + " must be numeric", stage);
    }
    return *d;
  }
  const auto* s = std::get_if<std::string>(&v);
  if (s == nullptr) throw Error(ErrorCode::kSchemaError, spec.name + " must be a category", stage);
  const int idx = spec.category_index(*s);
  if (idx < 0) throw Error(ErrorCode::kSchemaError, spec.name + ": unknown category " + *s, stage);
  return idx;
}

Row encode(const TabularModel& model, const CaseInstance& c, bool complete, const std::string& stage) {
  Row row(model.feature_count(), 0.0);
  for (std::size_t i = 0; i < model.feature_count(); ++i) {
    const auto& spec = model.feature(i);
    if (!complete && !model.reads_feature(i)) {
      // Unread features still get a valid encoding when present.
      const auto it = c.values.find(spec.name);
      if (it != c.values.end() && !std::holds_alternative<Missing>(it->second)) {
        row[i] = encode_value(spec, it->second, stage);
      } else if (spec.numeric()) {
        row[i] = spec.min;
      }
      continue;
    }
    const auto it = c.values.find(spec.name);
    if (it == c.values.end() || std::holds_alternative<Missing>(it->second)) {
      throw Error(ErrorCode::kMissingFeature, spec.name, stage);
    }
    row[i] = encode_value(spec, it->second, stage);
  }
  return row;
}

}  // namespace

Row encode_case(const TabularModel& model, const CaseInstance& c) {
  return encode(model, c, false, "predict");
}

Row encode_complete(const TabularModel& model, const CaseInstance& c) {
  return encode(model, c, true, "encode");
}

FeatureValue decode_value(const FeatureSpec& spec, double encoded) {
  if (spec.numeric()) return encoded;
  return spec.categories.at(static_cast<std::size_t>(encoded));
}

Recommendation predict_row(const TabularModel& model, const Row& row) {
  const auto scores = model.label_scores(row);
  const auto& labels = model.outcome_labels();
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  double runner = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i != best) runner = std::max(runner, scores[i]);
  }
  Recommendation r;
  r.predicted = labels[best];
  for (std::size_t i = 0; i < scores.size(); ++i) r.scores.emplace_back(labels[i], scores[i]);
  r.margin = scores[best] - runner;
  return r;
}

Recommendation predict(const TabularModel& model, const CaseInstance& c) {
  return predict_row(model, encode_case(model, c));
}

CaseValidationReport validate_case(const TabularModel& model, const CaseInstance& c) {
  using Kind = CaseFinding::Kind;
  CaseValidationReport report;
  for (const auto& spec : model.schema()) {
    const auto it = c.values.find(spec.name);
    if (it == c.values.end() || std::holds_alternative<Missing>(it->second)) {
      report.findings.push_back({Kind::kMissing, spec.name, spec.name + " is missing"});
      continue;
    }
    const auto& v = it->second;
    if (spec.numeric()) {
      const auto* d = std::get_if<double>(&v);
      if (d == nullptr) {
        report.findings.push_back({Kind::kTypeMismatch, spec.name, spec.name + " must be numeric"});
      } else if (*d < spec.min || *d > spec.max || std::isnan(*d)) {
        report.findings.push_back({Kind::kOutOfRange, spec.name,
                                   spec.name + " = " + format_number(*d) + " outside [" +
                                       format_number(spec.min) + ", " + format_number(spec.max) + "]"});
      }
    } else {
      const auto* s = std::get_if<std::string>(&v);
      if (s == nullptr) {
        report.findings.push_back({Kind::kTypeMismatch, spec.name, spec.name + " must be a category"});
      } else if (spec.category_index(*s) < 0) {
        report.findings.push_back(
            {Kind::kUnknownCategory, spec.name, spec.name + " has unknown category " + *s});
      }
    }
  }
  for (const auto& [name, _] : c.values) {
    if (!model.feature_index(name)) {
      report.findings.push_back({Kind::kUnknownFeature, name, name + " is not in the model schema"});
    }
  }
  return report;
}

CaseInstance apply_changes(const TabularModel& model, const CaseInstance& c,
                           const std::map<std::string, FeatureValue>& changes) {
  CaseInstance out = c;
  for (const auto& [name, value] : changes) {
    const auto idx = model.feature_index(name);
    if (!idx) throw Error(ErrorCode::kSchemaError, "unknown feature " + name, "whatif");
    const auto& spec = model.feature(*idx);
    if (spec.numeric()) {
      const auto* d = std::get_if<double>(&value);
      if (d == nullptr) throw Error(ErrorCode::kSchemaError, name + " must be numeric", "whatif");
      if (!(*d >= spec.min && *d <= spec.max)) {
        throw Error(ErrorCode::kSchemaError,
                    name + " = " + format_number(*d) + " outside [" + format_number(spec.min) + ", " +
                        format_number(spec.max) + "]",
                    "whatif");
      }
    } else {
      const auto* s = std::get_if<std::string>(&value);
      if (s == nullptr || spec.category_index(*s) < 0) {
        throw Error(ErrorCode::kSchemaError, name + ": unknown category", "whatif");
      }
    }
    out.values[name] = value;
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace reflect
