#include "reflect/inputs.hpp"

namespace reflect {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Parses one file, prefixing errors with the path so diagnostics point at it.
template <typename Fn>
auto parse_file(const fs::path& path, Fn&& parse) -> decltype(parse(std::string{})) {
  std::string text;
  try {
    text = read_file(path.string());
  } catch (const Error& e) {
    throw e.with_stage("load_inputs");
  }
  try {
    return parse(text);
  } catch (const InvalidTemplateError&) {
    throw;
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail(), e.stage().empty() ? "load_inputs" : e.stage());
  }
}

}  // namespace

PipelineInputs load_inputs(const InputPaths& p) {
  auto model = parse_file(p.model, [](const std::string& t) { return parse_model_spec(t); });
  auto kase = parse_file(p.case_file, [](const std::string& t) { return parse_case(t); });
  auto datasheet = parse_file(p.datasheet, [](const std::string& t) { return parse_datasheet(t); });
  auto card = parse_file(p.model_card, [](const std::string& t) { return parse_model_card(t); });
  auto background = parse_file(p.background, [](const std::string& t) { return parse_background(t); });
  std::vector<TemplatePack> packs;
  for (const auto& pack : p.packs) {
    packs.push_back(parse_file(pack, [](const std::string& t) { return load_template_pack(t); }));
  }
  return PipelineInputs{std::move(model), std::move(kase),       std::move(datasheet),
                        std::move(card),  std::move(background), std::move(packs)};
}

Fixture locate_fixture(const fs::path& dir, const fs::path& packs_dir) {
  const fs::path manifest = dir / "fixture.json";
  const json j = json::parse(read_file(manifest.string()), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::kParseError, manifest.string() + ": not a JSON object", "fixture");
  }
  Fixture f;
  f.name = dir.filename().string();
  f.paths = {dir / "model.json", dir / "case.json", dir / "datasheet.json", dir / "model_card.json",
             dir / "background.json", {}};
  for (const auto& name : j.value("packs", json::array())) {
    f.paths.packs.push_back(packs_dir / (name.get<std::string>() + ".json"));
  }
  f.overrides = j.value("config", json::object());
  return f;
}

}  // namespace reflect
