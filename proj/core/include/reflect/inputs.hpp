#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reflect/pipeline.hpp"

namespace reflect {

struct InputPaths {
  std::filesystem::path model;
  std::filesystem::path case_file;
  std::filesystem::path datasheet;
  std::filesystem::path model_card;
  std::filesystem::path background;
  std::vector<std::filesystem::path> packs;
};

// Reads and parses every artifact; errors name the offending file.
PipelineInputs load_inputs(const InputPaths& paths);

// A fixture directory holds model.json, case.json, datasheet.json,
// model_card.json, background.json and fixture.json, the latter naming the
// packs ({"packs": ["health", "generic"]}, resolved in `packs_dir`) and
// configuration overrides ({"config": {...}}).
struct Fixture {
  std::string name;
  InputPaths paths;
  nlohmann::json overrides;
};

Fixture locate_fixture(const std::filesystem::path& dir, const std::filesystem::path& packs_dir);

}  // namespace reflect
