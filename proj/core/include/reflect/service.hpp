#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reflect/pipeline.hpp"

namespace reflect {

// Artifacts served under one registry name. Cases arrive with each request.
struct RegisteredModel {
  std::string name;
  std::filesystem::path model;
  std::filesystem::path datasheet;
  std::filesystem::path model_card;
  std::filesystem::path background;
  std::vector<std::filesystem::path> packs;
  nlohmann::json overrides = nlohmann::json::object();  // applied over the service defaults
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path data_dir;
  std::vector<RegisteredModel> registry;
  PipelineConfig defaults;
  std::string cors_origin;  // empty disables CORS headers

  void validate() const;  // registry names unique and non-empty
};

// {"listen": "host:port", "data_dir", "cors_origin", "defaults": {...overrides},
//  "models": [{"name", "model", "datasheet", "model_card", "background", "packs": [...],
//              "overrides": {...}}]}
// Relative paths resolve against `base_dir`.
ServiceConfig service_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
ServiceConfig load_service_config(const std::filesystem::path& path);

// HTTP front end over a SessionStore. Registry artifacts are loaded and
// validated on construction, so a broken registry fails at startup.
class Service {
 public:
  explicit Service(ServiceConfig cfg);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds the configured address; returns the bound port. Throws Error(kIo)
  // when the address is unavailable.
  int bind();
  // Serves until stop(); blocks the calling thread.
  void serve();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace reflect
