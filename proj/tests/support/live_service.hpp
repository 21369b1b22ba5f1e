#pragma once

#include <httplib.h>

#include <memory>
#include <thread>

#include "reflect/service.hpp"
#include "support/test_support.hpp"

namespace reflect::testing {

// Registry entry for a shipped fixture, carrying its configuration overrides.
inline RegisteredModel registered_fixture(const std::string& name) {
  const Fixture f = locate_fixture(fixtures_dir() / name, packs_dir());
  RegisteredModel m;
  m.name = name;
  m.model = f.paths.model;
  m.datasheet = f.paths.datasheet;
  m.model_card = f.paths.model_card;
  m.background = f.paths.background;
  m.packs = f.paths.packs;
  m.overrides = f.overrides;
  return m;
}

// Service on an ephemeral localhost port, served from a background thread.
class LiveService {
 public:
  explicit LiveService(const std::filesystem::path& data_dir, std::string cors_origin = {}) {
    ServiceConfig cfg;
    cfg.host = "127.0.0.1";
    cfg.port = 0;
    cfg.data_dir = data_dir;
    cfg.cors_origin = std::move(cors_origin);
    for (const auto& name : fixture_names()) cfg.registry.push_back(registered_fixture(name));
    service_ = std::make_unique<Service>(cfg);
    port_ = service_->bind();
    thread_ = std::thread([this] { service_->serve(); });
    service_->wait_until_ready();
  }
  ~LiveService() {
    service_->stop();
    thread_.join();
  }
  LiveService(const LiveService&) = delete;
  LiveService& operator=(const LiveService&) = delete;

  int port() const { return port_; }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(10, 0);
    return c;
  }

 private:
  std::unique_ptr<Service> service_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace reflect::testing
