#include "reflect/service.hpp"

#include <httplib.h>

#include <set>

#include "reflect/report.hpp"
#include "reflect/session.hpp"

namespace reflect {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownSession: return 404;
    case ErrorCode::kSessionFinalized: return 409;
    case ErrorCode::kParseError:
    case ErrorCode::kSchemaError:
    case ErrorCode::kInvalidTemplate:
    case ErrorCode::kMissingFeature:
    case ErrorCode::kIndexOutOfRange:
    case ErrorCode::kEmptyRationale:
    case ErrorCode::kTooManyFeatures:
    case ErrorCode::kIncompleteBackground:
    case ErrorCode::kFeatureSetMismatch:
    case ErrorCode::kTargetEqualsCurrent:
    case ErrorCode::kNotNumeric:
      return 400;
    default:
      return 500;
  }
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message,
                const std::string& stage) {
  send_json(res, status, {{"error", code}, {"message", message}, {"stage", stage}});
}

void send_error(httplib::Response& res, const Error& e) {
  send_error(res, http_status(e.code()), error_code_name(e.code()), e.detail(), e.stage());
}

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    throw Error(ErrorCode::kParseError, "request body must be a JSON object", "request");
  }
  return body;
}

const json& require(const json& body, const char* field) {
  if (!body.contains(field)) throw Error(ErrorCode::kSchemaError, std::string(field) + ": required", "request");
  return body.at(field);
}

fs::path resolve(const fs::path& base, const json& v, const std::string& field) {
  if (!v.is_string()) throw Error(ErrorCode::kSchemaError, field + ": expected a path", "service_config");
  fs::path p = v.get<std::string>();
  return p.is_absolute() ? p : base / p;
}

struct LoadedModel {
  RegisteredModel entry;
  PipelineConfig config;
  TabularModel model;
  Datasheet datasheet;
  ModelCard model_card;
  std::vector<CaseInstance> background;
  std::vector<TemplatePack> packs;
};

LoadedModel load_entry(const RegisteredModel& m, const PipelineConfig& defaults) {
  std::vector<TemplatePack> packs;
  for (const auto& p : m.packs) packs.push_back(load_template_pack_file(p.string()));
  return {m,
          apply_config_overrides(m.overrides, defaults),
          parse_model_spec(read_file(m.model.string())),
          parse_datasheet(read_file(m.datasheet.string())),
          parse_model_card(read_file(m.model_card.string())),
          parse_background(read_file(m.background.string())),
          std::move(packs)};
}

}  // namespace

void ServiceConfig::validate() const {
  std::set<std::string> names;
  for (const auto& m : registry) {
    if (m.name.empty()) throw Error(ErrorCode::kSchemaError, "registry entry without a name", "service_config");
    if (!names.insert(m.name).second) {
      throw Error(ErrorCode::kSchemaError, "duplicate registry name " + m.name, "service_config");
    }
  }
  if (port < 0 || port > 65535) throw Error(ErrorCode::kSchemaError, "port out of range", "service_config");
  defaults.validate();
}

ServiceConfig service_config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::kParseError, "service config must be an object", "service_config");
  ServiceConfig cfg;
  if (j.contains("listen")) {
    const std::string listen = j.at("listen").get<std::string>();
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) {
      throw Error(ErrorCode::kSchemaError, "listen: expected host:port", "service_config");
    }
    cfg.host = listen.substr(0, colon);
    try {
      cfg.port = std::stoi(listen.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kSchemaError, "listen: bad port", "service_config");
    }
  }
  cfg.data_dir = j.contains("data_dir") ? resolve(base_dir, j.at("data_dir"), "data_dir") : SessionStore::default_root();
  cfg.cors_origin = j.value("cors_origin", std::string{});
  if (j.contains("defaults")) cfg.defaults = apply_config_overrides(j.at("defaults"));
  for (const auto& m : j.value("models", json::array())) {
    RegisteredModel r;
    r.name = m.value("name", std::string{});
    r.model = resolve(base_dir, require(m, "model"), "model");
    r.datasheet = resolve(base_dir, require(m, "datasheet"), "datasheet");
    r.model_card = resolve(base_dir, require(m, "model_card"), "model_card");
    r.background = resolve(base_dir, require(m, "background"), "background");
    for (const auto& p : require(m, "packs")) r.packs.push_back(resolve(base_dir, p, "packs"));
    r.overrides = m.value("overrides", json::object());
    cfg.registry.push_back(std::move(r));
  }
  cfg.validate();
  return cfg;
}

ServiceConfig load_service_config(const fs::path& path) {
  const json j = json::parse(read_file(path.string()), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kParseError, "malformed JSON in " + path.string(), "service_config");
  return service_config_from_json(j, path.parent_path());
}

struct Service::Impl {
  ServiceConfig cfg;
  SessionStore store;
  std::map<std::string, LoadedModel> models;
  httplib::Server server;

  explicit Impl(ServiceConfig c) : cfg(std::move(c)), store(cfg.data_dir) {
    for (const auto& m : cfg.registry) models.emplace(m.name, load_entry(m, cfg.defaults));
    routes();
  }

  // Runs a handler, translating library errors into JSON error responses.
  template <typename Fn>
  static void guarded(httplib::Response& res, Fn&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const json::exception& e) {
      send_error(res, 400, "SchemaError", e.what(), "request");
    } catch (const std::exception& e) {
      send_error(res, 500, "InternalError", e.what(), "");
    }
  }

  void routes() {
    if (!cfg.cors_origin.empty()) {
      server.set_default_headers({{"Access-Control-Allow-Origin", cfg.cors_origin},
                                  {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                  {"Access-Control-Allow-Headers", "Content-Type"}});
      server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    }
    server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (res.body.empty()) send_error(res, res.status, "NotFound", "no route for " + req.path, "request");
    });

    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"status", "ok"}});
    });

    server.Get("/models", [this](const httplib::Request&, httplib::Response& res) {
      json list = json::array();
      for (const auto& [name, m] : models) {
        const json spec = to_json(m.model);
        list.push_back({{"name", name}, {"outcome_labels", spec.at("outcome_labels")}, {"features", spec.at("features")}});
      }
      send_json(res, 200, {{"models", list}});
    });

    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json body = parse_body(req);
        const json& name = require(body, "model");
        if (!name.is_string()) throw Error(ErrorCode::kSchemaError, "model: expected a name", "request");
        const auto it = models.find(name.get<std::string>());
        if (it == models.end()) {
          send_error(res, 404, "UnknownModel", "no registered model " + name.get<std::string>(), "request");
          return;
        }
        const LoadedModel& m = it->second;
        PipelineInputs in{m.model, case_from_json(require(body, "case")), m.datasheet, m.model_card, m.background,
                          m.packs};
        const PipelineConfig cfg_used =
            body.contains("overrides") ? apply_config_overrides(body.at("overrides"), m.config) : m.config;
        send_json(res, 201, to_json(store.create_session(in, cfg_used)));
      });
    });

    server.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, to_json(store.load(req.matches[1].str()))); });
    });

    server.Post(R"(/sessions/([^/]+)/answers)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string id = req.matches[1].str();
        if (!store.exists(id)) throw Error(ErrorCode::kUnknownSession, "unknown session " + id, "session");
        const json body = parse_body(req);
        const json& index = require(body, "question_index");
        const json& text = require(body, "text");
        if (!index.is_number_unsigned() || !text.is_string()) {
          throw Error(ErrorCode::kSchemaError, "expected {question_index: integer >= 0, text: string}", "request");
        }
        send_json(res, 200, to_json(store.record_answer(id, index.get<std::size_t>(), text.get<std::string>())));
      });
    });

    server.Post(R"(/sessions/([^/]+)/whatif)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string id = req.matches[1].str();
        if (!store.exists(id)) throw Error(ErrorCode::kUnknownSession, "unknown session " + id, "session");
        const json body = parse_body(req);
        const json& changes = require(body, "changes");
        if (!changes.is_object()) throw Error(ErrorCode::kSchemaError, "changes: expected an object", "request");
        std::map<std::string, FeatureValue> parsed;
        for (const auto& [k, v] : changes.items()) parsed[k] = value_from_json(v);
        const WhatIfResult w = store.record_whatif(id, parsed);
        send_json(res, 200, {{"result", to_json(w.result)}, {"extra_questions", questions_json(w.extra_questions)},
                             {"changes", changes}});
      });
    });

    server.Post(R"(/sessions/([^/]+)/decision)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string id = req.matches[1].str();
        if (!store.exists(id)) throw Error(ErrorCode::kUnknownSession, "unknown session " + id, "session");
        const json body = parse_body(req);
        const json& chosen = require(body, "chosen");
        const json& rationale = require(body, "rationale");
        if (!chosen.is_string() || !rationale.is_string()) {
          throw Error(ErrorCode::kSchemaError, "expected {chosen: string, rationale: string}", "request");
        }
        store.finalize(id, chosen.get<std::string>(), rationale.get<std::string>());
        send_json(res, 200, to_json(store.load(id)));
      });
    });

    server.Get(R"(/sessions/([^/]+)/audit)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        res.status = 200;
        res.set_content(store.export_log(req.matches[1].str()), "application/x-ndjson");
      });
    });
  }
};

Service::Service(ServiceConfig cfg) {
  cfg.validate();
  impl_ = std::make_unique<Impl>(std::move(cfg));
}

Service::~Service() { stop(); }

int Service::bind() {
  auto& s = impl_->server;
  const auto& c = impl_->cfg;
  // The library default enables SO_REUSEPORT, which would let a second
  // instance silently share the port.
  s.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  const int port = c.port == 0 ? s.bind_to_any_port(c.host) : (s.bind_to_port(c.host, c.port) ? c.port : -1);
  if (port <= 0) {
    throw Error(ErrorCode::kIo, "cannot bind " + c.host + ":" + std::to_string(c.port), "serve");
  }
  return port;
}

void Service::serve() { impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace reflect
