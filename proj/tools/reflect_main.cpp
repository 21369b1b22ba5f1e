// reflect: command-line front end for question reports, evidence dumps,
// validation, decision sessions and the HTTP service.
#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <pthread.h>
#include <thread>

#include "reflect/inputs.hpp"
#include "reflect/report.hpp"
#include "reflect/service.hpp"
#include "reflect/session.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace reflect;

namespace {

constexpr int kOk = 0;
constexpr int kHardFailure = 1;
constexpr int kFindings = 2;

struct InputFlags {
  std::string model, case_file, datasheet, model_card, background;
  std::vector<std::string> packs;
  int budget = 0;
  std::string config_file;
  std::string as_of;

  void attach(CLI::App* cmd, bool with_packs) {
    cmd->add_option("--model", model, "model definition (JSON)")->required();
    cmd->add_option("--case", case_file, "case instance (JSON)")->required();
    cmd->add_option("--datasheet", datasheet, "datasheet (JSON)")->required();
    cmd->add_option("--model-card", model_card, "model card (JSON)")->required();
    cmd->add_option("--background", background, "background rows (JSON)")->required();
    if (with_packs) cmd->add_option("--packs", packs, "template pack, repeatable; earlier packs win")->required();
    cmd->add_option("--budget", budget, "question budget")->check(CLI::PositiveNumber);
    cmd->add_option("--config", config_file, "JSON object of trigger/selection overrides");
    cmd->add_option("--as-of", as_of, "reference date YYYY-MM-DD for datasheet staleness");
  }

  PipelineInputs inputs() const {
    InputPaths p{model, case_file, datasheet, model_card, background, {}};
    for (const auto& pack : packs) p.packs.emplace_back(pack);
    return load_inputs(p);
  }

  PipelineConfig config(json overrides = json::object()) const {
    if (!config_file.empty()) {
      const json file = json::parse(read_file(config_file), nullptr, false);
      if (file.is_discarded() || !file.is_object()) {
        throw Error(ErrorCode::kParseError, config_file + ": expected a JSON object", "config");
      }
      overrides.update(file);
    }
    if (budget > 0) overrides["budget"] = budget;
    if (!as_of.empty()) overrides["as_of"] = as_of;
    return apply_config_overrides(overrides);
  }
};

void emit_report(const json& report, const std::string& format) {
  if (format == "markdown") {
    std::cout << render_markdown(report);
  } else {
    std::cout << report.dump(2) << "\n";
  }
}

int run_ask(const PipelineInputs& in, const PipelineConfig& cfg, const std::string& format) {
  const PipelineResult r = run_pipeline(in, cfg);
  emit_report(question_report(r), format);
  return r.evidence.case_report.ok() ? kOk : kFindings;
}

FeatureValue parse_cli_value(const std::string& text) {
  if (text == "MISSING") return Missing{};
  char* end = nullptr;
  const double d = std::strtod(text.c_str(), &end);
  if (!text.empty() && end == text.c_str() + text.size()) return d;
  return text;
}

int session_error_exit(const Error& e) {
  std::cerr << "reflect: " << e.what() << "\n";
  switch (e.code()) {
    case ErrorCode::kUnknownSession:
    case ErrorCode::kIo:
      return kHardFailure;
    default:
      return kFindings;
  }
}

int serve(const std::string& config_path, const std::string& listen, const std::string& data_dir) {
  ServiceConfig cfg = load_service_config(config_path);
  if (!listen.empty()) {
    json j = {{"listen", listen}};
    const auto parsed = service_config_from_json(j, ".");
    cfg.host = parsed.host;
    cfg.port = parsed.port;
  }
  if (!data_dir.empty()) cfg.data_dir = data_dir;

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Service service(cfg);
  const int port = service.bind();
  std::cerr << "reflect: listening on " << cfg.host << ":" << port << " (data " << cfg.data_dir.string() << ")\n";
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    service.stop();
  });
  service.serve();
  // serve() can also return on its own; wake the waiter so it can be joined.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Critical-reflection question generator for tabular decision support"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::string format = "json";
  const auto add_format = [&](CLI::App* cmd) {
    cmd->add_option("--format", format, "output format")->check(CLI::IsMember({"json", "markdown"}));
  };

  InputFlags ask_flags;
  auto* ask = app.add_subcommand("ask", "generate a question report for one case");
  ask_flags.attach(ask, true);
  add_format(ask);

  InputFlags explain_flags;
  auto* explain = app.add_subcommand("explain", "dump the evidence bundle for one case");
  explain_flags.attach(explain, false);

  std::vector<std::string> validate_packs;
  std::string v_model, v_case, v_datasheet, v_card, v_background;
  auto* validate = app.add_subcommand("validate", "validate template packs and input artifacts");
  validate->add_option("--packs", validate_packs, "template pack, repeatable");
  validate->add_option("--model", v_model);
  validate->add_option("--case", v_case, "checked against --model");
  validate->add_option("--datasheet", v_datasheet);
  validate->add_option("--model-card", v_card);
  validate->add_option("--background", v_background);

  std::string data_dir;
  auto* session = app.add_subcommand("session", "manage decision sessions");
  session->require_subcommand(1);
  session->add_option("--data-dir", data_dir, "session store root (default $REFLECT_DATA_DIR or ./reflect-data)");

  InputFlags new_flags;
  auto* s_new = session->add_subcommand("new", "create a session from case artifacts");
  new_flags.attach(s_new, true);

  std::string session_id;
  std::size_t answer_index = 0;
  std::string answer_text;
  auto* s_answer = session->add_subcommand("answer", "record an answer to a question");
  s_answer->add_option("--id", session_id)->required();
  s_answer->add_option("--index", answer_index)->required();
  s_answer->add_option("--text", answer_text)->required();

  std::vector<std::string> whatif_set;
  auto* s_whatif = session->add_subcommand("whatif", "predict for a modified case");
  s_whatif->add_option("--id", session_id)->required();
  s_whatif->add_option("--set", whatif_set, "feature=value, repeatable");

  std::string chosen, rationale;
  auto* s_finalize = session->add_subcommand("finalize", "record the final decision");
  s_finalize->add_option("--id", session_id)->required();
  s_finalize->add_option("--chosen", chosen)->required();
  s_finalize->add_option("--rationale", rationale)->required();

  auto* s_show = session->add_subcommand("show", "print the current session state");
  s_show->add_option("--id", session_id)->required();
  add_format(s_show);

  auto* s_export = session->add_subcommand("export", "print the audit log (JSONL)");
  s_export->add_option("--id", session_id)->required();

  std::string replay_log;
  auto* s_replay = session->add_subcommand("replay", "re-derive a session from its audit log");
  auto* replay_id = s_replay->add_option("--id", session_id);
  s_replay->add_option("--log", replay_log, "exported JSONL log")->excludes(replay_id);

  std::string serve_config, serve_listen, serve_data;
  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
  serve_cmd->add_option("--config", serve_config, "service configuration with the model registry")->required();
  serve_cmd->add_option("--listen", serve_listen, "host:port, overrides the configuration");
  serve_cmd->add_option("--data-dir", serve_data);

  std::string demo_name, fixtures_dir = REFLECT_DEFAULT_FIXTURES, packs_dir = REFLECT_DEFAULT_PACKS;
  auto* demo = app.add_subcommand("demo", "run a shipped fixture end to end");
  demo->add_option("fixture", demo_name, "health-age, health-flu, education or constant")->required();
  demo->add_option("--fixtures-dir", fixtures_dir);
  demo->add_option("--packs-dir", packs_dir);
  add_format(demo);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kHardFailure;
  }

  try {
    if (*ask) return run_ask(ask_flags.inputs(), ask_flags.config(), format);

    if (*explain) {
      const PipelineInputs in = explain_flags.inputs();
      const PipelineConfig cfg = explain_flags.config();
      const EvidenceBundle e = build_evidence(in.model, in.case_instance, in.datasheet, in.model_card,
                                              in.background, cfg.triggers);
      json out = {{"case_id", e.case_instance.id},
                  {"recommendation", e.recommendation ? to_json(*e.recommendation) : json(nullptr)},
                  {"unavailable", e.unavailable},
                  {"evidence", evidence_json(e)}};
      std::cout << out.dump(2) << "\n";
      return e.case_report.ok() ? kOk : kFindings;
    }

    if (*validate) {
      json out = json::object();
      bool clean = true;
      for (const auto& path : validate_packs) {
        json entry = {{"path", path}};
        try {
          const auto pack = load_template_pack_file(path);
          entry["ok"] = true;
          entry["templates"] = pack.templates.size();
        } catch (const InvalidTemplateError& e) {
          clean = false;
          entry["ok"] = false;
          entry["template"] = e.template_id();
          json violations = json::array();
          for (const auto& v : e.report().violations) violations.push_back(v.message);
          entry["violations"] = violations;
        }
        out["packs"].push_back(entry);
      }
      if (!v_model.empty()) {
        const auto model = parse_model_spec(read_file(v_model));
        out["model"] = {{"ok", true}, {"features", model.feature_count()}, {"model_ref", model_ref(model)}};
        if (!v_case.empty()) {
          const auto report = validate_case(model, parse_case(read_file(v_case)));
          clean = clean && report.ok();
          out["case"] = to_json(report);
        }
      }
      if (!v_datasheet.empty()) {
        parse_datasheet(read_file(v_datasheet));
        out["datasheet"] = {{"ok", true}};
      }
      if (!v_card.empty()) {
        parse_model_card(read_file(v_card));
        out["model_card"] = {{"ok", true}};
      }
      if (!v_background.empty()) out["background"] = {{"rows", parse_background(read_file(v_background)).size()}};
      std::cout << out.dump(2) << "\n";
      return clean ? kOk : kFindings;
    }

    if (*serve_cmd) return serve(serve_config, serve_listen, serve_data);

    if (*demo) {
      const Fixture f = locate_fixture(fs::path(fixtures_dir) / demo_name, packs_dir);
      return run_ask(load_inputs(f.paths), apply_config_overrides(f.overrides), format);
    }

    if (*session) {
      SessionStore store(data_dir.empty() ? SessionStore::default_root() : fs::path(data_dir));
      try {
        if (*s_new) {
          const auto s = store.create_session(new_flags.inputs(), new_flags.config());
          std::cout << to_json(s).dump(2) << "\n";
          return kOk;
        }
        if (*s_answer) {
          std::cout << to_json(store.record_answer(session_id, answer_index, answer_text)).dump(2) << "\n";
          return kOk;
        }
        if (*s_whatif) {
          std::map<std::string, FeatureValue> changes;
          for (const auto& kv : whatif_set) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos || eq == 0) {
              throw Error(ErrorCode::kSchemaError, "expected feature=value, got " + kv, "whatif");
            }
            changes[kv.substr(0, eq)] = parse_cli_value(kv.substr(eq + 1));
          }
          const WhatIfResult w = store.record_whatif(session_id, changes);
          std::cout << "predicted: " << w.result.predicted << "\n" << to_json(w).dump(2) << "\n";
          return kOk;
        }
        if (*s_finalize) {
          std::cout << to_json(store.finalize(session_id, chosen, rationale)).dump(2) << "\n";
          return kOk;
        }
        if (*s_show) {
          const auto s = store.load(session_id);
          if (format == "markdown") {
            json report = {{"case_id", s.case_instance.id},
                           {"recommendation", s.recommendation ? to_json(*s.recommendation) : json(nullptr)},
                           {"questions", questions_json(s.questions)}};
            std::cout << "Session " << s.id << " (" << to_string(s.status) << ")\n\n" << render_markdown(report);
          } else {
            std::cout << to_json(s).dump(2) << "\n";
          }
          return kOk;
        }
        if (*s_export) {
          std::cout << store.export_log(session_id);
          return kOk;
        }
        if (*s_replay) {
          const std::string log = replay_log.empty() ? store.export_log(session_id) : read_file(replay_log);
          const auto s = replay(parse_audit_log(log));
          std::cout << "replay OK: session " << s.id << ", " << s.questions.size() << " questions, "
                    << to_string(s.status) << "\n";
          return kOk;
        }
      } catch (const Error& e) {
        return session_error_exit(e);
      }
    }
  } catch (const InvalidTemplateError& e) {
    std::cerr << "reflect: " << e.what() << "\n";
    for (const auto& v : e.report().violations) std::cerr << "  - " << v.message << "\n";
    return kHardFailure;
  } catch (const Error& e) {
    std::cerr << "reflect: " << e.what() << "\n";
    return kHardFailure;
  } catch (const std::exception& e) {
    std::cerr << "reflect: " << e.what() << "\n";
    return kHardFailure;
  }
  return kHardFailure;
}
