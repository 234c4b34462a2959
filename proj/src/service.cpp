#include "stepcredit/service.hpp"

#include <atomic>
#include <chrono>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace stepcredit {

namespace {

void reply_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace

struct ToolService::Impl {
  ServiceConfig config;
  SqlExecutor executor;
  httplib::Server server;
  std::thread thread;
  std::atomic<int> bound_port{0};

  explicit Impl(ServiceConfig cfg)
      : config(std::move(cfg)),
        executor(config.registry_path.empty() ? Registry{}
                                              : Registry::from_manifest(config.registry_path),
                 config.max_concurrent) {
    server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      reply_json(res, 200,
                 {{"status", "ok"}, {"registered_databases", executor.registry()->database_ids()}});
    });

    server.Post("/execute", [this](const httplib::Request& req, httplib::Response& res) {
      nlohmann::json body = nlohmann::json::parse(req.body, nullptr, /*allow_exceptions=*/false);
      if (body.is_discarded() || !body.is_object()) {
        reply_json(res, 400, {{"error", "request body must be a JSON object"}});
        return;
      }
      if (!body.contains("name") || !body.at("name").is_string() ||
          body.at("name").get<std::string>() != "sql_executor") {
        reply_json(res, 400, {{"error", "name must be \"sql_executor\""}});
        return;
      }
      if (!body.contains("arguments") || !body.at("arguments").is_object() ||
          !body.at("arguments").contains("sql") || !body.at("arguments").at("sql").is_string()) {
        reply_json(res, 400, {{"error", "arguments.sql must be a string"}});
        return;
      }
      const std::string sql = body.at("arguments").at("sql").get<std::string>();
      if (sql.empty()) {
        reply_json(res, 400, {{"error", "arguments.sql must be non-empty"}});
        return;
      }
      if (!body.contains("database_id") || !body.at("database_id").is_string()) {
        reply_json(res, 400, {{"error", "database_id must be a string"}});
        return;
      }
      const std::string database_id = body.at("database_id").get<std::string>();
      if (!executor.registry()->lookup(database_id)) {
        reply_json(res, 404, {{"error", "unknown database_id: " + database_id}});
        return;
      }

      const auto started = std::chrono::steady_clock::now();
      ExecOutcome outcome = executor.execute(sql, database_id, config.limits);
      const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - started);
      if (const auto* err = std::get_if<ExecError>(&outcome);
          err && err->kind == ExecError::Kind::MissingDatabase) {
        reply_json(res, 404, {{"error", err->message}});
        return;
      }
      reply_json(res, 200,
                 {{"ok", !is_error(outcome)},
                  {"feedback", serialize_feedback(outcome, config.feedback_cap)},
                  {"elapsed_ms", static_cast<long long>(elapsed.count())}});
    });
  }
};

ToolService::ToolService(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

ToolService::~ToolService() { stop(); }

bool ToolService::start() {
  int port = impl_->config.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(impl_->config.host);
    if (port < 0) return false;
  } else if (!impl_->server.bind_to_port(impl_->config.host, port)) {
    return false;
  }
  impl_->bound_port = port;
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return true;
}

void ToolService::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

bool ToolService::running() const { return impl_->server.is_running(); }

int ToolService::port() const { return impl_->bound_port; }

void ToolService::reload_registry() {
  if (impl_->config.registry_path.empty()) return;
  impl_->executor.set_registry(Registry::from_manifest(impl_->config.registry_path));
}

}  // namespace stepcredit
