#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "stepcredit/sql_exec.hpp"

namespace stepcredit {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8900;  // 0 = pick an ephemeral port
  ExecLimits limits{};
  std::size_t feedback_cap = 1024;
  std::filesystem::path registry_path;  // manifest file or directory
  int max_concurrent = 8;
};

/// HTTP tool endpoint over the sandboxed executor.
///
///   POST /execute  {"name":"sql_executor","arguments":{"sql":...},"database_id":...}
///                  -> {"ok":bool,"feedback":string,"elapsed_ms":int}
///   GET  /health   -> {"status":"ok","registered_databases":[...]}
///
/// Limits are service-level configuration; requests cannot override them.
class ToolService {
 public:
  explicit ToolService(ServiceConfig config);
  ~ToolService();

  ToolService(const ToolService&) = delete;
  ToolService& operator=(const ToolService&) = delete;

  /// Bind and serve on a background thread. Returns false if the port
  /// cannot be bound.
  bool start();
  void stop();
  bool running() const;

  /// Actual bound port (differs from config when port = 0 was requested).
  int port() const;

  /// Re-read the registry manifest; new databases become visible to
  /// subsequent requests.
  void reload_registry();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace stepcredit
