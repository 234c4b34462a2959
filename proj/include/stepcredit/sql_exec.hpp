#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace stepcredit {

struct Blob {
  std::vector<unsigned char> bytes;
  bool operator==(const Blob&) const = default;
};

/// Tagged scalar stored in one result cell. Non-finite reals are mapped to
/// Null at ingestion so every Real cell is finite.
struct Cell {
  std::variant<std::monostate, std::int64_t, double, std::string, Blob> value;

  static Cell null() { return {}; }
  static Cell integer(std::int64_t v) { return {v}; }
  static Cell real(double v);
  static Cell text(std::string v) { return {std::move(v)}; }
  static Cell blob(std::vector<unsigned char> bytes) { return {Blob{std::move(bytes)}}; }

  bool is_null() const { return std::holds_alternative<std::monostate>(value); }
};

/// Canonical string of a cell; fixes the membership semantics of flattened
/// cell sets. Integers in decimal, reals in shortest round-trip form (so an
/// integral real collapses to the integer spelling), text verbatim, blobs as
/// x'hex', Null as kNullSentinel.
std::string canonical_cell(const Cell& cell);

/// Distinguished canonical string for Null cells (starts with a NUL byte so
/// it cannot collide with ordinary text values).
extern const std::string kNullSentinel;

struct ExecutionResult {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  double elapsed_seconds = 0.0;
  bool truncated_rows = false;
};

struct ExecError {
  enum class Kind { Syntax, Timeout, ReadOnlyViolation, MissingDatabase, EngineError };
  Kind kind = Kind::EngineError;
  std::string message;
};

std::string_view to_string(ExecError::Kind kind);

using ExecOutcome = std::variant<ExecutionResult, ExecError>;

inline bool is_error(const ExecOutcome& o) { return std::holds_alternative<ExecError>(o); }

struct ExecLimits {
  std::chrono::milliseconds timeout{5000};
  int max_rows = 50;  // 0 = unlimited
};

/// Limits for gold executions and recall scoring: default timeout, no row cap.
ExecLimits uncapped_limits();

/// Thrown where the contract says MissingDatabase propagates as an error
/// rather than a value.
class MissingDatabaseError : public std::runtime_error {
 public:
  explicit MissingDatabaseError(const std::string& what) : std::runtime_error(what) {}
};

/// Directory of embedded single-file databases keyed by database_id.
class Registry {
 public:
  void add(std::string database_id, std::filesystem::path path);

  /// Load from a manifest file (JSON array of {database_id, path,
  /// description}) or a directory containing manifest.json. Paths are
  /// resolved relative to the manifest location.
  static Registry from_manifest(const std::filesystem::path& manifest_or_dir);

  std::optional<std::filesystem::path> lookup(const std::string& database_id) const;
  std::vector<std::string> database_ids() const;
  std::size_t size() const { return paths_.size(); }

 private:
  std::map<std::string, std::filesystem::path> paths_;
};

/// Sandboxed read-only SQL execution over a registry of SQLite databases.
/// A bounded FIFO gate caps simultaneous statements; results are immutable
/// values, safe to share across threads.
class SqlExecutor {
 public:
  explicit SqlExecutor(Registry registry, int max_concurrent = 8);
  ~SqlExecutor();

  SqlExecutor(const SqlExecutor&) = delete;
  SqlExecutor& operator=(const SqlExecutor&) = delete;

  ExecOutcome execute(const std::string& sql, const std::string& database_id,
                      const ExecLimits& limits = {}) const;

  /// Median per-run wall-clock seconds over `repeats` runs (repeats >= 3).
  std::variant<double, ExecError> timed_execute(const std::string& sql,
                                                const std::string& database_id,
                                                int repeats) const;

  std::shared_ptr<const Registry> registry() const;
  void set_registry(Registry registry);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Row-order-insensitive execution accuracy comparison: multisets of row
/// tuples compared by canonical cell value; column names ignored, column
/// count must match. Both inputs must be untruncated.
bool exact_match(const ExecutionResult& pred, const ExecutionResult& gold);

struct CellSet {
  std::set<std::string> elements;
};

/// Union of canonical strings of every cell in every row.
CellSet flatten_cells(const ExecutionResult& res);

/// Deterministic textual table (or "Error: ..." line) capped at max_chars
/// with a trailing truncation marker when cut. max_chars >= 16.
std::string serialize_feedback(const ExecOutcome& outcome, std::size_t max_chars);

extern const std::string kFeedbackTruncationMarker;

}  // namespace stepcredit
