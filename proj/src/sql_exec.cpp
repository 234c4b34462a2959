#include "stepcredit/sql_exec.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <fstream>
#include <mutex>
#include <stdexcept>

#include "json.hpp"

namespace stepcredit {

const std::string kNullSentinel = std::string(1, '\0') + "null";
const std::string kFeedbackTruncationMarker = "[truncated]";

Cell Cell::real(double v) {
  if (!std::isfinite(v)) return Cell::null();
  return {v};
}

std::string_view to_string(ExecError::Kind kind) {
  switch (kind) {
    case ExecError::Kind::Syntax: return "syntax";
    case ExecError::Kind::Timeout: return "timeout";
    case ExecError::Kind::ReadOnlyViolation: return "read_only_violation";
    case ExecError::Kind::MissingDatabase: return "missing_database";
    case ExecError::Kind::EngineError: return "engine_error";
  }
  return "unknown";
}

ExecLimits uncapped_limits() { return ExecLimits{std::chrono::milliseconds{5000}, 0}; }

std::string canonical_cell(const Cell& cell) {
  struct Visitor {
    std::string operator()(std::monostate) const { return kNullSentinel; }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const {
      char buf[64];
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
      (void)ec;
      return std::string(buf, end);
    }
    std::string operator()(const std::string& v) const { return v; }
    std::string operator()(const Blob& v) const {
      static const char* hex = "0123456789abcdef";
      std::string out = "x'";
      for (unsigned char b : v.bytes) {
        out.push_back(hex[b >> 4]);
        out.push_back(hex[b & 0xf]);
      }
      out += "'";
      return out;
    }
  };
  return std::visit(Visitor{}, cell.value);
}

// ---------------------------------------------------------------------------
// Registry

void Registry::add(std::string database_id, std::filesystem::path path) {
  paths_[std::move(database_id)] = std::move(path);
}

Registry Registry::from_manifest(const std::filesystem::path& manifest_or_dir) {
  namespace fs = std::filesystem;
  fs::path manifest = manifest_or_dir;
  if (fs::is_directory(manifest)) manifest /= "manifest.json";

  std::ifstream in(manifest);
  if (!in) {
    throw std::runtime_error("cannot open registry manifest: " + manifest.string());
  }
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_array()) {
    throw std::runtime_error("registry manifest must be a JSON array: " + manifest.string());
  }
  Registry registry;
  fs::path base = manifest.parent_path();
  for (const auto& entry : doc) {
    if (!entry.is_object() || !entry.contains("database_id") || !entry.contains("path")) {
      throw std::runtime_error("manifest entry needs database_id and path");
    }
    fs::path p = entry.at("path").get<std::string>();
    if (p.is_relative()) p = base / p;
    registry.add(entry.at("database_id").get<std::string>(), p);
  }
  return registry;
}

std::optional<std::filesystem::path> Registry::lookup(const std::string& database_id) const {
  auto it = paths_.find(database_id);
  if (it == paths_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Registry::database_ids() const {
  std::vector<std::string> ids;
  ids.reserve(paths_.size());
  for (const auto& [id, _] : paths_) ids.push_back(id);
  return ids;
}

// ---------------------------------------------------------------------------
// Executor

namespace {

// FIFO gate bounding simultaneous statements.
class FifoGate {
 public:
  explicit FifoGate(int slots) : slots_(slots > 0 ? slots : 1) {}

  void acquire() {
    std::unique_lock lock(mutex_);
    const std::uint64_t ticket = next_ticket_++;
    cv_.wait(lock, [&] { return ticket < serving_ + static_cast<std::uint64_t>(slots_); });
  }

  void release() {
    std::lock_guard lock(mutex_);
    ++serving_;
    cv_.notify_all();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int slots_;
  std::uint64_t next_ticket_ = 0;
  std::uint64_t serving_ = 0;
};

struct GatePass {
  FifoGate& gate;
  explicit GatePass(FifoGate& g) : gate(g) { gate.acquire(); }
  ~GatePass() { gate.release(); }
};

struct DbHandle {
  sqlite3* db = nullptr;
  ~DbHandle() {
    if (db) sqlite3_close(db);
  }
};

struct StmtHandle {
  sqlite3_stmt* stmt = nullptr;
  ~StmtHandle() {
    if (stmt) sqlite3_finalize(stmt);
  }
};

// Skip SQL whitespace and comments; returns the offset of the first real token.
std::size_t skip_trivia(std::string_view sql, std::size_t pos) {
  while (pos < sql.size()) {
    unsigned char c = static_cast<unsigned char>(sql[pos]);
    if (std::isspace(c)) {
      ++pos;
    } else if (sql.compare(pos, 2, "--") == 0) {
      auto nl = sql.find('\n', pos);
      pos = (nl == std::string_view::npos) ? sql.size() : nl + 1;
    } else if (sql.compare(pos, 2, "/*") == 0) {
      auto end = sql.find("*/", pos + 2);
      pos = (end == std::string_view::npos) ? sql.size() : end + 2;
    } else {
      break;
    }
  }
  return pos;
}

std::string leading_keyword(std::string_view sql) {
  std::size_t pos = skip_trivia(sql, 0);
  std::string word;
  while (pos < sql.size() &&
         (std::isalpha(static_cast<unsigned char>(sql[pos])) || sql[pos] == '_')) {
    word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(sql[pos]))));
    ++pos;
  }
  return word;
}

bool is_denied_statement_class(const std::string& keyword) {
  static const std::set<std::string> denied = {
      "insert", "update",  "delete", "drop",    "create",   "alter",
      "replace", "attach", "detach", "vacuum",  "reindex",  "pragma",
      "begin",  "commit",  "rollback", "savepoint", "release", "analyze"};
  return denied.count(keyword) > 0;
}

struct Deadline {
  std::chrono::steady_clock::time_point at;
  bool expired() const { return std::chrono::steady_clock::now() >= at; }
};

extern "C" int progress_callback(void* ctx) {
  return static_cast<Deadline*>(ctx)->expired() ? 1 : 0;
}

Cell read_cell(sqlite3_stmt* stmt, int col) {
  switch (sqlite3_column_type(stmt, col)) {
    case SQLITE_NULL:
      return Cell::null();
    case SQLITE_INTEGER:
      return Cell::integer(sqlite3_column_int64(stmt, col));
    case SQLITE_FLOAT:
      return Cell::real(sqlite3_column_double(stmt, col));
    case SQLITE_TEXT: {
      const auto* text = reinterpret_cast<const char*>(sqlite3_column_text(stmt, col));
      int len = sqlite3_column_bytes(stmt, col);
      return Cell::text(std::string(text, static_cast<std::size_t>(len)));
    }
    case SQLITE_BLOB: {
      const auto* bytes = static_cast<const unsigned char*>(sqlite3_column_blob(stmt, col));
      int len = sqlite3_column_bytes(stmt, col);
      return Cell::blob(std::vector<unsigned char>(bytes, bytes + len));
    }
    default:
      return Cell::null();
  }
}

}  // namespace

struct SqlExecutor::Impl {
  mutable std::mutex registry_mutex;
  std::shared_ptr<const Registry> registry;
  mutable FifoGate gate;

  Impl(Registry r, int max_concurrent)
      : registry(std::make_shared<const Registry>(std::move(r))), gate(max_concurrent) {}
};

SqlExecutor::SqlExecutor(Registry registry, int max_concurrent)
    : impl_(std::make_unique<Impl>(std::move(registry), max_concurrent)) {}

SqlExecutor::~SqlExecutor() = default;

std::shared_ptr<const Registry> SqlExecutor::registry() const {
  std::lock_guard lock(impl_->registry_mutex);
  return impl_->registry;
}

void SqlExecutor::set_registry(Registry registry) {
  auto next = std::make_shared<const Registry>(std::move(registry));
  std::lock_guard lock(impl_->registry_mutex);
  impl_->registry = std::move(next);
}

ExecOutcome SqlExecutor::execute(const std::string& sql, const std::string& database_id,
                                 const ExecLimits& limits) const {
  if (limits.timeout.count() <= 0) {
    throw std::invalid_argument("timeout must be positive");
  }
  auto path = registry()->lookup(database_id);
  if (!path) {
    return ExecError{ExecError::Kind::MissingDatabase, "unknown database_id: " + database_id};
  }
  const std::string keyword = leading_keyword(sql);
  if (is_denied_statement_class(keyword)) {
    return ExecError{ExecError::Kind::ReadOnlyViolation,
                     "statement class not permitted in read-only sandbox: " + keyword};
  }

  GatePass pass(impl_->gate);
  const auto started = std::chrono::steady_clock::now();

  DbHandle handle;
  if (sqlite3_open_v2(path->string().c_str(), &handle.db, SQLITE_OPEN_READONLY, nullptr) !=
      SQLITE_OK) {
    std::string msg = handle.db ? sqlite3_errmsg(handle.db) : "out of memory";
    return ExecError{ExecError::Kind::MissingDatabase,
                     "cannot open database " + database_id + ": " + msg};
  }
  sqlite3_exec(handle.db, "PRAGMA query_only=ON", nullptr, nullptr, nullptr);
  // double-quoted strings are identifiers, never literals; a misquoted
  // column reference must fail with "no such column"
  sqlite3_db_config(handle.db, SQLITE_DBCONFIG_DQS_DML, 0, nullptr);
  sqlite3_db_config(handle.db, SQLITE_DBCONFIG_DQS_DDL, 0, nullptr);

  Deadline deadline{started + limits.timeout};
  sqlite3_progress_handler(handle.db, 256, progress_callback, &deadline);

  StmtHandle stmt;
  const char* tail = nullptr;
  if (sqlite3_prepare_v2(handle.db, sql.c_str(), -1, &stmt.stmt, &tail) != SQLITE_OK) {
    return ExecError{ExecError::Kind::Syntax, sqlite3_errmsg(handle.db)};
  }
  if (!stmt.stmt) {
    return ExecError{ExecError::Kind::Syntax, "empty statement"};
  }
  if (tail) {
    std::string_view rest(tail);
    std::size_t pos = 0;
    while (pos < rest.size()) {
      pos = skip_trivia(rest, pos);
      if (pos < rest.size() && rest[pos] == ';') {
        ++pos;
      } else {
        break;
      }
    }
    if (pos < rest.size()) {
      return ExecError{ExecError::Kind::EngineError, "multiple statements are not supported"};
    }
  }
  if (sqlite3_stmt_readonly(stmt.stmt) == 0) {
    return ExecError{ExecError::Kind::ReadOnlyViolation,
                     "statement would modify the database"};
  }

  ExecutionResult result;
  const int column_count = sqlite3_column_count(stmt.stmt);
  result.columns.reserve(static_cast<std::size_t>(column_count));
  for (int i = 0; i < column_count; ++i) {
    const char* name = sqlite3_column_name(stmt.stmt, i);
    result.columns.emplace_back(name ? name : "");
  }

  while (true) {
    int rc = sqlite3_step(stmt.stmt);
    if (rc == SQLITE_ROW) {
      if (limits.max_rows > 0 &&
          result.rows.size() == static_cast<std::size_t>(limits.max_rows)) {
        result.truncated_rows = true;
        break;
      }
      std::vector<Cell> row;
      row.reserve(static_cast<std::size_t>(column_count));
      for (int i = 0; i < column_count; ++i) row.push_back(read_cell(stmt.stmt, i));
      result.rows.push_back(std::move(row));
    } else if (rc == SQLITE_DONE) {
      break;
    } else if (rc == SQLITE_INTERRUPT || deadline.expired()) {
      return ExecError{ExecError::Kind::Timeout,
                       "statement exceeded " + std::to_string(limits.timeout.count()) + " ms"};
    } else {
      return ExecError{ExecError::Kind::EngineError, sqlite3_errmsg(handle.db)};
    }
  }

  result.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

std::variant<double, ExecError> SqlExecutor::timed_execute(const std::string& sql,
                                                           const std::string& database_id,
                                                           int repeats) const {
  if (repeats < 3) {
    throw std::invalid_argument("timed_execute requires repeats >= 3");
  }
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(repeats));
  for (int i = 0; i < repeats; ++i) {
    ExecOutcome outcome = execute(sql, database_id, uncapped_limits());
    if (auto* err = std::get_if<ExecError>(&outcome)) return *err;
    samples.push_back(std::get<ExecutionResult>(outcome).elapsed_seconds);
  }
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  if (n % 2 == 1) return samples[n / 2];
  return 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
}

// ---------------------------------------------------------------------------
// Result algebra

bool exact_match(const ExecutionResult& pred, const ExecutionResult& gold) {
  if (pred.truncated_rows || gold.truncated_rows) {
    throw std::logic_error("exact_match requires untruncated results");
  }
  if (pred.columns.size() != gold.columns.size()) return false;
  if (pred.rows.size() != gold.rows.size()) return false;

  auto canonical_rows = [](const ExecutionResult& res) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(res.rows.size());
    for (const auto& row : res.rows) {
      std::vector<std::string> canon;
      canon.reserve(row.size());
      for (const auto& cell : row) canon.push_back(canonical_cell(cell));
      rows.push_back(std::move(canon));
    }
    std::sort(rows.begin(), rows.end());
    return rows;
  };
  return canonical_rows(pred) == canonical_rows(gold);
}

CellSet flatten_cells(const ExecutionResult& res) {
  CellSet set;
  for (const auto& row : res.rows) {
    for (const auto& cell : row) set.elements.insert(canonical_cell(cell));
  }
  return set;
}

namespace {

std::string display_cell(const Cell& cell) {
  if (cell.is_null()) return "NULL";
  return canonical_cell(cell);
}

std::string cap_feedback(std::string text, std::size_t max_chars) {
  if (text.size() <= max_chars) return text;
  text.resize(max_chars - kFeedbackTruncationMarker.size());
  text += kFeedbackTruncationMarker;
  return text;
}

}  // namespace

std::string serialize_feedback(const ExecOutcome& outcome, std::size_t max_chars) {
  if (max_chars < 16) {
    throw std::invalid_argument("serialize_feedback requires max_chars >= 16");
  }
  if (const auto* err = std::get_if<ExecError>(&outcome)) {
    return cap_feedback("Error: " + err->message, max_chars);
  }
  const auto& res = std::get<ExecutionResult>(outcome);
  std::string out;
  for (std::size_t i = 0; i < res.columns.size(); ++i) {
    if (i) out += " | ";
    out += res.columns[i];
  }
  for (const auto& row : res.rows) {
    out += "\n";
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += " | ";
      out += display_cell(row[i]);
    }
  }
  out += "\n(" + std::to_string(res.rows.size()) + (res.truncated_rows ? "+ rows)" : " rows)");
  return cap_feedback(std::move(out), max_chars);
}

}  // namespace stepcredit
