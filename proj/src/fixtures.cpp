#include "stepcredit/fixtures.hpp"

#include <sqlite3.h>

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace stepcredit::fixtures {

namespace {

void run_script(const std::filesystem::path& path, const char* script) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::filesystem::remove(path);
  sqlite3* db = nullptr;
  if (sqlite3_open_v2(path.string().c_str(), &db, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE,
                      nullptr) != SQLITE_OK) {
    std::string msg = db ? sqlite3_errmsg(db) : "out of memory";
    sqlite3_close(db);
    throw std::runtime_error("cannot create fixture database " + path.string() + ": " + msg);
  }
  char* errmsg = nullptr;
  if (sqlite3_exec(db, script, nullptr, nullptr, &errmsg) != SQLITE_OK) {
    std::string msg = errmsg ? errmsg : "unknown error";
    sqlite3_free(errmsg);
    sqlite3_close(db);
    throw std::runtime_error("fixture script failed for " + path.string() + ": " + msg);
  }
  sqlite3_close(db);
}

}  // namespace

void write_school_scores_db(const std::filesystem::path& path) {
  run_script(path, R"sql(
    CREATE TABLE schools (
      CDSCode TEXT PRIMARY KEY,
      School TEXT,
      OpenDate TEXT
    );
    CREATE TABLE frpm (
      CDSCode TEXT PRIMARY KEY,
      "School Name" TEXT,
      "Enrollment (K-12)" REAL
    );
    CREATE TABLE satscores (
      cds TEXT PRIMARY KEY,
      sname TEXT,
      enroll12 INTEGER
    );
    INSERT INTO schools VALUES
      ('01100170000000', 'Acme Charter Academy', '2006-08-29'),
      ('01100170000001', 'Bayside Elementary', '1980-01-15'),
      ('01100170000002', 'Cypress Institute', NULL);
    INSERT INTO frpm VALUES
      ('01100170000000', 'Acme Charter Academy', 1500.0),
      ('01100170000001', 'Bayside Elementary', 600.0),
      ('01100170000002', 'Cypress Institute', 900.0);
    INSERT INTO satscores VALUES
      ('01100170000000', 'Acme Charter Academy', 700),
      ('01100170000001', 'Bayside Elementary', 510),
      ('01100170000002', 'Cypress Institute', 820);
  )sql");
}

void write_people_db(const std::filesystem::path& path) {
  run_script(path, R"sql(
    CREATE TABLE people (
      id INTEGER PRIMARY KEY,
      name TEXT NOT NULL,
      age INTEGER
    );
    INSERT INTO people VALUES (1, 'Alice', 34), (2, 'Bob', 28), (3, 'Cara', 41);
  )sql");
}

void write_registry(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_school_scores_db(dir / "school_scores.sqlite");
  write_people_db(dir / "people.sqlite");
  nlohmann::json manifest = nlohmann::json::array(
      {{{"database_id", "school_scores"},
        {"path", "school_scores.sqlite"},
        {"description", "mini schools/frpm/satscores schema"}},
       {{"database_id", "people"},
        {"path", "people.sqlite"},
        {"description", "three-row people table"}}});
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << "\n";
}

std::string school_open_date_scenario() {
  nlohmann::json scenario = {
      {"name", "school_open_date"},
      {"question",
       "When did the first-through-twelfth-grade school with the largest enrollment open?"},
      {"hint", "K-12 means first-through-twelfth-grade."},
      {"database_id", "school_scores"},
      {"gold_sql",
       "SELECT T1.OpenDate FROM schools AS T1 JOIN frpm AS T2 ON T1.CDSCode = T2.CDSCode "
       "ORDER BY T2.\"Enrollment (K-12)\" DESC LIMIT 1"},
      {"policies",
       {{{"name", "efficient_join"},
         {"script",
          {{{"reasoning",
             "The largest K-12 enrollment lives in frpm; OpenDate lives in schools. Join on "
             "CDSCode and pick the maximum enrollment."},
            {"action",
             {{"type", "sql"},
              {"text",
               "SELECT s.OpenDate FROM schools s JOIN frpm f ON s.CDSCode = f.CDSCode WHERE "
               "f.\"Enrollment (K-12)\" = (SELECT MAX(\"Enrollment (K-12)\") FROM frpm)"}}}},
           {{"reasoning", "The probe returned a single valid date, so the join is correct."},
            {"action",
             {{"type", "answer"},
              {"text",
               "SELECT s.OpenDate FROM schools s JOIN frpm f ON s.CDSCode = f.CDSCode WHERE "
               "f.\"Enrollment (K-12)\" = (SELECT MAX(\"Enrollment (K-12)\") FROM frpm)"}}}}}}},
        {{"name", "hallucination_loop"},
         {"script",
          {{{"reasoning",
             "I will select OpenDate from schools and order by the enrollment column."},
            {"action",
             {{"type", "sql"},
              {"text",
               "SELECT OpenDate FROM schools ORDER BY \"Enrollment (K-12)\" DESC LIMIT 1"}}}},
           {{"reasoning", "Maybe the column is just named Enrollment."},
            {"action",
             {{"type", "sql"},
              {"text", "SELECT OpenDate FROM schools ORDER BY Enrollment DESC LIMIT 1"}}}},
           {{"reasoning", "I'll fall back to joining satscores on enroll12."},
            {"action",
             {{"type", "sql"},
              {"text",
               "SELECT s.OpenDate FROM schools s JOIN satscores sc ON s.CDSCode = sc.cds ORDER "
               "BY sc.enroll12 DESC LIMIT 1"}}}},
           {{"reasoning", "The query executed, so I will provide it as the final answer."},
            {"action",
             {{"type", "answer"},
              {"text",
               "SELECT s.OpenDate FROM schools s JOIN satscores sc ON s.CDSCode = sc.cds ORDER "
               "BY sc.enroll12 DESC LIMIT 1"}}}}}}}}}};
  return scenario.dump(2) + "\n";
}

std::string oldest_person_scenario() {
  nlohmann::json scenario = {
      {"name", "oldest_person"},
      {"question", "What is the name of the oldest person?"},
      {"hint", ""},
      {"database_id", "people"},
      {"gold_sql", "SELECT name FROM people ORDER BY age DESC LIMIT 1"},
      {"policies",
       {{{"name", "max_subquery"},
         {"script",
          {{{"reasoning", "Probe the table to confirm the columns."},
            {"action", {{"type", "sql"}, {"text", "SELECT name, age FROM people ORDER BY id"}}}},
           {{"reasoning", "Pick the row whose age equals the maximum age."},
            {"action",
             {{"type", "answer"},
              {"text", "SELECT name FROM people WHERE age = (SELECT MAX(age) FROM people)"}}}}}}},
        {{"name", "wrong_direction"},
         {"script",
          {{{"reasoning", "Order by age and take the first row."},
            {"action",
             {{"type", "answer"},
              {"text", "SELECT name FROM people ORDER BY age ASC LIMIT 1"}}}}}}},
        {{"name", "wrong_direction_variant"},
         {"script",
          {{{"reasoning", "Sorting ascending should surface the oldest."},
            {"action",
             {{"type", "answer"}, {"text", "SELECT name FROM people ORDER BY age LIMIT 1"}}}}}}},
        {{"name", "garbage_then_recover"},
         {"script",
          {{{"reasoning", "Call the tool."},
            {"action", {{"type", "garbage"}, {"text", "{\"name\": \"sql_executor\", oops"}}}},
           {{"reasoning", "Retry with a clean ordered query."},
            {"action",
             {{"type", "answer"},
              {"text", "SELECT name FROM people ORDER BY age DESC LIMIT 1"}}}}}}}}}};
  return scenario.dump(2) + "\n";
}

void write_scenarios(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "school_open_date.json") << school_open_date_scenario();
  std::ofstream(dir / "oldest_person.json") << oldest_person_scenario();
}

}  // namespace stepcredit::fixtures
