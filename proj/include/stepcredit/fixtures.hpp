#pragma once

#include <filesystem>
#include <string>

namespace stepcredit::fixtures {

/// Mini schools/frpm/satscores schema with one school per interesting case:
/// the largest K-12 enrollment carries OpenDate 2006-08-29 and the top
/// satscores enrollment carries a NULL OpenDate.
void write_school_scores_db(const std::filesystem::path& path);

/// Three-row people table (id, name, age) used by the executor tests.
void write_people_db(const std::filesystem::path& path);

/// Write both fixture databases plus manifest.json into dir.
void write_registry(const std::filesystem::path& dir);

/// Named scenarios shipped with the engine, as scenario-file JSON text.
std::string school_open_date_scenario();
std::string oldest_person_scenario();

/// Write the shipped scenario files into dir.
void write_scenarios(const std::filesystem::path& dir);

}  // namespace stepcredit::fixtures
