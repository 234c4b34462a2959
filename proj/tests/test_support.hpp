#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "stepcredit/fixtures.hpp"
#include "stepcredit/sql_exec.hpp"

namespace test_support {

/// Temp directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    auto base = std::filesystem::temp_directory_path();
    std::mt19937_64 rng{std::random_device{}()};
    path_ = base / ("stepcredit_" + tag + "_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Registry backed by the shipped fixture databases, written into tmp.
inline stepcredit::Registry fixture_registry(const TempDir& dir) {
  stepcredit::fixtures::write_registry(dir.path());
  return stepcredit::Registry::from_manifest(dir.path());
}

}  // namespace test_support
