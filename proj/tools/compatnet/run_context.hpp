#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace compatnet::cli {

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNonConverged = 3;

/// Raised for invalid flag values or inputs; maps to kExitUsage.
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Output directory plus the artifacts written so far.
class RunContext {
public:
  RunContext(std::string command, std::filesystem::path out_dir);

  const std::filesystem::path& out_dir() const { return out_dir_; }
  std::filesystem::path path(const std::string& name) const { return out_dir_ / name; }

  void write_text(const std::string& name, const std::string& text);
  void write_json(const std::string& name, const nlohmann::json& j);
  /// Records a file written by other code (e.g. network CSVs).
  void add_artifact(const std::string& name);

  /// Writes run_manifest.json with the materialized configuration.
  void write_manifest(const nlohmann::json& config, std::uint64_t seed);

private:
  std::string command_;
  std::filesystem::path out_dir_;
  std::vector<std::string> artifacts_;
  std::chrono::steady_clock::time_point start_;
};

/// Loaded --config file: `config` is the manifest's "config" member, or the
/// whole document when it has none.
struct ConfigFile {
  std::string command; // empty when the file does not name one
  nlohmann::json config = nlohmann::json::object();
};

ConfigFile load_config_file(const std::filesystem::path& path);

std::string tool_version();

} // namespace compatnet::cli
