#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

namespace cli {

inline std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

/// Runs the compatnet binary and returns its exit code. Output goes to
/// `log` (appended) so failing runs can be inspected.
inline int run(const std::vector<std::string>& args, const std::filesystem::path& log) {
  std::string cmd = quote(COMPATNET_CLI_PATH);
  for (const auto& a : args) cmd += " " + quote(a);
  cmd += " >>" + quote(log.string()) + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json read_json(const std::filesystem::path& p) { return nlohmann::json::parse(slurp(p)); }

/// Artifacts listed in a's manifest whose bytes differ in b, plus any
/// difference in the manifests' command, config, seed or artifact list.
inline std::vector<std::string> compare_runs(const std::filesystem::path& a, const std::filesystem::path& b) {
  std::vector<std::string> diffs;
  const auto ma = read_json(a / "run_manifest.json");
  const auto mb = read_json(b / "run_manifest.json");
  for (const char* key : {"command", "config", "seed", "artifacts", "tool_version"})
    if (ma.at(key) != mb.at(key)) diffs.push_back(std::string("manifest ") + key);
  for (const auto& f : ma.at("artifacts")) {
    const auto name = f.get<std::string>();
    if (!std::filesystem::exists(b / name) || slurp(a / name) != slurp(b / name)) diffs.push_back(name);
  }
  return diffs;
}

} // namespace cli
