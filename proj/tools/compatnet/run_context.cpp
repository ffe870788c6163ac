#include "run_context.hpp"

#include <fstream>

#include "compatnet/io.hpp"

namespace compatnet::cli {

RunContext::RunContext(std::string command, std::filesystem::path out_dir)
    : command_(std::move(command)), out_dir_(std::move(out_dir)), start_(std::chrono::steady_clock::now()) {
  std::filesystem::create_directories(out_dir_);
}

void RunContext::write_text(const std::string& name, const std::string& text) {
  io::write_file_atomic(path(name), text);
  add_artifact(name);
}

void RunContext::write_json(const std::string& name, const nlohmann::json& j) { write_text(name, j.dump(2) + "\n"); }

void RunContext::add_artifact(const std::string& name) {
  if (std::find(artifacts_.begin(), artifacts_.end(), name) == artifacts_.end()) artifacts_.push_back(name);
}

void RunContext::write_manifest(const nlohmann::json& config, std::uint64_t seed) {
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  nlohmann::json m{{"command", command_},
                   {"config", config},
                   {"seed", seed},
                   {"artifacts", artifacts_},
                   {"tool_version", tool_version()},
                   {"duration_seconds", seconds}};
  io::write_file_atomic(path("run_manifest.json"), m.dump(2) + "\n");
}

ConfigFile load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw UsageError("config file must hold a JSON object");
  ConfigFile out;
  if (doc.contains("config")) {
    out.command = doc.value("command", "");
    out.config = doc.at("config");
  } else {
    out.config = doc;
  }
  return out;
}

std::string tool_version() { return COMPATNET_VERSION; }

} // namespace compatnet::cli
