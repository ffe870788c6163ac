#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "compatnet/network.hpp"
#include "run_context.hpp"

using namespace compatnet::cli;

namespace {

// --config has to be known before the flags are bound, so it is located by
// hand first.
std::optional<std::string> find_config_arg(const std::vector<std::string>& args) {
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size()) return args[k + 1];
    if (args[k].rfind("--config=", 0) == 0) return args[k].substr(9);
  }
  return std::nullopt;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  auto commands = make_commands();
  auto find_command = [&](const std::string& name) -> Command* {
    for (auto& c : commands)
      if (c->name() == name) return c.get();
    return nullptr;
  };

  std::optional<ConfigFile> config_file;
  if (const auto path = find_config_arg(args)) {
    config_file = load_config_file(*path);
    Command* named = nullptr;
    for (const auto& a : args)
      if ((named = find_command(a))) break;
    if (!config_file->command.empty()) {
      if (!find_command(config_file->command))
        throw UsageError("config file names unknown command '" + config_file->command + "'");
      if (named && named->name() != config_file->command)
        throw UsageError("config file is for '" + config_file->command + "', not '" + named->name() + "'");
      if (!named) args.insert(args.begin(), config_file->command);
      named = find_command(config_file->command);
    }
    if (!named) throw UsageError("--config needs a subcommand or a run manifest naming one");
    try {
      named->load(config_file->config);
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(std::string("bad value in config file: ") + e.what());
    }
  }

  CLI::App app{"Latent space models for indirectly observed compatibility networks", "compatnet"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::string config_path;
  bool allow_nonconverged = false;
  app.add_option("--seed", seed, "Root seed for every random stream");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--config", config_path, "Run manifest or configuration JSON to start from");
  app.add_flag("--allow-nonconverged", allow_nonconverged, "Exit 0 even if some fits did not converge");

  for (auto& c : commands) {
    auto* sub = app.add_subcommand(c->name(), c->description());
    c->add_flags(*sub);
  }

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  Command* cmd = nullptr;
  for (auto& c : commands)
    if (app.got_subcommand(c->name())) cmd = c.get();
  cmd->finalize();
  if (seed) cmd->set_seed(*seed);
  if (allow_nonconverged) cmd->allow_nonconverged = true;

  RunContext ctx(cmd->name(), out_dir);
  const int rc = cmd->run(ctx, threads);
  ctx.write_manifest(cmd->config(), cmd->seed());
  return rc;
}

} // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const compatnet::NetworkError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
