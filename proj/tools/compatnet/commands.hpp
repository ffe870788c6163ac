#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "run_context.hpp"

namespace compatnet::cli {

/// One subcommand. Flags bind directly into the command's configuration, so
/// a configuration loaded from --config is overridden only by flags that are
/// actually given.
class Command {
public:
  virtual ~Command() = default;
  virtual std::string name() const = 0;
  virtual std::string description() const = 0;
  virtual void add_flags(CLI::App& sub) = 0;
  /// Resolves flag combinations after parsing.
  virtual void finalize() {}
  virtual void load(const nlohmann::json& config) = 0;
  /// Full configuration with every default materialized.
  virtual nlohmann::json config() const = 0;
  virtual std::uint64_t seed() const = 0;
  virtual void set_seed(std::uint64_t seed) = 0;
  /// Writes artifacts into ctx and returns the exit code.
  virtual int run(RunContext& ctx, int threads) = 0;

  bool allow_nonconverged = false;
};

std::vector<std::unique_ptr<Command>> make_commands();

} // namespace compatnet::cli
