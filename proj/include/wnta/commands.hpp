#pragma once

// The five pipeline commands shared by the C API and the CLI.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "wnta/config.hpp"
#include "wnta/similarity.hpp"

namespace wnta {

enum class Command { simulate, analyze, calibrate, refindex, noise_estimate };

Command parse_command(const std::string& name);
const char* command_name(Command c) noexcept;

struct CommandOptions {
    std::optional<fs::path> config;
    std::optional<std::uint64_t> seed;
    std::optional<fs::path> out;
    std::optional<WeightExponent> n_w;
    std::optional<unsigned> threads;
    InputsConfig inputs;  // set fields replace the config's inputs
    std::function<void(const std::string&)> log;  // warnings and progress
};

// Config file (or defaults) with the command-line overrides applied.
RunConfig resolve_config(const CommandOptions& options);

// Runs one command; throws wnta::Error subclasses on failure, in which case
// nothing is left in the output directory.
void run_command(Command command, const CommandOptions& options);

}  // namespace wnta
