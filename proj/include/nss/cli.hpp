#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "nss/target.hpp"

namespace nss::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

std::vector<std::string> target_ids();

/// Builds a registered target from {"id": ..., "dim": ..., "alpha": ...}; null fields take defaults.
TargetModel make_target(const nlohmann::json& spec);

/**
 * Default configuration for a subcommand. Every key a config file may set is
 * present; optional values are null.
 */
nlohmann::json default_config(const std::string& command);

/// Applies a config file patch to the defaults and rejects unknown keys.
nlohmann::json merge_config(const std::string& command, const nlohmann::json& file_config);

/// Runs one subcommand with an already-merged configuration.
int execute(const std::string& command, const nlohmann::json& config);

/// Entry point; returns the process exit code.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace nss::cli
