#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "delocal/config.hpp"
#include "delocal/manifest.hpp"

namespace delocal {

inline constexpr const char* kToolVersion = "0.1.0";

/// Subcommands that produce a run directory.
const std::vector<std::string>& command_names();

struct CommandResult {
  std::vector<OutputRecord> outputs;
  nlohmann::json summary = nlohmann::json::object();
};

/// Runs one subcommand, writing its payloads into cfg.output. Library errors
/// propagate; use `execute` for exit codes and error.json.
CommandResult run_command(const std::string& name, const RunConfig& cfg);

/// Exit codes: 0 success, 1 unexpected failure, 2 config error, 3 numeric
/// precondition, 4 solver failure, 5 replay mismatch.
int exit_code_for(const std::exception& e);

/// Writes error.json into `dir`, logs the message and returns the exit code.
int report_failure(const std::string& dir, const std::string& command, const std::exception& e,
                   std::ostream& log);

/// Validates `raw`, runs `name`, writes manifest.json (or error.json on
/// failure) into the output directory and returns the exit code.
int execute(const std::string& name, const ConfigMap& raw, std::ostream& log);

struct ReplayOutcome {
  bool identical = false;
  std::vector<std::string> mismatched;
  std::string output;
};

/// Re-runs the command recorded in a manifest into `output` (default: a
/// "replay" directory beside the manifest) and compares payload checksums.
ReplayOutcome replay_manifest(const std::string& manifest_path, std::optional<std::string> output = {});

/// execute() for the replay subcommand.
int execute_replay(const std::string& manifest_path, std::optional<std::string> output, std::ostream& log);

}  // namespace delocal
