#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "json.hpp"

namespace sd2 {

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitEstimator = 3, kExitHypotheses = 4 };

/// Flags that are not part of the config.
struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the config seed
  bool strict = false;                // hard hypothesis failures exit with 4
  int threads = 1;
};

struct RunOutcome {
  int exit_code = kExitOk;
  nlohmann::json report;                     // written as report.json (sorted keys)
  std::map<std::string, std::string> files;  // extra artifacts: name -> contents
  std::string summary;                       // short human-readable lines
  std::string error;                         // message for nonzero exit codes
};

/// Runs one task from a parsed config. Never throws for bad input: errors are
/// mapped to exit codes, with the offending sub-problem in report["error"].
RunOutcome run_config(const nlohmann::json& config, const RunOptions& opts = {});

/// Reads `path`, runs it, and writes report.json plus CSV artifacts into
/// `out_dir` (created when missing). Returns the exit code.
int run_file(const std::string& path, const std::string& out_dir, const RunOptions& opts = {});

/// UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

}  // namespace sd2
