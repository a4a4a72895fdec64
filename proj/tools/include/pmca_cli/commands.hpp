#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pmca::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitValidation = 2,
  kExitNumeric = 3,
  kExitUsage = 64,
};

struct RunOptions {
  std::string command;
  std::string config_path;
  std::string out_dir = ".";
  std::optional<double> dt;
  std::optional<int> pieces;
  std::optional<std::vector<double>> omega;
  bool quiet = false;
};

const std::vector<std::string>& command_names();
std::string usage();

/// Executes one command and writes its artifacts into out_dir. Errors are
/// reported on `err` and mapped to the exit codes above.
int run(const RunOptions& options, std::ostream& out, std::ostream& err);

/// Argument parsing front end for the `pmca` executable.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pmca::cli
