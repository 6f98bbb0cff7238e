#pragma once

// Command-line front end: `gmy <module> <command> [flags]`.
//
// Parameter precedence is flag > GMY_SEED (seed only) > config file > default.
// A config file is flat `key = value` text; `---` lines separate records, and
// each record is run as its own invocation.

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gmy::cli {

inline constexpr std::string_view kVersion = "0.1.0";

enum ExitCode : int { kPass = 0, kVerificationFailed = 1, kUsageError = 2 };

struct ConfigEntry {
  std::string key;
  std::string value;
  int line;
  int column;
};

using ConfigRecord = std::vector<ConfigEntry>;

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, int column, const std::string& what);

  [[nodiscard]] int line() const { return line_; }
  [[nodiscard]] int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Keys are normalized to flag spelling (`burn_in` -> `burn-in`). An empty text
/// yields one empty record.
std::vector<ConfigRecord> parse_config(std::string_view text, const std::string& source = "<config>");
std::vector<ConfigRecord> load_config(const std::string& path);

/// Runs one command line (without the program name), writing results to `out`
/// (or the --out file) and diagnostics to `err`. Returns the exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gmy::cli
