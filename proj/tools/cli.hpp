#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "regime_design/errors.hpp"

namespace regime_design::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitOther = 1;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitPrecondition = 3;
inline constexpr int kExitLimit = 4;

[[nodiscard]] int exit_code(ErrorKind kind);

enum class LogLevel { Error, Warn, Info, Debug };

/// From REGIME_DESIGN_LOG (error, warn, info, debug); warn when unset or unknown.
[[nodiscard]] LogLevel log_level();
void log(LogLevel level, const std::string& message);

struct DataSource {
  std::filesystem::path config;
  /// Overrides the config's data path.
  std::optional<std::filesystem::path> data;
  /// Ignore the data path and use the built-in synthetic extract.
  bool synthetic = false;
  std::vector<std::string> boroughs, windows, profiles;  ///< empty = all configured
};

struct IngestArgs {
  DataSource source;
  std::filesystem::path out;
  int jobs = 1;
};

struct SolveArgs {
  std::filesystem::path instance;
  std::filesystem::path params;
  std::string method = "benders";
  double gap = 1e-5;
  int max_iter = 2000;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::filesystem::path out;
};

struct SimulateArgs {
  std::filesystem::path instance;
  std::filesystem::path plan;
  std::int64_t samples = 1000000;
  std::uint64_t seed = 1;
  int grid_points = 50;
  bool discrete_event = false;
  int jobs = 1;
  std::filesystem::path out;
};

struct ReportArgs {
  std::filesystem::path instance;
  /// Plan file, or "baseline" for the instance's estimated rates.
  std::string baseline;
  std::filesystem::path optimal;
  std::filesystem::path params;
  std::filesystem::path out;
};

struct SweepArgs {
  DataSource source;
  std::vector<std::string> methods;  ///< empty = the config's sweep methods
  double gap = 1e-5;
  int max_iter = 2000;
  std::uint64_t seed = 0;
  int jobs = 1;
  /// Runs above this many demands are recorded as skipped.
  int max_demands = 5000;
  std::filesystem::path out;
};

/// Each returns a process exit code; errors are reported through log().
int cmd_ingest(const IngestArgs& args, const std::vector<std::string>& argv);
int cmd_solve(const SolveArgs& args, const std::vector<std::string>& argv);
int cmd_simulate(const SimulateArgs& args, const std::vector<std::string>& argv);
int cmd_report(const ReportArgs& args, const std::vector<std::string>& argv);
int cmd_sweep(const SweepArgs& args, const std::vector<std::string>& argv);

/// Lower-case file-name fragment: "RICHMOND / STATEN ISLAND" -> "richmond_staten_island".
[[nodiscard]] std::string slug(const std::string& text);

}  // namespace regime_design::cli
