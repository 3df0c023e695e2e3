#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shersim/shersim.hpp"

namespace shersim::cli {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitInvalid = 2, kExitNumerical = 3 };

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
};

struct RunOptions {
  std::string scenario;
  std::string trace;
  std::string out_dir;
  Overrides overrides;
};

struct BatchOptions {
  std::string scenario;
  std::string out_dir;
  std::optional<std::string> traces;               // single unnamed condition "all"
  std::vector<std::string> conditions;             // label=glob
  std::vector<std::string> condition_scenarios;    // label=scenario.json
  Overrides overrides;
};

struct MetricsOptions {
  std::vector<std::string> trials;
  std::vector<std::string> conditions;  // label=glob over trial CSVs
  std::optional<std::string> out_dir;
};

struct ValidateOptions {
  std::string scenario;
  std::optional<std::string> trace;
  bool print = false;
};

struct ServeOptions {
  std::string scenario;
  std::string out_dir = ".";
  unsigned short port = 8765;
  std::string address = "127.0.0.1";
  double tick_hz = 0.0;
  int decimation = 10;
  double duration = 0.0;
  Overrides overrides;
};

std::string sha256_hex(std::string_view data);
/// SHA-256 of the fully materialised scenario document.
std::string scenario_hash(const Scenario& s);

/// Loads a scenario and applies --seed / --dt.
Scenario load_with_overrides(const std::string& path, const Overrides& o);

struct TrialOutput {
  std::string trial_id;
  std::string csv_path;
  std::string metrics_path;
  TrialLog log;
  TrialMetrics metrics;
};

/// Runs one trial and writes trial_<id>.csv and metrics_<id>.json into out_dir.
TrialOutput run_and_write(const Scenario& s, const std::vector<InputSample>& trace, const std::string& out_dir);

/// Sorted POSIX glob matches; empty when nothing matches.
std::vector<std::string> glob_paths(const std::string& pattern);

int cmd_run(const RunOptions& o, std::ostream& out, std::ostream& err);
int cmd_batch(const BatchOptions& o, std::ostream& out, std::ostream& err);
int cmd_metrics(const MetricsOptions& o, std::ostream& out, std::ostream& err);
int cmd_validate(const ValidateOptions& o, std::ostream& out, std::ostream& err);
int cmd_serve(const ServeOptions& o, std::ostream& out, std::ostream& err);

/// Full command line entry point (argv[0] is the program name).
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace shersim::cli
