#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ccf::cli {

inline constexpr std::uint64_t kDefaultSeed = 20240917;

enum ExitCode : int { kOk = 0, kUsage = 2, kNumerical = 3 };

struct RunConfig {
  std::string command;  // "infer" or "mc"

  // data (infer)
  std::string data;
  std::string cluster_col;
  std::string y_col;
  std::vector<std::string> x_cols;
  bool intercept = false;
  std::string delimiter = ",";
  bool within = false;
  std::vector<std::string> dummies;

  // hypothesis
  std::vector<double> lambda;
  double null_value = 0.0;
  double alpha = 0.05;
  std::string methods;

  // monte carlo
  std::vector<std::string> designs;
  std::vector<std::size_t> G_list;
  std::size_t reps = 1000;
  std::size_t boot = 999;
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 1;
  std::string panel;
  std::string year_col = "year";
  std::string cluster_size_rule = "round";
  std::optional<double> truncation;

  // output
  std::string out;
  std::string report;
};

// Runs inference on a user dataset; prints the report to `out`.
// Throws ccf::Error subclasses on failure.
void cmd_infer(const RunConfig& cfg, std::ostream& out);

// Runs the Monte Carlo grid; writes tables/report files and prints the
// human tables to `out`.
void cmd_mc(const RunConfig& cfg, std::ostream& out);

// Parses arguments (including an optional --config file) and dispatches.
// Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ccf::cli
