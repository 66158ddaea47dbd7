#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace curvseg::cli {

/// Record written by every successful command. Running `argv` again from
/// `cwd` reproduces the outputs.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;  // arguments after the program name
  std::string cwd;
  nlohmann::json config;  // resolved parameters
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::optional<std::uint64_t> seed;
  std::string started_utc;
  double wall_seconds = 0.0;
  std::string version;
};

nlohmann::json to_json(const RunManifest& m);
RunManifest run_manifest_from_json(const nlohmann::json& j);

/// Number of sweep values a, a + step, ... not exceeding b (with a small
/// tolerance so that decimal steps land on b).
std::size_t sweep_count(double a, double b, double step);

/// Default lambda range of sweep-lambda for a grid of this dimensionality.
std::pair<double, double> default_lambda_range(int ndim);

/// Command-line entry point; `args` excludes the program name. Data goes to
/// `out`, diagnostics to `err`. Returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

const char* version();

}  // namespace curvseg::cli
