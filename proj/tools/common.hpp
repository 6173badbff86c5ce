#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phaseshift/io.hpp"
#include "phaseshift/phase.hpp"

namespace phaseshift::cli {

enum ExitCode : int { kOk = 0, kOther = 1, kConfig = 2, kIo = 3, kNumerical = 4 };

// Thrown for invalid flag combinations or values found after parsing.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct GlobalOptions {
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  unsigned threads = 0;
  std::string cache_dir;
};

void add_global_options(CLI::App& app, GlobalOptions& g);

struct DemodOptions {
  double center_hz = 9.0;
  double half_bandwidth_hz = 2.0;
  std::string filter = "butterworth";
  int order = 4;
  double ewma_alpha = 0.0;  // 0: derived from the half-bandwidth
  long burn_in = -1;        // -1: filter default

  DemodConfig config() const;
};

void add_demod_options(CLI::App* cmd, DemodOptions& d);
Json to_json(const DemodConfig& d, double rate_hz);

// "0,5,10" or "start:stop:step" (inclusive within rounding).
std::vector<double> parse_grid(const std::string& text, const std::string& what);

// Collects written files and writes manifest.toml (the fully resolved
// options, loadable with --config) and outputs.json (checksums).
class Run {
public:
  Run(const CLI::App& root, const CLI::App& command, const GlobalOptions& g);

  std::filesystem::path path(const std::string& name) const;
  void wrote(const std::filesystem::path& p);
  void finish(const Json& extra = Json::object()) const;

private:
  const CLI::App& root_;
  const CLI::App& command_;
  std::filesystem::path out_dir_;
  std::vector<std::filesystem::path> outputs_;
};

}  // namespace phaseshift::cli
