#pragma once

#include <functional>

#include "common.hpp"
#include "phaseshift/critical.hpp"

namespace phaseshift::cli {

struct Command {
  CLI::App* app = nullptr;
  std::function<void()> run;
};

Command add_simulate_oscillator(CLI::App& root, const GlobalOptions& g);
Command add_simulate_rossler(CLI::App& root, const GlobalOptions& g);
Command add_detect(CLI::App& root, const GlobalOptions& g);
Command add_calibrate(CLI::App& root, const GlobalOptions& g);
Command add_evaluate(CLI::App& root, const GlobalOptions& g);

// Critical table at sim.length, loaded from or stored to the result cache
// when one is configured.
CriticalTable cached_table(StatKind kind, const NullSignalConfig& sim, std::size_t replicates, std::uint64_t seed,
                           const std::string& cache_dir, bool* hit = nullptr);

}  // namespace phaseshift::cli
