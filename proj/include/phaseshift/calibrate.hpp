#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "phaseshift/critical.hpp"
#include "phaseshift/detect.hpp"

namespace phaseshift {

struct NminCalibration {
  Index n_min = 0;
  double rejection_rate = 0.0;  // fresh-null rate at n_min
  double critical_value = 0.0;  // GEV (1 - alpha) quantile at n_min
  std::vector<std::pair<Index, double>> trace;  // (length, rejection rate) for every length tried
};

// Smallest record length whose GEV-based critical value, fitted at that
// length, keeps the fresh-null rejection rate within 2 binomial standard
// errors of alpha. Lengths are searched by doubling from `start`, then by
// bisection. Throws NumericalError when `ceiling` is reached.
NminCalibration calibrate_nmin(StatKind kind, const NullSignalConfig& sim, double alpha, std::size_t replicates,
                               std::uint64_t seed, Index start = 8, Index ceiling = 8192);

struct IsiMinCalibration {
  Index isi_min = 0;
  std::vector<Index> half_widths;
  std::vector<double> rate_left;   // rejection rate of the segment before the exclusion
  std::vector<double> rate_right;  // and after it
};

// Smallest exclusion half-width h around the estimated change point of a
// single injected shift of size `delta` such that, for h and every larger
// grid value, the segments left and right of [t - h, t + h] are rejected at
// their matched-length critical values no more often than alpha, up to a
// binomial margin Bonferroni-corrected over both sides and all grid points.
// The shift sits mid-record; h ranges while both flanks keep at least a
// quarter of the record (and min_segment samples).
IsiMinCalibration calibrate_isimin(StatKind kind, const NullSignalConfig& sim, const CriticalTable& table,
                                   double alpha, double delta, std::size_t replicates, std::uint64_t seed,
                                   Index step = 4, Index min_segment = 16);

struct PowerCell {
  double snr_db = 0.0;
  double delta = 0.0;
  double power = 0.0;
  std::size_t replicates = 0;
};

struct PowerSurface {
  std::vector<double> snr_db;
  std::vector<double> delta;
  std::vector<PowerCell> cells;  // row-major: snr outer, delta inner
  std::vector<std::optional<double>> delta_min;  // per SNR, at power >= target

  const PowerCell& at(std::size_t snr_index, std::size_t delta_index) const {
    return cells[snr_index * delta.size() + delta_index];
  }
};

struct PowerOptions {
  double target_power = 0.8;
  Index tolerance = 25;    // samples between the delay-corrected estimate and the true change
  std::size_t table_replicates = 1000;
};

// Single-shift power of the parametric test of `kind` over an (SNR, delta)
// grid. A replicate counts when the full-record test rejects and the argmax,
// corrected by the filter group delay, lies within the tolerance of the shift.
// Critical values are simulated per SNR at the record length.
PowerSurface power_analysis(StatKind kind, const NullSignalConfig& sim, const std::vector<double>& snr_grid,
                            const std::vector<double>& delta_grid, double alpha, std::size_t replicates,
                            std::uint64_t seed, const PowerOptions& options = {});

// Smallest delta on the grid with power >= target there and at every larger delta.
std::optional<double> minimal_detectable_delta(const std::vector<double>& delta, const std::vector<double>& power,
                                               double target);

struct ResolutionCell {
  double snr_db = 0.0;
  double delta = 0.0;
  Index exclusion = 0;            // CUSUM exclusion half-width used
  std::optional<Index> isi_min;   // samples; empty when both shifts are never reliably found
  std::vector<double> power;      // per ISI grid value
};

struct ResolutionOptions {
  std::vector<Index> isi_grid;  // ascending, samples
  double target_power = 0.8;
  Index tolerance = 25;
  std::size_t table_replicates = 1000;
  std::size_t isimin_replicates = 200;
};

// Two shifts of equal size `delta` separated by each ISI on the grid; power is
// the fraction of replicates with exactly two detections, each matched to one
// shift within the tolerance after group-delay correction. CUSUM uses recursive
// detection with an exclusion half-width from calibrate_isimin; PD uses
// exceedance runs. isi_min is the smallest ISI from which power stays at or
// above target.
std::vector<ResolutionCell> two_shift_resolution(StatKind kind, const NullSignalConfig& sim,
                                                 const std::vector<double>& snr_grid,
                                                 const std::vector<double>& delta_grid, double alpha,
                                                 std::size_t replicates, std::uint64_t seed,
                                                 const ResolutionOptions& options);

}  // namespace phaseshift
