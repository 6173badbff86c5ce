#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phaseshift/calibrate.hpp"
#include "phaseshift/detect.hpp"
#include "phaseshift/eval.hpp"
#include "phaseshift/signals.hpp"

namespace phaseshift {

// {0.005, 0.01, 0.02, 0.03, 0.05, 0.075, 0.1, 0.15, 0.2}
std::vector<double> default_alpha_grid();
std::vector<Method> all_methods();

// Frequency mismatch that gives about 2.8 phase slips per ten minutes at
// C = 0.12; neither 0.675 nor 0.0675 does (see README).
inline constexpr double kCalibratedDeltaOmega = 0.165;

// Demodulation used for Rossler observables: centre 9.25 Hz, half-bandwidth 0.15 Hz.
DemodConfig rossler_demod();

// Ground-truth slips from the Poincare phase difference of the two attractors.
std::vector<ShiftEvent> rossler_truth(const RosslerTrajectory& traj, double smoothing_s = 1.0,
                                      double tracking_s = 20.0);

// Demodulated phase of x1 minus that of x2; burn-in marked from `demod`.
PhaseSeries rossler_observed_phase(const RosslerTrajectory& traj, const DemodConfig& demod);

struct TauOptions {
  std::size_t datasets = 5;
  double duration_s = 600.0;
  double coupling = 0.5;    // strong coupling: locked, no slips
  double segment_s = 30.0;  // ACF segment length
};

// Mean first ACF zero of the observed phase difference of strongly coupled runs.
Index rossler_tau(const RosslerParams& params, const DemodConfig& demod, const TauOptions& options,
                  std::uint64_t seed);

// First ACF zero of a long null oscillator phase.
Index oscillator_tau(const NullSignalConfig& sim, std::uint64_t seed, Index length = 25000, double segment_s = 4.0);

struct MethodRoc {
  Method method = Method::CusumParametric;
  RocCurve roc;
};

struct BenchmarkResult {
  Index tau = 0;
  Index isi_min = 0;
  Index tolerance = 0;
  Index group_delay = 0;
  std::size_t datasets = 0;
  std::size_t truth_events = 0;
  std::vector<MethodRoc> methods;

  const MethodRoc& at(Method m) const;
};

// Simulated oscillators with random phase-shift schedules, scored against
// their known profiles.
struct OscillatorBenchmarkConfig {
  std::size_t datasets = 20;
  std::size_t shifts = 20;
  double delta_min = 0.5;
  Index generation_isi = 256;  // minimum gap between generated shifts
  NullSignalConfig sim{};
  Index isi_min = 256;         // CUSUM exclusion half-width; the generator's minimum gap
  Index n_min = 16;
  std::optional<Index> tolerance;  // default isi_min / 2
  std::vector<double> alphas = default_alpha_grid();
  std::vector<Method> methods = all_methods();
  std::size_t table_replicates = 1000;
  std::size_t bootstrap_replicates = 1000;
  std::optional<Index> tau;  // default oscillator_tau
  std::uint64_t seed = 1;

  void validate() const;
};

BenchmarkResult run_oscillator_benchmark(const OscillatorBenchmarkConfig& cfg);

// Weakly coupled Rossler pairs scored against Poincare-phase slips.
struct RosslerBenchmarkConfig {
  std::size_t datasets = 50;
  double duration_s = 600.0;
  RosslerParams params = [] {
    RosslerParams p;
    p.delta_omega = kCalibratedDeltaOmega;
    return p;
  }();
  DemodConfig demod = rossler_demod();
  std::vector<Method> methods{Method::CusumBlock, Method::PdThreshold};
  std::vector<double> alphas = default_alpha_grid();
  std::optional<Index> isi_min;    // default: demodulation burn-in
  std::optional<Index> tolerance;  // default isi_min / 2
  std::optional<Index> tau;        // default rossler_tau
  TauOptions tau_options{};
  std::size_t bootstrap_replicates = 1000;
  std::uint64_t seed = 1;

  void validate() const;
};

BenchmarkResult run_rossler_benchmark(const RosslerBenchmarkConfig& cfg);

struct IsiStudyConfig {
  std::size_t datasets = 100;
  double duration_s = 1200.0;
  RosslerParams params = RosslerBenchmarkConfig{}.params;
  DemodConfig demod = rossler_demod();
  Method method = Method::CusumBlock;
  double alpha = 0.05;
  std::optional<Index> isi_min;
  std::optional<Index> tau;
  TauOptions tau_options{};
  std::size_t bootstrap_replicates = 1000;
  PowerLawOptions powerlaw{};
  std::uint64_t seed = 2;
};

struct IsiStudyResult {
  Index tau = 0;
  std::size_t events = 0;
  std::size_t truth_events = 0;
  std::vector<double> intervals_s;
  double mean_isi_s = 0.0;
  std::optional<PowerLawFit> fit;
  std::string fit_error;  // set when the fit failed
};

// Inter-event intervals of detections on long Rossler runs and their power-law tail.
IsiStudyResult run_isi_study(const IsiStudyConfig& cfg);

struct NullCalibrationConfig {
  std::size_t datasets = 1000;
  NullSignalConfig sim{};
  std::vector<double> alphas{0.01, 0.05, 0.1};
  std::vector<Method> methods = all_methods();
  Index n_min = 16;
  Index isi_min = 256;
  std::size_t table_replicates = 5000;
  std::size_t bootstrap_replicates = 1000;
  std::optional<Index> tau;
  std::uint64_t seed = 3;
};

struct NullRate {
  Method method = Method::CusumParametric;
  double alpha = 0.0;
  std::size_t rejections = 0;
  std::size_t datasets = 0;

  double rate() const { return static_cast<double>(rejections) / static_cast<double>(datasets); }
  double standard_error() const;
  bool within(double k) const;  // |rate - alpha| <= k standard errors
};

struct NullCalibrationResult {
  Index tau = 0;
  std::vector<NullRate> rates;
};

// Fraction of fresh null records on which each method reports any event.
NullCalibrationResult run_null_calibration(const NullCalibrationConfig& cfg);

struct ResolutionStudyConfig {
  NullSignalConfig sim{};
  std::vector<double> snr_db{0, 5, 10, 15, 20};
  std::vector<double> delta{0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  double alpha = 0.05;
  double target_power = 0.8;
  std::size_t power_replicates = 200;
  std::size_t isimin_replicates = 500;
  std::size_t table_replicates = 2000;
  int table_per_octave = 8;
  std::uint64_t seed = 4;
};

struct ResolutionStudyCell {
  double snr_db = 0.0;
  double delta = 0.0;
  double power_cusum = 0.0;
  double power_pd = 0.0;
  std::optional<Index> isi_cusum;  // samples
  std::optional<Index> isi_pd;
  bool common = false;  // both powers at target and both ISI_min found
};

struct ResolutionStudyResult {
  PowerSurface cusum;
  PowerSurface pd;
  std::vector<ResolutionStudyCell> cells;
  std::size_t common = 0;
  double median_cusum_ms = 0.0;
  double median_pd_ms = 0.0;

  double gap_ms() const { return median_cusum_ms - median_pd_ms; }
};

// Single-shift power and ISI_min of both statistics over an (SNR, delta) grid.
ResolutionStudyResult run_resolution_study(const ResolutionStudyConfig& cfg);

}  // namespace phaseshift
