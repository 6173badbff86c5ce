#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "phaseshift/types.hpp"

namespace phaseshift {

struct PhaseStep {
  Index index = 0;     // first sample carrying the new phase
  double delta = 0.0;  // radians
};

// Piecewise-constant phase: base_phase plus the cumulative sum of steps at or
// before each sample.
struct PhaseProfile {
  double base_phase = 0.0;
  std::vector<PhaseStep> events;
  std::size_t truncated = 0;  // generated steps that fell past the signal end

  double phase_at(Index t) const;
  Vector phase_path(Index n) const;
};

// sin(2*pi*f0*t/rate + phi_t) for t = 0..n-1.
TimeSeries gen_oscillator(double f0_hz, double rate_hz, const PhaseProfile& profile, Index n);

// r * x/||x|| + (1-r) * eps/||eps|| with RMS norms and eps ~ N(0,1).
TimeSeries mix_noise(const TimeSeries& clean, double r, std::uint64_t seed);

double snr_from_weight(double r);
double weight_from_snr(double snr_db);

double rms(const Vector& v);

// M steps with |delta| ~ U[delta_min, pi] (random sign) and gaps
// isi_min + Exp(mean isi_min). Steps at or beyond n are dropped and counted.
PhaseProfile gen_shift_profile(std::size_t count, double delta_min, Index isi_min, Index n,
                               std::uint64_t seed, Index first_index = 0);

struct RosslerParams {
  double a = 0.15;
  double b = 0.2;
  double c = 10.0;
  double coupling = 0.12;
  double f0_hz = 9.0;
  double delta_omega = 0.675;  // rad/s
  double internal_rate_hz = 10000.0;
  double output_rate_hz = 250.0;
  double burn_in_s = 30.0;
  double init_box = 10.0;          // initial x, y uniform in [-box, box], z in [0, box]
  double divergence_bound = 1e6;

  double omega1() const;
  double omega2() const;
  void validate() const;
};

struct RosslerTrajectory {
  std::array<TimeSeries, 3> first;   // x1, y1, z1
  std::array<TimeSeries, 3> second;  // x2, y2, z2
};

using RosslerState = std::array<double, 6>;

RosslerState rossler_initial_state(const RosslerParams& params, std::uint64_t seed);

RosslerTrajectory simulate_rossler(const RosslerParams& params, double duration_s, std::uint64_t seed);
RosslerTrajectory simulate_rossler_from(const RosslerParams& params, double duration_s,
                                        const RosslerState& initial);

// One uncoupled attractor with angular frequency omega1, from the first three
// components of `initial`. Used to check decoupling.
std::array<TimeSeries, 3> simulate_rossler_single(const RosslerParams& params, double duration_s,
                                                  const RosslerState& initial);

// Four-quadrant angle of (x, y), straightened.
PhaseSeries poincare_phase(const TimeSeries& x, const TimeSeries& y);

}  // namespace phaseshift
