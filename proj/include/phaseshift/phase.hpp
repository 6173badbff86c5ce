#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "phaseshift/filters.hpp"
#include "phaseshift/types.hpp"

namespace phaseshift {

struct EwmaSpec {
  // When unset, alpha = exp(-2*pi*half_bandwidth/rate).
  std::optional<double> alpha;
};

struct ButterworthSpec {
  int order = 4;
};

using FilterSpec = std::variant<EwmaSpec, ButterworthSpec>;

// Complex demodulation settings. The low-pass corner equals half_bandwidth_hz.
struct DemodConfig {
  double center_hz = 9.0;
  double half_bandwidth_hz = 2.0;
  FilterSpec filter = ButterworthSpec{};
  std::optional<Index> burn_in;  // overrides the default start-up estimate

  void validate(double rate_hz) const;
  double ewma_alpha(double rate_hz) const;
  // Passband group delay of the configured low-pass, in samples.
  double group_delay(double rate_hz) const;
  // Samples until the low-pass step response stays within 1e-3 of its final value.
  Index default_burn_in(double rate_hz) const;
  std::string describe() const;
};

// Applies the configured low-pass to a signal.
Vector lowpass(const Vector& x, const DemodConfig& cfg, double rate_hz);

// In-phase / quadrature components H[x_t sin(w t)] and H[x_t cos(w t)].
struct Quadrature {
  Vector in_phase;    // y_t
  Vector quadrature;  // y~_t
};

Quadrature demodulate_components(const TimeSeries& x, const DemodConfig& cfg);

// Wrapped phase atan2(H[x cos(w t)], H[x sin(w t)]); for x_t = sin(w t + phi)
// the estimate tends to phi.
PhaseSeries complex_demodulate(const TimeSeries& x, const DemodConfig& cfg);

double wrap_angle(double x);
Vector wrap_angles(const Vector& v);

// Removes 2*pi jumps so consecutive differences lie in (-pi, pi].
PhaseSeries straighten_phase(const PhaseSeries& phi);
Vector straighten(const Vector& wrapped);

// straighten(a) - straighten(b) on a common time base.
PhaseSeries phase_difference(const PhaseSeries& a, const PhaseSeries& b);

// Closed-form expectation offsets of the EWMA-demodulated components for a
// noiseless or zero-mean-noise sinusoid.
enum class BiasForm {
  Derived,   // exact expectation of the recursion used by ewma()
  AsPrinted  // opposite sign on the b term, kept for comparison
};

struct BiasTerms {
  double b_y = 0.0;
  double b_y_tilde = 0.0;
  double oscillatory_y = 0.0;
  double oscillatory_y_tilde = 0.0;
  double boundary_y = 0.0;
  double boundary_y_tilde = 0.0;
};

BiasTerms theoretical_bias(double alpha, double omega, double phi, Index t, BiasForm form = BiasForm::Derived);

// Large-t bound (1 + alpha) / (2 (1 - alpha)) on the component biases.
double bias_bound(double alpha);

// Phase bias implied by component biases b_y, b_y~ at true phase phi.
double phase_bias_from_terms(const BiasTerms& terms, double phi, BiasForm form = BiasForm::Derived);
double phase_bias_approx(double alpha, double omega, double phi, Index t, BiasForm form = BiasForm::Derived);

// atan((1+a) / (sqrt(2)(1-a) - (1+a))); empty when the denominator is not positive.
std::optional<double> phase_bias_bound(double alpha);

// Biased sample autocorrelation r_k for k = 0..max_lag.
Vector autocorrelation(const Vector& x, Index max_lag);

// First lag k >= 1 with r_k <= 0, or empty.
std::optional<Index> first_zero_crossing(const Vector& x);

enum class TauAggregate { Mean, Median };

struct TauEstimate {
  Index tau = 0;
  std::vector<Index> per_segment;
  std::size_t segments_dropped = 0;
};

// Splits post-burn-in phase into segments of segment_s seconds, wraps each
// segment about its circular mean, and aggregates first ACF zero crossings.
TauEstimate acf_first_zero(const PhaseSeries& phi, double segment_s = 4.0,
                           TauAggregate aggregate = TauAggregate::Mean);

struct NullSignalConfig;  // detect/critical.hpp

struct BurnInCalibration {
  Index n_burn = 0;
  Index conservative = 0;
  double rate_s1 = 0.0;  // rejection rates at the returned burn-in
  double rate_s2 = 0.0;
};

// Smallest burn-in whose fresh-null rejection rate for both statistics is
// within binomial slack of alpha_level.
BurnInCalibration calibrate_nburn(const NullSignalConfig& sim, double alpha_level, std::size_t replicates,
                                  std::uint64_t seed);

}  // namespace phaseshift
