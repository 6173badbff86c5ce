#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace phaseshift {

using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Failure of an iterative or stochastic procedure (divergence, unreachable
// calibration target, optimizer non-convergence).
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Uniformly sampled real signal. Sample i sits at time (start_index + i) / rate_hz.
struct TimeSeries {
  Vector samples;
  double rate_hz = 1.0;
  Index start_index = 0;

  Index size() const { return samples.size(); }
  double time_s(Index i) const { return static_cast<double>(start_index + i) / rate_hz; }
};

// Instantaneous phase estimate in radians. Samples before `burn_in` are a
// filter start-up transient and are excluded from inference.
struct PhaseSeries {
  Vector values;
  double rate_hz = 1.0;
  Index burn_in = 0;
  bool straightened = false;
  Index start_index = 0;

  Index size() const { return values.size(); }
  double time_s(Index i) const { return static_cast<double>(start_index + i) / rate_hz; }

  // Samples after the burn-in marker, re-based so the first kept sample is index 0.
  PhaseSeries after_burn_in() const;
};

// A detected or ground-truth phase shift. `index` is the boundary sample:
// samples [0, index) precede the change.
struct ShiftEvent {
  Index index = 0;
  double time_s = 0.0;
  double magnitude = 0.0;
  double statistic = 0.0;
  double threshold = 0.0;
  Index t_lower = 0;
  Index t_upper = 0;
};

inline std::vector<Index> event_indices(const std::vector<ShiftEvent>& events) {
  std::vector<Index> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back(e.index);
  return out;
}

}  // namespace phaseshift
