#pragma once

#include <vector>

#include "phaseshift/types.hpp"

namespace phaseshift {

// First-order exponentially weighted moving average:
//   out_t = (1 - alpha) * sum_{i=0..t} alpha^i x_{t-i}
// evaluated by the recursion out_t = alpha * out_{t-1} + (1 - alpha) * x_t.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> ewma(const Eigen::MatrixBase<Derived>& x,
                                                                  typename Derived::Scalar alpha) {
  using Scalar = typename Derived::Scalar;
  if (!(alpha > Scalar(0) && alpha < Scalar(1)))
    throw std::invalid_argument("ewma: alpha must lie in (0, 1)");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(x.size());
  const Scalar gain = Scalar(1) - alpha;
  Scalar acc(0);
  for (Index t = 0; t < x.size(); ++t) {
    acc = alpha * acc + gain * x(t);
    out(t) = acc;
  }
  return out;
}

TimeSeries ewma_filter(const TimeSeries& x, double alpha);

// alpha = exp(-2*pi*fc/rate): the stable EWMA whose corner sits near fc.
double ewma_alpha_for_cutoff(double cutoff_hz, double rate_hz);

// One second-order section, b0 + b1 z^-1 + b2 z^-2 over 1 + a1 z^-1 + a2 z^-2.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;
};

// Digital Butterworth low-pass designed from the analog prototype with the
// prewarped bilinear transform, stored as cascaded sections with unit DC gain.
class ButterworthLowpass {
public:
  ButterworthLowpass(int order, double cutoff_hz, double rate_hz);

  int order() const { return order_; }
  double cutoff_hz() const { return cutoff_hz_; }
  double rate_hz() const { return rate_hz_; }
  const std::vector<Biquad>& sections() const { return sections_; }

  // Causal single forward pass from zero initial state.
  template <typename Derived>
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> apply(const Eigen::MatrixBase<Derived>& x) const {
    using Scalar = typename Derived::Scalar;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> y = x;
    for (const auto& s : sections_) {
      Scalar z1(0), z2(0);  // transposed direct form II
      for (Index t = 0; t < y.size(); ++t) {
        const Scalar in = y(t);
        const Scalar out = Scalar(s.b0) * in + z1;
        z1 = Scalar(s.b1) * in - Scalar(s.a1) * out + z2;
        z2 = Scalar(s.b2) * in - Scalar(s.a2) * out;
        y(t) = out;
      }
    }
    return y;
  }

  // |H| at frequency f (Hz).
  double magnitude(double f_hz) const;
  // Group delay at DC in samples.
  double dc_group_delay() const;

private:
  int order_;
  double cutoff_hz_;
  double rate_hz_;
  std::vector<Biquad> sections_;
};

TimeSeries butterworth_lowpass(const TimeSeries& x, double cutoff_hz, int order = 4);

}  // namespace phaseshift
