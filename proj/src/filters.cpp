#include "phaseshift/filters.hpp"

#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

namespace phaseshift {

TimeSeries ewma_filter(const TimeSeries& x, double alpha) {
  TimeSeries out = x;
  out.samples = ewma(x.samples, alpha);
  return out;
}

double ewma_alpha_for_cutoff(double cutoff_hz, double rate_hz) {
  if (!(cutoff_hz > 0.0) || !(rate_hz > 0.0))
    throw std::invalid_argument("ewma_alpha_for_cutoff: cutoff and rate must be positive");
  return std::exp(-kTwoPi * cutoff_hz / rate_hz);
}

ButterworthLowpass::ButterworthLowpass(int order, double cutoff_hz, double rate_hz)
    : order_(order), cutoff_hz_(cutoff_hz), rate_hz_(rate_hz) {
  if (order < 1) throw std::invalid_argument("butterworth: order must be at least 1");
  if (!(rate_hz > 0.0)) throw std::invalid_argument("butterworth: rate must be positive");
  if (!(cutoff_hz > 0.0) || cutoff_hz >= rate_hz / 2.0) {
    std::ostringstream msg;
    msg << "butterworth: cutoff " << cutoff_hz << " Hz must lie in (0, " << rate_hz / 2.0 << ") Hz";
    throw std::invalid_argument(msg.str());
  }

  // Prewarped analog corner for fs = 2 bilinear map s = 2 (1 - z^-1) / (1 + z^-1).
  const double wa = 2.0 * std::tan(kPi * cutoff_hz / rate_hz);
  const double k = 2.0;

  for (int i = 0; i < order / 2; ++i) {
    // Conjugate pole pair p = wa * exp(j*theta), theta in (pi/2, pi).
    const double theta = kPi * (2.0 * i + order + 1) / (2.0 * order);
    const double re = wa * std::cos(theta);
    const double mag2 = wa * wa;
    // H(s) = mag2 / (s^2 - 2 re s + mag2)
    const double a0 = k * k - 2.0 * re * k + mag2;
    Biquad s;
    s.b0 = mag2 / a0;
    s.b1 = 2.0 * mag2 / a0;
    s.b2 = mag2 / a0;
    s.a1 = (2.0 * mag2 - 2.0 * k * k) / a0;
    s.a2 = (k * k + 2.0 * re * k + mag2) / a0;
    sections_.push_back(s);
  }
  if (order % 2 == 1) {
    // H(s) = wa / (s + wa)
    const double a0 = k + wa;
    Biquad s;
    s.b0 = wa / a0;
    s.b1 = wa / a0;
    s.b2 = 0.0;
    s.a1 = (wa - k) / a0;
    s.a2 = 0.0;
    sections_.push_back(s);
  }
}

double ButterworthLowpass::magnitude(double f_hz) const {
  const std::complex<double> z1 = std::polar(1.0, -kTwoPi * f_hz / rate_hz_);
  const std::complex<double> z2 = z1 * z1;
  std::complex<double> h(1.0, 0.0);
  for (const auto& s : sections_) h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  return std::abs(h);
}

double ButterworthLowpass::dc_group_delay() const {
  double delay = 0.0;
  for (const auto& s : sections_) {
    const double num = s.b0 + s.b1 + s.b2;
    const double den = 1.0 + s.a1 + s.a2;
    delay += (s.b1 + 2.0 * s.b2) / num - (s.a1 + 2.0 * s.a2) / den;
  }
  return delay;
}

TimeSeries butterworth_lowpass(const TimeSeries& x, double cutoff_hz, int order) {
  const ButterworthLowpass filter(order, cutoff_hz, x.rate_hz);
  TimeSeries out = x;
  out.samples = filter.apply(x.samples);
  return out;
}

}  // namespace phaseshift
