#include <doctest.h>

#include <cmath>

#include "phaseshift/filters.hpp"
#include "phaseshift/phase.hpp"
#include "phaseshift/random.hpp"
#include "phaseshift/signals.hpp"

using namespace phaseshift;

namespace {

// Least-squares amplitude of a tone at f over the tail of y.
double tone_amplitude(const Vector& y, double f, double rate, Index tail) {
  double c = 0.0, s = 0.0;
  const Index start = y.size() - tail;
  for (Index t = start; t < y.size(); ++t) {
    const double w = kTwoPi * f * t / rate;
    c += y[t] * std::cos(w);
    s += y[t] * std::sin(w);
  }
  return 2.0 * std::hypot(c, s) / static_cast<double>(tail);
}

TimeSeries tone(double f, double rate, Index n, double phase = 0.0, double amplitude = 1.0) {
  TimeSeries x{Vector(n), rate, 0};
  for (Index t = 0; t < n; ++t) x.samples[t] = amplitude * std::sin(kTwoPi * f * t / rate + phase);
  return x;
}

}  // namespace

TEST_CASE("ewma: constant and impulse responses") {
  const double a = 0.9;
  const Vector c = ewma(Vector::Constant(200, 3.0), a);
  for (Index t = 0; t < 200; ++t) CHECK(c[t] == doctest::Approx(3.0 * (1.0 - std::pow(a, t + 1))).epsilon(1e-12));
  CHECK(c[199] == doctest::Approx(3.0).epsilon(1e-8));

  Vector impulse = Vector::Zero(100);
  impulse[0] = 1.0;
  const Vector h = ewma(impulse, a);
  for (Index t = 0; t < 100; ++t) CHECK(h[t] == doctest::Approx((1.0 - a) * std::pow(a, t)).epsilon(1e-12));
}

TEST_CASE("ewma: recursion equals the explicit weighted sum") {
  NormalSource normal(17);
  Vector x(1000);
  for (Index i = 0; i < x.size(); ++i) x[i] = normal();
  const double a = 0.97;
  const Vector fast = ewma(x, a);
  for (Index t = 0; t < x.size(); ++t) {
    double sum = 0.0;
    for (Index i = 0; i <= t; ++i) sum += std::pow(a, i) * x[t - i];
    sum *= 1.0 - a;
    CHECK(std::abs(fast[t] - sum) <= 1e-12 * std::max(1.0, std::abs(sum)));
  }
  CHECK_THROWS_AS(ewma(x, 1.0), std::invalid_argument);
  CHECK(ewma_alpha_for_cutoff(2.0, 250.0) == doctest::Approx(std::exp(-kTwoPi * 2.0 / 250.0)));
}

TEST_CASE("butterworth: unit DC gain, -3 dB at the cutoff, roll-off") {
  const double rate = 250.0, fc = 2.0;
  const ButterworthLowpass f(4, fc, rate);
  CHECK(f.magnitude(0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.magnitude(fc) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));

  const Vector dc = f.apply(Vector::Constant(5000, 2.5));
  CHECK(dc[4999] == doctest::Approx(2.5).epsilon(1e-9));

  const Index n = 40000;
  const double at_cutoff = tone_amplitude(f.apply(tone(fc, rate, n).samples), fc, rate, 25000);
  CHECK(std::abs(at_cutoff / std::sqrt(0.5) - 1.0) < 0.02);
  const double far = tone_amplitude(f.apply(tone(4.0 * fc, rate, n).samples), 4.0 * fc, rate, 25000);
  CHECK(-20.0 * std::log10(far) >= 45.0);

  CHECK(f.sections().size() == 2);
  CHECK(f.dc_group_delay() > 0.0);
  CHECK_THROWS_AS(ButterworthLowpass(4, 130.0, 250.0), std::invalid_argument);
  CHECK_THROWS_AS(ButterworthLowpass(0, 2.0, 250.0), std::invalid_argument);
}

TEST_CASE("butterworth: odd orders keep the cutoff") {
  for (int order : {1, 3, 5}) {
    const ButterworthLowpass f(order, 10.0, 250.0);
    CHECK(f.magnitude(10.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
    CHECK(f.magnitude(0.0) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("straighten: hand cases") {
  Vector v(2);
  v << 3.0, -3.0;
  const Vector s = straighten(v);
  CHECK(s[0] == 3.0);
  CHECK(s[1] == doctest::Approx(kTwoPi - 3.0));
  CHECK(s[1] == doctest::Approx(3.283).epsilon(1e-3));

  const Vector constant = Vector::Constant(10, 1.3);
  CHECK(straighten(constant) == constant);

  Vector ramp(500);
  for (Index i = 0; i < ramp.size(); ++i) ramp[i] = 0.3 * i - 2.0;
  const Vector back = straighten(wrap_angles(ramp));
  const double offset = back[0] - ramp[0];
  CHECK(std::abs(offset - kTwoPi * std::round(offset / kTwoPi)) < 1e-12);
  for (Index i = 0; i < ramp.size(); ++i) CHECK(back[i] - offset == doctest::Approx(ramp[i]).epsilon(1e-12));
}

TEST_CASE("wrap_angle lies in (-pi, pi]") {
  CHECK(wrap_angle(kPi) == kPi);
  CHECK(wrap_angle(-kPi) == kPi);
  CHECK(wrap_angle(3.0 * kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(0.5 + 4.0 * kPi) == doctest::Approx(0.5));
}

TEST_CASE("theoretical_bias: noiseless components match the closed form") {
  const double alpha = 0.98, omega = kTwoPi * 9.0 / 250.0;
  DemodConfig d;
  d.center_hz = 9.0;
  d.filter = EwmaSpec{alpha};
  for (double phi : {0.0, 0.5, 2.0}) {
    const Quadrature q = demodulate_components(tone(9.0, 250.0, 600, phi), d);
    for (Index t : {0, 1, 10, 50, 500}) {
      const BiasTerms b = theoretical_bias(alpha, omega, phi, t);
      CHECK(std::abs(q.in_phase[t] - (std::cos(phi) / 2.0 + b.b_y)) < 1e-10);
      CHECK(std::abs(q.quadrature[t] - (std::sin(phi) / 2.0 + b.b_y_tilde)) < 1e-10);
    }
  }
}

TEST_CASE("theoretical_bias: Monte Carlo mean under unit noise") {
  const double alpha = 0.98, omega = kTwoPi * 9.0 / 250.0, phi = 0.5;
  const Index t = 500;
  DemodConfig d;
  d.filter = EwmaSpec{alpha};
  const TimeSeries clean = tone(9.0, 250.0, t + 1, phi);
  const int reps = 10000;
  double sum = 0.0, sumsq = 0.0;
  for (int r = 0; r < reps; ++r) {
    NormalSource normal(derive_seed(5, "bias-mc", r));
    TimeSeries x = clean;
    for (Index i = 0; i < x.size(); ++i) x.samples[i] += normal();
    const double y = demodulate_components(x, d).in_phase[t];
    sum += y;
    sumsq += y * y;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sumsq / reps - mean * mean) / reps);
  const double expected = std::cos(phi) / 2.0 + theoretical_bias(alpha, omega, phi, t).b_y;
  CHECK(std::abs(mean - expected) < 3.0 * se);
}

TEST_CASE("theoretical_bias: limits and the boundary decay rate") {
  const double omega = kTwoPi * 9.0 / 250.0;
  const BiasTerms far = theoretical_bias(0.98, omega, 0.7, 5000);
  CHECK(std::abs(far.boundary_y) < 1e-40);
  CHECK(std::abs(far.boundary_y_tilde) < 1e-40);
  CHECK(far.b_y == doctest::Approx(far.oscillatory_y));

  // log(2)/log(1/alpha) = 10 samples for alpha = 2^(-1/10).
  const double alpha = std::pow(2.0, -0.1);
  for (Index t : {3, 40, 77}) {
    const BiasTerms a = theoretical_bias(alpha, omega, 1.1, t), b = theoretical_bias(alpha, omega, 1.1, t + 10);
    CHECK(b.boundary_y / a.boundary_y == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(b.boundary_y_tilde / a.boundary_y_tilde == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("bias_bound: value, monotonicity and domination") {
  CHECK(bias_bound(1.0 / 3.0) == doctest::Approx(1.0));
  double prev = 0.0;
  for (double a = 0.01; a < 0.999; a += 0.01) {
    CHECK(bias_bound(a) > prev);
    prev = bias_bound(a);
  }
  for (double a : {0.5, 0.9, 0.98})
    for (double omega = 0.05; omega < kPi / 2.0; omega += 0.1)
      for (double phi = -3.0; phi < 3.2; phi += 0.5)
        for (Index t : {200, 1000, 5000}) {
          const BiasTerms b = theoretical_bias(a, omega, phi, t);
          CHECK(std::abs(b.b_y) <= bias_bound(a));
          CHECK(std::abs(b.b_y_tilde) <= bias_bound(a));
        }
}

TEST_CASE("phase bias: zero terms, existence of the bound, direct simulation") {
  CHECK(phase_bias_from_terms(BiasTerms{}, 0.8) == 0.0);
  CHECK(phase_bias_from_terms(BiasTerms{}, 0.8, BiasForm::AsPrinted) == 0.0);

  // The denominator sqrt(2)(1 - a) - (1 + a) is positive only for a below
  // (sqrt 2 - 1)/(sqrt 2 + 1), about 0.1716.
  CHECK_FALSE(phase_bias_bound(0.9).has_value());
  CHECK_FALSE(phase_bias_bound(0.995).has_value());
  CHECK(phase_bias_bound(0.1).has_value());
  CHECK(*phase_bias_bound(0.1) == doctest::Approx(std::atan(1.1 / (std::sqrt(2.0) * 0.9 - 1.1))));

  const double alpha = 0.98, omega = kTwoPi * 9.0 / 250.0;
  DemodConfig d;
  d.filter = EwmaSpec{alpha};
  for (double phi : {0.7, -1.2, 2.5}) {
    const PhaseSeries est = complex_demodulate(tone(9.0, 250.0, 2000, phi), d);
    for (Index t : {100, 400, 1999}) {
      const double bias = phase_bias_approx(alpha, omega, phi, t);
      const double error = wrap_angle(est.values[t] - phi);
      CHECK(std::abs(error - bias) <= std::max(bias * bias, 1e-12));
    }
  }
}

TEST_CASE("complex_demodulate: Butterworth phase of an exact tone") {
  DemodConfig d;
  for (double phi : {-2.0, 0.3, 1.4, 3.0}) {
    const PhaseSeries est = complex_demodulate(tone(9.0, 250.0, 5000, phi), d).after_burn_in();
    double c = 0.0, s = 0.0;
    for (Index i = 0; i < est.size(); ++i) {
      c += std::cos(est.values[i]);
      s += std::sin(est.values[i]);
    }
    CHECK(std::abs(wrap_angle(std::atan2(s, c) - phi)) < 0.05);
  }
}

TEST_CASE("complex_demodulate: out-of-band tone barely moves the phase") {
  DemodConfig d;
  const double far = 9.0 + 10.0 * d.half_bandwidth_hz;
  const TimeSeries base = tone(9.0, 250.0, 5000, 0.4);
  TimeSeries mixed = base;
  mixed.samples += tone(far, 250.0, 5000, 1.0).samples;
  const PhaseSeries a = complex_demodulate(base, d).after_burn_in();
  const PhaseSeries b = complex_demodulate(mixed, d).after_burn_in();
  for (Index i = 0; i < a.size(); ++i) CHECK(std::abs(wrap_angle(a.values[i] - b.values[i])) < 0.1);
}

TEST_CASE("complex_demodulate: positive scaling leaves the phase unchanged") {
  NormalSource normal(2);
  TimeSeries x = tone(9.0, 250.0, 3000, 0.2);
  for (Index i = 0; i < x.size(); ++i) x.samples[i] += 0.5 * normal();
  for (const FilterSpec& f : {FilterSpec{ButterworthSpec{}}, FilterSpec{EwmaSpec{}}}) {
    DemodConfig d;
    d.filter = f;
    const PhaseSeries a = complex_demodulate(x, d);
    TimeSeries scaled = x;
    scaled.samples *= 37.5;
    const PhaseSeries b = complex_demodulate(scaled, d);
    for (Index i = a.burn_in; i < a.size(); ++i) CHECK(std::abs(wrap_angle(a.values[i] - b.values[i])) < 1e-9);
  }
}

TEST_CASE("demodulation config validation") {
  DemodConfig d;
  d.center_hz = 130.0;
  CHECK_THROWS_AS(d.validate(250.0), std::invalid_argument);
  DemodConfig e;
  e.half_bandwidth_hz = 0.0;
  CHECK_THROWS_AS(e.validate(250.0), std::invalid_argument);
  CHECK(DemodConfig{}.default_burn_in(250.0) > 0);
  CHECK(DemodConfig{}.group_delay(250.0) > 0.0);
}

TEST_CASE("phase_difference aligns burn-in and time base") {
  PhaseSeries a{Vector::LinSpaced(100, 0.0, 9.9), 250.0, 10, true, 0};
  PhaseSeries b{Vector::LinSpaced(100, 0.0, 4.95), 250.0, 30, true, 0};
  const PhaseSeries d = phase_difference(a, b);
  CHECK(d.burn_in == 30);
  CHECK(d.size() == 100);
  CHECK(d.values[99] == doctest::Approx(9.9 - 4.95));
  PhaseSeries c = b;
  c.rate_hz = 500.0;
  CHECK_THROWS_AS(phase_difference(a, c), std::invalid_argument);
}

TEST_CASE("acf_first_zero: white noise decorrelates at the first lag") {
  NormalSource normal(9);
  PhaseSeries p{Vector(5000), 250.0, 0, true, 0};
  for (Index i = 0; i < p.size(); ++i) p.values[i] = 0.1 * normal();
  CHECK(acf_first_zero(p, 4.0).tau <= 2);
}

TEST_CASE("acf_first_zero: AR(1) agrees with the direct autocorrelation") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    NormalSource normal(seed);
    PhaseSeries p{Vector(2500), 250.0, 0, true, 0};
    double v = 0.0;
    for (Index i = 0; i < p.size(); ++i) p.values[i] = v = 0.9 * v + 0.05 * normal();

    const Vector c = p.values.array() - p.values.mean();
    Index brute = 0;
    for (Index k = 1; k < c.size() && brute == 0; ++k)
      if (c.head(c.size() - k).dot(c.tail(c.size() - k)) <= 0.0) brute = k;
    REQUIRE(brute > 0);
    const Index tau = acf_first_zero(p, 10.0).tau;
    CHECK(std::abs(static_cast<double>(tau - brute)) <= 0.3 * static_cast<double>(brute));
  }
}

TEST_CASE("autocorrelation basics") {
  Vector x(4);
  x << 1.0, -1.0, 1.0, -1.0;
  const Vector r = autocorrelation(x, 3);
  CHECK(r[0] == doctest::Approx(1.0));
  CHECK(r[1] == doctest::Approx(-0.75));
  CHECK(first_zero_crossing(x) == 1);
}
