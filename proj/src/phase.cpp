#include "phaseshift/phase.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "phaseshift/critical.hpp"
#include "phaseshift/random.hpp"
#include "phaseshift/statistics.hpp"

namespace phaseshift {

PhaseSeries PhaseSeries::after_burn_in() const {
  PhaseSeries out;
  const Index keep = std::max<Index>(0, size() - burn_in);
  out.values = values.tail(keep);
  out.rate_hz = rate_hz;
  out.burn_in = 0;
  out.straightened = straightened;
  out.start_index = start_index + (size() - keep);
  return out;
}

void DemodConfig::validate(double rate_hz) const {
  if (!(rate_hz > 0.0)) throw std::invalid_argument("demod: rate must be positive");
  if (!(half_bandwidth_hz > 0.0)) throw std::invalid_argument("demod: half bandwidth must be positive");
  if (!(center_hz - half_bandwidth_hz > 0.0) || !(center_hz + half_bandwidth_hz < rate_hz / 2.0)) {
    std::ostringstream msg;
    msg << "demod: band (" << center_hz - half_bandwidth_hz << ", " << center_hz + half_bandwidth_hz
        << ") Hz must lie inside (0, " << rate_hz / 2.0 << ") Hz";
    throw std::invalid_argument(msg.str());
  }
  if (const auto* e = std::get_if<EwmaSpec>(&filter)) {
    if (e->alpha && !(*e->alpha > 0.0 && *e->alpha < 1.0))
      throw std::invalid_argument("demod: EWMA alpha must lie in (0, 1)");
  } else if (std::get<ButterworthSpec>(filter).order < 1) {
    throw std::invalid_argument("demod: Butterworth order must be at least 1");
  }
  if (burn_in && *burn_in < 0) throw std::invalid_argument("demod: burn-in must be non-negative");
}

double DemodConfig::ewma_alpha(double rate_hz) const {
  const auto& e = std::get<EwmaSpec>(filter);
  return e.alpha ? *e.alpha : ewma_alpha_for_cutoff(half_bandwidth_hz, rate_hz);
}

double DemodConfig::group_delay(double rate_hz) const {
  if (std::holds_alternative<EwmaSpec>(filter)) {
    const double a = ewma_alpha(rate_hz);
    return a / (1.0 - a);
  }
  return ButterworthLowpass(std::get<ButterworthSpec>(filter).order, half_bandwidth_hz, rate_hz).dc_group_delay();
}

Index DemodConfig::default_burn_in(double rate_hz) const {
  validate(rate_hz);
  if (std::holds_alternative<EwmaSpec>(filter)) {
    const double a = ewma_alpha(rate_hz);
    return static_cast<Index>(std::ceil(std::log(1e-3) / std::log(a)));
  }
  const Index n = static_cast<Index>(std::ceil(200.0 * rate_hz / half_bandwidth_hz)) + 16;
  const Vector step = lowpass(Vector::Ones(n), *this, rate_hz);
  Index last = 0;
  for (Index i = 0; i < n; ++i)
    if (std::abs(step[i] - 1.0) > 1e-3) last = i + 1;
  return last;
}

std::string DemodConfig::describe() const {
  std::ostringstream s;
  s << "center=" << center_hz << "Hz half_bw=" << half_bandwidth_hz << "Hz filter=";
  if (const auto* e = std::get_if<EwmaSpec>(&filter)) {
    s << "ewma";
    if (e->alpha) s << "(alpha=" << *e->alpha << ")";
  } else {
    s << "butterworth(order=" << std::get<ButterworthSpec>(filter).order << ")";
  }
  return s.str();
}

Vector lowpass(const Vector& x, const DemodConfig& cfg, double rate_hz) {
  if (std::holds_alternative<EwmaSpec>(cfg.filter)) return ewma(x, cfg.ewma_alpha(rate_hz));
  const ButterworthLowpass f(std::get<ButterworthSpec>(cfg.filter).order, cfg.half_bandwidth_hz, rate_hz);
  return f.apply(x);
}

Quadrature demodulate_components(const TimeSeries& x, const DemodConfig& cfg) {
  cfg.validate(x.rate_hz);
  const double omega = kTwoPi * cfg.center_hz / x.rate_hz;
  Vector mixed_sin(x.size()), mixed_cos(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double arg = omega * static_cast<double>(x.start_index + i);
    mixed_sin[i] = x.samples[i] * std::sin(arg);
    mixed_cos[i] = x.samples[i] * std::cos(arg);
  }
  return {lowpass(mixed_sin, cfg, x.rate_hz), lowpass(mixed_cos, cfg, x.rate_hz)};
}

PhaseSeries complex_demodulate(const TimeSeries& x, const DemodConfig& cfg) {
  const Quadrature q = demodulate_components(x, cfg);
  PhaseSeries out;
  out.values.resize(x.size());
  for (Index i = 0; i < x.size(); ++i) out.values[i] = std::atan2(q.quadrature[i], q.in_phase[i]);
  out.rate_hz = x.rate_hz;
  out.start_index = x.start_index;
  out.burn_in = cfg.burn_in ? *cfg.burn_in : cfg.default_burn_in(x.rate_hz);
  out.straightened = false;
  return out;
}

double wrap_angle(double x) {
  double r = std::fmod(x + kPi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // r in [0, 2pi): shift to (-pi, pi]
  r -= kPi;
  return r == -kPi ? kPi : r;
}

Vector wrap_angles(const Vector& v) { return v.unaryExpr([](double x) { return wrap_angle(x); }); }

Vector straighten(const Vector& wrapped) {
  Vector out(wrapped.size());
  if (wrapped.size() == 0) return out;
  double offset = 0.0;
  out[0] = wrapped[0];
  for (Index i = 1; i < wrapped.size(); ++i) {
    const double d = wrapped[i] - wrapped[i - 1];
    if (d > kPi) {
      offset -= kTwoPi * std::floor((d + kPi) / kTwoPi);
    } else if (d <= -kPi) {
      offset += kTwoPi * std::floor((kPi - d) / kTwoPi);
    }
    out[i] = wrapped[i] + offset;
  }
  return out;
}

PhaseSeries straighten_phase(const PhaseSeries& phi) {
  PhaseSeries out = phi;
  out.values = straighten(phi.values);
  out.straightened = true;
  return out;
}

PhaseSeries phase_difference(const PhaseSeries& a, const PhaseSeries& b) {
  if (a.size() != b.size() || a.start_index != b.start_index)
    throw std::invalid_argument("phase_difference: series are not on a common time base");
  if (a.rate_hz != b.rate_hz) throw std::invalid_argument("phase_difference: sampling rates differ");
  PhaseSeries out = a;
  out.values = (a.straightened ? a.values : straighten(a.values)) - (b.straightened ? b.values : straighten(b.values));
  out.burn_in = std::max(a.burn_in, b.burn_in);
  out.straightened = true;
  return out;
}

BiasTerms theoretical_bias(double alpha, double omega, double phi, Index t, BiasForm form) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("theoretical_bias: alpha must lie in (0, 1)");
  if (t < 0) throw std::invalid_argument("theoretical_bias: t must be non-negative");
  const double denom = 1.0 - 2.0 * alpha * std::cos(2.0 * omega) + alpha * alpha;
  if (!(denom > 0.0)) throw NumericalError("theoretical_bias: 1 - 2 alpha cos(2 omega) + alpha^2 vanishes");

  const double theta = 2.0 * omega * static_cast<double>(t) + phi;
  const double decay = std::pow(alpha, static_cast<double>(t + 1));
  const double g = 1.0 - alpha;

  BiasTerms b;
  if (form == BiasForm::Derived) {
    b.oscillatory_y = -g * (std::cos(theta) - alpha * std::cos(theta + 2.0 * omega)) / (2.0 * denom);
  } else {
    b.oscillatory_y = g * (std::cos(theta) + alpha * std::cos(theta + 2.0 * omega)) / (2.0 * denom);
  }
  b.oscillatory_y_tilde = g * (std::sin(theta) - alpha * std::sin(theta + 2.0 * omega)) / (2.0 * denom);
  b.boundary_y =
      -decay / 2.0 * (std::cos(phi) - g * (std::cos(phi - 2.0 * omega) - alpha * std::cos(phi)) / denom);
  b.boundary_y_tilde =
      -decay / 2.0 * (std::sin(phi) + g * (std::sin(phi - 2.0 * omega) - alpha * std::sin(phi)) / denom);
  b.b_y = b.oscillatory_y + b.boundary_y;
  b.b_y_tilde = b.oscillatory_y_tilde + b.boundary_y_tilde;
  return b;
}

double bias_bound(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("bias_bound: alpha must lie in (0, 1)");
  return (1.0 + alpha) / (2.0 * (1.0 - alpha));
}

double phase_bias_from_terms(const BiasTerms& terms, double phi, BiasForm form) {
  const double c = std::cos(phi), s = std::sin(phi);
  if (form == BiasForm::Derived) {
    // atan2(E y~, E y) - phi with E y = cos(phi)/2 + b_y, E y~ = sin(phi)/2 + b_y~.
    return std::atan2(c * terms.b_y_tilde - s * terms.b_y, 0.5 + c * terms.b_y + s * terms.b_y_tilde);
  }
  return std::atan((c * terms.b_y_tilde + s * terms.b_y) / (1.0 + c * terms.b_y + s * terms.b_y_tilde));
}

double phase_bias_approx(double alpha, double omega, double phi, Index t, BiasForm form) {
  return phase_bias_from_terms(theoretical_bias(alpha, omega, phi, t, form), phi, form);
}

std::optional<double> phase_bias_bound(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("phase_bias_bound: alpha must lie in (0, 1)");
  const double denom = std::sqrt(2.0) * (1.0 - alpha) - (1.0 + alpha);
  if (!(denom > 0.0)) return std::nullopt;
  return std::atan((1.0 + alpha) / denom);
}

Vector autocorrelation(const Vector& x, Index max_lag) {
  const Index n = x.size();
  if (n < 2) throw std::invalid_argument("autocorrelation: need at least two samples");
  max_lag = std::min(max_lag, n - 1);
  const Vector c = x.array() - x.mean();
  const double c0 = c.squaredNorm();
  Vector r = Vector::Zero(max_lag + 1);
  if (!(c0 > 0.0)) return r;
  for (Index k = 0; k <= max_lag; ++k) r[k] = c.head(n - k).dot(c.tail(n - k)) / c0;
  return r;
}

std::optional<Index> first_zero_crossing(const Vector& x) {
  const Index n = x.size();
  if (n < 2) return std::nullopt;
  const Vector c = x.array() - x.mean();
  const double c0 = c.squaredNorm();
  if (!(c0 > 0.0)) return std::nullopt;
  for (Index k = 1; k < n; ++k)
    if (c.head(n - k).dot(c.tail(n - k)) <= 0.0) return k;
  return std::nullopt;
}

TauEstimate acf_first_zero(const PhaseSeries& phi, double segment_s, TauAggregate aggregate) {
  if (!(segment_s > 0.0)) throw std::invalid_argument("acf_first_zero: segment length must be positive");
  const PhaseSeries usable = phi.after_burn_in();
  const Index seg = static_cast<Index>(std::llround(segment_s * phi.rate_hz));
  if (seg < 2 || usable.size() < seg)
    throw std::invalid_argument("acf_first_zero: series shorter than one segment after burn-in");

  TauEstimate est;
  for (Index start = 0; start + seg <= usable.size(); start += seg) {
    const Vector raw = usable.values.segment(start, seg);
    const double cs = raw.array().cos().sum(), sn = raw.array().sin().sum();
    const double centre = std::atan2(sn, cs);
    const Vector centred = (raw.array() - centre).unaryExpr([](double v) { return wrap_angle(v); });
    if (auto k = first_zero_crossing(centred)) {
      est.per_segment.push_back(*k);
    } else {
      ++est.segments_dropped;
    }
  }
  if (est.per_segment.empty())
    throw NumericalError("acf_first_zero: no segment has an autocorrelation zero crossing");

  if (aggregate == TauAggregate::Mean) {
    const double sum = std::accumulate(est.per_segment.begin(), est.per_segment.end(), 0.0);
    est.tau = static_cast<Index>(std::llround(sum / static_cast<double>(est.per_segment.size())));
  } else {
    std::vector<Index> v = est.per_segment;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    est.tau = v.size() % 2 ? v[m] : static_cast<Index>(std::llround(0.5 * static_cast<double>(v[m - 1] + v[m])));
  }
  est.tau = std::max<Index>(est.tau, 1);
  return est;
}

BurnInCalibration calibrate_nburn(const NullSignalConfig& sim, double alpha_level, std::size_t replicates,
                                  std::uint64_t seed) {
  if (replicates < 100) throw std::invalid_argument("calibrate_nburn: need at least 100 replicates");
  if (!(alpha_level > 0.0 && alpha_level < 1.0))
    throw std::invalid_argument("calibrate_nburn: alpha must lie in (0, 1)");

  const Index conservative = 4 * sim.demod.default_burn_in(sim.rate_hz) + 64;
  const Index n = sim.length;
  const Index total = conservative + n;

  // Reference critical values from a stationary window beyond the conservative burn-in.
  std::vector<double> ref1(replicates), ref2(replicates);
  std::vector<Vector> fresh(replicates);
  parallel_for(replicates, [&](std::size_t b) {
    const Vector ref = simulate_raw_phase(sim, total, PhaseProfile{}, derive_seed(seed, "nburn-reference", b), true);
    ref1[b] = cusum_stat(ref.tail(n)).max_value;
    ref2[b] = pd_stat(ref.tail(n)).max_value;
    fresh[b] = simulate_raw_phase(sim, total, PhaseProfile{}, derive_seed(seed, "nburn-fresh", b), true);
  });
  const double crit1 = upper_quantile(ref1, alpha_level);
  const double crit2 = upper_quantile(ref2, alpha_level);
  // Both the reference quantile and the fresh rate carry binomial noise, so the
  // difference of two stationary samples has twice the single-sample variance.
  const double se = std::sqrt(2.0 * alpha_level * (1.0 - alpha_level) / static_cast<double>(replicates));
  const double slack = 2.0 * se;

  const Index step = std::max<Index>(1, conservative / 128);
  auto rates_at = [&](Index nb) {
    std::size_t r1 = 0, r2 = 0;
    for (const auto& v : fresh) {
      if (cusum_stat(v.segment(nb, n)).max_value > crit1) ++r1;
      if (pd_stat(v.segment(nb, n)).max_value > crit2) ++r2;
    }
    return std::pair{static_cast<double>(r1) / replicates, static_cast<double>(r2) / replicates};
  };

  BurnInCalibration out;
  out.conservative = conservative;
  const auto [c1, c2] = rates_at(conservative);
  // A guard against a non-stationary reference window, not a test of the target.
  if (c1 > alpha_level + 4.0 * se || c2 > alpha_level + 4.0 * se) {
    std::ostringstream msg;
    msg << "calibrate_nburn: rejection rates " << c1 << " (S1), " << c2 << " (S2) exceed " << alpha_level
        << " even at burn-in " << conservative;
    throw NumericalError(msg.str());
  }
  // First grid point from the start that meets the target. Scanning upwards
  // keeps the result stable: sampling noise matters only near the end of the
  // transient, not at every point of the stationary stretch.
  Index best = conservative;
  out.rate_s1 = c1;
  out.rate_s2 = c2;
  for (Index nb = 0; nb < conservative; nb += step) {
    const auto [r1, r2] = rates_at(nb);
    if (r1 <= alpha_level + slack && r2 <= alpha_level + slack) {
      best = nb;
      out.rate_s1 = r1;
      out.rate_s2 = r2;
      break;
    }
  }
  out.n_burn = best;
  return out;
}

}  // namespace phaseshift
