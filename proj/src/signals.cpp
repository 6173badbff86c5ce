#include "phaseshift/signals.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "phaseshift/phase.hpp"
#include "phaseshift/random.hpp"

namespace phaseshift {

double PhaseProfile::phase_at(Index t) const {
  double phi = base_phase;
  for (const auto& e : events) {
    if (e.index > t) break;
    phi += e.delta;
  }
  return phi;
}

Vector PhaseProfile::phase_path(Index n) const {
  Vector out(n);
  double phi = base_phase;
  std::size_t next = 0;
  for (Index t = 0; t < n; ++t) {
    while (next < events.size() && events[next].index <= t) phi += events[next++].delta;
    out[t] = phi;
  }
  return out;
}

TimeSeries gen_oscillator(double f0_hz, double rate_hz, const PhaseProfile& profile, Index n) {
  if (!(rate_hz > 0.0)) throw std::invalid_argument("gen_oscillator: rate must be positive");
  if (!(f0_hz > 0.0) || f0_hz >= rate_hz / 2.0) {
    std::ostringstream msg;
    msg << "gen_oscillator: frequency " << f0_hz << " Hz must lie in (0, " << rate_hz / 2.0
        << ") Hz (below Nyquist for rate " << rate_hz << " Hz)";
    throw std::invalid_argument(msg.str());
  }
  if (n <= 0) throw std::invalid_argument("gen_oscillator: sample count must be positive");
  for (std::size_t i = 1; i < profile.events.size(); ++i)
    if (profile.events[i].index <= profile.events[i - 1].index)
      throw std::invalid_argument("gen_oscillator: profile event indices must be strictly increasing");

  const Vector phi = profile.phase_path(n);
  const double omega = kTwoPi * f0_hz / rate_hz;
  TimeSeries out{Vector(n), rate_hz, 0};
  for (Index t = 0; t < n; ++t) out.samples[t] = std::sin(omega * static_cast<double>(t) + phi[t]);
  return out;
}

double rms(const Vector& v) {
  if (v.size() == 0) return 0.0;
  return std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

TimeSeries mix_noise(const TimeSeries& clean, double r, std::uint64_t seed) {
  if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("mix_noise: weight r must lie in (0, 1)");
  const double signal_rms = rms(clean.samples);
  if (!(signal_rms > 0.0)) throw std::invalid_argument("mix_noise: clean signal has zero power");

  NormalSource normal(seed);
  Vector noise(clean.size());
  for (Index i = 0; i < noise.size(); ++i) noise[i] = normal();
  const double noise_rms = rms(noise);

  TimeSeries out = clean;
  out.samples = (r / signal_rms) * clean.samples + ((1.0 - r) / noise_rms) * noise;
  return out;
}

double snr_from_weight(double r) {
  if (!(r > 0.0 && r < 1.0))
    throw std::invalid_argument("snr_from_weight: r must lie strictly inside (0, 1)");
  return 10.0 * std::log10((r * r) / ((1.0 - r) * (1.0 - r)));
}

double weight_from_snr(double snr_db) {
  if (!std::isfinite(snr_db)) throw std::invalid_argument("weight_from_snr: SNR must be finite");
  const double k = std::pow(10.0, snr_db / 20.0);
  return k / (1.0 + k);
}

PhaseProfile gen_shift_profile(std::size_t count, double delta_min, Index isi_min, Index n,
                               std::uint64_t seed, Index first_index) {
  if (!(delta_min > 0.0) || delta_min >= kPi)
    throw std::invalid_argument("gen_shift_profile: delta_min must lie in (0, pi)");
  if (isi_min <= 0) throw std::invalid_argument("gen_shift_profile: isi_min must be positive");

  Rng rng(seed);
  PhaseProfile profile;
  Index t = first_index;
  for (std::size_t i = 0; i < count; ++i) {
    const double gap = -static_cast<double>(isi_min) * std::log1p(-uniform01(rng));
    t += isi_min + static_cast<Index>(std::floor(gap));
    const double magnitude = delta_min + (kPi - delta_min) * uniform01(rng);
    const double sign = uniform01(rng) < 0.5 ? -1.0 : 1.0;
    if (t >= n) {
      ++profile.truncated;
      continue;
    }
    profile.events.push_back({t, sign * magnitude});
  }
  return profile;
}

double RosslerParams::omega1() const { return kTwoPi * f0_hz + delta_omega; }
double RosslerParams::omega2() const { return kTwoPi * f0_hz - delta_omega; }

void RosslerParams::validate() const {
  if (!(internal_rate_hz > 0.0) || !(output_rate_hz > 0.0))
    throw std::invalid_argument("rossler: sampling rates must be positive");
  const double ratio = internal_rate_hz / output_rate_hz;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0)
    throw std::invalid_argument("rossler: internal rate must be an integer multiple of the output rate");
  if (burn_in_s < 0.0) throw std::invalid_argument("rossler: burn-in must be non-negative");
  if (!(init_box > 0.0)) throw std::invalid_argument("rossler: initial-condition box must be positive");
}

namespace {

struct AttractorCoefficients {
  double a, b, c;
};

inline void attractor_rhs(const double* s, double omega, double coupling_term, const AttractorCoefficients& k,
                          double* d) {
  d[0] = omega * (-s[1] - s[2]) + coupling_term;
  d[1] = omega * (s[0] + k.a * s[1]);
  d[2] = omega * (k.b + s[2] * (s[0] - k.c));
}

// Fixed-step RK4. Records the state every `stride` steps after `skip` steps.
template <std::size_t Dim, typename Rhs, typename Record>
void integrate_rk4(std::array<double, Dim>& state, double h, Index skip, Index records, Index stride,
                   double bound, Rhs&& rhs, Record&& record) {
  using State = std::array<double, Dim>;
  State k1, k2, k3, k4, tmp;
  const Index total = skip + (records - 1) * stride + 1;
  Index recorded = 0;
  for (Index step = 0; step < total; ++step) {
    if (step >= skip && (step - skip) % stride == 0) record(recorded++, state);
    if (step + 1 == total) break;
    rhs(state, k1);
    for (std::size_t j = 0; j < Dim; ++j) tmp[j] = state[j] + 0.5 * h * k1[j];
    rhs(tmp, k2);
    for (std::size_t j = 0; j < Dim; ++j) tmp[j] = state[j] + 0.5 * h * k2[j];
    rhs(tmp, k3);
    for (std::size_t j = 0; j < Dim; ++j) tmp[j] = state[j] + h * k3[j];
    rhs(tmp, k4);
    bool finite = true;
    for (std::size_t j = 0; j < Dim; ++j) {
      state[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
      if (!(std::abs(state[j]) <= bound)) finite = false;
    }
    if (!finite) {
      std::ostringstream msg;
      msg << "rossler: trajectory diverged (|state| > " << bound << ") at t = "
          << static_cast<double>(step + 1) * h << " s";
      throw NumericalError(msg.str());
    }
  }
}

struct Grid {
  double h;
  Index skip, records, stride;
};

Grid make_grid(const RosslerParams& p, double duration_s) {
  p.validate();
  if (!(duration_s > 0.0)) throw std::invalid_argument("rossler: duration must be positive");
  Grid g;
  g.h = 1.0 / p.internal_rate_hz;
  g.stride = static_cast<Index>(std::llround(p.internal_rate_hz / p.output_rate_hz));
  g.skip = static_cast<Index>(std::llround(p.burn_in_s * p.internal_rate_hz));
  g.records = static_cast<Index>(std::llround(duration_s * p.output_rate_hz));
  if (g.records < 1) throw std::invalid_argument("rossler: duration shorter than one output sample");
  return g;
}

TimeSeries empty_channel(const RosslerParams& p, Index n) { return TimeSeries{Vector(n), p.output_rate_hz, 0}; }

}  // namespace

RosslerState rossler_initial_state(const RosslerParams& params, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "rossler-initial"));
  RosslerState s;
  for (auto& v : s) v = params.init_box * (2.0 * uniform01(rng) - 1.0);
  // Negative z drives x past c and z(x - c) then runs away; the attractor has z >= 0.
  s[2] = std::abs(s[2]);
  s[5] = std::abs(s[5]);
  return s;
}

RosslerTrajectory simulate_rossler(const RosslerParams& params, double duration_s, std::uint64_t seed) {
  return simulate_rossler_from(params, duration_s, rossler_initial_state(params, seed));
}

RosslerTrajectory simulate_rossler_from(const RosslerParams& params, double duration_s,
                                        const RosslerState& initial) {
  const Grid g = make_grid(params, duration_s);
  const AttractorCoefficients k{params.a, params.b, params.c};
  const double w1 = params.omega1(), w2 = params.omega2(), cpl = params.coupling;

  RosslerTrajectory out;
  for (auto& ch : out.first) ch = empty_channel(params, g.records);
  for (auto& ch : out.second) ch = empty_channel(params, g.records);

  RosslerState state = initial;
  integrate_rk4<6>(
      state, g.h, g.skip, g.records, g.stride, params.divergence_bound,
      [&](const RosslerState& s, RosslerState& d) {
        attractor_rhs(s.data(), w1, cpl * (s[0] - s[3]), k, d.data());
        attractor_rhs(s.data() + 3, w2, cpl * (s[3] - s[0]), k, d.data() + 3);
      },
      [&](Index i, const RosslerState& s) {
        for (int j = 0; j < 3; ++j) {
          out.first[j].samples[i] = s[j];
          out.second[j].samples[i] = s[j + 3];
        }
      });
  return out;
}

std::array<TimeSeries, 3> simulate_rossler_single(const RosslerParams& params, double duration_s,
                                                  const RosslerState& initial) {
  const Grid g = make_grid(params, duration_s);
  const AttractorCoefficients k{params.a, params.b, params.c};
  const double w1 = params.omega1();

  std::array<TimeSeries, 3> out;
  for (auto& ch : out) ch = empty_channel(params, g.records);
  std::array<double, 3> state{initial[0], initial[1], initial[2]};
  integrate_rk4<3>(
      state, g.h, g.skip, g.records, g.stride, params.divergence_bound,
      [&](const std::array<double, 3>& s, std::array<double, 3>& d) {
        attractor_rhs(s.data(), w1, 0.0, k, d.data());
      },
      [&](Index i, const std::array<double, 3>& s) {
        for (int j = 0; j < 3; ++j) out[j].samples[i] = s[j];
      });
  return out;
}

PhaseSeries poincare_phase(const TimeSeries& x, const TimeSeries& y) {
  if (x.size() != y.size()) throw std::invalid_argument("poincare_phase: x and y lengths differ");
  PhaseSeries wrapped;
  wrapped.values.resize(x.size());
  wrapped.rate_hz = x.rate_hz;
  wrapped.start_index = x.start_index;
  for (Index i = 0; i < x.size(); ++i) {
    if (x.samples[i] == 0.0 && y.samples[i] == 0.0) {
      std::ostringstream msg;
      msg << "poincare_phase: angle undefined at sample " << i << " (x = y = 0)";
      throw std::invalid_argument(msg.str());
    }
    wrapped.values[i] = std::atan2(y.samples[i], x.samples[i]);
  }
  return straighten_phase(wrapped);
}

}  // namespace phaseshift
