#include "phaseshift/critical.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "phaseshift/random.hpp"

namespace phaseshift {

void NullSignalConfig::validate() const {
  if (!(rate_hz > 0.0)) throw std::invalid_argument("null model: rate must be positive");
  if (!(f0_hz > 0.0) || f0_hz >= rate_hz / 2.0) throw std::invalid_argument("null model: f0 must be below Nyquist");
  if (!std::isfinite(snr_db)) throw std::invalid_argument("null model: SNR must be finite");
  if (length < 4) throw std::invalid_argument("null model: need at least 4 samples after burn-in");
  demod.validate(rate_hz);
}

Vector simulate_raw_phase(const NullSignalConfig& sim, Index total, const PhaseProfile& profile, std::uint64_t seed,
                          bool straightened) {
  Rng rng(derive_seed(seed, "base-phase"));
  PhaseProfile p = profile;
  p.base_phase += kTwoPi * uniform01(rng) - kPi;
  const TimeSeries clean = gen_oscillator(sim.f0_hz, sim.rate_hz, p, total);
  const TimeSeries noisy = mix_noise(clean, weight_from_snr(sim.snr_db), derive_seed(seed, "noise"));
  DemodConfig demod = sim.demod;
  demod.burn_in = 0;
  const PhaseSeries wrapped = complex_demodulate(noisy, demod);
  return straightened ? straighten(wrapped.values) : wrapped.values;
}

PhaseSeries simulate_phase(const NullSignalConfig& sim, const PhaseProfile& profile, std::uint64_t seed) {
  const Index burn = sim.burn_in();
  PhaseProfile shifted = profile;
  for (auto& e : shifted.events) e.index += burn;
  const Vector raw = simulate_raw_phase(sim, burn + sim.length, shifted, seed, true);
  PhaseSeries out;
  out.values = raw.tail(sim.length);
  out.rate_hz = sim.rate_hz;
  out.burn_in = 0;
  out.straightened = true;
  out.start_index = burn;
  return out;
}

CriticalValue parametric_critical(StatKind kind, const NullSignalConfig& sim, double alpha, std::size_t replicates,
                                  std::uint64_t seed) {
  if (replicates < 200) throw std::invalid_argument("parametric_critical: need at least 200 replicates");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("parametric_critical: alpha must lie in (0, 1)");
  sim.validate();

  CriticalValue cv;
  cv.alpha = alpha;
  cv.length = sim.length;
  cv.maxima.resize(replicates);
  parallel_for(replicates, [&](std::size_t b) {
    const PhaseSeries phi = simulate_phase(sim, PhaseProfile{}, derive_seed(seed, "parametric-null", b));
    cv.maxima[b] = max_stat(kind, phi.values);
  });
  std::sort(cv.maxima.begin(), cv.maxima.end());
  if (!(cv.maxima.back() > cv.maxima.front()))
    throw NumericalError("parametric_critical: all bootstrap maxima are equal");
  cv.phi_alpha = upper_quantile_sorted(cv.maxima, alpha);
  try {
    cv.gev = fit_gev(cv.maxima);
    cv.gev_converged = true;
  } catch (const GevFitError& e) {
    cv.gev = e.fallback();
  }
  return cv;
}

CriticalTable::CriticalTable(StatKind kind, std::vector<Index> lengths, std::vector<std::vector<double>> sorted_maxima)
    : kind_(kind), lengths_(std::move(lengths)), maxima_(std::move(sorted_maxima)) {
  if (lengths_.empty() || lengths_.size() != maxima_.size())
    throw std::invalid_argument("CriticalTable: lengths and maxima disagree");
}

CriticalTable CriticalTable::build(StatKind kind, const NullSignalConfig& sim, Index max_length,
                                   std::size_t replicates, std::uint64_t seed, Index min_length, int per_octave) {
  if (replicates < 200) throw std::invalid_argument("CriticalTable: need at least 200 replicates");
  if (min_length < 4 || max_length < min_length) throw std::invalid_argument("CriticalTable: bad length range");
  NullSignalConfig s = sim;
  s.length = max_length;
  s.validate();

  std::vector<Index> lengths;
  for (int i = 0;; ++i) {
    const auto n = static_cast<Index>(std::llround(min_length * std::pow(2.0, static_cast<double>(i) / per_octave)));
    if (n >= max_length) break;
    if (lengths.empty() || n > lengths.back()) lengths.push_back(n);
  }
  lengths.push_back(max_length);

  std::vector<std::vector<double>> per_replicate(replicates);
  parallel_for(replicates, [&](std::size_t b) {
    const PhaseSeries phi = simulate_phase(s, PhaseProfile{}, derive_seed(seed, "table-null", b));
    auto& row = per_replicate[b];
    row.resize(lengths.size());
    if (kind == StatKind::PhaseDerivative) {
      // Prefix maxima of s2 give every length in one pass.
      double best = 0.0;
      std::size_t j = 0;
      for (Index t = 2; t <= max_length - 1 && j < lengths.size(); ++t) {
        best = std::max(best, std::abs(phi.values[t] - phi.values[t - 2]) / 2.0);
        while (j < lengths.size() && lengths[j] - 1 == t) row[j++] = best;
      }
    } else {
      for (std::size_t j = 0; j < lengths.size(); ++j) row[j] = max_stat(kind, phi.values.head(lengths[j]));
    }
  });

  std::vector<std::vector<double>> maxima(lengths.size(), std::vector<double>(replicates));
  for (std::size_t b = 0; b < replicates; ++b)
    for (std::size_t j = 0; j < lengths.size(); ++j) maxima[j][b] = per_replicate[b][j];
  for (auto& m : maxima) std::sort(m.begin(), m.end());
  return CriticalTable(kind, std::move(lengths), std::move(maxima));
}

double CriticalTable::critical(Index length, double alpha) const {
  if (lengths_.empty()) throw std::logic_error("CriticalTable: empty table");
  if (length <= lengths_.front()) return upper_quantile_sorted(maxima_.front(), alpha);
  if (length >= lengths_.back()) return upper_quantile_sorted(maxima_.back(), alpha);
  const auto hi = static_cast<std::size_t>(std::upper_bound(lengths_.begin(), lengths_.end(), length) - lengths_.begin());
  const std::size_t lo = hi - 1;
  const double q0 = upper_quantile_sorted(maxima_[lo], alpha);
  const double q1 = upper_quantile_sorted(maxima_[hi], alpha);
  const double w = std::log(static_cast<double>(length) / lengths_[lo]) /
                   std::log(static_cast<double>(lengths_[hi]) / lengths_[lo]);
  return q0 + w * (q1 - q0);
}

std::vector<Index> random_permutation(Index k, Rng& rng) {
  std::vector<Index> p(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) p[i] = i;
  for (Index i = k - 1; i > 0; --i) {
    const auto j = static_cast<Index>(uniform01(rng) * static_cast<double>(i + 1));
    std::swap(p[i], p[std::min(j, i)]);
  }
  return p;
}

Vector block_surrogate(const Vector& phi, Index block_length, const std::vector<Index>& permutation) {
  const auto k = static_cast<Index>(permutation.size());
  if (block_length <= 0 || k * block_length > phi.size())
    throw std::invalid_argument("block_surrogate: blocks exceed the series");
  Vector out(k * block_length);
  for (Index b = 0; b < k; ++b)
    out.segment(b * block_length, block_length) = phi.segment(permutation[b] * block_length, block_length);
  return out;
}

BlockBootstrap block_bootstrap(const Vector& phi, Index tau, std::size_t replicates, std::uint64_t seed) {
  if (tau < 1) throw std::invalid_argument("block_bootstrap: tau must be positive");
  if (replicates < 1) throw std::invalid_argument("block_bootstrap: need at least one replicate");
  const Index l = 2 * tau;
  const Index k = phi.size() / l;
  if (k < 4) {
    std::ostringstream msg;
    msg << "block_bootstrap: only " << k << " blocks of length " << l << " fit in " << phi.size()
        << " samples; need at least 4";
    throw std::invalid_argument(msg.str());
  }
  const Index m = k * l;
  const Vector used = phi.head(m);
  const Vector centred = used.array() - used.mean();

  // Within-block running sums, and the CUSUM weights at each surrogate position.
  Eigen::MatrixXd prefix(l, k);
  for (Index b = 0; b < k; ++b) {
    double acc = 0.0;
    for (Index j = 0; j < l; ++j) {
      acc += centred[b * l + j];
      prefix(j, b) = acc;
    }
  }
  Vector weight = Vector::Zero(m);
  for (Index t = 2; t <= m - 1; ++t)
    weight[t - 1] = std::sqrt(static_cast<double>(m) / (static_cast<double>(t) * static_cast<double>(m - t)));

  BlockBootstrap out;
  out.block_length = l;
  out.blocks = k;
  out.maxima.resize(replicates);
  parallel_for(replicates, [&](std::size_t r) {
    Rng rng(derive_seed(seed, "block-permutation", r));
    const auto perm = random_permutation(k, rng);
    double before = 0.0, best = 0.0;
    for (Index b = 0; b < k; ++b) {
      const auto col = prefix.col(perm[b]);
      const Index base = b * l;
      for (Index j = 0; j < l; ++j) best = std::max(best, std::abs(before + col[j]) * weight[base + j]);
      before += col[l - 1];
    }
    out.maxima[r] = best;
  });
  std::sort(out.maxima.begin(), out.maxima.end());
  return out;
}

double block_bootstrap_critical(const Vector& phi, Index tau, double alpha, std::size_t replicates,
                                std::uint64_t seed) {
  return block_bootstrap(phi, tau, replicates, seed).critical(alpha);
}

}  // namespace phaseshift
