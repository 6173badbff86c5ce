#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "phaseshift/gev.hpp"
#include "phaseshift/random.hpp"
#include "phaseshift/phase.hpp"
#include "phaseshift/signals.hpp"
#include "phaseshift/statistics.hpp"

namespace phaseshift {

// Parametric bootstrap model: unit-amplitude oscillator plus i.i.d. normal
// noise mixed at snr_db, demodulated with `demod`, burn-in discarded.
struct NullSignalConfig {
  double f0_hz = 9.0;
  double rate_hz = 250.0;
  double snr_db = 0.0;
  DemodConfig demod{};
  Index length = 1250;  // samples kept after burn-in

  Index burn_in() const { return demod.burn_in ? *demod.burn_in : demod.default_burn_in(rate_hz); }
  void validate() const;
};

// Straightened phase of the full simulated record (burn-in included). The
// profile's steps are in full-record sample indices; a uniformly random base
// phase is added to the profile's own.
Vector simulate_raw_phase(const NullSignalConfig& sim, Index total, const PhaseProfile& profile,
                          std::uint64_t seed, bool straightened = true);

// `length` post-burn-in samples; profile indices are relative to the first kept sample.
PhaseSeries simulate_phase(const NullSignalConfig& sim, const PhaseProfile& profile, std::uint64_t seed);

struct CriticalValue {
  double alpha = 0.05;
  double phi_alpha = 0.0;
  Index length = 0;
  std::vector<double> maxima;  // sorted ascending
  std::optional<GevFit> gev;
  bool gev_converged = false;

  double at(double a) const { return upper_quantile_sorted(maxima, a); }
};

// Empirical (1 - alpha) quantile of the null maximum over B simulated records,
// with a GEV fit of the same maxima.
CriticalValue parametric_critical(StatKind kind, const NullSignalConfig& sim, double alpha, std::size_t replicates,
                                  std::uint64_t seed);

// Null maxima on a log-spaced grid of record lengths, from prefixes of the same
// simulated records. Quantiles are interpolated linearly in log length.
class CriticalTable {
public:
  CriticalTable() = default;
  CriticalTable(StatKind kind, std::vector<Index> lengths, std::vector<std::vector<double>> sorted_maxima);

  static CriticalTable build(StatKind kind, const NullSignalConfig& sim, Index max_length, std::size_t replicates,
                             std::uint64_t seed, Index min_length = 16, int per_octave = 4);

  StatKind kind() const { return kind_; }
  const std::vector<Index>& lengths() const { return lengths_; }
  const std::vector<std::vector<double>>& maxima() const { return maxima_; }
  std::size_t replicates() const { return maxima_.empty() ? 0 : maxima_.front().size(); }

  double critical(Index length, double alpha) const;

private:
  StatKind kind_ = StatKind::Cusum;
  std::vector<Index> lengths_;
  std::vector<std::vector<double>> maxima_;
};

struct BlockBootstrap {
  Index block_length = 0;
  Index blocks = 0;
  std::vector<double> maxima;  // sorted surrogate S1 values

  double critical(double alpha) const { return upper_quantile_sorted(maxima, alpha); }
};

// Non-overlapping blocks of length L = 2 tau; the trailing N mod L samples are
// left out of the permutation.
Vector block_surrogate(const Vector& phi, Index block_length, const std::vector<Index>& permutation);

std::vector<Index> random_permutation(Index k, Rng& rng);

BlockBootstrap block_bootstrap(const Vector& phi, Index tau, std::size_t replicates, std::uint64_t seed);

double block_bootstrap_critical(const Vector& phi, Index tau, double alpha, std::size_t replicates,
                                std::uint64_t seed);

}  // namespace phaseshift
