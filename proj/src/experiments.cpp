#include "phaseshift/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "phaseshift/phase.hpp"
#include "phaseshift/random.hpp"

namespace phaseshift {

namespace {

Index rounded_delay(const DemodConfig& demod, double rate_hz) {
  return static_cast<Index>(std::llround(demod.group_delay(rate_hz)));
}

std::vector<Index> corrected_indices(const std::vector<ShiftEvent>& events, Index delay) {
  std::vector<Index> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back(e.index - delay);
  return out;
}

void check_common(std::size_t datasets, const std::vector<double>& alphas, const std::vector<Method>& methods,
                  const char* who) {
  if (datasets == 0) throw std::invalid_argument(std::string(who) + ": need at least one dataset");
  if (alphas.size() < 3) throw std::invalid_argument(std::string(who) + ": need at least 3 significance levels");
  for (double a : alphas)
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument(std::string(who) + ": alpha must lie in (0, 1)");
  if (methods.empty()) throw std::invalid_argument(std::string(who) + ": no methods selected");
}

// Detections of one method on every dataset at every alpha, indexed [alpha][dataset].
std::vector<std::vector<std::vector<Index>>> detect_grid(const std::vector<PhaseSeries>& data, Method method,
                                                         const std::vector<double>& alphas, DetectorConfig base,
                                                         const CriticalTable* table, Index delay,
                                                         std::uint64_t seed) {
  std::vector<std::vector<std::vector<Index>>> out(alphas.size(),
                                                   std::vector<std::vector<Index>>(data.size()));
  parallel_for(data.size(), [&](std::size_t d) {
    BootstrapCache cache;
    DetectorConfig cfg = base;
    cfg.method = method;
    cfg.seed = derive_seed(seed, "detect", d);
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      cfg.alpha = alphas[a];
      out[a][d] = corrected_indices(detect(data[d], cfg, table, &cache).events, delay);
    }
  });
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace

std::vector<double> default_alpha_grid() { return {0.005, 0.01, 0.02, 0.03, 0.05, 0.075, 0.1, 0.15, 0.2}; }

std::vector<Method> all_methods() {
  return {Method::CusumParametric, Method::CusumBlock, Method::PdParametric, Method::PdThreshold};
}

DemodConfig rossler_demod() {
  DemodConfig d;
  d.center_hz = 9.25;
  d.half_bandwidth_hz = 0.15;
  return d;
}

std::vector<ShiftEvent> rossler_truth(const RosslerTrajectory& traj, double smoothing_s, double tracking_s) {
  const PhaseSeries a = poincare_phase(traj.first[0], traj.first[1]);
  const PhaseSeries b = poincare_phase(traj.second[0], traj.second[1]);
  return mark_phase_slips(phase_difference(a, b), smoothing_s, tracking_s);
}

PhaseSeries rossler_observed_phase(const RosslerTrajectory& traj, const DemodConfig& demod) {
  return phase_difference(complex_demodulate(traj.first[0], demod), complex_demodulate(traj.second[0], demod));
}

Index rossler_tau(const RosslerParams& params, const DemodConfig& demod, const TauOptions& options,
                  std::uint64_t seed) {
  if (options.datasets == 0) throw std::invalid_argument("rossler_tau: need at least one dataset");
  RosslerParams strong = params;
  strong.coupling = options.coupling;
  std::vector<Index> taus(options.datasets);
  parallel_for(options.datasets, [&](std::size_t i) {
    const RosslerTrajectory traj = simulate_rossler(strong, options.duration_s, derive_seed(seed, "tau", i));
    taus[i] = acf_first_zero(rossler_observed_phase(traj, demod), options.segment_s).tau;
  });
  return std::accumulate(taus.begin(), taus.end(), Index{0}) / static_cast<Index>(taus.size());
}

Index oscillator_tau(const NullSignalConfig& sim, std::uint64_t seed, Index length, double segment_s) {
  NullSignalConfig longer = sim;
  longer.length = length;
  return acf_first_zero(simulate_phase(longer, PhaseProfile{}, derive_seed(seed, "tau")), segment_s).tau;
}

const MethodRoc& BenchmarkResult::at(Method m) const {
  for (const auto& r : methods)
    if (r.method == m) return r;
  throw std::invalid_argument(std::string("benchmark result has no method ") + to_string(m));
}

void OscillatorBenchmarkConfig::validate() const {
  check_common(datasets, alphas, methods, "oscillator benchmark");
  sim.validate();
  if (shifts == 0) throw std::invalid_argument("oscillator benchmark: need at least one shift per dataset");
  if (!(delta_min > 0.0 && delta_min <= kPi)) throw std::invalid_argument("oscillator benchmark: delta_min in (0, pi]");
  if (generation_isi < 1 || isi_min < 1 || n_min < 4)
    throw std::invalid_argument("oscillator benchmark: generation_isi, isi_min and n_min must be positive");
  if (tolerance && *tolerance < 1) throw std::invalid_argument("oscillator benchmark: tolerance must be positive");
}

BenchmarkResult run_oscillator_benchmark(const OscillatorBenchmarkConfig& cfg) {
  cfg.validate();
  const Index n = static_cast<Index>(cfg.shifts + 1) * 2 * cfg.generation_isi;
  NullSignalConfig full = cfg.sim;
  full.length = n;

  BenchmarkResult res;
  res.datasets = cfg.datasets;
  res.tau = cfg.tau ? *cfg.tau : oscillator_tau(cfg.sim, cfg.seed);
  res.isi_min = cfg.isi_min;
  res.tolerance = cfg.tolerance ? *cfg.tolerance : std::max<Index>(1, cfg.isi_min / 2);
  res.group_delay = rounded_delay(cfg.sim.demod, cfg.sim.rate_hz);

  std::vector<PhaseSeries> data(cfg.datasets);
  std::vector<std::vector<Index>> truth(cfg.datasets);
  parallel_for(cfg.datasets, [&](std::size_t d) {
    const PhaseProfile p = gen_shift_profile(cfg.shifts, cfg.delta_min, cfg.generation_isi, n,
                                             derive_seed(cfg.seed, "profile", d), cfg.generation_isi);
    data[d] = simulate_phase(full, p, derive_seed(cfg.seed, "oscillator", d));
    for (const auto& e : p.events) truth[d].push_back(e.index);
  });
  for (const auto& t : truth) res.truth_events += t.size();
  const std::vector<Index> lengths(cfg.datasets, n);

  std::optional<CriticalTable> cusum_table, pd_table;
  auto table_for = [&](StatKind k) -> const CriticalTable* {
    auto& slot = k == StatKind::Cusum ? cusum_table : pd_table;
    if (!slot)
      slot = CriticalTable::build(k, full, n, cfg.table_replicates,
                                  derive_seed(cfg.seed, k == StatKind::Cusum ? "table-cusum" : "table-pd"));
    return &*slot;
  };

  DetectorConfig base;
  base.n_min = cfg.n_min;
  base.isi_min = cfg.isi_min;
  base.tau = res.tau;
  base.bootstrap_replicates = cfg.bootstrap_replicates;
  for (Method m : cfg.methods) {
    const CriticalTable* table = is_parametric(m) ? table_for(stat_kind(m)) : nullptr;
    const auto det = detect_grid(data, m, cfg.alphas, base, table, res.group_delay,
                                 derive_seed(cfg.seed, to_string(m)));
    res.methods.push_back({m, roc_curve(cfg.alphas, det, truth, lengths, res.tolerance)});
  }
  return res;
}

void RosslerBenchmarkConfig::validate() const {
  check_common(datasets, alphas, methods, "rossler benchmark");
  params.validate();
  demod.validate(params.output_rate_hz);
  if (!(duration_s > 0.0)) throw std::invalid_argument("rossler benchmark: duration must be positive");
  for (Method m : methods)
    if (is_parametric(m))
      throw std::invalid_argument(std::string("rossler benchmark: ") + to_string(m) +
                                  " needs an oscillator null model; use cusum-block or pd-threshold");
  if (isi_min && *isi_min < 1) throw std::invalid_argument("rossler benchmark: isi_min must be positive");
  if (tolerance && *tolerance < 1) throw std::invalid_argument("rossler benchmark: tolerance must be positive");
}

BenchmarkResult run_rossler_benchmark(const RosslerBenchmarkConfig& cfg) {
  cfg.validate();
  const double rate = cfg.params.output_rate_hz;
  BenchmarkResult res;
  res.datasets = cfg.datasets;
  res.tau = cfg.tau ? *cfg.tau : rossler_tau(cfg.params, cfg.demod, cfg.tau_options, cfg.seed);
  res.isi_min = cfg.isi_min ? *cfg.isi_min : cfg.demod.default_burn_in(rate);
  res.tolerance = cfg.tolerance ? *cfg.tolerance : std::max<Index>(1, res.isi_min / 2);
  res.group_delay = rounded_delay(cfg.demod, rate);

  std::vector<PhaseSeries> data(cfg.datasets);
  std::vector<std::vector<Index>> truth(cfg.datasets);
  std::vector<Index> lengths(cfg.datasets);
  parallel_for(cfg.datasets, [&](std::size_t d) {
    const RosslerTrajectory traj = simulate_rossler(cfg.params, cfg.duration_s, derive_seed(cfg.seed, "rossler", d));
    truth[d] = event_indices(rossler_truth(traj));
    data[d] = rossler_observed_phase(traj, cfg.demod);
    lengths[d] = data[d].size();
  });
  for (const auto& t : truth) res.truth_events += t.size();

  DetectorConfig base;
  base.isi_min = res.isi_min;
  base.tau = res.tau;
  base.bootstrap_replicates = cfg.bootstrap_replicates;
  for (Method m : cfg.methods) {
    const auto det = detect_grid(data, m, cfg.alphas, base, nullptr, res.group_delay,
                                 derive_seed(cfg.seed, to_string(m)));
    res.methods.push_back({m, roc_curve(cfg.alphas, det, truth, lengths, res.tolerance)});
  }
  return res;
}

IsiStudyResult run_isi_study(const IsiStudyConfig& cfg) {
  if (cfg.datasets == 0) throw std::invalid_argument("isi study: need at least one dataset");
  if (is_parametric(cfg.method)) throw std::invalid_argument("isi study: use cusum-block or pd-threshold");
  cfg.params.validate();
  const double rate = cfg.params.output_rate_hz;
  cfg.demod.validate(rate);

  IsiStudyResult res;
  res.tau = cfg.tau ? *cfg.tau : rossler_tau(cfg.params, cfg.demod, cfg.tau_options, cfg.seed);
  const Index delay = rounded_delay(cfg.demod, rate);

  std::vector<std::vector<ShiftEvent>> detected(cfg.datasets);
  std::vector<std::size_t> truth(cfg.datasets);
  parallel_for(cfg.datasets, [&](std::size_t d) {
    const RosslerTrajectory traj = simulate_rossler(cfg.params, cfg.duration_s, derive_seed(cfg.seed, "rossler", d));
    truth[d] = rossler_truth(traj).size();
    const PhaseSeries phi = rossler_observed_phase(traj, cfg.demod);
    DetectorConfig dc;
    dc.method = cfg.method;
    dc.alpha = cfg.alpha;
    dc.isi_min = cfg.isi_min ? *cfg.isi_min : phi.burn_in;
    dc.tau = res.tau;
    dc.bootstrap_replicates = cfg.bootstrap_replicates;
    dc.seed = derive_seed(cfg.seed, "detect", d);
    detected[d] = detect(phi, dc).events;
    subtract_delay(detected[d], delay, rate, phi.start_index);
  });
  for (std::size_t d = 0; d < cfg.datasets; ++d) {
    res.events += detected[d].size();
    res.truth_events += truth[d];
  }
  res.intervals_s = inter_event_intervals(detected);
  if (!res.intervals_s.empty())
    res.mean_isi_s = std::accumulate(res.intervals_s.begin(), res.intervals_s.end(), 0.0) /
                     static_cast<double>(res.intervals_s.size());
  try {
    res.fit = isi_powerlaw(res.intervals_s, cfg.powerlaw);
  } catch (const std::exception& e) {
    res.fit_error = e.what();
  }
  return res;
}

double NullRate::standard_error() const { return std::sqrt(alpha * (1.0 - alpha) / static_cast<double>(datasets)); }

bool NullRate::within(double k) const { return std::abs(rate() - alpha) <= k * standard_error(); }

NullCalibrationResult run_null_calibration(const NullCalibrationConfig& cfg) {
  if (cfg.datasets == 0) throw std::invalid_argument("null calibration: need at least one dataset");
  if (cfg.alphas.empty() || cfg.methods.empty()) throw std::invalid_argument("null calibration: empty grid");
  cfg.sim.validate();

  NullCalibrationResult res;
  res.tau = cfg.tau ? *cfg.tau : oscillator_tau(cfg.sim, cfg.seed);
  std::optional<CriticalTable> cusum_table, pd_table;
  for (Method m : cfg.methods) {
    if (!is_parametric(m)) continue;
    auto& slot = stat_kind(m) == StatKind::Cusum ? cusum_table : pd_table;
    if (!slot)
      slot = CriticalTable::build(stat_kind(m), cfg.sim, cfg.sim.length, cfg.table_replicates,
                                  derive_seed(cfg.seed, stat_kind(m) == StatKind::Cusum ? "table-cusum" : "table-pd"));
  }

  DetectorConfig base;
  base.n_min = cfg.n_min;
  base.isi_min = cfg.isi_min;
  base.tau = res.tau;
  base.bootstrap_replicates = cfg.bootstrap_replicates;
  for (Method m : cfg.methods) {
    const CriticalTable* table =
        is_parametric(m) ? &*(stat_kind(m) == StatKind::Cusum ? cusum_table : pd_table) : nullptr;
    std::vector<std::vector<char>> rejected(cfg.datasets, std::vector<char>(cfg.alphas.size(), 0));
    parallel_for(cfg.datasets, [&](std::size_t d) {
      const PhaseSeries phi = simulate_phase(cfg.sim, PhaseProfile{}, derive_seed(cfg.seed, "null", d));
      BootstrapCache cache;
      DetectorConfig dc = base;
      dc.method = m;
      dc.seed = derive_seed(cfg.seed, "detect", d);
      for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
        dc.alpha = cfg.alphas[a];
        rejected[d][a] = !detect(phi, dc, table, &cache).events.empty();
      }
    });
    for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
      NullRate r{m, cfg.alphas[a], 0, cfg.datasets};
      for (const auto& row : rejected) r.rejections += static_cast<std::size_t>(row[a]);
      res.rates.push_back(r);
    }
  }
  return res;
}

ResolutionStudyResult run_resolution_study(const ResolutionStudyConfig& cfg) {
  cfg.sim.validate();
  if (cfg.snr_db.empty() || cfg.delta.empty()) throw std::invalid_argument("resolution study: empty grid");

  ResolutionStudyResult res;
  PowerOptions po;
  po.target_power = cfg.target_power;
  res.cusum = power_analysis(StatKind::Cusum, cfg.sim, cfg.snr_db, cfg.delta, cfg.alpha, cfg.power_replicates,
                             derive_seed(cfg.seed, "power"), po);
  res.pd = power_analysis(StatKind::PhaseDerivative, cfg.sim, cfg.snr_db, cfg.delta, cfg.alpha,
                          cfg.power_replicates, derive_seed(cfg.seed, "power"), po);

  std::vector<double> common_cusum, common_pd;
  const double ms_per_sample = 1000.0 / cfg.sim.rate_hz;
  for (std::size_t i = 0; i < cfg.snr_db.size(); ++i) {
    NullSignalConfig s = cfg.sim;
    s.snr_db = cfg.snr_db[i];
    const CriticalTable tc = CriticalTable::build(StatKind::Cusum, s, s.length, cfg.table_replicates,
                                                  derive_seed(cfg.seed, "table-cusum", i), 16, cfg.table_per_octave);
    const CriticalTable tp = CriticalTable::build(StatKind::PhaseDerivative, s, s.length, cfg.table_replicates,
                                                  derive_seed(cfg.seed, "table-pd", i), 16, cfg.table_per_octave);
    for (std::size_t j = 0; j < cfg.delta.size(); ++j) {
      ResolutionStudyCell c;
      c.snr_db = cfg.snr_db[i];
      c.delta = cfg.delta[j];
      c.power_cusum = res.cusum.at(i, j).power;
      c.power_pd = res.pd.at(i, j).power;
      // Both statistics see the same replicates.
      const std::uint64_t cell_seed = derive_seed(cfg.seed, "isimin", i * cfg.delta.size() + j);
      try {
        c.isi_cusum = calibrate_isimin(StatKind::Cusum, s, tc, cfg.alpha, c.delta, cfg.isimin_replicates, cell_seed)
                          .isi_min;
      } catch (const NumericalError&) {
      }
      try {
        c.isi_pd = calibrate_isimin(StatKind::PhaseDerivative, s, tp, cfg.alpha, c.delta, cfg.isimin_replicates,
                                    cell_seed)
                       .isi_min;
      } catch (const NumericalError&) {
      }
      c.common = c.isi_cusum && c.isi_pd && c.power_cusum >= cfg.target_power && c.power_pd >= cfg.target_power;
      if (c.common) {
        common_cusum.push_back(static_cast<double>(*c.isi_cusum) * ms_per_sample);
        common_pd.push_back(static_cast<double>(*c.isi_pd) * ms_per_sample);
      }
      res.cells.push_back(c);
    }
  }
  res.common = common_cusum.size();
  res.median_cusum_ms = median(common_cusum);
  res.median_pd_ms = median(common_pd);
  return res;
}

}  // namespace phaseshift
