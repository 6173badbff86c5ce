#include "phaseshift/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "phaseshift/eval.hpp"
#include "phaseshift/random.hpp"

namespace phaseshift {

namespace {

double binomial_slack(double alpha, std::size_t n, double k = 2.0) {
  return k * std::sqrt(alpha * (1.0 - alpha) / static_cast<double>(n));
}

void check_alpha(double alpha, const char* who) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument(std::string(who) + ": alpha must lie in (0, 1)");
}

NullSignalConfig with_length(NullSignalConfig sim, Index length) {
  sim.length = length;
  return sim;
}

NullSignalConfig with_snr(NullSignalConfig sim, double snr_db) {
  sim.snr_db = snr_db;
  return sim;
}

PhaseProfile steps_at(const std::vector<std::pair<Index, double>>& steps) {
  PhaseProfile p;
  for (const auto& [index, delta] : steps) p.events.push_back({index, delta});
  return p;
}

}  // namespace

NminCalibration calibrate_nmin(StatKind kind, const NullSignalConfig& sim, double alpha, std::size_t replicates,
                               std::uint64_t seed, Index start, Index ceiling) {
  check_alpha(alpha, "calibrate_nmin");
  if (replicates < 200) throw std::invalid_argument("calibrate_nmin: need at least 200 replicates");
  if (start < 4 || ceiling < start) throw std::invalid_argument("calibrate_nmin: bad length range");
  const double limit = alpha + binomial_slack(alpha, replicates);

  NminCalibration out;
  auto evaluate = [&](Index n) {
    const NullSignalConfig s = with_length(sim, n);
    const CriticalValue cv = parametric_critical(kind, s, alpha, replicates, derive_seed(seed, "nmin-reference", n));
    const double phi = cv.gev ? cv.gev->quantile(1.0 - alpha) : cv.phi_alpha;
    std::vector<char> reject(replicates, 0);
    parallel_for(replicates, [&](std::size_t b) {
      const PhaseSeries p = simulate_phase(s, PhaseProfile{}, derive_seed(seed, "nmin-fresh", (n << 20) + b));
      reject[b] = max_stat(kind, p.values) > phi;
    });
    const double rate = static_cast<double>(std::count(reject.begin(), reject.end(), 1)) / replicates;
    out.trace.emplace_back(n, rate);
    return std::pair{rate, phi};
  };

  Index lo = 0, hi = start;
  std::pair<double, double> at_hi;
  for (;;) {
    at_hi = evaluate(hi);
    if (at_hi.first <= limit) break;
    lo = hi;
    if (hi == ceiling) {
      std::ostringstream msg;
      msg << "calibrate_nmin: rejection rate " << at_hi.first << " still exceeds " << alpha << " at length "
          << ceiling;
      throw NumericalError(msg.str());
    }
    hi = std::min(2 * hi, ceiling);
  }
  while (lo > 0 && hi - lo > std::max<Index>(1, lo / 16)) {
    const Index mid = lo + (hi - lo) / 2;
    const auto r = evaluate(mid);
    if (r.first <= limit) {
      hi = mid;
      at_hi = r;
    } else {
      lo = mid;
    }
  }
  out.n_min = hi;
  out.rejection_rate = at_hi.first;
  out.critical_value = at_hi.second;
  return out;
}

IsiMinCalibration calibrate_isimin(StatKind kind, const NullSignalConfig& sim, const CriticalTable& table,
                                   double alpha, double delta, std::size_t replicates, std::uint64_t seed, Index step,
                                   Index min_segment) {
  check_alpha(alpha, "calibrate_isimin");
  if (replicates < 100) throw std::invalid_argument("calibrate_isimin: need at least 100 replicates");
  if (table.kind() != kind) throw std::invalid_argument("calibrate_isimin: critical table has the wrong statistic");
  if (step < 1 || min_segment < 4) throw std::invalid_argument("calibrate_isimin: bad grid");
  sim.validate();
  const Index n = sim.length;
  const Index shift = n / 2;
  const PhaseProfile profile = steps_at({{shift, delta}});

  // Flanks shorter than a quarter record mostly probe table noise at short lengths.
  const Index flank = std::max(min_segment, n / 4);
  IsiMinCalibration out;
  for (Index h = 0; shift - h >= flank && shift + h + flank < n; h += step) out.half_widths.push_back(h);
  if (out.half_widths.empty()) throw std::invalid_argument("calibrate_isimin: record too short for the grid");
  const std::size_t m = out.half_widths.size();

  std::vector<std::vector<char>> left(replicates, std::vector<char>(m, 0)), right = left;
  parallel_for(replicates, [&](std::size_t b) {
    const PhaseSeries p = simulate_phase(sim, profile, derive_seed(seed, "isimin", b));
    const Index t = compute_stat(kind, p.values).argmax;
    for (std::size_t j = 0; j < m; ++j) {
      const Index h = out.half_widths[j];
      const Index left_len = t - h;
      const Index right_begin = t + h + 1;
      if (left_len >= min_segment)
        left[b][j] = max_stat(kind, p.values.head(left_len)) > table.critical(left_len, alpha);
      if (n - right_begin >= min_segment)
        right[b][j] = max_stat(kind, p.values.tail(n - right_begin)) > table.critical(n - right_begin, alpha);
    }
  });

  // One-sided binomial check at every grid point, Bonferroni-corrected over the grid.
  const boost::math::normal standard;
  const double z = boost::math::quantile(boost::math::complement(standard, 0.05 / static_cast<double>(2 * m)));
  const double limit = alpha + binomial_slack(alpha, replicates, z);
  out.rate_left.assign(m, 0.0);
  out.rate_right.assign(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t b = 0; b < replicates; ++b) {
      out.rate_left[j] += left[b][j];
      out.rate_right[j] += right[b][j];
    }
    out.rate_left[j] /= replicates;
    out.rate_right[j] /= replicates;
  }
  std::optional<Index> best;
  for (std::size_t j = m; j-- > 0;) {
    if (out.rate_left[j] > limit || out.rate_right[j] > limit) break;
    best = out.half_widths[j];
  }
  if (!best) {
    std::ostringstream msg;
    msg << "calibrate_isimin: subsegment rejection exceeds " << alpha << " even at half-width "
        << out.half_widths.back();
    throw NumericalError(msg.str());
  }
  out.isi_min = *best;
  return out;
}

std::optional<double> minimal_detectable_delta(const std::vector<double>& delta, const std::vector<double>& power,
                                               double target) {
  if (delta.size() != power.size()) throw std::invalid_argument("minimal_detectable_delta: size mismatch");
  std::optional<double> best;
  for (std::size_t j = delta.size(); j-- > 0;) {
    if (power[j] < target) break;
    best = delta[j];
  }
  return best;
}

PowerSurface power_analysis(StatKind kind, const NullSignalConfig& sim, const std::vector<double>& snr_grid,
                            const std::vector<double>& delta_grid, double alpha, std::size_t replicates,
                            std::uint64_t seed, const PowerOptions& options) {
  check_alpha(alpha, "power_analysis");
  if (snr_grid.empty() || delta_grid.empty()) throw std::invalid_argument("power_analysis: grids must be non-empty");
  if (replicates < 1) throw std::invalid_argument("power_analysis: need at least one replicate");
  if (!std::is_sorted(delta_grid.begin(), delta_grid.end()))
    throw std::invalid_argument("power_analysis: delta grid must be ascending");
  sim.validate();

  PowerSurface out;
  out.snr_db = snr_grid;
  out.delta = delta_grid;
  const Index n = sim.length;
  const Index shift = n / 2;
  const auto delay = static_cast<Index>(std::llround(sim.demod.group_delay(sim.rate_hz)));

  for (std::size_t i = 0; i < snr_grid.size(); ++i) {
    const NullSignalConfig s = with_snr(sim, snr_grid[i]);
    const double phi = parametric_critical(kind, s, alpha, options.table_replicates,
                                           derive_seed(seed, "power-critical", i))
                           .phi_alpha;
    std::vector<double> row;
    for (std::size_t j = 0; j < delta_grid.size(); ++j) {
      const PhaseProfile profile = steps_at({{shift, delta_grid[j]}});
      std::vector<char> hit(replicates, 0);
      parallel_for(replicates, [&](std::size_t b) {
        const PhaseSeries p = simulate_phase(s, profile, derive_seed(seed, "power", (i << 40) + (j << 24) + b));
        const StatSeries st = compute_stat(kind, p.values);
        hit[b] = st.max_value > phi && std::abs(st.argmax - delay - shift) <= options.tolerance;
      });
      PowerCell cell{snr_grid[i], delta_grid[j], 0.0, replicates};
      cell.power = static_cast<double>(std::count(hit.begin(), hit.end(), 1)) / replicates;
      row.push_back(cell.power);
      out.cells.push_back(cell);
    }
    out.delta_min.push_back(minimal_detectable_delta(delta_grid, row, options.target_power));
  }
  return out;
}

std::vector<ResolutionCell> two_shift_resolution(StatKind kind, const NullSignalConfig& sim,
                                                 const std::vector<double>& snr_grid,
                                                 const std::vector<double>& delta_grid, double alpha,
                                                 std::size_t replicates, std::uint64_t seed,
                                                 const ResolutionOptions& options) {
  check_alpha(alpha, "two_shift_resolution");
  if (options.isi_grid.empty() || !std::is_sorted(options.isi_grid.begin(), options.isi_grid.end()))
    throw std::invalid_argument("two_shift_resolution: ISI grid must be non-empty and ascending");
  if (replicates < 1) throw std::invalid_argument("two_shift_resolution: need at least one replicate");
  sim.validate();

  const Index margin = sim.length / 2;
  const Index longest = 2 * margin + options.isi_grid.back();
  const auto delay = static_cast<Index>(std::llround(sim.demod.group_delay(sim.rate_hz)));
  std::vector<ResolutionCell> out;

  for (std::size_t i = 0; i < snr_grid.size(); ++i) {
    const NullSignalConfig s = with_snr(sim, snr_grid[i]);
    const CriticalTable table = CriticalTable::build(kind, s, longest, options.table_replicates,
                                                     derive_seed(seed, "resolution-table", i));
    for (std::size_t j = 0; j < delta_grid.size(); ++j) {
      ResolutionCell cell;
      cell.snr_db = snr_grid[i];
      cell.delta = delta_grid[j];
      DetectorConfig cfg;
      cfg.alpha = alpha;
      cfg.n_min = 16;
      if (kind == StatKind::Cusum) {
        cfg.method = Method::CusumParametric;
        try {
          cell.exclusion = calibrate_isimin(kind, s, table, alpha, delta_grid[j], options.isimin_replicates,
                                            derive_seed(seed, "resolution-isimin", (i << 20) + j))
                               .isi_min;
        } catch (const NumericalError&) {
          cell.power.assign(options.isi_grid.size(), 0.0);
          out.push_back(cell);
          continue;
        }
        cfg.isi_min = cell.exclusion;
      } else {
        cfg.method = Method::PdParametric;
      }

      for (std::size_t k = 0; k < options.isi_grid.size(); ++k) {
        const Index isi = options.isi_grid[k];
        const NullSignalConfig sk = with_length(s, 2 * margin + isi);
        const PhaseProfile profile = steps_at({{margin, delta_grid[j]}, {margin + isi, delta_grid[j]}});
        const std::vector<Index> truth{margin, margin + isi};
        std::vector<char> both(replicates, 0);
        parallel_for(replicates, [&](std::size_t b) {
          const PhaseSeries p =
              simulate_phase(sk, profile, derive_seed(seed, "resolution", (i << 44) + (j << 32) + (k << 20) + b));
          const DetectionResult r = detect(p, cfg, &table);
          std::vector<Index> found;
          for (const auto& e : r.events) found.push_back(e.index - delay);
          const ConfusionCounts c = match_events(found, truth, options.tolerance, p.size());
          both[b] = c.tp == 2 && c.fp == 0;
        });
        cell.power.push_back(static_cast<double>(std::count(both.begin(), both.end(), 1)) / replicates);
      }
      for (std::size_t k = options.isi_grid.size(); k-- > 0;) {
        if (cell.power[k] < options.target_power) break;
        cell.isi_min = options.isi_grid[k];
      }
      out.push_back(cell);
    }
  }
  return out;
}

}  // namespace phaseshift
