#include <cmath>
#include <memory>
#include <sstream>

#include "commands.hpp"
#include "phaseshift/calibrate.hpp"
#include "phaseshift/random.hpp"

namespace phaseshift::cli {

namespace {

struct CalibrateOptions {
  std::string kind = "critical";
  std::string statistic = "cusum";
  std::string output = "calibration.json";
  double alpha = 0.05;
  std::size_t replicates = 1000;
  double f0_hz = 9.0;
  double rate_hz = 250.0;
  double snr_db = 0.0;
  long length = 1250;
  DemodOptions demod;
  double delta = 1.0;
  std::string snr_grid = "-5,0,5,10,15,20";
  std::string delta_grid = "0.05,0.1,0.15,0.2,0.3,0.5,0.75,1,1.5,2,2.5,3.14";
  std::size_t table_replicates = 1000;
};

StatKind parse_statistic(const std::string& s) {
  if (s == "cusum") return StatKind::Cusum;
  if (s == "pd") return StatKind::PhaseDerivative;
  throw ConfigError("--statistic must be cusum or pd");
}

Json gev_json(const std::optional<GevFit>& fit, bool converged) {
  if (!fit) return nullptr;
  return Json{{"location", fit->location}, {"scale", fit->scale},       {"shape", fit->shape},
              {"ks_statistic", fit->ks_statistic}, {"ks_p_value", fit->ks_p_value}, {"converged", converged}};
}

Json power_json(const PowerSurface& s, double alpha, std::size_t replicates) {
  Json cells = Json::array();
  for (const auto& c : s.cells)
    cells.push_back({{"snr_db", c.snr_db}, {"delta", c.delta}, {"power", c.power}, {"replicates", c.replicates}});
  Json dmin = Json::array();
  for (std::size_t i = 0; i < s.snr_db.size(); ++i)
    dmin.push_back({{"snr_db", s.snr_db[i]}, {"delta_min", s.delta_min[i] ? Json(*s.delta_min[i]) : Json(nullptr)}});

  // Decreases larger than two binomial standard errors along either axis.
  std::size_t pairs = 0, violations = 0;
  auto check = [&](double lo, double hi) {
    ++pairs;
    const double p = (lo + hi) / 2.0;
    const double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) * 2.0 / static_cast<double>(replicates));
    if (lo - hi > 2.0 * se) ++violations;
  };
  for (std::size_t i = 0; i < s.snr_db.size(); ++i)
    for (std::size_t j = 0; j < s.delta.size(); ++j) {
      if (i + 1 < s.snr_db.size()) check(s.at(i, j).power, s.at(i + 1, j).power);
      if (j + 1 < s.delta.size()) check(s.at(i, j).power, s.at(i, j + 1).power);
    }
  return Json{{"alpha", alpha},
              {"cells", cells},
              {"delta_min", dmin},
              {"monotonicity_audit", {{"pairs", pairs}, {"violations", violations}}}};
}

}  // namespace

Command add_calibrate(CLI::App& root, const GlobalOptions& g) {
  auto o = std::make_shared<CalibrateOptions>();
  CLI::App* cmd = root.add_subcommand("calibrate", "Critical values, N_min, N_burn, ISI_min and power surfaces");
  cmd->add_option("--kind", o->kind, "critical, nmin, nburn, isimin or power")
      ->check(CLI::IsMember({"critical", "nmin", "nburn", "isimin", "power"}))
      ->capture_default_str();
  cmd->add_option("--statistic", o->statistic, "cusum or pd")
      ->check(CLI::IsMember({"cusum", "pd"}))
      ->capture_default_str();
  cmd->add_option("--output", o->output, "Result file name inside --out-dir")->capture_default_str();
  cmd->add_option("--alpha", o->alpha, "Significance level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  cmd->add_option("--replicates", o->replicates, "Monte Carlo replicates (B)")->capture_default_str();
  cmd->add_option("--f0", o->f0_hz, "Null oscillator frequency (Hz)")->capture_default_str();
  cmd->add_option("--rate", o->rate_hz, "Sampling rate (Hz)")->capture_default_str();
  cmd->add_option("--snr", o->snr_db, "Null model SNR (dB)")->capture_default_str();
  cmd->add_option("--length", o->length, "Record length after burn-in (samples)")->capture_default_str();
  add_demod_options(cmd, o->demod);
  cmd->add_option("--delta", o->delta, "Shift size for isimin (rad)")->capture_default_str();
  cmd->add_option("--snr-grid", o->snr_grid, "SNR values for power, list or start:stop:step")->capture_default_str();
  cmd->add_option("--delta-grid", o->delta_grid, "Shift sizes for power")->capture_default_str();
  cmd->add_option("--table-replicates", o->table_replicates, "Null replicates for isimin critical tables")
      ->capture_default_str();

  return {cmd, [o, cmd, &root, &g] {
            Run run(root, *cmd, g);
            NullSignalConfig sim;
            sim.f0_hz = o->f0_hz;
            sim.rate_hz = o->rate_hz;
            sim.snr_db = o->snr_db;
            sim.demod = o->demod.config();
            sim.length = o->length;
            sim.validate();
            const StatKind kind = parse_statistic(o->statistic);

            std::ostringstream key;
            key << "calibrate|" << o->kind << "|" << o->statistic << "|alpha=" << format_double(o->alpha)
                << "|B=" << o->replicates << "|seed=" << g.seed << "|f0=" << format_double(sim.f0_hz)
                << "|rate=" << format_double(sim.rate_hz) << "|snr=" << format_double(sim.snr_db)
                << "|length=" << sim.length << "|demod=" << sim.demod.describe()
                << "|center=" << format_double(sim.demod.center_hz) << "|burn=" << sim.burn_in();
            if (o->kind == "isimin")
              key << "|delta=" << format_double(o->delta) << "|table=" << o->table_replicates;
            if (o->kind == "power") key << "|snr-grid=" << o->snr_grid << "|delta-grid=" << o->delta_grid;

            const auto cache = ResultCache::from_environment(g.cache_dir);
            std::optional<Json> result = cache ? cache->load(key.str()) : std::nullopt;
            const bool hit = result.has_value();
            if (!result) {
              Json r{{"kind", o->kind}, {"statistic", o->statistic}, {"alpha", o->alpha},
                     {"replicates", o->replicates}, {"seed", g.seed}, {"burn_in", sim.burn_in()},
                     {"length", sim.length}, {"demod", to_json(sim.demod, sim.rate_hz)}};
              if (o->kind == "critical") {
                const CriticalValue cv =
                    parametric_critical(kind, sim, o->alpha, o->replicates, derive_seed(g.seed, "critical"));
                const CriticalValue fresh =
                    parametric_critical(kind, sim, o->alpha, o->replicates, derive_seed(g.seed, "audit"));
                std::size_t above = 0;
                for (double m : fresh.maxima) above += m > cv.phi_alpha;
                const double rate = static_cast<double>(above) / static_cast<double>(fresh.maxima.size());
                const double se = std::sqrt(o->alpha * (1.0 - o->alpha) / static_cast<double>(fresh.maxima.size()));
                r["phi_alpha"] = cv.phi_alpha;
                r["gev"] = gev_json(cv.gev, cv.gev_converged);
                r["audit"] = {{"fresh_replicates", fresh.maxima.size()},
                              {"rejection_rate", rate},
                              {"within_3se", std::abs(rate - o->alpha) <= 3.0 * se}};
              } else if (o->kind == "nmin") {
                const NminCalibration c =
                    calibrate_nmin(kind, sim, o->alpha, o->replicates, derive_seed(g.seed, "nmin"));
                Json trace = Json::array();
                for (const auto& [n, rate] : c.trace) trace.push_back({{"length", n}, {"rejection_rate", rate}});
                r["n_min"] = c.n_min;
                r["critical_value"] = c.critical_value;
                r["audit"] = {{"rejection_rate", c.rejection_rate}, {"trace", trace}};
              } else if (o->kind == "nburn") {
                const BurnInCalibration c =
                    calibrate_nburn(sim, o->alpha, o->replicates, derive_seed(g.seed, "nburn"));
                r["n_burn"] = c.n_burn;
                r["conservative_start"] = c.conservative;
                r["audit"] = {{"rejection_rate_cusum", c.rate_s1}, {"rejection_rate_pd", c.rate_s2}};
              } else if (o->kind == "isimin") {
                const CriticalTable table =
                    cached_table(kind, sim, o->table_replicates, derive_seed(g.seed, "table"), g.cache_dir);
                const IsiMinCalibration c = calibrate_isimin(kind, sim, table, o->alpha, o->delta, o->replicates,
                                                             derive_seed(g.seed, "isimin"));
                r["delta"] = o->delta;
                r["isi_min"] = c.isi_min;
                r["isi_min_ms"] = static_cast<double>(c.isi_min) * 1000.0 / sim.rate_hz;
                r["audit"] = {{"half_widths", c.half_widths},
                              {"rejection_rate_left", c.rate_left},
                              {"rejection_rate_right", c.rate_right}};
              } else {
                const PowerSurface s = power_analysis(kind, sim, parse_grid(o->snr_grid, "--snr-grid"),
                                                      parse_grid(o->delta_grid, "--delta-grid"), o->alpha,
                                                      o->replicates, derive_seed(g.seed, "power"));
                r["power"] = power_json(s, o->alpha, o->replicates);
              }
              if (cache) cache->store(key.str(), r);
              result = r;
            }
            (*result)["cache_hit"] = hit;
            const auto path = run.path(o->output);
            write_json(path, *result);
            run.wrote(path);
            run.finish({{"cache_hit", hit}});
          }};
}

}  // namespace phaseshift::cli
