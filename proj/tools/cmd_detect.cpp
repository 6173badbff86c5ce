#include <cmath>
#include <memory>
#include <sstream>

#include "commands.hpp"
#include "phaseshift/detect.hpp"
#include "phaseshift/random.hpp"

namespace phaseshift::cli {

namespace {

struct DetectOptions {
  std::string input;
  std::string output = "events.json";
  std::string channel;
  std::string reference;
  bool phase_input = false;
  DemodOptions demod;
  std::string method = "cusum-parametric";
  double alpha = 0.05;
  std::string alpha_grid;
  long n_min = 16;
  long isi_min = 256;
  long tau = 0;
  double tau_segment_s = 4.0;
  std::size_t bootstrap = 1000;
  std::size_t table_replicates = 1000;
  double null_snr_db = 0.0;
  bool printed_quantile = false;
  bool no_delay_correction = false;
};

PhaseSeries channel_phase(const CsvTable& t, const std::string& name, const DetectOptions& o,
                          const DemodConfig& demod) {
  if (o.phase_input) {
    PhaseSeries p;
    p.values = t.column(name);
    p.rate_hz = t.rate_hz;
    p.start_index = t.start_index;
    p.burn_in = demod.burn_in ? *demod.burn_in : 0;
    return straighten_phase(p);
  }
  return straighten_phase(complex_demodulate(t.series(name), demod));
}

std::string table_key(StatKind kind, const NullSignalConfig& sim, std::size_t replicates, std::uint64_t seed) {
  std::ostringstream k;
  k << "critical-table|" << to_string(kind) << "|f0=" << format_double(sim.f0_hz)
    << "|rate=" << format_double(sim.rate_hz) << "|snr=" << format_double(sim.snr_db)
    << "|demod=" << sim.demod.describe() << "|center=" << format_double(sim.demod.center_hz)
    << "|burn=" << sim.burn_in() << "|length=" << sim.length << "|B=" << replicates << "|seed=" << seed;
  return k.str();
}

}  // namespace

CriticalTable cached_table(StatKind kind, const NullSignalConfig& sim, std::size_t replicates, std::uint64_t seed,
                           const std::string& cache_dir, bool* hit) {
  const auto cache = ResultCache::from_environment(cache_dir);
  const std::string key = table_key(kind, sim, replicates, seed);
  if (hit) *hit = false;
  if (cache) {
    if (auto j = cache->load(key)) {
      if (hit) *hit = true;
      return critical_table_from_json(*j);
    }
  }
  CriticalTable t = CriticalTable::build(kind, sim, sim.length, replicates, seed);
  if (cache) cache->store(key, to_json(t));
  return t;
}

Command add_detect(CLI::App& root, const GlobalOptions& g) {
  auto o = std::make_shared<DetectOptions>();
  CLI::App* cmd = root.add_subcommand("detect", "Detect phase shifts in a CSV channel or channel pair");
  cmd->add_option("--input", o->input, "CSV with header index,time_s,<channels>")->required();
  cmd->add_option("--output", o->output, "Events file name inside --out-dir")->capture_default_str();
  cmd->add_option("--channel", o->channel, "Channel to analyse (default: first)");
  cmd->add_option("--reference", o->reference, "Second channel; detection runs on the phase difference");
  cmd->add_flag("--phase-input", o->phase_input, "Channels already hold phase in radians");
  add_demod_options(cmd, o->demod);
  cmd->add_option("--method", o->method, "cusum-parametric, cusum-block, pd-parametric or pd-threshold")
      ->check(CLI::IsMember({"cusum-parametric", "cusum-block", "pd-parametric", "pd-threshold"}))
      ->capture_default_str();
  cmd->add_option("--alpha", o->alpha, "Significance level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  cmd->add_option("--alpha-grid", o->alpha_grid, "Several levels, e.g. 0.01,0.05,0.1; one run each");
  cmd->add_option("--n-min", o->n_min, "Smallest segment tested")->capture_default_str();
  cmd->add_option("--isi-min", o->isi_min, "CUSUM exclusion half-width (samples)")->capture_default_str();
  cmd->add_option("--tau", o->tau, "Dependence scale in samples (0: first ACF zero)")->capture_default_str();
  cmd->add_option("--tau-segment", o->tau_segment_s, "ACF segment length when estimating tau (s)")
      ->capture_default_str();
  cmd->add_option("--bootstrap", o->bootstrap, "Block-bootstrap replicates")->capture_default_str();
  cmd->add_option("--table-replicates", o->table_replicates, "Parametric null replicates")->capture_default_str();
  cmd->add_option("--null-snr", o->null_snr_db, "SNR of the parametric null model (dB)")->capture_default_str();
  cmd->add_flag("--printed-quantile", o->printed_quantile, "Threshold method: z at alpha^K*");
  cmd->add_flag("--no-delay-correction", o->no_delay_correction, "Keep raw indices (no group-delay shift)");

  return {cmd, [o, cmd, &root, &g] {
            Run run(root, *cmd, g);
            const CsvTable table = read_csv(o->input);
            const std::string channel = o->channel.empty() ? table.names.front() : o->channel;
            const DemodConfig demod = o->demod.config();
            if (!o->phase_input) demod.validate(table.rate_hz);

            PhaseSeries phi = channel_phase(table, channel, *o, demod);
            if (!o->reference.empty()) phi = phase_difference(phi, channel_phase(table, o->reference, *o, demod));

            DetectorConfig cfg;
            cfg.method = method_from_string(o->method);
            cfg.n_min = o->n_min;
            cfg.isi_min = o->isi_min;
            cfg.bootstrap_replicates = o->bootstrap;
            cfg.printed_quantile = o->printed_quantile;
            cfg.seed = derive_seed(g.seed, "detect");
            const bool tau_estimated = o->tau <= 0;
            cfg.tau = tau_estimated ? acf_first_zero(phi, o->tau_segment_s).tau : o->tau;

            std::optional<CriticalTable> table_storage;
            bool cache_hit = false;
            if (is_parametric(cfg.method)) {
              NullSignalConfig sim;
              sim.f0_hz = demod.center_hz;
              sim.rate_hz = table.rate_hz;
              sim.snr_db = o->null_snr_db;
              sim.demod = demod;
              sim.length = phi.size() - phi.burn_in;
              table_storage = cached_table(stat_kind(cfg.method), sim, o->table_replicates,
                                           derive_seed(g.seed, "table"), g.cache_dir, &cache_hit);
            }

            const std::vector<double> alphas =
                o->alpha_grid.empty() ? std::vector<double>{o->alpha} : parse_grid(o->alpha_grid, "--alpha-grid");
            const Index delay =
                o->no_delay_correction || o->phase_input ? 0 : static_cast<Index>(std::llround(demod.group_delay(table.rate_hz)));

            BootstrapCache cache;
            Json runs = Json::array();
            for (double a : alphas) {
              cfg.alpha = a;
              cfg.validate();
              DetectionResult r = detect(phi, cfg, table_storage ? &*table_storage : nullptr, &cache);
              subtract_delay(r.events, delay, phi.rate_hz, phi.start_index);
              Json j = to_json(r);
              j["alpha"] = a;
              runs.push_back(j);
            }

            Json out{{"input", o->input},
                     {"input_checksum", file_checksum(o->input)},
                     {"channel", channel},
                     {"reference", o->reference},
                     {"rate_hz", table.rate_hz},
                     {"length", phi.size()},
                     {"start_index", phi.start_index},
                     {"burn_in", phi.burn_in},
                     {"method", to_string(cfg.method)},
                     {"seed", g.seed},
                     {"tau", cfg.tau},
                     {"tau_estimated", tau_estimated},
                     {"n_min", cfg.n_min},
                     {"isi_min", cfg.isi_min},
                     {"group_delay_corrected", delay},
                     {"phase_input", o->phase_input}};
            if (!o->phase_input) out["demod"] = to_json(demod, table.rate_hz);
            if (table_storage)
              out["critical_table"] = {{"replicates", table_storage->replicates()}, {"cache_hit", cache_hit}};
            out["alpha"] = alphas.front();
            out["events"] = runs.front()["events"];
            out["runs"] = runs;

            const auto path = run.path(o->output);
            write_json(path, out);
            run.wrote(path);
            run.finish({{"events", runs.front()["events"].size()}});
          }};
}

}  // namespace phaseshift::cli
