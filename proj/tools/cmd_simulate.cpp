#include <memory>

#include "commands.hpp"
#include "phaseshift/eval.hpp"
#include "phaseshift/random.hpp"
#include "phaseshift/signals.hpp"

namespace phaseshift::cli {

namespace {

Json truth_json(const std::vector<ShiftEvent>& events, double rate_hz, Index length) {
  Json list = Json::array();
  for (const auto& e : events)
    list.push_back({{"index", e.index}, {"time_s", e.time_s}, {"delta", e.magnitude}});
  return Json{{"rate_hz", rate_hz}, {"length", length}, {"events", list}};
}

struct OscillatorOptions {
  double f0_hz = 9.0;
  double rate_hz = 250.0;
  double snr_db = 0.0;
  std::size_t shifts = 20;
  double delta_min = 0.5;
  long isi_min = 256;
  long length = 0;
  bool reference = false;
};

struct RosslerOptions {
  RosslerParams params;
  double duration_s = 600.0;
  double smoothing_s = 1.0;
  double tracking_s = 20.0;
};

}  // namespace

Command add_simulate_oscillator(CLI::App& root, const GlobalOptions& g) {
  auto o = std::make_shared<OscillatorOptions>();
  CLI::App* cmd = root.add_subcommand("simulate-oscillator", "Noisy oscillator with random phase shifts");
  cmd->add_option("--f0", o->f0_hz, "Oscillator frequency (Hz)")->capture_default_str();
  cmd->add_option("--rate", o->rate_hz, "Sampling rate (Hz)")->capture_default_str();
  cmd->add_option("--snr", o->snr_db, "Signal-to-noise ratio (dB)")->capture_default_str();
  cmd->add_option("--shifts", o->shifts, "Number of phase shifts (0: constant phase)")->capture_default_str();
  cmd->add_option("--delta-min", o->delta_min, "Smallest shift magnitude (rad)")->capture_default_str();
  cmd->add_option("--isi-min", o->isi_min, "Smallest gap between shifts (samples)")->capture_default_str();
  cmd->add_option("--length", o->length, "Samples (0: (shifts + 1) * 2 * isi-min)")->capture_default_str();
  cmd->add_flag("--reference", o->reference, "Add a constant-phase reference channel 'ref'");

  return {cmd, [o, cmd, &root, &g] {
            Run run(root, *cmd, g);
            if (o->isi_min < 1) throw ConfigError("--isi-min must be positive");
            const Index n = o->length > 0 ? o->length
                                          : static_cast<Index>(o->shifts + 1) * 2 * static_cast<Index>(o->isi_min);
            PhaseProfile profile;
            if (o->shifts > 0)
              profile = gen_shift_profile(o->shifts, o->delta_min, o->isi_min, n, derive_seed(g.seed, "profile"),
                                          o->isi_min);
            Rng rng(derive_seed(g.seed, "base-phase"));
            profile.base_phase = kTwoPi * uniform01(rng);

            const double r = weight_from_snr(o->snr_db);
            CsvTable table;
            table.rate_hz = o->rate_hz;
            table.names.push_back("x");
            table.columns.push_back(
                mix_noise(gen_oscillator(o->f0_hz, o->rate_hz, profile, n), r, derive_seed(g.seed, "noise")).samples);
            if (o->reference) {
              PhaseProfile flat;
              flat.base_phase = kTwoPi * uniform01(rng);
              table.names.push_back("ref");
              table.columns.push_back(mix_noise(gen_oscillator(o->f0_hz, o->rate_hz, flat, n), r,
                                                derive_seed(g.seed, "reference-noise"))
                                          .samples);
            }
            const auto csv = run.path("signal.csv");
            write_csv(csv, table);
            run.wrote(csv);
            write_json(sidecar_path(csv), Json{{"rate_hz", o->rate_hz}, {"channels", table.names}});

            std::vector<ShiftEvent> events;
            for (const auto& s : profile.events) {
              ShiftEvent e;
              e.index = s.index;
              e.time_s = static_cast<double>(s.index) / o->rate_hz;
              e.magnitude = s.delta;
              events.push_back(e);
            }
            Json truth = truth_json(events, o->rate_hz, n);
            truth["profile"] = to_json(profile);
            truth["f0_hz"] = o->f0_hz;
            truth["snr_db"] = o->snr_db;
            const auto tp = run.path("truth.json");
            write_json(tp, truth);
            run.wrote(tp);
            run.finish({{"length", n}, {"shifts", events.size()}, {"truncated", profile.truncated}});
          }};
}

Command add_simulate_rossler(CLI::App& root, const GlobalOptions& g) {
  auto o = std::make_shared<RosslerOptions>();
  RosslerParams& p = o->params;
  CLI::App* cmd = root.add_subcommand("simulate-rossler", "Two coupled Rossler attractors");
  cmd->add_option("--duration", o->duration_s, "Seconds kept after burn-in")->capture_default_str();
  cmd->add_option("--coupling", p.coupling, "Coupling C")->capture_default_str();
  cmd->add_option("--delta-omega", p.delta_omega, "Frequency mismatch (rad/s)")->capture_default_str();
  cmd->add_option("--a", p.a)->capture_default_str();
  cmd->add_option("--b", p.b)->capture_default_str();
  cmd->add_option("--c", p.c)->capture_default_str();
  cmd->add_option("--f0", p.f0_hz, "Mean frequency (Hz)")->capture_default_str();
  cmd->add_option("--internal-rate", p.internal_rate_hz, "Integration rate (Hz)")->capture_default_str();
  cmd->add_option("--rate", p.output_rate_hz, "Output rate (Hz)")->capture_default_str();
  cmd->add_option("--burn-in-s", p.burn_in_s, "Seconds discarded before output")->capture_default_str();
  cmd->add_option("--init-box", p.init_box, "Initial-condition box half-width")->capture_default_str();
  cmd->add_option("--slip-smoothing", o->smoothing_s, "Moving average for slip marking (s)")->capture_default_str();
  cmd->add_option("--slip-tracking", o->tracking_s, "Locking-level time constant for slip marking (s)")
      ->capture_default_str();

  return {cmd, [o, cmd, &root, &g] {
            Run run(root, *cmd, g);
            const RosslerTrajectory traj = simulate_rossler(o->params, o->duration_s, g.seed);
            const double rate = o->params.output_rate_hz;

            CsvTable table;
            table.rate_hz = rate;
            table.names = {"x1", "y1", "z1", "x2", "y2", "z2"};
            for (const auto& ch : traj.first) table.columns.push_back(ch.samples);
            for (const auto& ch : traj.second) table.columns.push_back(ch.samples);
            const auto csv = run.path("rossler.csv");
            write_csv(csv, table);
            run.wrote(csv);
            write_json(sidecar_path(csv), Json{{"rate_hz", rate}, {"channels", table.names}});

            const PhaseSeries p1 = poincare_phase(traj.first[0], traj.first[1]);
            const PhaseSeries p2 = poincare_phase(traj.second[0], traj.second[1]);
            const PhaseSeries diff = phase_difference(p1, p2);
            CsvTable phase;
            phase.rate_hz = rate;
            phase.names = {"phase1", "phase2", "difference"};
            phase.columns = {p1.values, p2.values, diff.values};
            const auto pcsv = run.path("truth_phase.csv");
            write_csv(pcsv, phase);
            run.wrote(pcsv);

            const auto slips = mark_phase_slips(diff, o->smoothing_s, o->tracking_s);
            const auto tp = run.path("truth.json");
            write_json(tp, truth_json(slips, rate, diff.size()));
            run.wrote(tp);
            run.finish({{"slips", slips.size()}});
          }};
}

}  // namespace phaseshift::cli
