#include <cmath>
#include <map>
#include <memory>

#include "commands.hpp"
#include "phaseshift/eval.hpp"
#include "phaseshift/experiments.hpp"

namespace phaseshift::cli {

namespace {

struct EvaluateOptions {
  std::vector<std::string> events;
  std::vector<std::string> truth;
  std::string output = "report.json";
  long tolerance = 0;
  long window = 0;
  double isi_alpha = -1.0;
  std::string stimuli;
  double uniformity_window_s = 0.5;
  int bins = 10;
  int bins_per_decade = 20;
  std::size_t min_isi_samples = 200;
  std::string benchmark;
  std::size_t datasets = 0;
  std::string alpha_grid;
};

Json counts_json(const ConfusionCounts& c) {
  return Json{{"tp", c.tp},         {"fp", c.fp},           {"tn", c.tn},
              {"fn", c.fn},         {"tp_rate", c.tp_rate()}, {"fp_rate", c.fp_rate()},
              {"tolerance", c.tolerance}, {"window", c.window}};
}

Json roc_json(const RocCurve& roc) {
  Json points = Json::array();
  for (const auto& p : roc.points)
    points.push_back({{"alpha", p.alpha},
                      {"fp_rate", p.fp_rate},
                      {"tp_rate", p.tp_rate},
                      {"accuracy", p.accuracy},
                      {"counts", counts_json(p.counts)}});
  return Json{{"points", points},
              {"auroc", roc.auroc},
              {"max_accuracy", roc.max_accuracy},
              {"max_accuracy_alpha", roc.max_accuracy_alpha}};
}

Json benchmark_json(const BenchmarkResult& r) {
  Json methods = Json::object();
  for (const auto& m : r.methods) methods[to_string(m.method)] = roc_json(m.roc);
  return Json{{"tau", r.tau},
              {"isi_min", r.isi_min},
              {"tolerance", r.tolerance},
              {"group_delay", r.group_delay},
              {"datasets", r.datasets},
              {"truth_events", r.truth_events},
              {"methods", methods}};
}

Json powerlaw_json(const PowerLawFit& f) {
  Json bins = Json::array();
  for (const auto& b : f.histogram)
    bins.push_back({{"center", b.center}, {"count", b.count}, {"density", b.density}});
  return Json{{"exponent", f.exponent}, {"slope", f.slope},       {"intercept", f.intercept},
              {"r_squared", f.r_squared}, {"tail_start", f.tail_start}, {"bins_used", f.bins_used},
              {"samples", f.samples},   {"histogram", bins}};
}

std::vector<double> read_stimuli(const std::string& path) {
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
    const Json j = read_json(path);
    const Json& list = j.is_object() ? j.at("times") : j;
    return list.get<std::vector<double>>();
  }
  const CsvTable t = read_csv(path);
  const Vector& v = t.columns.front();
  return {v.data(), v.data() + v.size()};
}

void write_histogram(const std::filesystem::path& path, const PowerLawFit& f) {
  std::string text = "bin_center,count,density\n";
  for (const auto& b : f.histogram)
    text += format_double(b.center) + "," + std::to_string(b.count) + "," + format_double(b.density) + "\n";
  write_text_atomic(path, text);
}

Json run_benchmark(const EvaluateOptions& o, std::uint64_t seed) {
  const auto alphas = o.alpha_grid.empty() ? default_alpha_grid() : parse_grid(o.alpha_grid, "--alpha-grid");
  if (o.benchmark == "oscillator") {
    OscillatorBenchmarkConfig c;
    c.seed = seed;
    c.alphas = alphas;
    if (o.datasets) c.datasets = o.datasets;
    return benchmark_json(run_oscillator_benchmark(c));
  }
  if (o.benchmark == "rossler") {
    RosslerBenchmarkConfig c;
    c.seed = seed;
    c.alphas = alphas;
    if (o.datasets) c.datasets = o.datasets;
    Json j = benchmark_json(run_rossler_benchmark(c));
    j["delta_omega"] = c.params.delta_omega;
    return j;
  }
  if (o.benchmark == "isi") {
    IsiStudyConfig c;
    c.seed = seed;
    if (o.datasets) c.datasets = o.datasets;
    c.powerlaw.bins_per_decade = o.bins_per_decade;
    c.powerlaw.min_samples = o.min_isi_samples;
    const IsiStudyResult r = run_isi_study(c);
    Json j{{"tau", r.tau},
           {"events", r.events},
           {"truth_events", r.truth_events},
           {"intervals", r.intervals_s.size()},
           {"mean_isi_s", r.mean_isi_s}};
    j["powerlaw"] = r.fit ? powerlaw_json(*r.fit) : Json{{"error", r.fit_error}};
    return j;
  }
  if (o.benchmark == "null") {
    NullCalibrationConfig c;
    c.seed = seed;
    if (o.datasets) c.datasets = o.datasets;
    const NullCalibrationResult r = run_null_calibration(c);
    Json rates = Json::array();
    for (const auto& x : r.rates)
      rates.push_back({{"method", to_string(x.method)},
                       {"alpha", x.alpha},
                       {"rate", x.rate()},
                       {"datasets", x.datasets},
                       {"within_3se", x.within(3.0)}});
    return Json{{"tau", r.tau}, {"rates", rates}};
  }
  if (o.benchmark == "resolution") {
    ResolutionStudyConfig c;
    c.seed = seed;
    const ResolutionStudyResult r = run_resolution_study(c);
    Json cells = Json::array();
    auto opt = [](const std::optional<Index>& v) { return v ? Json(*v) : Json(nullptr); };
    for (const auto& x : r.cells)
      cells.push_back({{"snr_db", x.snr_db},
                       {"delta", x.delta},
                       {"power_cusum", x.power_cusum},
                       {"power_pd", x.power_pd},
                       {"isi_min_cusum", opt(x.isi_cusum)},
                       {"isi_min_pd", opt(x.isi_pd)},
                       {"common", x.common}});
    return Json{{"cells", cells},
                {"common", r.common},
                {"median_isi_min_cusum_ms", r.median_cusum_ms},
                {"median_isi_min_pd_ms", r.median_pd_ms},
                {"gap_ms", r.gap_ms()}};
  }
  throw ConfigError("--benchmark must be oscillator, rossler, isi, null or resolution");
}

}  // namespace

Command add_evaluate(CLI::App& root, const GlobalOptions& g) {
  auto o = std::make_shared<EvaluateOptions>();
  CLI::App* cmd = root.add_subcommand("evaluate", "Score detections against truth, or run a benchmark");
  cmd->add_option("--events", o->events, "Events files from detect, one per dataset");
  cmd->add_option("--truth", o->truth, "Truth files, paired with --events in order");
  cmd->add_option("--output", o->output, "Report file name inside --out-dir")->capture_default_str();
  cmd->add_option("--tolerance", o->tolerance, "Matching tolerance (samples; 0: isi_min / 2 of the detector)")
      ->capture_default_str();
  cmd->add_option("--window", o->window, "TN decision window (samples; 0: the tolerance)")->capture_default_str();
  cmd->add_option("--isi-alpha", o->isi_alpha, "Run used for ISI and uniformity (default: the first)");
  cmd->add_option("--stimuli", o->stimuli, "Stimulus times (JSON array or CSV column, seconds)");
  cmd->add_option("--uniformity-window", o->uniformity_window_s, "Latency window (s)")->capture_default_str();
  cmd->add_option("--bins", o->bins, "Uniformity bins")->capture_default_str();
  cmd->add_option("--bins-per-decade", o->bins_per_decade, "ISI histogram resolution")->capture_default_str();
  cmd->add_option("--min-isi-samples", o->min_isi_samples, "Intervals needed for a power-law fit")
      ->capture_default_str();
  cmd->add_option("--benchmark", o->benchmark, "oscillator, rossler, isi, null or resolution")
      ->check(CLI::IsMember({"oscillator", "rossler", "isi", "null", "resolution"}));
  cmd->add_option("--datasets", o->datasets, "Benchmark datasets (0: protocol default)")->capture_default_str();
  cmd->add_option("--alpha-grid", o->alpha_grid, "Benchmark significance levels");

  return {cmd, [o, cmd, &root, &g] {
            Run run(root, *cmd, g);
            const auto report_path = run.path(o->output);
            if (!o->benchmark.empty()) {
              Json j = run_benchmark(*o, g.seed);
              j["benchmark"] = o->benchmark;
              j["seed"] = g.seed;
              write_json(report_path, j);
              run.wrote(report_path);
              run.finish();
              return;
            }
            if (o->events.empty()) throw ConfigError("evaluate needs --events and --truth, or --benchmark");
            if (o->events.size() != o->truth.size())
              throw ConfigError("evaluate: " + std::to_string(o->events.size()) + " events files but " +
                                std::to_string(o->truth.size()) + " truth files");

            std::map<double, ConfusionCounts> per_alpha;
            std::vector<std::vector<ShiftEvent>> isi_events;
            Index tolerance = 0, window = 0;
            for (std::size_t f = 0; f < o->events.size(); ++f) {
              const Json ev = read_json(o->events[f]);
              const Json tr = read_json(o->truth[f]);
              const double rate = ev.at("rate_hz").get<double>();
              const double truth_rate = tr.at("rate_hz").get<double>();
              if (std::abs(rate - truth_rate) > 1e-9 * std::max(1.0, rate))
                throw ConfigError("evaluate: " + o->events[f] + " is at " + format_double(rate) + " Hz but " +
                                  o->truth[f] + " is at " + format_double(truth_rate) + " Hz");
              tolerance = o->tolerance > 0 ? o->tolerance
                          : ev.contains("isi_min")
                              ? std::max<Index>(1, ev.at("isi_min").get<Index>() / 2)
                              : std::max<Index>(1, static_cast<Index>(std::llround(0.25 * rate)));
              window = o->window > 0 ? o->window : tolerance;

              std::vector<Index> truth;
              for (const auto& e : tr.at("events")) truth.push_back(e.at("index").get<Index>());
              const Index n = tr.at("length").get<Index>();

              const Json runs = ev.contains("runs") ? ev.at("runs")
                                                    : Json::array({{{"alpha", ev.value("alpha", 0.05)},
                                                                    {"events", ev.at("events")}}});
              if (f > 0 && runs.size() != per_alpha.size())
                throw ConfigError("evaluate: " + o->events[f] + " has a different significance grid");
              const Json* chosen = &runs.front();
              for (const auto& r : runs) {
                const double a = r.at("alpha").get<double>();
                if (f > 0 && !per_alpha.count(a))
                  throw ConfigError("evaluate: " + o->events[f] + " has alpha " + format_double(a) +
                                    " missing from earlier files");
                std::vector<Index> detected;
                for (const auto& e : r.at("events")) detected.push_back(e.at("index").get<Index>());
                per_alpha[a] += match_events(detected, truth, tolerance, n, window);
                if (o->isi_alpha > 0.0 && std::abs(a - o->isi_alpha) < 1e-12) chosen = &r;
              }
              std::vector<ShiftEvent> events;
              for (const auto& e : chosen->at("events")) events.push_back(event_from_json(e, rate));
              isi_events.push_back(events);
            }

            Json report{{"files", o->events.size()}, {"tolerance", tolerance}, {"window", window}};
            Json counts = Json::array();
            for (const auto& [a, c] : per_alpha) {
              Json j = counts_json(c);
              j["alpha"] = a;
              j["accuracy"] = c.total() > 0 ? accuracy(c) : 1.0;
              counts.push_back(j);
            }
            report["counts"] = counts;
            if (per_alpha.size() >= 3)
              report["roc"] = roc_json(roc_curve({per_alpha.begin(), per_alpha.end()}));

            const std::vector<double> intervals = inter_event_intervals(isi_events);
            report["isi"] = {{"intervals", intervals.size()}};
            try {
              PowerLawOptions po;
              po.bins_per_decade = o->bins_per_decade;
              po.min_samples = o->min_isi_samples;
              const PowerLawFit fit = isi_powerlaw(intervals, po);
              report["isi"]["powerlaw"] = powerlaw_json(fit);
              const auto hist = run.path("isi_histogram.csv");
              write_histogram(hist, fit);
              run.wrote(hist);
            } catch (const std::exception& e) {
              report["isi"]["powerlaw"] = {{"error", e.what()}};
            }

            if (!o->stimuli.empty()) {
              std::vector<double> times;
              for (const auto& list : isi_events)
                for (const auto& e : list) times.push_back(e.time_s);
              const UniformityResult u =
                  uniformity_test(times, read_stimuli(o->stimuli), o->uniformity_window_s, o->bins);
              report["uniformity"] = {{"counts", u.counts},    {"chi2", u.chi2},         {"p_value", u.p_value},
                                      {"expected", u.expected}, {"discarded", u.discarded}};
            }
            write_json(report_path, report);
            run.wrote(report_path);
            run.finish();
          }};
}

}  // namespace phaseshift::cli
