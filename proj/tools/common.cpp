#include "common.hpp"

#include <cmath>
#include <sstream>

#include "phaseshift/random.hpp"

namespace phaseshift::cli {

void add_global_options(CLI::App& app, GlobalOptions& g) {
  app.add_option("--seed", g.seed, "Global seed; per-component seeds are derived from it")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Directory for outputs and the manifest")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads for replicate loops (0: all cores)")
      ->capture_default_str();
  app.add_option("--cache-dir", g.cache_dir, "Cache for critical-value tables")
      ->envname("PHASESHIFT_CACHE_DIR");
}

DemodConfig DemodOptions::config() const {
  DemodConfig d;
  d.center_hz = center_hz;
  d.half_bandwidth_hz = half_bandwidth_hz;
  if (filter == "butterworth") {
    d.filter = ButterworthSpec{order};
  } else if (filter == "ewma") {
    EwmaSpec e;
    if (ewma_alpha > 0.0) e.alpha = ewma_alpha;
    d.filter = e;
  } else {
    throw ConfigError("--filter must be butterworth or ewma, not '" + filter + "'");
  }
  if (burn_in >= 0) d.burn_in = static_cast<Index>(burn_in);
  return d;
}

void add_demod_options(CLI::App* cmd, DemodOptions& d) {
  cmd->add_option("--center", d.center_hz, "Demodulation centre frequency (Hz)")->capture_default_str();
  cmd->add_option("--half-bandwidth", d.half_bandwidth_hz, "Low-pass corner (Hz)")->capture_default_str();
  cmd->add_option("--filter", d.filter, "Low-pass: butterworth or ewma")
      ->check(CLI::IsMember({"butterworth", "ewma"}))
      ->capture_default_str();
  cmd->add_option("--order", d.order, "Butterworth order")->check(CLI::Range(1, 16))->capture_default_str();
  cmd->add_option("--ewma-alpha", d.ewma_alpha, "EWMA coefficient (0: from the half-bandwidth)")
      ->capture_default_str();
  cmd->add_option("--burn-in", d.burn_in, "Samples discarded after filter start (-1: filter default)")
      ->capture_default_str();
}

Json to_json(const DemodConfig& d, double rate_hz) {
  return Json{{"center_hz", d.center_hz},
              {"half_bandwidth_hz", d.half_bandwidth_hz},
              {"filter", d.describe()},
              {"burn_in", d.burn_in ? *d.burn_in : d.default_burn_in(rate_hz)},
              {"group_delay_samples", d.group_delay(rate_hz)}};
}

std::vector<double> parse_grid(const std::string& text, const std::string& what) {
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw ConfigError(what + ": cannot parse '" + s + "' as a number");
    return v;
  };
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw ConfigError(what + ": range must be start:stop:step");
    const double a = number(parts[0]), b = number(parts[1]), step = number(parts[2]);
    if (!(step > 0.0) || b < a) throw ConfigError(what + ": range needs start <= stop and a positive step");
    const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9));
    for (long i = 0; i <= count; ++i) out.push_back(a + static_cast<double>(i) * step);
  } else {
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(number(p));
  }
  if (out.empty()) throw ConfigError(what + ": empty grid");
  return out;
}

Run::Run(const CLI::App& root, const CLI::App& command, const GlobalOptions& g)
    : root_(root), command_(command), out_dir_(g.out_dir) {
  set_thread_count(g.threads);
  std::error_code ec;
  std::filesystem::create_directories(out_dir_, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir_.string() + ": " + ec.message());
}

std::filesystem::path Run::path(const std::string& name) const { return out_dir_ / name; }

void Run::wrote(const std::filesystem::path& p) { outputs_.push_back(p); }

void Run::finish(const Json& extra) const {
  const std::filesystem::path manifest = path("manifest.toml");
  // Global options, then the command's own under its section header, which is
  // what selects the command on replay. Unset options are left out so a replay
  // does not feed empty strings to validators.
  const auto keep = [](const std::string& rendered, bool top_level) {
    std::istringstream in(rendered);
    std::string out;
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && line.front() == '[') {
        if (top_level) break;
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos || line.substr(eq + 1) == "\"\"") continue;
      if (top_level && line.substr(0, eq).find('.') != std::string::npos) break;
      out += line + "\n";
    }
    return out;
  };
  const std::string text = keep(root_.config_to_str(true, false), true) + "\n[" + command_.get_name() + "]\n" +
                           keep(command_.config_to_str(true, false), false);
  write_text_atomic(manifest, text);
  Json files = Json::array();
  for (const auto& p : outputs_)
    files.push_back({{"path", p.filename().string()}, {"checksum", file_checksum(p)}});
  Json j{{"command", command_.get_name()}, {"manifest", "manifest.toml"}, {"outputs", files}};
  for (const auto& [k, v] : extra.items()) j[k] = v;
  write_json(path("outputs.json"), j);
}

}  // namespace phaseshift::cli
