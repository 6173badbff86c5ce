#include "phaseshift/detect.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "phaseshift/random.hpp"
#include "phaseshift/statistics.hpp"

namespace phaseshift {

const char* to_string(Method m) {
  switch (m) {
    case Method::CusumParametric: return "cusum-parametric";
    case Method::CusumBlock: return "cusum-block";
    case Method::PdParametric: return "pd-parametric";
    case Method::PdThreshold: return "pd-threshold";
  }
  return "unknown";
}

Method method_from_string(const std::string& s) {
  for (Method m : {Method::CusumParametric, Method::CusumBlock, Method::PdParametric, Method::PdThreshold})
    if (s == to_string(m)) return m;
  throw std::invalid_argument("unknown method '" + s +
                              "' (expected cusum-parametric, cusum-block, pd-parametric or pd-threshold)");
}

StatKind stat_kind(Method m) {
  return (m == Method::CusumParametric || m == Method::CusumBlock) ? StatKind::Cusum : StatKind::PhaseDerivative;
}

bool is_parametric(Method m) { return m == Method::CusumParametric || m == Method::PdParametric; }

void DetectorConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("detector: alpha must lie in (0, 1)");
  if (n_min < 4) throw std::invalid_argument("detector: n_min must be at least 4");
  if (isi_min < 0) throw std::invalid_argument("detector: isi_min must be non-negative");
  if ((method == Method::CusumBlock || method == Method::PdThreshold) && tau < 1)
    throw std::invalid_argument("detector: tau must be set for nonparametric methods");
  if (method == Method::CusumBlock && bootstrap_replicates < 200)
    throw std::invalid_argument("detector: block bootstrap needs at least 200 replicates");
}

const BlockBootstrap& BootstrapCache::get(const Vector& phi, Index begin, Index end, Index tau,
                                          std::size_t replicates, std::uint64_t seed) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find({begin, end}); it != entries_.end()) return it->second;
  }
  BlockBootstrap bb = block_bootstrap(phi.segment(begin, end - begin), tau, replicates,
                                      derive_seed(seed, "segment", static_cast<std::uint64_t>(begin) << 32 |
                                                                       static_cast<std::uint64_t>(end)));
  std::lock_guard lock(mutex_);
  return entries_.emplace(std::pair{begin, end}, std::move(bb)).first->second;
}

double event_magnitude(const Vector& phi, Index t_lower, Index t_upper, Index window) {
  const Index n = phi.size();
  window = std::max<Index>(window, 1);
  auto trimmed_mean = [&](Index a, Index b) {
    a = std::clamp<Index>(a, 0, n);
    b = std::clamp<Index>(b, 0, n);
    if (b <= a) return std::numeric_limits<double>::quiet_NaN();
    std::vector<double> v(phi.data() + a, phi.data() + b);
    std::sort(v.begin(), v.end());
    const auto cut = static_cast<std::size_t>(0.1 * static_cast<double>(v.size()));
    double s = 0.0;
    for (std::size_t i = cut; i < v.size() - cut; ++i) s += v[i];
    return s / static_cast<double>(v.size() - 2 * cut);
  };
  double before = trimmed_mean(t_lower - window, t_lower);
  double after = trimmed_mean(t_upper + 1, t_upper + 1 + window);
  if (std::isnan(before)) before = trimmed_mean(0, std::max<Index>(1, t_lower));
  if (std::isnan(after)) after = trimmed_mean(std::min(t_upper, n - 1), n);
  if (std::isnan(before) || std::isnan(after)) return 0.0;
  return after - before;
}

namespace {

PhaseSeries prepared(const PhaseSeries& phi) {
  PhaseSeries p = phi.after_burn_in();
  if (!p.straightened) p = straighten_phase(p);
  return p;
}

Index magnitude_window_for(double rate_hz, Index isi_min) {
  const auto quarter = static_cast<Index>(std::llround(0.25 * rate_hz));
  return std::max<Index>(1, isi_min > 0 ? std::min(isi_min, quarter) : quarter);
}

// Maps an event found on the post-burn-in series back to the input's indices.
void finalize(std::vector<ShiftEvent>& events, const PhaseSeries& input, const Vector& used, Index window) {
  std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
  for (auto& e : events) {
    e.magnitude = event_magnitude(used, e.t_lower, e.t_upper, window);
    e.index += input.burn_in;
    e.t_lower += input.burn_in;
    e.t_upper += input.burn_in;
    e.time_s = input.time_s(e.index);
  }
}

}  // namespace

DetectionResult recursive_cusum_detect(const PhaseSeries& phi, const DetectorConfig& cfg, const CriticalTable* table,
                                       BootstrapCache* cache) {
  cfg.validate();
  if (stat_kind(cfg.method) != StatKind::Cusum)
    throw std::invalid_argument("recursive_cusum_detect: method is not a CUSUM method");
  const bool parametric = cfg.method == Method::CusumParametric;
  if (parametric && (!table || table->kind() != StatKind::Cusum))
    throw std::invalid_argument("recursive_cusum_detect: parametric method needs a CUSUM critical table");

  const PhaseSeries p = prepared(phi);
  const Vector& v = p.values;
  if (v.size() < 4) throw std::invalid_argument("cusum_stat: need at least 4 samples after burn-in");

  BootstrapCache local_cache;
  BootstrapCache& bc = cache ? *cache : local_cache;
  const Index min_len = parametric ? cfg.n_min : std::max(cfg.n_min, 8 * cfg.tau);

  DetectionResult result;
  result.method = cfg.method;
  std::function<void(Index, Index)> search = [&](Index begin, Index end) {
    const Index len = end - begin;
    if (len < min_len || len < 4) return;
    const StatSeries s = cusum_stat(v.segment(begin, len));
    const double threshold =
        parametric ? table->critical(len, cfg.alpha)
                   : bc.get(v, begin, end, cfg.tau, cfg.bootstrap_replicates, cfg.seed).critical(cfg.alpha);
    const bool reject = s.max_value > threshold;
    result.tests.push_back({begin, end, s.max_value, threshold, reject});
    if (!reject) return;

    ShiftEvent e;
    e.index = begin + s.argmax;
    e.statistic = s.max_value;
    e.threshold = threshold;
    e.t_lower = std::max(begin, e.index - cfg.isi_min);
    e.t_upper = std::min(end - 1, e.index + cfg.isi_min);
    result.events.push_back(e);
    search(begin, e.t_lower);
    search(e.t_upper + 1, end);
  };
  search(0, v.size());

  finalize(result.events, phi, v, magnitude_window_for(phi.rate_hz, cfg.isi_min));
  std::sort(result.tests.begin(), result.tests.end(), [](const auto& a, const auto& b) { return a.begin < b.begin; });
  return result;
}

namespace {

// Events from runs of stat >= threshold whose peak exceeds it. Bounds are the
// nearest samples strictly below the threshold; touching runs merge.
std::vector<ShiftEvent> exceedance_events(const Vector& stat, Index first, Index last, double threshold) {
  std::vector<ShiftEvent> events;
  Index t = first;
  while (t <= last) {
    if (stat[t] < threshold) {
      ++t;
      continue;
    }
    const Index run_start = t;
    Index peak = t;
    while (t <= last && !(stat[t] < threshold)) {
      if (stat[t] > stat[peak]) peak = t;
      ++t;
    }
    if (!(stat[peak] > threshold)) continue;
    ShiftEvent e;
    e.index = peak;
    e.statistic = stat[peak];
    e.threshold = threshold;
    e.t_lower = std::max<Index>(first - 1, run_start - 1);
    e.t_upper = std::min<Index>(last + 1, t);
    if (!events.empty() && e.t_lower <= events.back().t_upper) {
      ShiftEvent& prev = events.back();
      if (e.statistic > prev.statistic) {
        prev.index = e.index;
        prev.statistic = e.statistic;
      }
      prev.t_upper = std::max(prev.t_upper, e.t_upper);
    } else {
      events.push_back(e);
    }
  }
  return events;
}

}  // namespace

DetectionResult parametric_pd_detect(const PhaseSeries& phi, const DetectorConfig& cfg, const CriticalTable& table) {
  cfg.validate();
  if (table.kind() != StatKind::PhaseDerivative)
    throw std::invalid_argument("parametric_pd_detect: needs a phase-derivative critical table");
  const PhaseSeries p = prepared(phi);
  const Vector& v = p.values;
  const StatSeries s = pd_stat(v);
  const double threshold = table.critical(v.size(), cfg.alpha);

  DetectionResult result;
  result.method = cfg.method;
  result.tests.push_back({0, v.size(), s.max_value, threshold, s.max_value > threshold});
  result.events = exceedance_events(s.values, 2, v.size() - 1, threshold);
  finalize(result.events, phi, v, magnitude_window_for(phi.rate_hz, 0));
  return result;
}

double max_normal_quantile(double alpha, Index k, bool printed) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("max_normal_quantile: alpha must lie in (0, 1)");
  k = std::max<Index>(k, 1);
  const boost::math::normal standard;
  if (printed) {
    const double tail = std::pow(alpha, static_cast<double>(k));
    if (!(tail > 0.0)) return std::numeric_limits<double>::infinity();
    return boost::math::quantile(boost::math::complement(standard, tail));
  }
  // Upper-tail probability per variable: 1 - (1 - alpha)^(1/k).
  const double tail = -std::expm1(std::log1p(-alpha) / static_cast<double>(k));
  return boost::math::quantile(boost::math::complement(standard, tail));
}

DetectionResult threshold_pd_detect(const PhaseSeries& phi, Index tau, double alpha, bool printed_quantile,
                                    Index magnitude_window) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("threshold_pd_detect: alpha must lie in (0, 1)");
  if (tau < 1) throw std::invalid_argument("threshold_pd_detect: tau must be positive");
  const PhaseSeries p = prepared(phi);
  const Vector& v = p.values;
  const Index n = v.size();
  if (tau >= n) {
    std::ostringstream msg;
    msg << "threshold_pd_detect: tau (" << tau << ") must be shorter than the series (" << n << " samples)";
    throw std::invalid_argument(msg.str());
  }
  if (n < 3) throw std::invalid_argument("pd_stat: need at least 3 samples after burn-in");

  // Signed central differences at boundaries t = 2..n-1.
  Vector d = Vector::Zero(n);
  for (Index t = 2; t <= n - 1; ++t) d[t] = (v[t] - v[t - 2]) / 2.0;

  std::vector<char> excluded(static_cast<std::size_t>(n + 1), 0);
  DetectionResult result;
  result.method = Method::PdThreshold;
  double threshold = std::numeric_limits<double>::infinity();

  for (Index iter = 0; iter <= n; ++iter) {
    // Pooled variance and mean over maximal runs of included samples.
    double ss = 0.0, dof = 0.0, sum = 0.0;
    Index count = 0;
    Index t = 2;
    while (t <= n - 1) {
      if (excluded[t]) {
        ++t;
        continue;
      }
      const Index a = t;
      double s = 0.0;
      while (t <= n - 1 && !excluded[t]) s += d[t++];
      const Index len = t - a;
      const double mean = s / static_cast<double>(len);
      for (Index i = a; i < t; ++i) ss += (d[i] - mean) * (d[i] - mean);
      if (len >= 2) dof += static_cast<double>(len - 1);
      sum += s;
      count += len;
    }
    if (!(dof > 0.0) || !(ss > 0.0)) break;
    const double sigma = std::sqrt(ss / dof);
    const double centre = sum / static_cast<double>(count);
    const Index k_star = 2 * (count / tau);
    threshold = std::min(threshold, sigma * max_normal_quantile(alpha, k_star, printed_quantile));
    result.thresholds.push_back(threshold);

    Vector stat = Vector::Zero(n);
    for (Index i = 2; i <= n - 1; ++i) stat[i] = std::abs(d[i] - centre);
    std::vector<ShiftEvent> events = exceedance_events(stat, 2, n - 1, threshold);

    std::vector<char> next(excluded.size(), 0);
    for (const auto& e : events)
      for (Index i = std::max<Index>(e.t_lower, 0); i <= std::min<Index>(e.t_upper, n); ++i) next[i] = 1;
    result.events = std::move(events);
    if (iter == 0) result.tests.push_back({0, n, stat.maxCoeff(), threshold, !result.events.empty()});
    if (next == excluded) break;
    excluded = std::move(next);
  }

  const Index window = magnitude_window > 0 ? magnitude_window : magnitude_window_for(phi.rate_hz, 0);
  finalize(result.events, phi, v, window);
  return result;
}

void subtract_delay(std::vector<ShiftEvent>& events, Index delay, double rate_hz, Index start_index) {
  for (auto& e : events) {
    e.index -= delay;
    e.t_lower -= delay;
    e.t_upper -= delay;
    e.time_s = static_cast<double>(start_index + e.index) / rate_hz;
  }
}

DetectionResult detect(const PhaseSeries& phi, const DetectorConfig& cfg, const CriticalTable* table,
                       BootstrapCache* cache) {
  switch (cfg.method) {
    case Method::CusumParametric:
    case Method::CusumBlock:
      return recursive_cusum_detect(phi, cfg, table, cache);
    case Method::PdParametric:
      if (!table) throw std::invalid_argument("detect: pd-parametric needs a critical table");
      return parametric_pd_detect(phi, cfg, *table);
    case Method::PdThreshold:
      cfg.validate();
      return threshold_pd_detect(phi, cfg.tau, cfg.alpha, cfg.printed_quantile);
  }
  throw std::logic_error("detect: unhandled method");
}

}  // namespace phaseshift
