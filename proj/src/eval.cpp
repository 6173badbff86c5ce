#include "phaseshift/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace phaseshift {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  tolerance = o.tolerance;
  window = o.window;
  return *this;
}

ConfusionCounts match_events(std::vector<Index> detected, std::vector<Index> truth, Index tolerance, Index n,
                             Index window) {
  if (tolerance <= 0) throw std::invalid_argument("match_events: tolerance must be positive");
  if (n < 0) throw std::invalid_argument("match_events: negative series length");
  std::sort(detected.begin(), detected.end());
  std::sort(truth.begin(), truth.end());

  ConfusionCounts c;
  c.tolerance = tolerance;
  c.window = window > 0 ? window : tolerance;
  std::size_t j = 0;
  for (Index d : detected) {
    while (j < truth.size() && truth[j] < d - tolerance) ++j;  // passed without a match
    if (j < truth.size() && truth[j] <= d + tolerance) {
      ++c.tp;
      ++j;
    } else {
      ++c.fp;
    }
  }
  c.fn = static_cast<Index>(truth.size()) - c.tp;

  const Index windows = (n + c.window - 1) / c.window;
  std::vector<char> occupied(static_cast<std::size_t>(windows), 0);
  auto mark = [&](Index i) {
    if (windows == 0) return;
    occupied[static_cast<std::size_t>(std::clamp<Index>(i / c.window, 0, windows - 1))] = 1;
  };
  for (Index d : detected) mark(d);
  for (Index t : truth) mark(t);
  c.tn = windows - std::count(occupied.begin(), occupied.end(), 1);
  return c;
}

ConfusionCounts match_events(const std::vector<ShiftEvent>& detected, const std::vector<ShiftEvent>& truth,
                             Index tolerance, Index n, Index window) {
  return match_events(event_indices(detected), event_indices(truth), tolerance, n, window);
}

double accuracy(const ConfusionCounts& c) {
  if (c.total() <= 0) throw std::invalid_argument("accuracy: all counts are zero");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

RocCurve roc_curve(const std::vector<std::pair<double, ConfusionCounts>>& per_alpha) {
  if (per_alpha.size() < 3) throw std::invalid_argument("roc_curve: need at least 3 significance levels");
  RocCurve roc;
  for (const auto& [alpha, c] : per_alpha) roc.points.push_back({alpha, c.fp_rate(), c.tp_rate(), accuracy(c), c});
  std::sort(roc.points.begin(), roc.points.end(), [](const RocPoint& a, const RocPoint& b) {
    if (a.fp_rate != b.fp_rate) return a.fp_rate < b.fp_rate;
    if (a.tp_rate != b.tp_rate) return a.tp_rate < b.tp_rate;
    return a.alpha < b.alpha;
  });

  double x0 = 0.0, y0 = 0.0, area = 0.0;
  for (const auto& p : roc.points) {
    area += (p.fp_rate - x0) * (p.tp_rate + y0) / 2.0;
    x0 = p.fp_rate;
    y0 = p.tp_rate;
  }
  area += (1.0 - x0) * (1.0 + y0) / 2.0;
  roc.auroc = area;

  roc.max_accuracy = -1.0;
  for (const auto& p : roc.points) {
    if (p.accuracy > roc.max_accuracy || (p.accuracy == roc.max_accuracy && p.alpha < roc.max_accuracy_alpha)) {
      roc.max_accuracy = p.accuracy;
      roc.max_accuracy_alpha = p.alpha;
    }
  }
  return roc;
}

RocCurve roc_curve(const std::vector<double>& alphas, const std::vector<std::vector<std::vector<Index>>>& detections,
                   const std::vector<std::vector<Index>>& truth, const std::vector<Index>& lengths, Index tolerance,
                   Index window) {
  if (detections.size() != alphas.size()) throw std::invalid_argument("roc_curve: one detection set per alpha");
  if (truth.size() != lengths.size()) throw std::invalid_argument("roc_curve: one length per dataset");
  std::vector<std::pair<double, ConfusionCounts>> per_alpha;
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    if (detections[a].size() != truth.size()) throw std::invalid_argument("roc_curve: dataset count mismatch");
    ConfusionCounts pooled;
    for (std::size_t d = 0; d < truth.size(); ++d)
      pooled += match_events(detections[a][d], truth[d], tolerance, lengths[d], window);
    per_alpha.emplace_back(alphas[a], pooled);
  }
  return roc_curve(per_alpha);
}

PowerLawFit isi_powerlaw(const std::vector<double>& intervals, const PowerLawOptions& options) {
  if (intervals.size() < options.min_samples) {
    std::ostringstream msg;
    msg << "isi_powerlaw: need at least " << options.min_samples << " intervals, got " << intervals.size();
    throw std::invalid_argument(msg.str());
  }
  if (options.bins_per_decade < 1) throw std::invalid_argument("isi_powerlaw: bins_per_decade must be positive");
  for (double v : intervals)
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("isi_powerlaw: intervals must be positive");

  const auto [lo_it, hi_it] = std::minmax_element(intervals.begin(), intervals.end());
  const double lo = *lo_it, hi = *hi_it;
  const double ratio = std::pow(10.0, 1.0 / options.bins_per_decade);
  const double total = static_cast<double>(intervals.size());

  PowerLawFit fit;
  fit.samples = intervals.size();
  for (double edge = lo; edge <= hi; edge *= ratio) {
    HistogramBin b;
    b.lower = edge;
    b.upper = edge * ratio;
    b.center = std::sqrt(b.lower * b.upper);
    fit.histogram.push_back(b);
  }
  const double log_ratio = std::log(ratio);
  for (double v : intervals) {
    auto k = static_cast<std::size_t>(std::floor(std::log(v / lo) / log_ratio));
    k = std::min(k, fit.histogram.size() - 1);
    ++fit.histogram[k].count;
  }
  for (auto& b : fit.histogram) b.density = static_cast<double>(b.count) / (total * (b.upper - b.lower));

  std::size_t start = 0;
  if (options.tail_start) {
    while (start < fit.histogram.size() && fit.histogram[start].upper <= *options.tail_start) ++start;
  } else {
    for (std::size_t k = 1; k < fit.histogram.size(); ++k)
      if (fit.histogram[k].density > fit.histogram[start].density) start = k;
  }
  std::vector<double> xs, ys;
  for (std::size_t k = start; k < fit.histogram.size() && fit.histogram[k].count > 0; ++k) {
    xs.push_back(std::log10(fit.histogram[k].center));
    ys.push_back(std::log10(fit.histogram[k].density));
  }
  if (xs.size() < 3) {
    std::ostringstream msg;
    msg << "isi_powerlaw: only " << xs.size() << " non-empty tail bins; need at least 3";
    throw NumericalError(msg.str());
  }

  const auto m = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / m;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
    syy += (ys[k] - my) * (ys[k] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.exponent = -fit.slope;
  fit.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  fit.tail_start = fit.histogram[start].lower;
  fit.bins_used = xs.size();
  return fit;
}

std::vector<double> inter_event_intervals(const std::vector<std::vector<ShiftEvent>>& per_dataset) {
  std::vector<double> out;
  for (const auto& events : per_dataset)
    for (std::size_t i = 1; i < events.size(); ++i) out.push_back(events[i].time_s - events[i - 1].time_s);
  return out;
}

UniformityResult chi2_uniform(const std::vector<std::size_t>& counts) {
  if (counts.size() < 2) throw std::invalid_argument("chi2_uniform: need at least 2 bins");
  UniformityResult r;
  r.counts = counts;
  r.used = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  r.expected = static_cast<double>(r.used) / static_cast<double>(counts.size());
  if (r.expected < 5.0) {
    std::ostringstream msg;
    msg << "uniformity test: expected count per bin is " << r.expected << " (< 5); use fewer bins or more events";
    throw std::invalid_argument(msg.str());
  }
  for (std::size_t c : counts) r.chi2 += (static_cast<double>(c) - r.expected) * (static_cast<double>(c) - r.expected);
  r.chi2 /= r.expected;
  const double dof = static_cast<double>(counts.size() - 1);
  r.p_value = r.chi2 > 0.0 ? boost::math::gamma_q(dof / 2.0, r.chi2 / 2.0) : 1.0;
  return r;
}

UniformityResult uniformity_test(const std::vector<double>& event_times_s, std::vector<double> stimulus_times_s,
                                 double window_s, int bins) {
  if (!(window_s > 0.0)) throw std::invalid_argument("uniformity_test: window must be positive");
  if (bins < 2) throw std::invalid_argument("uniformity_test: need at least 2 bins");
  if (stimulus_times_s.empty()) throw std::invalid_argument("uniformity_test: no stimulus times");
  std::sort(stimulus_times_s.begin(), stimulus_times_s.end());

  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  std::size_t discarded = 0;
  for (double t : event_times_s) {
    const auto it = std::upper_bound(stimulus_times_s.begin(), stimulus_times_s.end(), t);
    if (it == stimulus_times_s.begin()) {
      ++discarded;
      continue;
    }
    const double latency = t - *std::prev(it);
    if (latency >= window_s) {
      ++discarded;
      continue;
    }
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(latency / window_s * bins), counts.size() - 1);
    ++counts[k];
  }
  UniformityResult r = chi2_uniform(counts);
  r.discarded = discarded;
  return r;
}

std::vector<ShiftEvent> mark_phase_slips(const PhaseSeries& difference, double smoothing_s, double tracking_s) {
  if (!(smoothing_s >= 0.0)) throw std::invalid_argument("mark_phase_slips: smoothing must be non-negative");
  if (!(tracking_s > 0.0)) throw std::invalid_argument("mark_phase_slips: tracking time constant must be positive");
  const Vector& v = difference.values;
  const Index n = v.size();
  std::vector<ShiftEvent> events;
  if (n == 0) return events;

  // Centred moving average via prefix sums; the window shrinks at the ends.
  const auto half = static_cast<Index>(std::llround(smoothing_s * difference.rate_hz / 2.0));
  Vector prefix(n + 1);
  prefix[0] = 0.0;
  for (Index i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + v[i];
  Vector smooth(n);
  for (Index i = 0; i < n; ++i) {
    const Index a = std::max<Index>(0, i - half), b = std::min<Index>(n, i + half + 1);
    smooth[i] = (prefix[b] - prefix[a]) / static_cast<double>(b - a);
  }

  const double beta = 1.0 - std::exp(-1.0 / (tracking_s * difference.rate_hz));
  const double threshold = 1.5 * kPi;
  double level = smooth[0];
  for (Index i = 1; i < n; ++i) {
    const double step =
        smooth[i] > level + threshold ? kTwoPi : (smooth[i] < level - threshold ? -kTwoPi : 0.0);
    if (step == 0.0) {
      if (std::abs(smooth[i] - level) < kPi / 2.0) level += beta * (smooth[i] - level);
      continue;
    }
    ShiftEvent e;
    e.index = i;
    e.time_s = difference.time_s(i);
    e.magnitude = step;
    e.t_lower = e.t_upper = i;
    events.push_back(e);
    level += step;
  }
  return events;
}

}  // namespace phaseshift
