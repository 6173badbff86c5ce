#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "phaseshift/types.hpp"

namespace phaseshift {

struct ConfusionCounts {
  Index tp = 0;
  Index fp = 0;
  Index tn = 0;
  Index fn = 0;
  Index tolerance = 0;
  Index window = 0;

  Index total() const { return tp + fp + tn + fn; }
  double tp_rate() const { return tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0; }
  double fp_rate() const { return fp + tn > 0 ? static_cast<double>(fp) / static_cast<double>(fp + tn) : 0.0; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
};

// Greedy one-to-one matching in index order. TN counts disjoint windows of
// `window` samples (default: tolerance) covering [0, n) that hold neither a
// truth nor a detection.
ConfusionCounts match_events(std::vector<Index> detected, std::vector<Index> truth, Index tolerance, Index n,
                             Index window = 0);
ConfusionCounts match_events(const std::vector<ShiftEvent>& detected, const std::vector<ShiftEvent>& truth,
                             Index tolerance, Index n, Index window = 0);

// (TP + TN) / total.
double accuracy(const ConfusionCounts& c);

struct RocPoint {
  double alpha = 0.0;
  double fp_rate = 0.0;
  double tp_rate = 0.0;
  double accuracy = 0.0;
  ConfusionCounts counts;
};

struct RocCurve {
  std::vector<RocPoint> points;  // sorted by fp_rate, then tp_rate
  double auroc = 0.0;
  double max_accuracy = 0.0;
  double max_accuracy_alpha = 0.0;
};

// One pooled confusion count per significance level. Needs at least 3 levels.
RocCurve roc_curve(const std::vector<std::pair<double, ConfusionCounts>>& per_alpha);

// detections[a][d]: detected indices at alphas[a] in dataset d.
RocCurve roc_curve(const std::vector<double>& alphas, const std::vector<std::vector<std::vector<Index>>>& detections,
                   const std::vector<std::vector<Index>>& truth, const std::vector<Index>& lengths, Index tolerance,
                   Index window = 0);

struct HistogramBin {
  double lower = 0.0;
  double upper = 0.0;
  double center = 0.0;  // geometric
  std::size_t count = 0;
  double density = 0.0;  // count / (samples * width)
};

struct PowerLawOptions {
  int bins_per_decade = 20;
  std::optional<double> tail_start;  // default: the density mode bin
  std::size_t min_samples = 200;
};

struct PowerLawFit {
  double exponent = 0.0;  // q, positive for a decaying tail
  double slope = 0.0;     // fitted log-log slope, equal to -q
  double intercept = 0.0;
  double r_squared = 0.0;
  double tail_start = 0.0;
  std::size_t bins_used = 0;
  std::size_t samples = 0;
  std::vector<HistogramBin> histogram;
};

// Log-binned density histogram anchored at the smallest value; least squares
// of log10 density on log10 bin centre from the tail start to the first empty bin.
PowerLawFit isi_powerlaw(const std::vector<double>& intervals, const PowerLawOptions& options = {});

// Differences between consecutive event times (seconds) within each dataset, pooled.
std::vector<double> inter_event_intervals(const std::vector<std::vector<ShiftEvent>>& per_dataset);

struct UniformityResult {
  double chi2 = 0.0;
  double p_value = 1.0;
  std::vector<std::size_t> counts;
  double expected = 0.0;
  std::size_t used = 0;
  std::size_t discarded = 0;
};

// Chi-square test of equal bin counts with bins - 1 degrees of freedom.
UniformityResult chi2_uniform(const std::vector<std::size_t>& counts);

// Latency of each event since the most recent stimulus; latencies at or beyond
// window_s (or events before the first stimulus) are discarded, the rest are
// binned into `bins` equal bins on [0, window_s).
UniformityResult uniformity_test(const std::vector<double>& event_times_s, std::vector<double> stimulus_times_s,
                                 double window_s = 0.5, int bins = 10);

// Phase slips of a straightened phase difference: after a centred moving
// average of smoothing_s seconds, an event is marked whenever the smoothed
// difference moves more than 3 pi / 2 from the current locking level, which
// then moves by 2 pi in that direction; reversing a slip takes a retreat of
// pi. While the smoothed difference is within pi / 2 of the level, the level
// follows it with an EWMA of time constant tracking_s, so it stays centred on
// the current plateau; it is frozen during larger excursions.
std::vector<ShiftEvent> mark_phase_slips(const PhaseSeries& difference, double smoothing_s = 1.0,
                                         double tracking_s = 20.0);

}  // namespace phaseshift
