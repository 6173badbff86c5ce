#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "phaseshift/critical.hpp"
#include "phaseshift/types.hpp"

namespace phaseshift {

enum class Method { CusumParametric, CusumBlock, PdParametric, PdThreshold };

const char* to_string(Method m);
Method method_from_string(const std::string& s);
StatKind stat_kind(Method m);
bool is_parametric(Method m);

struct DetectorConfig {
  Method method = Method::CusumParametric;
  double alpha = 0.05;
  Index n_min = 4;
  Index isi_min = 256;  // exclusion half-width for CUSUM events
  Index tau = 0;        // dependence scale for block bootstrap and threshold methods
  std::size_t bootstrap_replicates = 1000;
  std::uint64_t seed = 0;
  bool printed_quantile = false;  // threshold method: use z at alpha^K* instead of (1-alpha)^(1/K*)

  void validate() const;
};

// One hypothesis test on the segment [begin, end).
struct SegmentTest {
  Index begin = 0;
  Index end = 0;
  double statistic = 0.0;
  double threshold = 0.0;
  bool rejected = false;
};

struct DetectionResult {
  std::vector<ShiftEvent> events;
  std::vector<SegmentTest> tests;
  std::vector<double> thresholds;  // threshold method: one per iteration
  Method method = Method::CusumParametric;
};

// Block-bootstrap maxima keyed by segment, shared across significance levels.
class BootstrapCache {
public:
  const BlockBootstrap& get(const Vector& phi, Index begin, Index end, Index tau, std::size_t replicates,
                            std::uint64_t seed);

private:
  std::mutex mutex_;
  std::map<std::pair<Index, Index>, BlockBootstrap> entries_;
};

// Binary segmentation with S1: test the segment, record the argmax on
// rejection, exclude [t - isi_min, t + isi_min], recurse on both sides.
DetectionResult recursive_cusum_detect(const PhaseSeries& phi, const DetectorConfig& cfg,
                                       const CriticalTable* table = nullptr, BootstrapCache* cache = nullptr);

// S2 against a parametric critical value at the full record length; each run
// of exceedances is one event, bounded by the nearest sub-threshold samples.
DetectionResult parametric_pd_detect(const PhaseSeries& phi, const DetectorConfig& cfg, const CriticalTable& table);

// Pooled-variance threshold on centred phase derivatives, iterated until the
// exclusion set stops growing.
DetectionResult threshold_pd_detect(const PhaseSeries& phi, Index tau, double alpha, bool printed_quantile = false,
                                    Index magnitude_window = 0);

// Standard-normal quantile q with P(max of k i.i.d. N(0,1) > q) = alpha, or the
// printed z at alpha^k.
double max_normal_quantile(double alpha, Index k, bool printed = false);

// Dispatch on cfg.method. Parametric methods need a table of matching kind.
DetectionResult detect(const PhaseSeries& phi, const DetectorConfig& cfg, const CriticalTable* table = nullptr,
                       BootstrapCache* cache = nullptr);

// Moves events (and their exclusion bounds) `delay` samples earlier, e.g. to
// undo the low-pass group delay of the phase estimate.
void subtract_delay(std::vector<ShiftEvent>& events, Index delay, double rate_hz, Index start_index = 0);

// Difference of 10%-trimmed means of the windows just after and just before [t_lower, t_upper].
double event_magnitude(const Vector& phi, Index t_lower, Index t_upper, Index window);

}  // namespace phaseshift
