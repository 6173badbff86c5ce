#include <doctest.h>

#include <cmath>

#include "phaseshift/calibrate.hpp"
#include "phaseshift/critical.hpp"
#include "phaseshift/random.hpp"

using namespace phaseshift;

namespace {

NullSignalConfig null_model(Index length = 1000) {
  NullSignalConfig sim;
  sim.length = length;
  return sim;
}

double fresh_rate(StatKind kind, const NullSignalConfig& sim, double threshold, std::size_t reps, std::uint64_t seed) {
  const CriticalValue fresh = parametric_critical(kind, sim, 0.05, reps, seed);
  std::size_t above = 0;
  for (double m : fresh.maxima) above += m > threshold;
  return static_cast<double>(above) / static_cast<double>(reps);
}

}  // namespace

TEST_CASE("calibrate_nmin: monotone in alpha and calibrated at the result") {
  const NullSignalConfig sim = null_model();
  Index prev = 0;
  for (double alpha : {0.1, 0.05, 0.01}) {
    const NminCalibration c = calibrate_nmin(StatKind::Cusum, sim, alpha, 1000, 61);
    CHECK(c.n_min >= prev);
    prev = c.n_min;
    CHECK(c.rejection_rate <= alpha + 2.0 * std::sqrt(alpha * (1 - alpha) / 1000.0));
    CHECK_FALSE(c.trace.empty());
  }
}

TEST_CASE("calibrate_nmin: ten times longer segments stay calibrated") {
  NullSignalConfig sim = null_model();
  const NminCalibration c = calibrate_nmin(StatKind::Cusum, sim, 0.05, 1000, 62);
  sim.length = 10 * c.n_min;
  const CriticalValue cv = parametric_critical(StatKind::Cusum, sim, 0.05, 1000, 63);
  CHECK(fresh_rate(StatKind::Cusum, sim, cv.phi_alpha, 1000, 64) <= 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / 1000.0));
}

TEST_CASE("calibrate_nburn: bandwidth, replicate count and memoryless filter") {
  NullSignalConfig narrow = null_model(500);
  narrow.demod.half_bandwidth_hz = 1.0;
  NullSignalConfig wide = null_model(500);
  wide.demod.half_bandwidth_hz = 4.0;
  const BurnInCalibration n = calibrate_nburn(narrow, 0.05, 400, 71);
  const BurnInCalibration w = calibrate_nburn(wide, 0.05, 400, 71);
  CHECK(w.n_burn <= n.n_burn);

  const NullSignalConfig base = null_model(500);
  const BurnInCalibration b1 = calibrate_nburn(base, 0.05, 400, 72);
  const BurnInCalibration b2 = calibrate_nburn(base, 0.05, 800, 72);
  const double time_constant = base.rate_hz / (kTwoPi * base.demod.half_bandwidth_hz);
  CHECK(std::abs(static_cast<double>(b1.n_burn - b2.n_burn)) <= time_constant);

  NullSignalConfig memoryless = null_model(500);
  memoryless.demod.filter = EwmaSpec{0.01};
  CHECK(calibrate_nburn(memoryless, 0.05, 400, 73).n_burn <= 5);
}

TEST_CASE("calibrate_isimin: a narrower band needs a wider exclusion") {
  NullSignalConfig wide = null_model(1500);
  wide.demod.half_bandwidth_hz = 4.0;
  NullSignalConfig narrow = null_model(1500);
  narrow.demod.half_bandwidth_hz = 1.0;
  Index result[2];
  int i = 0;
  for (const NullSignalConfig& sim : {wide, narrow}) {
    const CriticalTable table = CriticalTable::build(StatKind::Cusum, sim, sim.length, 1000, 81, 16, 8);
    result[i++] = calibrate_isimin(StatKind::Cusum, sim, table, 0.05, 1.0, 300, 82).isi_min;
  }
  CHECK(result[1] > result[0]);
}

TEST_CASE("power_analysis: monotone in delta, alpha at delta zero") {
  const NullSignalConfig sim = null_model(1000);
  const std::vector<double> snr{0.0, 20.0};
  const std::vector<double> delta{0.0, 0.1, 0.15, 0.2, 0.5, 1.0, 2.0};
  const std::size_t reps = 300;
  for (StatKind kind : {StatKind::Cusum, StatKind::PhaseDerivative}) {
    const PowerSurface s = power_analysis(kind, sim, snr, delta, 0.05, reps, 91);
    for (std::size_t i = 0; i < snr.size(); ++i) {
      // At delta = 0 a rejection cannot land on a shift, so power stays at or below alpha.
      CHECK(s.at(i, 0).power <= 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / reps));
      for (std::size_t j = 1; j + 1 < delta.size(); ++j) {
        const double lo = s.at(i, j).power, hi = s.at(i, j + 1).power;
        const double p = std::max((lo + hi) / 2.0, 1e-3);
        CHECK(hi >= lo - 3.0 * std::sqrt(p * (1.0 - std::min(p, 0.999)) * 2.0 / reps));
      }
    }
    CHECK(s.at(1, delta.size() - 1).power > 0.95);
  }
}

TEST_CASE("power_analysis: smallest detectable shift at 20 dB") {
  const NullSignalConfig sim = null_model(1000);
  const std::vector<double> delta{0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.5};
  for (StatKind kind : {StatKind::Cusum, StatKind::PhaseDerivative}) {
    const PowerSurface s = power_analysis(kind, sim, {20.0}, delta, 0.05, 300, 92);
    REQUIRE(s.delta_min[0].has_value());
    INFO("statistic " << std::string(to_string(kind)) << " delta_min " << *s.delta_min[0]);
    CHECK(*s.delta_min[0] <= 0.2);
    CHECK(std::abs(*s.delta_min[0] - 0.15) <= 0.05 + 1e-12);
  }
}

TEST_CASE("minimal_detectable_delta needs power to stay above target") {
  CHECK(minimal_detectable_delta({0.1, 0.2, 0.3, 0.4}, {0.5, 0.9, 0.7, 0.95}, 0.8) == 0.4);
  CHECK(minimal_detectable_delta({0.1, 0.2, 0.3}, {0.85, 0.9, 0.95}, 0.8) == 0.1);
  CHECK_FALSE(minimal_detectable_delta({0.1, 0.2}, {0.1, 0.2}, 0.8).has_value());
}
