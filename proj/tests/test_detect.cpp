#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "phaseshift/critical.hpp"
#include "phaseshift/detect.hpp"
#include "phaseshift/gev.hpp"
#include "phaseshift/random.hpp"
#include "phaseshift/statistics.hpp"

using namespace phaseshift;

namespace {

Vector step_series(Index n, Index at, double delta) {
  Vector v = Vector::Zero(n);
  v.tail(n - at).setConstant(delta);
  return v;
}

PhaseSeries as_phase(const Vector& v) { return PhaseSeries{v, 250.0, 0, true, 0}; }

NullSignalConfig small_null(Index length = 1000) {
  NullSignalConfig sim;
  sim.length = length;
  return sim;
}

}  // namespace

TEST_CASE("cusum_stat: hand evaluations") {
  const StatSeries zero = cusum_stat(Vector::Constant(50, 2.0));
  CHECK(zero.values.cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-12));

  Vector v(6);
  v << 0, 0, 0, 1, 1, 1;
  const StatSeries s = cusum_stat(v);
  CHECK(s.argmax == 3);
  CHECK(s.max_value == doctest::Approx(std::sqrt(1.5)));
  CHECK(s.values[3] == doctest::Approx(std::abs(std::sqrt(6.0 / 9.0) * -1.5)));

  const StatSeries shifted = cusum_stat((v.array() + 4.2).matrix());
  for (Index t = 0; t < 6; ++t) CHECK(shifted.values[t] == doctest::Approx(s.values[t]).epsilon(1e-12));
  CHECK_THROWS_AS(cusum_stat(Vector::Zero(3)), std::invalid_argument);
}

TEST_CASE("pd_stat: hand evaluations") {
  CHECK(pd_stat(Vector::Constant(20, -1.0)).max_value == 0.0);
  Vector v(4);
  v << 0, 0, 1, 1;
  const StatSeries s = pd_stat(v);
  CHECK(s.values[2] == doctest::Approx(0.5));
  CHECK(s.values[3] == doctest::Approx(0.5));
  CHECK(s.argmax == 2);

  const Vector ramp = Vector::LinSpaced(100, 0.0, 99.0 * -0.37);
  const StatSeries r = pd_stat(ramp);
  for (Index t = 2; t < 100; ++t) CHECK(r.values[t] == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("max_stat agrees with the full series") {
  NormalSource normal(4);
  Vector v(300);
  for (Index i = 0; i < v.size(); ++i) v[i] = normal();
  for (StatKind k : {StatKind::Cusum, StatKind::PhaseDerivative})
    CHECK(max_stat(k, v) == doctest::Approx(compute_stat(k, v).max_value).epsilon(1e-12));
}

TEST_CASE("upper_quantile: at most alpha of the sample lies strictly above") {
  std::vector<double> s;
  for (int i = 1; i <= 100; ++i) s.push_back(i);
  CHECK(upper_quantile(s, 0.05) == 95.0);
  CHECK(upper_quantile(s, 0.1) == 90.0);
  CHECK(upper_quantile(s, 0.5) == 50.0);
  CHECK_THROWS_AS(upper_quantile({}, 0.05), std::invalid_argument);
  CHECK_THROWS_AS(upper_quantile(s, 0.0), std::invalid_argument);
}

TEST_CASE("parametric_critical: calibration on fresh nulls and monotonicity") {
  const NullSignalConfig sim = small_null(500);
  const CriticalValue cv = parametric_critical(StatKind::Cusum, sim, 0.05, 1000, 11);
  CHECK(std::is_sorted(cv.maxima.begin(), cv.maxima.end()));
  CHECK(cv.at(0.01) >= cv.at(0.05));
  CHECK(cv.at(0.05) >= cv.at(0.1));

  const CriticalValue fresh = parametric_critical(StatKind::Cusum, sim, 0.05, 1000, 12);
  const double rate =
      static_cast<double>(std::count_if(fresh.maxima.begin(), fresh.maxima.end(),
                                        [&](double m) { return m > cv.phi_alpha; })) / 1000.0;
  CHECK(std::abs(rate - 0.05) <= 3.0 * std::sqrt(0.05 * 0.95 / 1000.0));
}

TEST_CASE("parametric_critical: GEV quantile tracks the empirical one") {
  for (StatKind k : {StatKind::Cusum, StatKind::PhaseDerivative}) {
    const CriticalValue cv = parametric_critical(k, small_null(500), 0.05, 2000, 21);
    REQUIRE(cv.gev.has_value());
    CHECK(std::abs(cv.gev->quantile(0.95) / cv.phi_alpha - 1.0) < 0.05);
  }
}

TEST_CASE("CriticalTable: grid values are empirical quantiles and interpolate between") {
  const CriticalTable t = CriticalTable::build(StatKind::Cusum, small_null(), 1000, 400, 3);
  REQUIRE(t.lengths().size() >= 3);
  CHECK(t.lengths().back() == 1000);
  CHECK(t.replicates() == 400);
  for (std::size_t i = 0; i < t.lengths().size(); ++i)
    CHECK(t.critical(t.lengths()[i], 0.05) == doctest::Approx(upper_quantile_sorted(t.maxima()[i], 0.05)));
  const Index a = t.lengths()[2], b = t.lengths()[3];
  const double mid = t.critical((a + b) / 2, 0.05);
  CHECK(mid >= std::min(t.critical(a, 0.05), t.critical(b, 0.05)) - 1e-12);
  CHECK(mid <= std::max(t.critical(a, 0.05), t.critical(b, 0.05)) + 1e-12);
  CHECK(t.critical(500, 0.01) >= t.critical(500, 0.1));
}

TEST_CASE("block_surrogate: permutation of whole blocks") {
  Vector v(23);
  for (Index i = 0; i < v.size(); ++i) v[i] = i;
  const std::vector<Index> perm{3, 0, 4, 1, 2};
  const Vector s = block_surrogate(v, 4, perm);
  CHECK(s.size() == 20);
  for (Index b = 0; b < 5; ++b)
    for (Index j = 0; j < 4; ++j) CHECK(s[b * 4 + j] == v[perm[b] * 4 + j]);

  const Vector same = block_surrogate(v, 4, {0, 1, 2, 3, 4});
  CHECK(cusum_stat(same).max_value == doctest::Approx(cusum_stat(v.head(20)).max_value));
  CHECK_THROWS_AS(block_surrogate(v, 5, {0, 1, 2, 3, 4}), std::invalid_argument);
}

TEST_CASE("block_bootstrap: exchangeable data agrees with the parametric null") {
  const Index n = 1000;
  NormalSource normal(31);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal();
  const double boot = block_bootstrap_critical(v, 1, 0.05, 2000, 32);

  std::vector<double> maxima;
  for (int r = 0; r < 2000; ++r) {
    NormalSource g(derive_seed(33, "iid", r));
    Vector w(n);
    for (Index i = 0; i < n; ++i) w[i] = g();
    maxima.push_back(cusum_stat(w).max_value);
  }
  const double param = upper_quantile(maxima, 0.05);
  CHECK(std::abs(boot / param - 1.0) < 0.10);
  CHECK_THROWS_AS(block_bootstrap(v.head(10), 2, 10, 1), std::invalid_argument);
}

TEST_CASE("gev: Gumbel draws recover shape zero") {
  Rng rng(77);
  std::vector<double> x;
  for (int i = 0; i < 5000; ++i) x.push_back(3.0 - 0.5 * std::log(-std::log(uniform01(rng) * (1 - 1e-16) + 1e-16)));
  const GevFit f = fit_gev(x);
  CHECK(std::abs(f.shape) < 0.1);
  CHECK(f.location == doctest::Approx(3.0).epsilon(0.05));
  CHECK(f.scale == doctest::Approx(0.5).epsilon(0.1));
  CHECK(f.scale > 0.0);
  CHECK(f.ks_p_value > 0.01);
  CHECK(f.sample_size == 5000);

  std::vector<double> head(x.begin(), x.begin() + 2000);
  const GevFit g = fit_gev(head);
  CHECK(std::abs(g.quantile(0.95) / upper_quantile(head, 0.05) - 1.0) < 0.05);
  CHECK(g.cdf(g.quantile(0.3)) == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("gev: L-moments and the Kolmogorov tail") {
  Rng rng(5);
  std::vector<double> x;
  for (int i = 0; i < 3000; ++i) x.push_back(-std::log(-std::log(uniform01(rng) + 1e-300)));
  const GevFit l = gev_lmoments(x);
  CHECK(l.scale > 0.0);
  CHECK(std::abs(l.shape) < 0.1);
  CHECK(kolmogorov_p_value(0.0, 100) == doctest::Approx(1.0));
  CHECK(kolmogorov_p_value(0.5, 100) < 1e-10);
  CHECK(kolmogorov_p_value(0.05, 100) > kolmogorov_p_value(0.1, 100));
}

TEST_CASE("max_normal_quantile: maximum of k normals") {
  const boost::math::normal z;
  CHECK(max_normal_quantile(0.05, 1) == doctest::Approx(boost::math::quantile(z, 0.95)));
  for (Index k : {2, 10, 1000}) {
    const double q = max_normal_quantile(0.05, k);
    CHECK(1.0 - std::pow(boost::math::cdf(z, q), static_cast<double>(k)) == doctest::Approx(0.05).epsilon(1e-9));
  }
  CHECK(max_normal_quantile(0.05, 3, true) == doctest::Approx(boost::math::quantile(z, 1.0 - std::pow(0.05, 3))));
  CHECK(max_normal_quantile(0.01, 50) > max_normal_quantile(0.1, 50));
}

TEST_CASE("method names round trip") {
  for (Method m : {Method::CusumParametric, Method::CusumBlock, Method::PdParametric, Method::PdThreshold})
    CHECK(method_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(method_from_string("cusum"), std::invalid_argument);
  CHECK(is_parametric(Method::PdParametric));
  CHECK_FALSE(is_parametric(Method::CusumBlock));
  CHECK(stat_kind(Method::PdThreshold) == StatKind::PhaseDerivative);
}

TEST_CASE("noiseless single step: both statistics locate it") {
  const Index n = 1000, at = 500;
  // Tables from a nearly noiseless null so that small steps are significant.
  NullSignalConfig quiet = small_null();
  quiet.snr_db = 60.0;
  const CriticalTable cusum_table = CriticalTable::build(StatKind::Cusum, quiet, n, 300, 1);
  const CriticalTable pd_table = CriticalTable::build(StatKind::PhaseDerivative, quiet, n, 300, 2);
  for (double delta : {0.15, 0.4, 1.0, -2.0, kPi}) {
    const Vector v = step_series(n, at, delta);
    CHECK(std::abs(cusum_stat(v).argmax - at) <= 2);
    CHECK(pd_stat(v).argmax == at);

    const PhaseSeries phi = as_phase(v);
    DetectorConfig cfg;
    cfg.n_min = 16;
    const DetectionResult c = detect(phi, cfg, &cusum_table);
    REQUIRE(c.events.size() == 1);
    CHECK(std::abs(c.events[0].index - at) <= 2);
    CHECK(c.events[0].magnitude == doctest::Approx(delta).epsilon(1e-9));

    cfg.method = Method::PdParametric;
    const DetectionResult p = detect(phi, cfg, &pd_table);
    REQUIRE(p.events.size() == 1);
    CHECK(p.events[0].index == at);

    const DetectionResult t = threshold_pd_detect(phi, 1, 0.05);
    REQUIRE(t.events.size() == 1);
    CHECK(t.events[0].index == at);
    CHECK(t.events[0].t_upper - t.events[0].t_lower <= 3);
  }
}

TEST_CASE("recursive CUSUM: two separated steps at 0 dB are both found") {
  NullSignalConfig sim = small_null(2048);
  const CriticalTable table = CriticalTable::build(StatKind::Cusum, sim, sim.length, 500, 7);
  const Index delay = static_cast<Index>(std::llround(sim.demod.group_delay(sim.rate_hz)));
  int both = 0;
  const int reps = 60;
  for (int r = 0; r < reps; ++r) {
    PhaseProfile p;
    p.events = {{512, kPi / 2.0}, {1536, -kPi / 2.0}};
    const PhaseSeries phi = simulate_phase(sim, p, derive_seed(8, "two-step", r));
    DetectorConfig cfg;
    cfg.n_min = 16;
    cfg.isi_min = 256;
    DetectionResult res = detect(phi, cfg, &table);
    subtract_delay(res.events, delay, phi.rate_hz);
    int found = 0;
    for (Index truth : {512, 1536})
      for (const auto& e : res.events)
        if (std::abs(e.index - truth) <= 128) {
          ++found;
          break;
        }
    both += found == 2;
  }
  CHECK(both >= 0.8 * reps);
}

TEST_CASE("null records mostly yield no events") {
  const NullSignalConfig sim = small_null(1000);
  const CriticalTable table = CriticalTable::build(StatKind::Cusum, sim, sim.length, 1000, 41);
  int rejected = 0;
  const int reps = 300;
  for (int r = 0; r < reps; ++r) {
    const PhaseSeries phi = simulate_phase(sim, PhaseProfile{}, derive_seed(42, "null", r));
    DetectorConfig cfg;
    cfg.n_min = 16;
    rejected += !detect(phi, cfg, &table).events.empty();
  }
  CHECK(rejected <= 0.05 * reps + 3.0 * std::sqrt(0.05 * 0.95 * reps));
}

TEST_CASE("threshold method: i.i.d. increments keep the false-event rate") {
  const double alpha = 0.05;
  const int trials = 1000;
  int hits = 0;
  for (int r = 0; r < trials; ++r) {
    NormalSource normal(derive_seed(51, "walk", r));
    Vector v(500);
    double acc = 0.0;
    for (Index i = 0; i < v.size(); ++i) v[i] = acc += 0.1 * normal();
    // Increments are independent, so their decorrelation scale is one lag.
    hits += !threshold_pd_detect(as_phase(v), 1, alpha).events.empty();
  }
  CHECK(hits / static_cast<double>(trials) <= alpha + 3.0 * std::sqrt(alpha * (1 - alpha) / trials));
}

TEST_CASE("detection is reproducible and the block method honours its seed") {
  const NullSignalConfig sim = small_null(3000);
  PhaseProfile p;
  p.events = {{1000, 1.5}, {2000, -1.0}};
  const PhaseSeries phi = simulate_phase(sim, p, 99);
  DetectorConfig cfg;
  cfg.method = Method::CusumBlock;
  cfg.tau = 60;
  cfg.n_min = 16;
  cfg.bootstrap_replicates = 300;
  cfg.seed = 5;
  const DetectionResult a = detect(phi, cfg), b = detect(phi, cfg);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    CHECK(a.events[i].index == b.events[i].index);
    CHECK(a.events[i].threshold == b.events[i].threshold);
  }
}

TEST_CASE("detector config validation") {
  DetectorConfig cfg;
  cfg.alpha = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  DetectorConfig block;
  block.method = Method::CusumBlock;
  CHECK_THROWS_AS(block.validate(), std::invalid_argument);
  DetectorConfig param;
  CHECK_THROWS_AS(detect(as_phase(Vector::Zero(100)), param, nullptr), std::invalid_argument);
}

TEST_CASE("subtract_delay moves events and bounds") {
  std::vector<ShiftEvent> ev(1);
  ev[0].index = 100;
  ev[0].t_lower = 90;
  ev[0].t_upper = 110;
  subtract_delay(ev, 10, 250.0, 0);
  CHECK(ev[0].index == 90);
  CHECK(ev[0].t_lower == 80);
  CHECK(ev[0].t_upper == 100);
  CHECK(ev[0].time_s == doctest::Approx(90.0 / 250.0));
}
