#include <doctest.h>

#include <cmath>

#include "phaseshift/eval.hpp"
#include "phaseshift/random.hpp"

using namespace phaseshift;

TEST_CASE("match_events: hand cases") {
  const ConfusionCounts perfect = match_events(std::vector<Index>{100, 500, 900}, {100, 500, 900}, 10, 1000);
  CHECK(perfect.tp == 3);
  CHECK(perfect.fp == 0);
  CHECK(perfect.fn == 0);

  const ConfusionCounts missed = match_events(std::vector<Index>{}, {100, 500}, 10, 1000);
  CHECK(missed.fn == 2);
  CHECK(missed.fp == 0);
  CHECK(missed.tp == 0);

  const ConfusionCounts greedy = match_events(std::vector<Index>{990, 1500}, {1000}, 50, 3000);
  CHECK(greedy.tp == 1);
  CHECK(greedy.fp == 1);
  CHECK(greedy.fn == 0);

  // One truth event matches at most one detection.
  const ConfusionCounts twice = match_events(std::vector<Index>{995, 1005}, {1000}, 50, 3000);
  CHECK(twice.tp == 1);
  CHECK(twice.fp == 1);
  CHECK_THROWS_AS(match_events(std::vector<Index>{1}, {1}, 0, 10), std::invalid_argument);
}

TEST_CASE("match_events: true negatives are event-free windows") {
  const ConfusionCounts empty = match_events(std::vector<Index>{}, {}, 100, 1000);
  CHECK(empty.tn == 10);
  CHECK(empty.total() == 10);
  CHECK(accuracy(empty) == 1.0);

  const ConfusionCounts one = match_events(std::vector<Index>{150}, {160}, 100, 1000);
  CHECK(one.tn == 9);
  CHECK(one.window == 100);
  CHECK(match_events(std::vector<Index>{}, {}, 100, 1000, 250).tn == 4);
}

TEST_CASE("accuracy and rates") {
  ConfusionCounts c;
  c.tp = c.tn = 7;
  CHECK(accuracy(c) == 1.0);
  ConfusionCounts d;
  d.tp = d.tn = d.fp = d.fn = 1;
  CHECK(accuracy(d) == 0.5);
  ConfusionCounts e;
  e.tp = 380;
  e.fp = 10;
  e.tn = 600;
  e.fn = 20;
  CHECK(accuracy(e) == doctest::Approx(0.9703).epsilon(1e-4));
  CHECK(e.tp_rate() == doctest::Approx(380.0 / 400.0));
  CHECK(e.fp_rate() == doctest::Approx(10.0 / 610.0));
  CHECK_THROWS_AS(accuracy(ConfusionCounts{}), std::invalid_argument);
}

TEST_CASE("roc_curve: perfect and silent detectors") {
  const std::vector<double> alphas{0.01, 0.05, 0.1};
  const std::vector<std::vector<Index>> truth{{100, 400}, {250}};
  const std::vector<Index> lengths{1000, 1000};
  const RocCurve perfect = roc_curve(alphas, {truth, truth, truth}, truth, lengths, 20);
  CHECK(perfect.auroc == doctest::Approx(1.0));
  CHECK(perfect.max_accuracy == doctest::Approx(1.0));

  const std::vector<std::vector<Index>> none{{}, {}};
  const RocCurve silent = roc_curve(alphas, {none, none, none}, truth, lengths, 20);
  for (const auto& p : silent.points) CHECK(p.tp_rate == 0.0);
  CHECK(silent.auroc == doctest::Approx(0.5));
  CHECK_THROWS_AS(roc_curve(std::vector<std::pair<double, ConfusionCounts>>{}), std::invalid_argument);
}

TEST_CASE("isi_powerlaw: a Pareto sample of exponent 4") {
  Rng rng(12);
  std::vector<double> x;
  for (int i = 0; i < 10000; ++i) x.push_back(std::pow(1.0 - uniform01(rng), -1.0 / 3.0));
  const PowerLawFit f = isi_powerlaw(x);
  CHECK(std::abs(f.exponent - 4.0) <= 0.3);
  CHECK(f.slope == doctest::Approx(-f.exponent));
  CHECK(f.samples == 10000);
  std::size_t counted = 0;
  for (const auto& b : f.histogram) counted += b.count;
  CHECK(counted == 10000);

  const std::vector<double> few(10, 1.0);
  CHECK_THROWS_AS(isi_powerlaw(few), std::invalid_argument);
}

TEST_CASE("isi_powerlaw: exponential intervals fit a line worse") {
  // Both start at 1 so the mode sits in the first bin and the tail spans the range.
  Rng rng(13);
  std::vector<double> pareto, expo;
  for (int i = 0; i < 5000; ++i) {
    pareto.push_back(std::pow(1.0 - uniform01(rng), -1.0 / 3.0));
    expo.push_back(1.0 - std::log(1.0 - uniform01(rng)));
  }
  CHECK(isi_powerlaw(pareto).r_squared > isi_powerlaw(expo).r_squared);
}

TEST_CASE("isi_powerlaw: the slope does not depend on the time unit") {
  Rng rng(14);
  std::vector<double> s, samples;
  for (int i = 0; i < 3000; ++i) {
    s.push_back(0.5 * std::pow(1.0 - uniform01(rng), -0.4));
    samples.push_back(s.back() * 250.0);
  }
  const PowerLawFit a = isi_powerlaw(s), b = isi_powerlaw(samples);
  CHECK(a.slope == doctest::Approx(b.slope).epsilon(1e-9));
  CHECK(a.intercept != doctest::Approx(b.intercept));
}

TEST_CASE("inter_event_intervals stay within datasets") {
  std::vector<std::vector<ShiftEvent>> d(2);
  for (double t : {1.0, 3.0, 7.0}) d[0].push_back(ShiftEvent{0, t});
  for (double t : {100.0, 100.5}) d[1].push_back(ShiftEvent{0, t});
  const std::vector<double> isi = inter_event_intervals(d);
  REQUIRE(isi.size() == 3);
  CHECK(isi[0] == 2.0);
  CHECK(isi[1] == 4.0);
  CHECK(isi[2] == 0.5);
}

TEST_CASE("chi2_uniform: perfect uniformity") {
  const UniformityResult r = chi2_uniform(std::vector<std::size_t>(10, 10));
  CHECK(r.chi2 == 0.0);
  CHECK(r.p_value == doctest::Approx(1.0));
  CHECK(r.expected == 10.0);
  CHECK(r.used == 100);
}

TEST_CASE("uniformity_test: concentrated latencies are detected") {
  std::vector<double> stimuli, events;
  for (int i = 0; i < 200; ++i) {
    stimuli.push_back(2.0 * i);
    events.push_back(2.0 * i + 0.1);
  }
  const UniformityResult r = uniformity_test(events, stimuli, 0.5, 10);
  CHECK(r.p_value < 1e-6);
  // 0.1 s is a bin edge, so rounding splits the events between its two bins.
  CHECK(r.counts[1] + r.counts[2] == 200);
  CHECK(r.discarded == 0);
}

TEST_CASE("uniformity_test: null rejection rate") {
  int rejected = 0;
  const int trials = 500;
  for (int k = 0; k < trials; ++k) {
    Rng rng(derive_seed(15, "uniform", k));
    std::vector<double> stimuli, events;
    for (int i = 0; i < 100; ++i) stimuli.push_back(3.0 * i);
    for (int i = 0; i < 1200; ++i) events.push_back(300.0 * uniform01(rng));
    rejected += uniformity_test(events, stimuli, 0.5, 10).p_value < 0.05;
  }
  CHECK(std::abs(rejected / static_cast<double>(trials) - 0.05) <= 0.03);
}

TEST_CASE("uniformity_test: shifting all times leaves the p-value") {
  Rng rng(16);
  std::vector<double> stimuli, events;
  for (int i = 0; i < 50; ++i) stimuli.push_back(2.0 * i + uniform01(rng));
  for (int i = 0; i < 400; ++i) events.push_back(100.0 * uniform01(rng));
  const double p = uniformity_test(events, stimuli).p_value;
  for (double& t : stimuli) t += 37.0;
  for (double& t : events) t += 37.0;
  CHECK(uniformity_test(events, stimuli).p_value == doctest::Approx(p).epsilon(1e-12));
  CHECK_THROWS_AS(uniformity_test(events, {}), std::invalid_argument);
}

TEST_CASE("mark_phase_slips: 2 pi steps with noise") {
  const double rate = 250.0;
  const Index n = static_cast<Index>(300 * rate);
  NormalSource normal(17);
  PhaseSeries d{Vector(n), rate, 0, true, 0};
  const std::vector<Index> slips{static_cast<Index>(60 * rate), static_cast<Index>(150 * rate),
                                 static_cast<Index>(200 * rate)};
  const std::vector<double> sign{1.0, 1.0, -1.0};
  for (Index i = 0; i < n; ++i) {
    double level = 0.0;
    for (std::size_t k = 0; k < slips.size(); ++k)
      if (i >= slips[k]) level += sign[k] * kTwoPi;
    d.values[i] = level + 0.4 * std::sin(0.01 * i) + 0.3 * normal();
  }
  const std::vector<ShiftEvent> found = mark_phase_slips(d);
  REQUIRE(found.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(std::abs(found[k].index - slips[k]) < static_cast<Index>(rate));
    CHECK(found[k].magnitude == doctest::Approx(sign[k] * kTwoPi));
  }

  PhaseSeries flat{Vector::Zero(n), rate, 0, true, 0};
  CHECK(mark_phase_slips(flat).empty());
  CHECK_THROWS_AS(mark_phase_slips(flat, 1.0, 0.0), std::invalid_argument);
}
