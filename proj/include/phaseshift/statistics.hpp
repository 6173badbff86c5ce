#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "phaseshift/types.hpp"

namespace phaseshift {

enum class StatKind { Cusum, PhaseDerivative };

// s(t) for the 1-based boundary t = 2..N-1, stored at values[t];
// values[0] and values[1] are unused and zero. The boundary t splits the series
// into samples [0, t) and [t, N).
struct StatSeries {
  Vector values;
  StatKind kind = StatKind::Cusum;
  double max_value = 0.0;
  Index argmax = 0;

  Index length() const { return values.size(); }
};

namespace detail {

inline void finish(StatSeries& s) {
  const Index n = s.values.size();
  s.max_value = -1.0;
  s.argmax = 2;
  for (Index t = 2; t <= n - 1; ++t) {
    if (s.values[t] > s.max_value) {  // strict: ties keep the smallest t
      s.max_value = s.values[t];
      s.argmax = t;
    }
  }
}

}  // namespace detail

// s1(t) = |sqrt(N / (t (N - t))) * sum_{i<=t} (phi_i - mean)|.
template <typename Derived>
StatSeries cusum_stat(const Eigen::MatrixBase<Derived>& phi) {
  const Index n = phi.size();
  if (n < 4) throw std::invalid_argument("cusum_stat: need at least 4 samples");
  StatSeries s;
  s.kind = StatKind::Cusum;
  s.values = Vector::Zero(n);
  const double mean = phi.template cast<double>().mean();
  const double dn = static_cast<double>(n);
  double partial = 0.0;
  for (Index t = 1; t <= n - 1; ++t) {
    partial += static_cast<double>(phi(t - 1)) - mean;
    if (t >= 2) {
      const double dt = static_cast<double>(t);
      s.values[t] = std::abs(std::sqrt(dn / (dt * (dn - dt))) * partial);
    }
  }
  detail::finish(s);
  return s;
}

// s2(t) = |phi_{t+1} - phi_{t-1}| / 2 with 1-based t.
template <typename Derived>
StatSeries pd_stat(const Eigen::MatrixBase<Derived>& phi) {
  const Index n = phi.size();
  if (n < 3) throw std::invalid_argument("pd_stat: need at least 3 samples");
  StatSeries s;
  s.kind = StatKind::PhaseDerivative;
  s.values = Vector::Zero(n);
  for (Index t = 2; t <= n - 1; ++t)
    s.values[t] = std::abs(static_cast<double>(phi(t)) - static_cast<double>(phi(t - 2))) / 2.0;
  detail::finish(s);
  return s;
}

template <typename Derived>
StatSeries compute_stat(StatKind kind, const Eigen::MatrixBase<Derived>& phi) {
  return kind == StatKind::Cusum ? cusum_stat(phi) : pd_stat(phi);
}

// Maximum of the statistic only; avoids storing the series.
double max_stat(StatKind kind, const Eigen::Ref<const Vector>& phi);

// Smallest sample value v with the fraction of samples strictly above v at most
// alpha. Throws on an empty sample.
double upper_quantile(std::vector<double> sample, double alpha);
double upper_quantile_sorted(const std::vector<double>& sorted, double alpha);

const char* to_string(StatKind kind);

}  // namespace phaseshift
