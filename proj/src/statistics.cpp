#include "phaseshift/statistics.hpp"

#include <algorithm>

namespace phaseshift {

double max_stat(StatKind kind, const Eigen::Ref<const Vector>& phi) {
  const Index n = phi.size();
  double best = 0.0;
  if (kind == StatKind::PhaseDerivative) {
    if (n < 3) throw std::invalid_argument("pd_stat: need at least 3 samples");
    for (Index t = 2; t <= n - 1; ++t) best = std::max(best, std::abs(phi[t] - phi[t - 2]) / 2.0);
    return best;
  }
  if (n < 4) throw std::invalid_argument("cusum_stat: need at least 4 samples");
  const double mean = phi.mean();
  const double dn = static_cast<double>(n);
  double partial = phi[0] - mean;
  for (Index t = 2; t <= n - 1; ++t) {
    partial += phi[t - 1] - mean;
    const double dt = static_cast<double>(t);
    best = std::max(best, std::abs(partial) * std::sqrt(dn / (dt * (dn - dt))));
  }
  return best;
}

double upper_quantile_sorted(const std::vector<double>& sorted, double alpha) {
  if (sorted.empty()) throw std::invalid_argument("upper_quantile: empty sample");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("upper_quantile: alpha must lie in (0, 1)");
  const auto b = static_cast<double>(sorted.size());
  // k-th order statistic (1-based) with k = ceil((1 - alpha) B).
  auto k = static_cast<std::size_t>(std::ceil((1.0 - alpha) * b - 1e-9));
  k = std::clamp<std::size_t>(k, 1, sorted.size());
  return sorted[k - 1];
}

double upper_quantile(std::vector<double> sample, double alpha) {
  std::sort(sample.begin(), sample.end());
  return upper_quantile_sorted(sample, alpha);
}

const char* to_string(StatKind kind) { return kind == StatKind::Cusum ? "cusum" : "pd"; }

}  // namespace phaseshift
