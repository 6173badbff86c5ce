#include "phaseshift/gev.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace phaseshift {

namespace {

constexpr double kGumbelEps = 1e-8;
constexpr double kEulerGamma = 0.5772156649015329;

// Nelder-Mead simplex minimizer on R^3.
template <typename F>
bool nelder_mead(F&& f, std::array<double, 3>& x, const std::array<double, 3>& step, int max_iter, double tol) {
  using P = std::array<double, 3>;
  std::array<P, 4> s;
  std::array<double, 4> v;
  s[0] = x;
  for (int i = 0; i < 3; ++i) {
    s[i + 1] = x;
    s[i + 1][i] += step[i];
  }
  for (int i = 0; i < 4; ++i) v[i] = f(s[i]);

  auto combine = [](const P& a, const P& b, double t) {
    P r;
    for (int i = 0; i < 3; ++i) r[i] = a[i] + t * (b[i] - a[i]);
    return r;
  };

  for (int iter = 0; iter < max_iter; ++iter) {
    std::array<int, 4> order{0, 1, 2, 3};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return v[a] < v[b]; });
    std::array<P, 4> ss;
    std::array<double, 4> vv;
    for (int i = 0; i < 4; ++i) {
      ss[i] = s[order[i]];
      vv[i] = v[order[i]];
    }
    s = ss;
    v = vv;

    if (std::isfinite(v[3]) && std::abs(v[3] - v[0]) <= tol * (std::abs(v[0]) + tol)) {
      x = s[0];
      return true;
    }

    P centroid{0, 0, 0};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) centroid[j] += s[i][j] / 3.0;

    const P reflected = combine(centroid, s[3], -1.0);
    const double fr = f(reflected);
    if (fr < v[0]) {
      const P expanded = combine(centroid, s[3], -2.0);
      const double fe = f(expanded);
      if (fe < fr) {
        s[3] = expanded;
        v[3] = fe;
      } else {
        s[3] = reflected;
        v[3] = fr;
      }
      continue;
    }
    if (fr < v[2]) {
      s[3] = reflected;
      v[3] = fr;
      continue;
    }
    const P contracted = fr < v[3] ? combine(centroid, reflected, 0.5) : combine(centroid, s[3], 0.5);
    const double fc = f(contracted);
    if (fc < std::min(fr, v[3])) {
      s[3] = contracted;
      v[3] = fc;
      continue;
    }
    for (int i = 1; i < 4; ++i) {
      s[i] = combine(s[0], s[i], 0.5);
      v[i] = f(s[i]);
    }
  }
  x = s[0];
  return false;
}

double negative_log_likelihood(const std::vector<double>& x, double mu, double sigma, double xi) {
  if (!(sigma > 0.0) || !(std::abs(xi) < 1.0)) return std::numeric_limits<double>::infinity();
  GevFit g;
  g.location = mu;
  g.scale = sigma;
  g.shape = xi;
  double nll = 0.0;
  for (double v : x) {
    const double lp = g.log_density(v);
    if (!std::isfinite(lp)) return std::numeric_limits<double>::infinity();
    nll -= lp;
  }
  return nll;
}

void goodness_of_fit(GevFit& g, const std::vector<double>& sorted) {
  const auto n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = g.cdf(sorted[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  g.ks_statistic = d;
  g.ks_p_value = kolmogorov_p_value(d, sorted.size());
  g.sample_size = sorted.size();
}

}  // namespace

double GevFit::cdf(double x) const {
  const double z = (x - location) / scale;
  if (std::abs(shape) < kGumbelEps) return std::exp(-std::exp(-z));
  const double arg = 1.0 + shape * z;
  if (arg <= 0.0) return shape > 0.0 ? 0.0 : 1.0;
  return std::exp(-std::pow(arg, -1.0 / shape));
}

double GevFit::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("GevFit::quantile: p must lie in (0, 1)");
  const double y = -std::log(p);
  if (std::abs(shape) < kGumbelEps) return location - scale * std::log(y);
  return location + scale * (std::pow(y, -shape) - 1.0) / shape;
}

double GevFit::log_density(double x) const {
  const double z = (x - location) / scale;
  if (std::abs(shape) < kGumbelEps) return -std::log(scale) - z - std::exp(-z);
  const double arg = 1.0 + shape * z;
  if (arg <= 0.0) return -std::numeric_limits<double>::infinity();
  const double la = std::log(arg);
  return -std::log(scale) - (1.0 + 1.0 / shape) * la - std::exp(-la / shape);
}

double kolmogorov_p_value(double d, std::size_t n) {
  if (n == 0) return 1.0;
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

GevFit gev_lmoments(std::vector<double> x) {
  if (x.size() < 3) throw std::invalid_argument("gev_lmoments: need at least 3 values");
  std::sort(x.begin(), x.end());
  const auto n = static_cast<double>(x.size());
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto j = static_cast<double>(i);  // 0-based rank
    b0 += x[i];
    b1 += j / (n - 1.0) * x[i];
    b2 += j * (j - 1.0) / ((n - 1.0) * (n - 2.0)) * x[i];
  }
  b0 /= n;
  b1 /= n;
  b2 /= n;
  const double l1 = b0, l2 = 2.0 * b1 - b0, l3 = 6.0 * b2 - 6.0 * b1 + b0;
  if (!(l2 > 0.0)) throw NumericalError("gev_lmoments: degenerate sample (zero L-scale)");

  const double t3 = l3 / l2;
  const double c = 2.0 / (3.0 + t3) - std::log(2.0) / std::log(3.0);
  const double k = 7.8590 * c + 2.9554 * c * c;  // Hosking's k = -shape
  GevFit g;
  if (std::abs(k) < 1e-6) {
    g.scale = l2 / std::log(2.0);
    g.location = l1 - kEulerGamma * g.scale;
    g.shape = 0.0;
  } else {
    const double gk = std::tgamma(1.0 + k);
    g.scale = l2 * k / ((1.0 - std::pow(2.0, -k)) * gk);
    g.location = l1 - g.scale * (1.0 - gk) / k;
    g.shape = -k;
  }
  return g;
}

GevFit fit_gev(const std::vector<double>& maxima) {
  if (maxima.size() < 100) throw std::invalid_argument("fit_gev: need at least 100 maxima");
  std::vector<double> sorted = maxima;
  std::sort(sorted.begin(), sorted.end());
  if (!(sorted.back() > sorted.front())) throw NumericalError("fit_gev: all maxima are equal");

  GevFit start = gev_lmoments(sorted);
  goodness_of_fit(start, sorted);
  start.shape = std::clamp(start.shape, -0.9, 0.9);

  // Work on a standardized sample so the simplex steps are well scaled.
  const double centre = start.location, spread = start.scale;
  std::vector<double> z(sorted.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = (sorted[i] - centre) / spread;

  std::array<double, 3> p{0.0, 0.0, start.shape};
  if (!std::isfinite(negative_log_likelihood(z, p[0], std::exp(p[1]), p[2]))) p[2] = 0.0;
  auto nll = [&](const std::array<double, 3>& q) { return negative_log_likelihood(z, q[0], std::exp(q[1]), q[2]); };
  const bool converged = nelder_mead(nll, p, {0.1, 0.1, 0.05}, 4000, 1e-12);
  if (!converged || !std::isfinite(nll(p))) throw GevFitError("fit_gev: likelihood maximization did not converge", start);

  GevFit g;
  g.location = centre + spread * p[0];
  g.scale = spread * std::exp(p[1]);
  g.shape = p[2];
  goodness_of_fit(g, sorted);
  return g;
}

}  // namespace phaseshift
