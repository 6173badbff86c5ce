#pragma once

#include <stdexcept>
#include <vector>

#include "phaseshift/types.hpp"

namespace phaseshift {

// Generalized extreme value law with F(x) = exp(-(1 + shape z)^(-1/shape)),
// z = (x - location) / scale; shape 0 is the Gumbel limit.
struct GevFit {
  double location = 0.0;
  double scale = 1.0;
  double shape = 0.0;
  double ks_statistic = 0.0;
  double ks_p_value = 1.0;
  std::size_t sample_size = 0;

  double cdf(double x) const;
  double quantile(double p) const;
  double log_density(double x) const;
};

class GevFitError : public NumericalError {
public:
  GevFitError(const std::string& what, GevFit fallback) : NumericalError(what), fallback_(fallback) {}
  const GevFit& fallback() const { return fallback_; }

private:
  GevFit fallback_;
};

// L-moment (probability weighted moment) estimates.
GevFit gev_lmoments(std::vector<double> sample);

// Maximum likelihood fit started from the L-moment estimates, with a
// Kolmogorov-Smirnov goodness-of-fit report.
GevFit fit_gev(const std::vector<double>& maxima);

// Asymptotic Kolmogorov survival function Q(lambda) with the small-sample
// correction lambda = (sqrt(n) + 0.12 + 0.11/sqrt(n)) D.
double kolmogorov_p_value(double d, std::size_t n);

}  // namespace phaseshift
