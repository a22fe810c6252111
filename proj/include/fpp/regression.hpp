#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

namespace fpp {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;  // from residuals; 0 for an exact line
  std::size_t points = 0;
};

// Ordinary least squares y = intercept + slope * x.
inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_line: size mismatch");
  const std::size_t k = x.size();
  if (k < 2) throw std::invalid_argument("fit_line: need at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_line: x values are all equal");
  LinearFit fit;
  fit.points = k;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (k > 2) {
    double ssr = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      ssr += r * r;
    }
    fit.slope_stderr = std::sqrt(ssr / static_cast<double>(k - 2) / sxx);
  }
  return fit;
}

// Slope standard error when each y_i carries an independent standard error
// se_i: Var(slope) = sum c_i^2 se_i^2 with c_i = (x_i - mean x) / Sxx.
inline double propagated_slope_stderr(std::span<const double> x, std::span<const double> se) {
  if (x.size() != se.size()) throw std::invalid_argument("propagated_slope_stderr: size mismatch");
  double mx = 0.0;
  for (double v : x) mx += v;
  mx /= static_cast<double>(x.size());
  double sxx = 0.0;
  for (double v : x) sxx += (v - mx) * (v - mx);
  double var = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double c = (x[i] - mx) / sxx;
    var += c * c * se[i] * se[i];
  }
  return std::sqrt(var);
}

}  // namespace fpp
