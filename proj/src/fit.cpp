#include "quench/fit.hpp"

#include <cmath>
#include <vector>

#include <gsl/gsl_fit.h>

#include "quench/error.hpp"

namespace quench {

namespace {

void check_inputs(std::span<const double> x, std::span<const double> y, std::size_t min_count) {
  if (x.size() != y.size()) throw FitDegenerate("fit inputs differ in length");
  if (x.size() < min_count || x.size() < 2) throw FitDegenerate("too few samples for a fit");
  bool x_spread = false;
  bool y_spread = false;
  for (std::size_t i = 1; i < x.size(); ++i) {
    x_spread = x_spread || x[i] != x[0];
    y_spread = y_spread || y[i] != y[0];
  }
  if (!x_spread) throw FitDegenerate("abscissae have zero variance");
  if (!y_spread) throw FitDegenerate("ordinates have zero variance");
}

LinearFit finish(std::span<const double> x, std::span<const double> y, double c0, double c1) {
  LinearFit fit{c0, c1, 0.0, x.size()};
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (c0 + c1 * x[i]);
    ss += r * r;
  }
  fit.rms = std::sqrt(ss / static_cast<double>(x.size()));
  return fit;
}

}  // namespace

LinearFit linear_fit(std::span<const double> x, std::span<const double> y, std::size_t min_count) {
  check_inputs(x, y, min_count);
  double c0 = 0.0, c1 = 0.0, cov00 = 0.0, cov01 = 0.0, cov11 = 0.0, sumsq = 0.0;
  gsl_fit_linear(x.data(), 1, y.data(), 1, x.size(), &c0, &c1, &cov00, &cov01, &cov11, &sumsq);
  return finish(x, y, c0, c1);
}

LinearFit weighted_linear_fit(std::span<const double> x, std::span<const double> y,
                              std::span<const double> w, std::size_t min_count) {
  check_inputs(x, y, min_count);
  if (w.size() != x.size()) throw FitDegenerate("weights differ in length");
  double c0 = 0.0, c1 = 0.0, cov00 = 0.0, cov01 = 0.0, cov11 = 0.0, chisq = 0.0;
  gsl_fit_wlinear(x.data(), 1, w.data(), 1, y.data(), 1, x.size(), &c0, &c1, &cov00, &cov01, &cov11,
                  &chisq);
  return finish(x, y, c0, c1);
}

}  // namespace quench
