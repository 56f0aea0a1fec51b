#pragma once

#include <span>

namespace quench {

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double rms = 0.0;  // root-mean-square of the unweighted residuals
  std::size_t count = 0;
};

// Least squares y ≈ intercept + slope·x, optionally weighted. Throws
// FitDegenerate with fewer than min_count points or zero spread in x or y.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y, std::size_t min_count = 2);
LinearFit weighted_linear_fit(std::span<const double> x, std::span<const double> y,
                              std::span<const double> w, std::size_t min_count = 2);

}  // namespace quench
