#pragma once

#include <limits>
#include <memory>
#include <span>
#include <vector>

namespace quench {

// Index i with x[i] <= xq < x[i+1], clamped to [0, n-2].
std::size_t bracket(std::span<const double> x, double xq);

// Shape-preserving piecewise cubic (PCHIP). Monotone data gives a monotone
// interpolant; queries outside the nodes are clamped to the end values.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  // left_slope, when finite, fixes the derivative at the first node.
  MonotoneCubic(std::vector<double> x, std::vector<double> f,
                double left_slope = std::numeric_limits<double>::quiet_NaN());

  double operator()(double xq) const;
  double derivative(double xq) const;
  double front() const { return lo_; }
  double back() const { return hi_; }

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
  double lo_ = 0.0;
  double hi_ = 0.0;
};

// Four-point Lagrange interpolation on a nonuniform radial grid whose first
// node is r = 0; the field is extended evenly across the origin.
double radial_lagrange4(std::span<const double> r, std::span<const double> f, double rq);

// Second-order first derivative on a nonuniform radial grid, with f'(0) = 0
// by symmetry and a one-sided stencil at the last node.
std::vector<double> radial_derivative(std::span<const double> r, std::span<const double> f);

}  // namespace quench
