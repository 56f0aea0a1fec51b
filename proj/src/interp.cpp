#include "quench/interp.hpp"

#include <algorithm>
#include <array>
#include <cmath>

// The Boost 1.74 pchip header calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>

#include "quench/error.hpp"

namespace quench {

std::size_t bracket(std::span<const double> x, double xq) {
  const auto it = std::upper_bound(x.begin(), x.end(), xq);
  const std::ptrdiff_t i = (it - x.begin()) - 1;
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(x.size()) - 2));
}

struct MonotoneCubic::Impl {
  boost::math::interpolators::pchip<std::vector<double>> spline;
};

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> f, double left_slope) {
  if (x.size() != f.size() || x.size() < 4) throw DomainError("monotone cubic needs >= 4 matching nodes");
  lo_ = x.front();
  hi_ = x.back();
  impl_ = std::make_shared<const Impl>(
      Impl{boost::math::interpolators::pchip<std::vector<double>>(std::move(x), std::move(f), left_slope)});
}

double MonotoneCubic::operator()(double xq) const { return impl_->spline(std::clamp(xq, lo_, hi_)); }

double MonotoneCubic::derivative(double xq) const { return impl_->spline.prime(std::clamp(xq, lo_, hi_)); }

double radial_lagrange4(std::span<const double> r, std::span<const double> f, double rq) {
  const std::size_t n = r.size();
  if (n < 4) throw DomainError("radial interpolation needs >= 4 nodes");
  rq = std::abs(rq);
  if (rq >= r[n - 1]) return f[n - 1];
  const std::size_t i = bracket(r, rq);
  // Stencil nodes i-1 .. i+2, mirrored through the origin when i = 0.
  std::array<double, 4> xs{};
  std::array<double, 4> ys{};
  std::ptrdiff_t start = static_cast<std::ptrdiff_t>(i) - 1;
  start = std::min<std::ptrdiff_t>(start, static_cast<std::ptrdiff_t>(n) - 4);
  for (int k = 0; k < 4; ++k) {
    const std::ptrdiff_t j = start + k;
    if (j < 0) {
      xs[k] = -r[static_cast<std::size_t>(-j)];
      ys[k] = f[static_cast<std::size_t>(-j)];
    } else {
      xs[k] = r[static_cast<std::size_t>(j)];
      ys[k] = f[static_cast<std::size_t>(j)];
    }
  }
  double value = 0.0;
  for (int k = 0; k < 4; ++k) {
    double w = 1.0;
    for (int m = 0; m < 4; ++m) {
      if (m != k) w *= (rq - xs[m]) / (xs[k] - xs[m]);
    }
    value += w * ys[k];
  }
  return value;
}

std::vector<double> radial_derivative(std::span<const double> r, std::span<const double> f) {
  const std::size_t n = r.size();
  std::vector<double> d(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double hm = r[i] - r[i - 1];
    const double hp = r[i + 1] - r[i];
    d[i] = (hm * hm * (f[i + 1] - f[i]) + hp * hp * (f[i] - f[i - 1])) / (hm * hp * (hm + hp));
  }
  if (n >= 3) {
    const double h1 = r[n - 1] - r[n - 2];
    const double h2 = r[n - 2] - r[n - 3];
    // Backward three-point formula on a nonuniform grid.
    d[n - 1] = f[n - 1] * (2.0 * h1 + h2) / (h1 * (h1 + h2)) - f[n - 2] * (h1 + h2) / (h1 * h2) +
               f[n - 3] * h1 / (h2 * (h1 + h2));
  }
  return d;
}

}  // namespace quench
