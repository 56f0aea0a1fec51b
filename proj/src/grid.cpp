#include "quench/grid.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>

#include "quench/constants.hpp"
#include "quench/error.hpp"

namespace quench {

RadialGrid::RadialGrid(std::vector<double> nodes, int dim) : x_(std::move(nodes)), dim_(dim) {
  if (dim < 1) throw DomainError("grid dimension must be >= 1");
  if (x_.size() < 4 || x_.front() != 0.0) throw DomainError("grid needs >= 4 nodes starting at 0");
  h_min_ = x_.back();
  for (std::size_t i = 1; i < x_.size(); ++i) {
    if (!(x_[i] > x_[i - 1])) throw DomainError("grid nodes must be strictly increasing");
    h_min_ = std::min(h_min_, x_[i] - x_[i - 1]);
  }

  // Each cell contributes ∫ x^{N-1} times the two hat functions; 10-point
  // Gauss-Legendre is exact for those polynomials up to N = 19.
  using boost::math::quadrature::gauss;
  w_.assign(x_.size(), 0.0);
  const int k = dim - 1;
  for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
    const double a = x_[i];
    const double b = x_[i + 1];
    const double h = b - a;
    w_[i] += gauss<double, 10>::integrate([&](double x) { return std::pow(x, k) * (b - x) / h; }, a, b);
    w_[i + 1] += gauss<double, 10>::integrate([&](double x) { return std::pow(x, k) * (x - a) / h; }, a, b);
  }
  const double area = sphere_area(dim);
  for (double& w : w_) w *= area;
}

RadialGrid RadialGrid::uniform(int cells, double radius, int dim) {
  if (cells < 3 || !(radius > 0.0)) throw DomainError("uniform grid needs >= 3 cells and radius > 0");
  std::vector<double> x(static_cast<std::size_t>(cells) + 1);
  for (int i = 0; i <= cells; ++i) x[i] = radius * i / cells;
  x.back() = radius;
  return RadialGrid(std::move(x), dim);
}

RadialGrid RadialGrid::refined(double scale, int core_cells, int cells, double radius, int dim,
                               double max_ratio) {
  if (!(scale > 0.0) || core_cells < 2 || cells <= core_cells) {
    throw DomainError("refined grid needs scale > 0 and cells > core_cells >= 2");
  }
  const double core = 4.0 * scale;
  const double h = core / core_cells;
  if (core >= radius || h * cells >= radius) return uniform(cells, radius, dim);

  const int rest = cells - core_cells;
  const double span = radius - core;
  // Geometric spacings h·g, h·g², ..., h·g^rest summing to span.
  auto total = [&](double g) {
    return g == 1.0 ? h * rest : h * g * (std::pow(g, rest) - 1.0) / (g - 1.0);
  };
  if (total(max_ratio) < span) throw DomainError("too few cells to reach the radius at the allowed stretching");
  double lo = 1.0;
  double hi = max_ratio;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (total(mid) < span ? lo : hi) = mid;
  }
  const double g = hi;

  std::vector<double> x;
  x.reserve(static_cast<std::size_t>(cells) + 1);
  for (int i = 0; i <= core_cells; ++i) x.push_back(h * i);
  double step = h;
  for (int i = 1; i <= rest; ++i) {
    step *= g;
    x.push_back(x.back() + step);
  }
  // Absorb the bisection residual by rescaling the stretched part.
  const double stretch = span / (x.back() - core);
  for (std::size_t i = static_cast<std::size_t>(core_cells) + 1; i < x.size(); ++i) {
    x[i] = core + (x[i] - core) * stretch;
  }
  x.back() = radius;
  return RadialGrid(std::move(x), dim);
}

double RadialGrid::max_spacing_ratio() const {
  double worst = 1.0;
  for (std::size_t i = 1; i + 1 < x_.size(); ++i) {
    const double h0 = x_[i] - x_[i - 1];
    const double h1 = x_[i + 1] - x_[i];
    worst = std::max(worst, std::max(h1 / h0, h0 / h1));
  }
  return worst;
}

double RadialGrid::integrate(std::span<const double> f) const {
  if (f.size() != w_.size()) throw DomainError("field size does not match the grid");
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) sum += w_[i] * f[i];
  return sum;
}

}  // namespace quench
