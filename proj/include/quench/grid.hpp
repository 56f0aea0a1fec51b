#pragma once

#include <span>
#include <vector>

namespace quench {

// Nodes 0 = x_0 < ... < x_M = R of the ball B(0, R) in radial coordinates,
// with weights that integrate ∫_Ω f dx = ω_{N-1} ∫_0^R f(x) x^{N-1} dx for
// the piecewise-linear interpolant of f.
class RadialGrid {
 public:
  RadialGrid(std::vector<double> nodes, int dim);

  static RadialGrid uniform(int cells, double radius, int dim);

  // Uniform core on [0, 4·scale] with core_cells cells, then geometric
  // stretching to the radius with the remaining cells. Falls back to a uniform
  // grid when that is already at least as fine as the core.
  static RadialGrid refined(double scale, int core_cells, int cells, double radius, int dim,
                            double max_ratio = 1.2);

  std::span<const double> nodes() const { return x_; }
  std::span<const double> weights() const { return w_; }
  int dim() const { return dim_; }
  double radius() const { return x_.back(); }
  std::size_t size() const { return x_.size(); }
  double h_min() const { return h_min_; }
  // Largest ratio between adjacent spacings.
  double max_spacing_ratio() const;

  double integrate(std::span<const double> f) const;

 private:
  std::vector<double> x_;
  std::vector<double> w_;
  int dim_;
  double h_min_;
};

}  // namespace quench
