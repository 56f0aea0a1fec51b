#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "quench/constants.hpp"

namespace quench {

// h_m(ξ) by h_{m+1} = ξ h_m - 2m h_{m-1}, h_0 = 1, h_1 = ξ. Throws DomainError for m < 0.
double hermite_eval(int m, double xi);

// Coefficient table of h_0 .. h_max (ascending powers), built from the
// explicit sum h_m(ξ) = m! Σ_j (-1)^j ξ^{m-2j} / (j! (m-2j)!).
class HermiteBasis {
 public:
  explicit HermiteBasis(int max_degree = 8);

  int max_degree() const { return max_degree_; }
  const std::vector<double>& coefficients(int m) const;
  // Evaluates through the recurrence; throws DomainError past max_degree.
  double operator()(int m, double xi) const;
  // ⟨h_m, h_m⟩_ρ = 2^m m!.
  static double norm_squared(int m);

 private:
  int max_degree_;
  std::vector<std::vector<double>> table_;
};

// Tensor Gauss-Hermite rule for ρ(y) = e^{-|y|²/4} / (4π)^{N/2}; weights sum to 1.
class GaussHermiteRule {
 public:
  GaussHermiteRule(int dim, int nodes_per_axis);
  // 64 nodes per axis for N ≤ 2, 32 for N = 3, 20 beyond.
  static GaussHermiteRule for_dim(int dim);

  int dim() const { return dim_; }
  int nodes_per_axis() const { return per_axis_; }
  std::size_t size() const { return weights_.size(); }
  std::span<const double> point(std::size_t k) const;
  double weight(std::size_t k) const { return weights_[k]; }
  std::span<const double> axis_nodes() const { return axis_nodes_; }
  double max_radius() const;

 private:
  int dim_;
  int per_axis_;
  std::vector<double> axis_nodes_;
  std::vector<double> points_;  // size()·dim, row-major
  std::vector<double> weights_;
};

using FieldFn = std::function<double(std::span<const double>)>;

double inner_product_rho(const FieldFn& f, const FieldFn& g, const GaussHermiteRule& rule);

// χ(y, s) = χ0(|y| / (K0 √s)).
double cutoff_chi(std::span<const double> y, double s, double K0);
double cutoff_chi_radial(double r, double s, double K0);

// A field on R^N known through point evaluation, its gradient, and a set of
// probe points where the sup bounds are taken.
struct SampledField {
  int dim = 1;
  FieldFn value;
  std::function<void(std::span<const double>, std::span<double>)> gradient;
  std::vector<std::vector<double>> probes;
  // Largest |y| at which the sampling is meaningful.
  double extent = 0.0;
  // Gram-matrix error of {1, |y|² - 2N} computed through the same sampling.
  std::function<double(const GaussHermiteRule&)> self_test;
};

// Radial samples q(r_i) on nodes 0 = r_0 < ... ; interpolated by four-point
// Lagrange with even extension, gradient from centered differences.
SampledField radial_sampled_field(int dim, std::vector<double> r, std::vector<double> q);

struct ModeDecomposition {
  double s = 0.0;
  double q0 = 0.0;
  std::vector<double> q1;   // N entries
  std::vector<double> q2;   // N×N symmetric, row-major; P2 part is yᵀ q2 y - 2 Tr q2
  double q2_scalar = 0.0;   // Tr q2 / N, the common eigenvalue for radial fields
  double qminus_bound = 0.0;
  double grad_perp_bound = 0.0;
  double qe_norm = 0.0;

  double q1_norm() const;
  double q2_norm() const;  // spectral norm
};

// Degree ≤ 2 part q0 + q1·y + yᵀ q2 y - 2 Tr q2 at y.
double reconstruct(const ModeDecomposition& dec, std::span<const double> y);

// Projections of χq onto {1, y, M(y)} with M_ij = ¼ y_i y_j - ½ δ_ij, and the
// sup bounds of the remainder over the probes. Throws GridTooCoarse when the
// sampling fails its self-test by more than 1e-6 or does not reach the
// quadrature nodes.
ModeDecomposition decompose(const SampledField& field, double s, double K0, const GaussHermiteRule& rule);

struct BoundCheck {
  std::string name;
  double observed = 0.0;
  double allowed = 0.0;
  double margin = 0.0;  // observed / allowed
  bool pass = true;
};

struct ShrinkingSetReport {
  std::array<BoundCheck, 6> bounds;
  bool pass = true;
  double worst_margin = 0.0;
};

ShrinkingSetReport check_shrinking_set(const ModeDecomposition& dec, double A);

struct ModeOdeOptions {
  double ds = 1e-2;              // fixed RK4 step in s
  double divergence_threshold = 1.0;
  std::size_t record_every = 100;
  // Replace the forward shot by the bounded solution: W̃2 forward, W̃0
  // backward from its slaved value at s1, iterated to a fixed point.
  bool stable_manifold = false;
  int max_sweeps = 50;
};

struct ModeTrajectory {
  std::vector<double> s;
  std::vector<double> w0;
  std::vector<double> w2;
  bool blowup = false;
  double blowup_s = 0.0;
  int sweeps = 0;
};

// Two-mode reduction with the cubic remainder dropped:
//   W0' = W0 + (p/2κ)(W0² + 8N W2²) - (16N/κ) W2² - β(κ + W0)/((p-1)s)
//   W2' = (4p/κ) W2² + (p/κ) W0 W2 - (8/κ) W2² - β W2/((p-1)s)
ModeTrajectory mode_ode_integrate(double w0_init, double w2_init, double s0, double s1,
                                  const DerivedConstants& c, int dim, const ModeOdeOptions& options = {});

}  // namespace quench
