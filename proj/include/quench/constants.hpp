#pragma once

#include <optional>
#include <string>

namespace quench {

// Raw parameters of the nonlocal MEMS equation
//   v_t = Δv + (1 - v)^{-pbar} (1 + gamma ∫ (1 - v)^{-r})^{-q}
// on the ball of the given radius, together with the construction knobs.
struct ModelParams {
  double pbar = 2.0;
  double q = 1.0 / 3.0;
  double r = 3.0;
  double gamma = 0.05;
  int dim = 2;
  double radius = 1.0;

  double K0 = 10.0;
  double A = 20.0;
  std::optional<double> delta0;  // unset: min(¼ (b K0²/16)^{1/(p-1)}, 0.5)
  double eps0 = 0.1;
  double alpha0 = 1.0;
  double eta0 = 0.1;
};

struct DerivedConstants {
  double p = 0.0;          // pbar + 2
  double kappa = 0.0;      // (p-1)^{-1/(p-1)}
  double beta = 0.0;
  double b = 0.0;
  double theta_inf = 0.0;  // closed form with the one-dimensional bubble integral
  double a = 0.0;

  // |S^{N-1}|. The radial reduction of ∫_{R^N} multiplies the bubble integral
  // by this factor; theta_inf_full is the amplitude that the N-dimensional
  // nonlocal integral actually produces.
  double sphere_area = 0.0;
  double theta_inf_full = 0.0;
};

struct CriticalCheck {
  bool ok = false;
  std::string message;
};

CriticalCheck check_critical(const ModelParams& params);

// Throws CriticalRegimeViolation when check_critical fails.
DerivedConstants derive_constants(const ModelParams& params);

// δ0 actually used for the given parameters (explicit value or the default).
double effective_delta0(const ModelParams& params, const DerivedConstants& c);

// b computed from pbar, and from p; both expressions must agree.
double b_from_pbar(double pbar, double beta);
double b_from_p(double p, double beta);

double sphere_area(int dim);
double ball_volume(int dim, double radius);

// ∫_0^∞ (p-1+bξ²)^{-1-N/2} ξ^{N-1} dξ in closed form.
double bubble_integral_closed(double p, double b, int dim);

// Same integral by adaptive Gauss-Kronrod on [0, Ξ] with an analytic tail
// bound; the result is within tol·closed of the closed form.
double bubble_integral_quadrature(double p, double b, int dim, double tol);

// ∫_{a_low}^{eps0} |log ξ|^{k'} / ξ dξ, the borderline 2k = N case of the
// annulus integrals.
double fundamental_integral_exact_case(double kprime, double a_low, double eps0);

}  // namespace quench
