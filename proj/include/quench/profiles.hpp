#pragma once

#include "quench/constants.hpp"

namespace quench {

struct ProfileContext {
  DerivedConstants constants;
  double K0 = 10.0;
  double T = 0.0;        // nominal blow-up time, used by solve_varrho
  double radius = 1.0;   // distance from the quench point to the boundary
  // θ∞ entering H* and the final-profile law; defaults to constants.theta_inf.
  double theta_amplitude = 0.0;
};

ProfileContext make_profile_context(const ModelParams& params, const DerivedConstants& c, double T);

// Local space-time frame of the intermediate region at radius x.
struct LocalFrame {
  double x = 0.0;
  double varrho = 0.0;  // T - t(x)
  double t_of_x = 0.0;
  double tau = 0.0;
};

// The bubble (p-1+b z²)^{-1/(p-1)} and its z-derivative.
double phi_b(double z, double p, double b);
double phi_b_prime(double z, double p, double b);

// -½ z φ_b' - φ_b/(p-1) + φ_b^p, which vanishes identically.
double phi_b_ode_residual(double z, double p, double b);

// φ(y, s) = φ_b(y/√s) + a/s.
double profile_phi(double y, double s, const ProfileContext& ctx);

// Blow-up-variable form of the final profile: the reciprocal of
// [b |x|²/(2|log|x||) · θ∞/(2|log|x||)^β]^{1/(p-1)}. Inner formula only.
double final_profile_inner(double x, const ProfileContext& ctx);

// H*: the inner formula up to min(d/4, 1/2), zero beyond d/2, blended by χ0 in
// between. Throws DomainError at x = 0.
double final_profile_H(double x, const ProfileContext& ctx);

// Forward map ϱ -> (K0/4)√(ϱ|log ϱ|).
double varrho_forward(double varrho, double K0);

// Solves |x| = (K0/4)√(ϱ|log ϱ|) on the branch ϱ < 1/e. Throws
// RootBracketFailure when x lies beyond that branch.
LocalFrame solve_varrho(double x, const ProfileContext& ctx);

// V̂(τ) = [(p-1)(1 - ∫_0^τ θ̃/θ(t(x))) + b K0²/16]^{1/(p-1)}.
double v_hat(double tau, double theta_ratio_integral, const ProfileContext& ctx);

// Two-sided bound [(bK0²/16)^{1/(p-1)}, (p-1+bK0²/16)^{1/(p-1)}] on V̂.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};
Interval v_hat_bounds(const ProfileContext& ctx);

}  // namespace quench
