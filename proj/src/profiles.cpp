#include "quench/profiles.hpp"

#include <algorithm>
#include <cmath>

#include "quench/cutoff.hpp"
#include "quench/error.hpp"

namespace quench {

ProfileContext make_profile_context(const ModelParams& params, const DerivedConstants& c, double T) {
  ProfileContext ctx;
  ctx.constants = c;
  ctx.K0 = params.K0;
  ctx.T = T;
  ctx.radius = params.radius;
  ctx.theta_amplitude = c.theta_inf;
  return ctx;
}

double phi_b(double z, double p, double b) { return std::pow(p - 1.0 + b * z * z, -1.0 / (p - 1.0)); }

double phi_b_prime(double z, double p, double b) {
  return -(2.0 * b * z / (p - 1.0)) * std::pow(p - 1.0 + b * z * z, -1.0 - 1.0 / (p - 1.0));
}

double phi_b_ode_residual(double z, double p, double b) {
  const double phi = phi_b(z, p, b);
  return -0.5 * z * phi_b_prime(z, p, b) - phi / (p - 1.0) + std::pow(phi, p);
}

double profile_phi(double y, double s, const ProfileContext& ctx) {
  const auto& c = ctx.constants;
  return phi_b(y / std::sqrt(s), c.p, c.b) + c.a / s;
}

double final_profile_inner(double x, const ProfileContext& ctx) {
  const auto& c = ctx.constants;
  const double ax = std::abs(x);
  if (ax == 0.0) throw DomainError("final profile is singular at the origin");
  const double two_log = 2.0 * std::abs(std::log(ax));
  const double theta = ctx.theta_amplitude > 0.0 ? ctx.theta_amplitude : c.theta_inf;
  const double base = c.b * ax * ax / two_log * theta / std::pow(two_log, c.beta);
  return std::pow(base, -1.0 / (c.p - 1.0));
}

double final_profile_H(double x, const ProfileContext& ctx) {
  const double ax = std::abs(x);
  if (ax == 0.0) throw DomainError("H* is singular at the origin");
  const double d = ctx.radius;
  const double inner_end = std::min(0.25 * d, 0.5);
  const double outer_start = std::min(0.5 * d, 1.0);
  if (ax >= outer_start) return 0.0;
  const double inner = final_profile_inner(ax, ctx);
  if (ax <= inner_end) return inner;
  return chi0(1.0 + (ax - inner_end) / (outer_start - inner_end)) * inner;
}

double varrho_forward(double varrho, double K0) {
  return 0.25 * K0 * std::sqrt(varrho * std::abs(std::log(varrho)));
}

LocalFrame solve_varrho(double x, const ProfileContext& ctx) {
  const double ax = std::abs(x);
  const double K0 = ctx.K0;
  const double x_max = varrho_forward(std::exp(-1.0), K0);
  if (!(ax > 0.0) || !(ax < x_max)) {
    throw RootBracketFailure("|x| outside the monotone branch of the varrho equation");
  }
  // With L = -log ϱ > 1 the equation reads L - log L = 2 log(K0/4) - 2 log|x|,
  // and L - log L is increasing on (1, ∞).
  const double target = 2.0 * std::log(0.25 * K0) - 2.0 * std::log(ax);
  auto g = [&](double L) { return L - std::log(L) - target; };
  double lo = 1.0;
  double hi = 2.0;
  while (g(hi) < 0.0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-6 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  double L = 0.5 * (lo + hi);
  for (int it = 0; it < 20; ++it) {
    const double step = g(L) / (1.0 - 1.0 / L);
    L -= step;
    if (std::abs(step) <= 1e-15 * L) break;
  }
  LocalFrame frame;
  frame.x = ax;
  frame.varrho = std::exp(-L);
  frame.t_of_x = ctx.T - frame.varrho;
  return frame;
}

double v_hat(double tau, double theta_ratio_integral, const ProfileContext& ctx) {
  if (!(tau >= 0.0) || !(tau <= 1.0)) throw DomainError("v_hat: tau outside [0, 1]");
  if (!(theta_ratio_integral >= 0.0) || !(theta_ratio_integral <= 1.0)) {
    throw DomainError("v_hat: theta ratio integral outside [0, 1]");
  }
  const auto& c = ctx.constants;
  const double plateau = c.b * ctx.K0 * ctx.K0 / 16.0;
  return std::pow((c.p - 1.0) * (1.0 - theta_ratio_integral) + plateau, 1.0 / (c.p - 1.0));
}

Interval v_hat_bounds(const ProfileContext& ctx) {
  const auto& c = ctx.constants;
  const double plateau = c.b * ctx.K0 * ctx.K0 / 16.0;
  return {std::pow(plateau, 1.0 / (c.p - 1.0)), std::pow(c.p - 1.0 + plateau, 1.0 / (c.p - 1.0))};
}

}  // namespace quench
