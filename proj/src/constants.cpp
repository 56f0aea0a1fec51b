#include "quench/constants.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "quench/error.hpp"

namespace quench {

CriticalCheck check_critical(const ModelParams& params) {
  std::ostringstream msg;
  if (!(params.pbar > 0.0) || !(params.q > 0.0) || !(params.r > 0.0) ||
      !(params.gamma >= 0.0) || params.dim < 1 || !(params.radius > 0.0)) {
    msg << "parameters must be positive (pbar, q, r, radius > 0, gamma >= 0, dim >= 1)";
    return {false, msg.str()};
  }
  const double half_dim = 0.5 * params.dim;
  const double ratio = params.r / (params.pbar + 1.0);
  if (std::abs(half_dim - ratio) > 1e-12 * std::max(half_dim, ratio)) {
    msg << "N/2 = r/(pbar+1) violated: N/2 = " << half_dim << ", r/(pbar+1) = " << ratio;
    return {false, msg.str()};
  }
  if (!(params.q < 2.0 / params.dim)) {
    msg << "q < 2/N violated: q = " << params.q << ", 2/N = " << 2.0 / params.dim;
    return {false, msg.str()};
  }
  return {true, "critical regime"};
}

double b_from_pbar(double pbar, double beta) {
  return (pbar + 1.0) * (pbar + 1.0) * (1.0 + beta) / (4.0 * pbar);
}

double b_from_p(double p, double beta) {
  return (p - 1.0) * (p - 1.0) * (1.0 + beta) / (4.0 * (p - 2.0));
}

double sphere_area(int dim) {
  const double h = 0.5 * dim;
  return 2.0 * std::pow(std::numbers::pi, h) / std::tgamma(h);
}

double ball_volume(int dim, double radius) {
  const double h = 0.5 * dim;
  return std::pow(std::numbers::pi, h) * std::pow(radius, dim) / std::tgamma(h + 1.0);
}

DerivedConstants derive_constants(const ModelParams& params) {
  const CriticalCheck check = check_critical(params);
  if (!check.ok) throw CriticalRegimeViolation(check.message);

  const double h = 0.5 * params.dim;
  const double denom = 1.0 - params.q * h;  // > 0 by q < 2/N

  DerivedConstants c;
  c.p = params.pbar + 2.0;
  c.kappa = std::pow(c.p - 1.0, -1.0 / (c.p - 1.0));
  c.beta = params.q * (h + 1.0) / denom;
  c.b = b_from_pbar(params.pbar, c.beta);
  const double exponent = params.q / denom;
  c.theta_inf = std::pow((h + 1.0) * 2.0 * std::pow(c.b, h) / (params.gamma * denom), exponent);
  c.a = c.kappa * params.dim * (1.0 + c.beta) / (2.0 * (c.p - 2.0)) + c.beta * c.kappa / (c.p - 1.0);
  c.sphere_area = sphere_area(params.dim);
  c.theta_inf_full = c.theta_inf * std::pow(c.sphere_area, -exponent);
  return c;
}

double effective_delta0(const ModelParams& params, const DerivedConstants& c) {
  if (params.delta0) return *params.delta0;
  return std::min(0.25 * std::pow(c.b * params.K0 * params.K0 / 16.0, 1.0 / (c.p - 1.0)), 0.5);
}

double bubble_integral_closed(double p, double b, int dim) {
  if (!(p > 1.0) || !(b > 0.0) || dim < 1) {
    throw DomainError("bubble integral needs p > 1, b > 0, N >= 1");
  }
  return std::pow(b, -0.5 * dim) / ((p - 1.0) * dim);
}

double bubble_integral_quadrature(double p, double b, int dim, double tol) {
  if (!(tol > 0.0) || tol > 1e-4) throw DomainError("bubble quadrature tolerance must lie in (0, 1e-4]");
  const double closed = bubble_integral_closed(p, b, dim);
  const double h = 0.5 * dim;

  // Integrand ≤ b^{-1-N/2} ξ^{-3}, so ∫_Ξ^∞ ≤ b^{-1-N/2} / (2Ξ²). Pick Ξ so the
  // neglected tail stays below tol/10 of the target.
  const double tail_budget = 0.1 * tol * closed;
  const double cutoff = std::sqrt(std::pow(b, -1.0 - h) / (2.0 * tail_budget));

  auto integrand = [=](double xi) {
    return std::pow(p - 1.0 + b * xi * xi, -1.0 - h) * std::pow(xi, dim - 1);
  };

  // Split at the bubble width so the adaptive scheme sees the peak and the
  // algebraic tail separately; the tail piece is integrated in log ξ.
  const double width = std::sqrt((p - 1.0) / b);
  const double split = std::min(cutoff, 8.0 * width);
  using boost::math::quadrature::gauss_kronrod;
  double err_core = 0.0;
  double err_tail = 0.0;
  const double rel = 0.05 * tol;
  const double core = gauss_kronrod<double, 61>::integrate(integrand, 0.0, split, 25, rel, &err_core);
  double tail = 0.0;
  if (cutoff > split) {
    auto in_log = [&](double t) {
      const double xi = std::exp(t);
      return integrand(xi) * xi;
    };
    tail = gauss_kronrod<double, 61>::integrate(in_log, std::log(split), std::log(cutoff), 25, rel,
                                                &err_tail);
  }
  const double value = core + tail;
  const double err = err_core + err_tail;  // absolute estimates
  if (!std::isfinite(value) || err > 0.5 * tol * closed) {
    throw ConvergenceFailure("bubble quadrature could not reach the requested tolerance");
  }
  return value;
}

double fundamental_integral_exact_case(double kprime, double a_low, double eps0) {
  if (!(a_low > 0.0) || !(a_low < eps0) || !(eps0 < 1.0)) {
    throw DomainError("fundamental integral needs 0 < a_low < eps0 < 1");
  }
  if (kprime == -1.0) throw DomainError("fundamental integral exact case needs k' != -1");
  const double e = kprime + 1.0;
  return (std::pow(std::abs(std::log(a_low)), e) - std::pow(std::abs(std::log(eps0)), e)) / e;
}

}  // namespace quench
