#include "quench/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <gsl/gsl_integration.h>

#include "quench/cutoff.hpp"
#include "quench/error.hpp"
#include "quench/interp.hpp"

namespace quench {

double hermite_eval(int m, double xi) {
  if (m < 0) throw DomainError("Hermite degree must be >= 0");
  double prev = 1.0;
  if (m == 0) return prev;
  double cur = xi;
  for (int k = 1; k < m; ++k) {
    const double next = xi * cur - 2.0 * k * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

HermiteBasis::HermiteBasis(int max_degree) : max_degree_(max_degree) {
  if (max_degree < 3) throw DomainError("Hermite basis needs max_degree >= 3");
  table_.resize(static_cast<std::size_t>(max_degree) + 1);
  for (int m = 0; m <= max_degree; ++m) {
    auto& row = table_[m];
    row.assign(static_cast<std::size_t>(m) + 1, 0.0);
    for (int j = 0; 2 * j <= m; ++j) {
      const double c = std::tgamma(m + 1.0) / (std::tgamma(j + 1.0) * std::tgamma(m - 2.0 * j + 1.0));
      row[m - 2 * j] = (j % 2 == 0 ? c : -c);
    }
  }
}

const std::vector<double>& HermiteBasis::coefficients(int m) const {
  if (m < 0 || m > max_degree_) throw DomainError("Hermite degree beyond the basis");
  return table_[m];
}

double HermiteBasis::operator()(int m, double xi) const {
  if (m < 0 || m > max_degree_) throw DomainError("Hermite degree beyond the basis");
  return hermite_eval(m, xi);
}

double HermiteBasis::norm_squared(int m) { return std::ldexp(std::tgamma(m + 1.0), m); }

GaussHermiteRule::GaussHermiteRule(int dim, int nodes_per_axis) : dim_(dim), per_axis_(nodes_per_axis) {
  if (dim < 1 || nodes_per_axis < 2) throw DomainError("Gauss-Hermite rule needs dim >= 1 and >= 2 nodes");
  // Weight e^{-b(x-a)²} with a = 0, b = 1/4 is exactly the unnormalized ρ.
  gsl_integration_fixed_workspace* ws =
      gsl_integration_fixed_alloc(gsl_integration_fixed_hermite, nodes_per_axis, 0.0, 0.25, 0.0, 0.0);
  if (ws == nullptr) throw ConvergenceFailure("Gauss-Hermite node generation failed");
  const double* nodes = gsl_integration_fixed_nodes(ws);
  const double* w = gsl_integration_fixed_weights(ws);
  axis_nodes_.assign(nodes, nodes + nodes_per_axis);
  std::vector<double> axis_weights(w, w + nodes_per_axis);
  gsl_integration_fixed_free(ws);
  const double norm = std::sqrt(4.0 * std::numbers::pi);
  for (double& x : axis_weights) x /= norm;

  std::size_t total = 1;
  for (int d = 0; d < dim; ++d) total *= static_cast<std::size_t>(nodes_per_axis);
  points_.resize(total * dim);
  weights_.resize(total);
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t rem = k;
    double weight = 1.0;
    for (int d = 0; d < dim; ++d) {
      const std::size_t i = rem % nodes_per_axis;
      rem /= nodes_per_axis;
      points_[k * dim + d] = axis_nodes_[i];
      weight *= axis_weights[i];
    }
    weights_[k] = weight;
  }
}

GaussHermiteRule GaussHermiteRule::for_dim(int dim) {
  return GaussHermiteRule(dim, dim <= 2 ? 64 : (dim == 3 ? 32 : 20));
}

std::span<const double> GaussHermiteRule::point(std::size_t k) const {
  return {points_.data() + k * dim_, static_cast<std::size_t>(dim_)};
}

double GaussHermiteRule::max_radius() const {
  const double m = *std::max_element(axis_nodes_.begin(), axis_nodes_.end());
  return m * std::sqrt(static_cast<double>(dim_));
}

double inner_product_rho(const FieldFn& f, const FieldFn& g, const GaussHermiteRule& rule) {
  double sum = 0.0;
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const auto y = rule.point(k);
    sum += rule.weight(k) * f(y) * g(y);
  }
  return sum;
}

namespace {
double norm(std::span<const double> y) {
  double s = 0.0;
  for (double v : y) s += v * v;
  return std::sqrt(s);
}
}  // namespace

double cutoff_chi_radial(double r, double s, double K0) {
  if (!(s > 0.0)) throw DomainError("cut-off needs s > 0");
  return chi0(std::abs(r) / (K0 * std::sqrt(s)));
}

double cutoff_chi(std::span<const double> y, double s, double K0) { return cutoff_chi_radial(norm(y), s, K0); }

SampledField radial_sampled_field(int dim, std::vector<double> r, std::vector<double> q) {
  if (r.size() != q.size() || r.size() < 4 || r.front() != 0.0) {
    throw DomainError("radial samples need >= 4 nodes starting at 0");
  }
  auto dq = std::make_shared<std::vector<double>>(radial_derivative(r, q));
  auto rs = std::make_shared<std::vector<double>>(std::move(r));
  auto qs = std::make_shared<std::vector<double>>(std::move(q));

  SampledField field;
  field.dim = dim;
  field.extent = rs->back();
  field.value = [rs, qs](std::span<const double> y) { return radial_lagrange4(*rs, *qs, norm(y)); };
  field.gradient = [rs, dq](std::span<const double> y, std::span<double> out) {
    const double rr = norm(y);
    const std::size_t i = bracket(*rs, rr);
    const double t = std::clamp((rr - (*rs)[i]) / ((*rs)[i + 1] - (*rs)[i]), 0.0, 1.0);
    const double d = (1.0 - t) * (*dq)[i] + t * (*dq)[i + 1];
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = rr > 0.0 ? d * y[k] / rr : 0.0;
  };
  for (double ri : *rs) {
    std::vector<double> y(static_cast<std::size_t>(dim), 0.0);
    y[0] = ri;
    field.probes.push_back(std::move(y));
  }
  field.self_test = [rs, dim](const GaussHermiteRule& rule) {
    std::vector<double> one(rs->size(), 1.0);
    std::vector<double> h2(rs->size());
    for (std::size_t i = 0; i < rs->size(); ++i) h2[i] = (*rs)[i] * (*rs)[i] - 2.0 * dim;
    const double g00 = inner_product_rho([&](auto y) { return radial_lagrange4(*rs, one, norm(y)); },
                                         [&](auto y) { return radial_lagrange4(*rs, one, norm(y)); }, rule);
    const double g02 = inner_product_rho([&](auto y) { return radial_lagrange4(*rs, one, norm(y)); },
                                         [&](auto y) { return radial_lagrange4(*rs, h2, norm(y)); }, rule);
    const double g22 = inner_product_rho([&](auto y) { return radial_lagrange4(*rs, h2, norm(y)); },
                                         [&](auto y) { return radial_lagrange4(*rs, h2, norm(y)); }, rule);
    return std::max({std::abs(g00 - 1.0), std::abs(g02), std::abs(g22 - 8.0 * dim) / (8.0 * dim)});
  };
  return field;
}

double ModeDecomposition::q1_norm() const {
  double s2 = 0.0;
  for (double v : q1) s2 += v * v;
  return std::sqrt(s2);
}

double ModeDecomposition::q2_norm() const {
  const auto n = static_cast<Eigen::Index>(q1.size());
  if (n == 0) return 0.0;
  Eigen::Map<const Eigen::MatrixXd> m(q2.data(), n, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

double reconstruct(const ModeDecomposition& dec, std::span<const double> y) {
  const std::size_t n = dec.q1.size();
  double value = dec.q0;
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    value += dec.q1[i] * y[i];
    trace += dec.q2[i * n + i];
    for (std::size_t j = 0; j < n; ++j) value += y[i] * dec.q2[i * n + j] * y[j];
  }
  return value - 2.0 * trace;
}

ModeDecomposition decompose(const SampledField& field, double s, double K0, const GaussHermiteRule& rule) {
  const int n = field.dim;
  if (rule.dim() != n) throw DomainError("quadrature and field dimensions differ");
  if (!(s > 0.0)) throw DomainError("decompose needs s > 0");
  if (field.extent < std::min(2.0 * K0 * std::sqrt(s), rule.max_radius())) {
    throw GridTooCoarse("samples do not reach the quadrature nodes");
  }
  if (field.self_test) {
    const double err = field.self_test(rule);
    if (!(err <= 1e-6)) throw GridTooCoarse("orthogonality self-test error " + std::to_string(err));
  }

  ModeDecomposition dec;
  dec.s = s;
  dec.q1.assign(static_cast<std::size_t>(n), 0.0);
  dec.q2.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const auto y = rule.point(k);
    const double cq = rule.weight(k) * cutoff_chi(y, s, K0) * field.value(y);
    if (cq == 0.0) continue;
    dec.q0 += cq;
    for (int i = 0; i < n; ++i) {
      dec.q1[i] += 0.5 * cq * y[i];
      for (int j = 0; j < n; ++j) {
        dec.q2[i * n + j] += 0.5 * cq * (0.25 * y[i] * y[j] - (i == j ? 0.5 : 0.0));
      }
    }
  }
  double trace = 0.0;
  for (int i = 0; i < n; ++i) trace += dec.q2[i * n + i];
  dec.q2_scalar = trace / n;

  const double inner = 2.0 * K0 * std::sqrt(s);
  std::vector<double> grad(static_cast<std::size_t>(n));
  for (const auto& y : field.probes) {
    const double r = norm(y);
    const double chi = cutoff_chi(y, s, K0);
    const double q = field.value(y);
    dec.qe_norm = std::max(dec.qe_norm, std::abs((1.0 - chi) * q));
    if (r > inner) continue;
    const double weight = 1.0 + r * r * r;
    dec.qminus_bound = std::max(dec.qminus_bound, std::abs(chi * q - reconstruct(dec, y)) / weight);
    field.gradient(y, grad);
    double g2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double gi = chi * grad[i] - dec.q1[i];
      for (int j = 0; j < n; ++j) gi -= 2.0 * dec.q2[i * n + j] * y[j];
      g2 += gi * gi;
    }
    dec.grad_perp_bound = std::max(dec.grad_perp_bound, std::sqrt(g2) / weight);
  }
  return dec;
}

ShrinkingSetReport check_shrinking_set(const ModeDecomposition& dec, double A) {
  const double s = dec.s;
  if (!(s >= 1.0)) throw DomainError("shrinking-set check needs s >= 1");
  const double s32 = std::pow(s, 1.5);
  const double s2 = s * s;
  const double a3 = A * A * A;
  const double a6 = a3 * a3;
  ShrinkingSetReport report;
  report.bounds = {BoundCheck{"q0", std::abs(dec.q0), a3 / s32},
                   BoundCheck{"q1", dec.q1_norm(), A / s2},
                   BoundCheck{"q2", dec.q2_norm(), A * a3 / s32},
                   BoundCheck{"q_minus", dec.qminus_bound, a6 / s2},
                   BoundCheck{"grad_perp", dec.grad_perp_bound, a6 / s2},
                   BoundCheck{"q_e", dec.qe_norm, a6 * A / std::sqrt(s)}};
  for (auto& b : report.bounds) {
    b.margin = b.observed / b.allowed;
    b.pass = b.margin <= 1.0;
    report.pass = report.pass && b.pass;
    report.worst_margin = std::max(report.worst_margin, b.margin);
  }
  return report;
}

namespace {

struct ModeRhs {
  double p, kappa, beta, n;
  double w0(double s, double w0, double w2) const {
    return w0 + (p / (2.0 * kappa)) * (w0 * w0 + 8.0 * n * w2 * w2) - (16.0 * n / kappa) * w2 * w2 -
           beta * (kappa + w0) / ((p - 1.0) * s);
  }
  double w2(double s, double w0, double w2) const {
    return (4.0 * p / kappa) * w2 * w2 + (p / kappa) * w0 * w2 - (8.0 / kappa) * w2 * w2 -
           beta * w2 / ((p - 1.0) * s);
  }
};

void record(ModeTrajectory& out, double s, double w0, double w2) {
  out.s.push_back(s);
  out.w0.push_back(w0);
  out.w2.push_back(w2);
}

}  // namespace

ModeTrajectory mode_ode_integrate(double w0_init, double w2_init, double s0, double s1,
                                  const DerivedConstants& c, int dim, const ModeOdeOptions& options) {
  if (!(s0 >= 2.0) || !(s1 > s0)) throw DomainError("mode ODE needs 2 <= s0 < s1");
  if (std::abs(w0_init) > 1.0 || std::abs(w2_init) > 1.0) throw DomainError("mode ODE seeds must satisfy |W| <= 1");
  if (!(options.ds > 0.0) || options.ds > 1e-2 * s0) throw DomainError("mode ODE step must be <= 1e-2 in log s");
  const ModeRhs f{c.p, c.kappa, c.beta, static_cast<double>(dim)};
  const auto steps = static_cast<std::size_t>(std::ceil((s1 - s0) / options.ds));
  const double h = (s1 - s0) / static_cast<double>(steps);
  const std::size_t every = std::max<std::size_t>(options.record_every, 1);

  ModeTrajectory out;
  if (!options.stable_manifold) {
    double w0 = w0_init;
    double w2 = w2_init;
    record(out, s0, w0, w2);
    for (std::size_t k = 0; k < steps; ++k) {
      const double s = s0 + h * static_cast<double>(k);
      const double a0 = f.w0(s, w0, w2), a2 = f.w2(s, w0, w2);
      const double b0 = f.w0(s + 0.5 * h, w0 + 0.5 * h * a0, w2 + 0.5 * h * a2);
      const double b2 = f.w2(s + 0.5 * h, w0 + 0.5 * h * a0, w2 + 0.5 * h * a2);
      const double c0 = f.w0(s + 0.5 * h, w0 + 0.5 * h * b0, w2 + 0.5 * h * b2);
      const double c2 = f.w2(s + 0.5 * h, w0 + 0.5 * h * b0, w2 + 0.5 * h * b2);
      const double d0 = f.w0(s + h, w0 + h * c0, w2 + h * c2);
      const double d2 = f.w2(s + h, w0 + h * c0, w2 + h * c2);
      w0 += h / 6.0 * (a0 + 2.0 * b0 + 2.0 * c0 + d0);
      w2 += h / 6.0 * (a2 + 2.0 * b2 + 2.0 * c2 + d2);
      const double s_next = s + h;
      if (!std::isfinite(w0) || !std::isfinite(w2) || std::abs(w0) > options.divergence_threshold ||
          std::abs(w2) > options.divergence_threshold) {
        out.blowup = true;
        out.blowup_s = s_next;
        record(out, s_next, w0, w2);
        return out;
      }
      if ((k + 1) % every == 0 || k + 1 == steps) record(out, s_next, w0, w2);
    }
    return out;
  }

  // Paths on the half-step lattice s0 + j h/2, j = 0 .. 2·steps.
  const std::size_t m = 2 * steps + 1;
  auto sj = [&](std::size_t j) { return s0 + 0.5 * h * static_cast<double>(j); };
  std::vector<double> w0(m), w2(m);
  for (std::size_t j = 0; j < m; ++j) {
    w0[j] = c.beta * c.kappa / ((c.p - 1.0) * sj(j));
    w2[j] = w2_init * s0 / sj(j);
  }
  auto forward_w2 = [&] {
    for (std::size_t k = 0; k < steps; ++k) {
      const std::size_t j = 2 * k;
      const double s = sj(j);
      const double y = w2[j];
      const double a = f.w2(s, w0[j], y);
      const double b = f.w2(s + 0.5 * h, w0[j + 1], y + 0.5 * h * a);
      const double cc = f.w2(s + 0.5 * h, w0[j + 1], y + 0.5 * h * b);
      const double d = f.w2(s + h, w0[j + 2], y + h * cc);
      w2[j + 2] = y + h / 6.0 * (a + 2.0 * b + 2.0 * cc + d);
      w2[j + 1] = 0.5 * (y + w2[j + 2]) + h / 8.0 * (a - d);  // cubic Hermite midpoint
    }
  };
  auto backward_w0 = [&]() -> double {
    // Slaved terminal value: W0 = -(quadratic terms) + β(κ+W0)/((p-1)s), solved by iteration.
    double term = w0[m - 1];
    for (int it = 0; it < 50; ++it) term = term - f.w0(s1, term, w2[m - 1]);
    double change = std::abs(term - w0[m - 1]);
    w0[m - 1] = term;
    for (std::size_t k = steps; k-- > 0;) {
      const std::size_t j = 2 * k + 2;
      const double s = sj(j);
      const double y = w0[j];
      const double a = f.w0(s, y, w2[j]);
      const double b = f.w0(s - 0.5 * h, y - 0.5 * h * a, w2[j - 1]);
      const double cc = f.w0(s - 0.5 * h, y - 0.5 * h * b, w2[j - 1]);
      const double d = f.w0(s - h, y - h * cc, w2[j - 2]);
      const double next = y - h / 6.0 * (a + 2.0 * b + 2.0 * cc + d);
      const double mid = 0.5 * (y + next) - h / 8.0 * (a - d);
      change = std::max({change, std::abs(next - w0[j - 2]), std::abs(mid - w0[j - 1])});
      w0[j - 2] = next;
      w0[j - 1] = mid;
    }
    return change;
  };
  w2[0] = w2_init;
  for (out.sweeps = 1; out.sweeps <= options.max_sweeps; ++out.sweeps) {
    forward_w2();
    const double change = backward_w0();
    if (change <= 1e-15) break;
  }
  out.sweeps = std::min(out.sweeps, options.max_sweeps);
  for (std::size_t k = 0; k <= steps; ++k) {
    const std::size_t j = 2 * k;
    const bool bad = std::abs(w0[j]) > options.divergence_threshold ||
                     std::abs(w2[j]) > options.divergence_threshold || !std::isfinite(w0[j]) ||
                     !std::isfinite(w2[j]);
    if (k % every == 0 || k == steps || bad) record(out, sj(j), w0[j], w2[j]);
    if (bad) {
      out.blowup = true;
      out.blowup_s = sj(j);
      break;
    }
  }
  (void)w0_init;
  return out;
}

}  // namespace quench
