#include "quench/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "quench/error.hpp"
#include "quench/fit.hpp"
#include "quench/interp.hpp"

namespace quench {

namespace {
double amplitude_of(const ProfileContext& ctx) {
  return ctx.theta_amplitude > 0.0 ? ctx.theta_amplitude : ctx.constants.theta_inf;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}
}  // namespace

SimilarityFrame to_similarity(const Snapshot& snap, const Time& T_est, const ProfileContext& ctx) {
  const double gap = T_est - snap.t;
  if (!(gap > 0.0)) throw DomainError("similarity frame needs t < T_est");
  const auto& c = ctx.constants;
  SimilarityFrame f;
  f.gap = gap;
  f.s = -std::log(gap);
  const double scale = std::pow(snap.theta * gap, 1.0 / (c.p - 1.0));
  const double root = std::sqrt(gap);
  const std::size_t n = snap.x.size();
  f.y.resize(n);
  f.W.resize(n);
  f.q.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    f.y[i] = snap.x[i] / root;
    f.W[i] = scale * snap.u[i];
    f.q[i] = f.W[i] - profile_phi(f.y[i], f.s, ctx);
  }
  return f;
}

ProfileError intermediate_profile_error(const Snapshot& snap, const Time& T_est, const ProfileContext& ctx) {
  const double gap = T_est - snap.t;
  if (!(gap > 0.0)) throw DomainError("profile error needs t < T_est");
  const auto& c = ctx.constants;
  ProfileError e;
  e.s = -std::log(gap);
  const double pref = std::pow(amplitude_of(ctx) * gap / std::pow(e.s, c.beta), 1.0 / (c.p - 1.0));
  const double inner = ctx.K0 * std::sqrt(gap * e.s);
  for (std::size_t i = 0; i < snap.x.size(); ++i) {
    const double x = snap.x[i];
    const double target = std::pow(c.p - 1.0 + c.b * x * x / (gap * e.s), -1.0 / (c.p - 1.0));
    const double d = std::abs(pref * (1.0 + snap.u[i]) - target);
    e.error = std::max(e.error, d);
    if (x <= inner) e.inner_error = std::max(e.inner_error, d);
  }
  e.scaled = std::sqrt(e.s) * e.error;
  return e;
}

LawFit power_law_fit(std::span<const double> s, std::span<const double> value, double window_fraction,
                     std::size_t min_count) {
  if (s.size() != value.size() || s.empty()) throw FitDegenerate("power-law fit inputs are empty or mismatched");
  if (!(window_fraction > 0.0) || window_fraction > 1.0) throw FitDegenerate("window fraction must lie in (0, 1]");
  const auto [lo_it, hi_it] = std::minmax_element(s.begin(), s.end());
  const double s_lo = *hi_it - window_fraction * (*hi_it - *lo_it);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] >= s_lo && s[i] > 0.0 && value[i] > 0.0) {
      x.push_back(std::log(s[i]));
      y.push_back(std::log(value[i]));
    }
  }
  const LinearFit fit = linear_fit(x, y, min_count);
  return LawFit{fit.slope, fit.intercept, fit.rms, s_lo, *hi_it, fit.count};
}

LawFit theta_law_fit(const Trajectory& traj, const Time& T_est, double window_fraction) {
  std::vector<double> s, theta;
  for (const auto& smp : traj.samples) {
    const double gap = T_est - smp.t;
    if (smp.u_max < 100.0 || !(gap > 0.0)) continue;
    s.push_back(std::abs(std::log(gap)));
    theta.push_back(smp.theta);
  }
  if (s.size() < 20) throw FitDegenerate("fewer than 20 samples with u_max >= 100");
  return power_law_fit(s, theta, window_fraction, 3);
}

ThetaPrimeResidual theta_prime_residual(std::span<const double> gap, std::span<const double> theta,
                                        const ModelParams& params, const DerivedConstants& c, double area,
                                        double window_fraction) {
  if (gap.size() != theta.size() || gap.size() < 3) throw FitDegenerate("θ' residual needs >= 3 samples");
  const double half = 0.5 * params.dim;
  const double bubble = area * bubble_integral_closed(c.p, c.b, params.dim);
  const double power = 1.0 + 1.0 / params.q - half;
  ThetaPrimeResidual out;
  for (std::size_t i = 1; i + 1 < gap.size(); ++i) {
    // Times relative to T: t_i - T = -gap_i.
    const double hm = gap[i - 1] - gap[i];
    const double hp = gap[i] - gap[i + 1];
    if (!(hm > 0.0) || !(hp > 0.0)) throw DomainError("θ' residual needs strictly increasing times");
    const double derivative = (hm * hm * (theta[i + 1] - theta[i]) + hp * hp * (theta[i] - theta[i - 1])) /
                              (hm * hp * (hm + hp));
    const double s = std::abs(std::log(gap[i]));
    const double formula = -params.r * params.q * params.gamma * std::pow(theta[i], power) / gap[i] *
                           std::pow(s, half) * bubble;
    out.s.push_back(s);
    out.residual.push_back(std::abs(derivative / formula - 1.0));
  }
  const auto [lo, hi] = std::minmax_element(out.s.begin(), out.s.end());
  const double s_lo = *hi - window_fraction * (*hi - *lo);
  std::vector<double> late;
  for (std::size_t i = 0; i < out.s.size(); ++i) {
    const bool in = out.s[i] >= s_lo;
    out.late.push_back(in);
    if (in) late.push_back(out.residual[i]);
  }
  out.late_max = late.empty() ? 0.0 : *std::max_element(late.begin(), late.end());
  out.late_median = median(late);
  return out;
}

ThetaPrimeResidual theta_prime_residual(const Trajectory& traj, const Time& T_est, const ModelParams& params,
                                        const DerivedConstants& c, double area, double window_fraction) {
  std::vector<double> gap, theta;
  for (const auto& smp : traj.samples) {
    const double g = T_est - smp.t;
    if (!(g > 0.0)) continue;
    if (!gap.empty() && !(g < gap.back())) continue;
    gap.push_back(g);
    theta.push_back(smp.theta);
  }
  return theta_prime_residual(gap, theta, params, c, area, window_fraction);
}

EnergyIdentity energy_identity_check(const Trajectory& traj, const ModelParams& params, double tolerance) {
  const auto& smp = traj.samples;
  if (smp.size() < 3) throw FitDegenerate("energy identity needs >= 3 samples");
  const double r = params.r;
  const double p = params.pbar + 2.0;
  EnergyIdentity out;
  out.tolerance = tolerance;
  std::size_t good = 0;
  for (std::size_t i = 1; i + 1 < smp.size(); ++i) {
    const double hm = smp[i].t - smp[i - 1].t;
    const double hp = smp[i + 1].t - smp[i].t;
    if (!(hm > 0.0) || !(hp > 0.0)) throw DomainError("energy identity needs strictly increasing sample times");
    const double derivative = (hm * hm * (smp[i + 1].norm_r - smp[i].norm_r) +
                               hp * hp * (smp[i].norm_r - smp[i - 1].norm_r)) /
                              (hm * hp * (hm + hp));
    const double rhs = -r * (r + 1.0) * smp[i].grad_integral + r * smp[i].theta * smp[i].reaction_integral;
    const double rel = std::abs(derivative - rhs) / std::abs(rhs);
    out.s.push_back(-std::log(reaction_time(smp[i].theta, smp[i].u_max, p)));
    out.relative.push_back(rel);
    if (rel <= tolerance) ++good;
  }
  out.pass_fraction = static_cast<double>(good) / static_cast<double>(out.relative.size());
  out.median = median(out.relative);
  out.max = *std::max_element(out.relative.begin(), out.relative.end());
  return out;
}

std::vector<AnnulusRatio> final_profile_check(const Snapshot& last, const Time& T_est, const ProfileContext& ctx,
                                              double eps0, int annuli) {
  const double gap = T_est - last.t;
  if (!(gap > 0.0)) throw DomainError("final profile check needs t_f < T_est");
  const auto& c = ctx.constants;
  const double inner = ctx.K0 * std::sqrt(gap * std::abs(std::log(gap)));
  std::vector<AnnulusRatio> out;
  if (!(inner < eps0) || annuli < 1) return out;
  const double theta = amplitude_of(ctx);
  const double step = std::log(eps0 / inner) / annuli;
  for (int k = 0; k < annuli; ++k) {
    AnnulusRatio a;
    a.x_lo = inner * std::exp(step * k);
    a.x_hi = k + 1 == annuli ? eps0 : inner * std::exp(step * (k + 1));
    a.ratio_min = std::numeric_limits<double>::infinity();
    a.ratio_max = 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < last.x.size(); ++i) {
      const double x = last.x[i];
      if (x < a.x_lo || x > a.x_hi) continue;
      const double law = theta * c.b * x * x / std::pow(2.0 * std::abs(std::log(x)), 1.0 + c.beta);
      const double r = (1.0 + last.u[i]) * std::pow(law, 1.0 / (c.p - 1.0));
      sum += r;
      a.ratio_min = std::min(a.ratio_min, r);
      a.ratio_max = std::max(a.ratio_max, r);
      ++a.nodes;
    }
    if (a.nodes == 0) continue;
    a.ratio = sum / static_cast<double>(a.nodes);
    out.push_back(a);
  }
  return out;
}

double p2_probe_for_time(const Time& t, const Time& T_est, double K0) {
  const double varrho = T_est - t;
  if (!(varrho > 0.0) || !(varrho < std::exp(-1.0))) throw ProbeOutOfRange("T_est - t must lie in (0, 1/e)");
  return varrho_forward(varrho, K0);
}

P2Report p2_vhat_check(const Trajectory& traj, double x_probe, const Time& T_est, const ProfileContext& ctx,
                       const ModelParams& params) {
  if (traj.samples.size() < 4 || traj.snapshots.empty()) throw ProbeOutOfRange("trajectory too short for a P2 probe");
  const auto& c = ctx.constants;
  P2Report rep;
  rep.x = std::abs(x_probe);
  LocalFrame frame;
  try {
    frame = solve_varrho(rep.x, ctx);
  } catch (const RootBracketFailure& e) {
    throw ProbeOutOfRange(e.what());
  }
  rep.varrho = frame.varrho;
  const Time t_x = T_est + (-rep.varrho);
  rep.t_of_x = t_x.value();
  if (t_x < traj.samples.front().t || traj.samples.back().t < t_x) {
    throw ProbeOutOfRange("t(x) lies outside the simulated time interval");
  }

  // θ as a function of σ = (t - t(x))/ϱ from the sample series.
  std::vector<double> sigma, theta;
  for (const auto& smp : traj.samples) {
    const double sg = (smp.t - t_x) / rep.varrho;
    if (!sigma.empty() && !(sg > sigma.back())) continue;
    sigma.push_back(sg);
    theta.push_back(smp.theta);
  }
  const MonotoneCubic theta_of(sigma, theta);
  rep.theta_tx = theta_of(0.0);
  const double L = std::abs(std::log(rep.varrho));
  rep.xi_max = params.alpha0 * std::sqrt(L);
  rep.delta0 = effective_delta0(params, c);
  const double offset = std::pow(rep.theta_tx * rep.varrho, 1.0 / (c.p - 1.0));
  const double root = std::sqrt(rep.varrho);

  for (const auto& snap : traj.snapshots) {
    const double tau = (snap.t - t_x) / rep.varrho;
    if (tau < 0.0 || tau >= 1.0) continue;
    // Trapezoid rule for ∫_0^τ θ̃/θ(t(x)).
    const int pieces = 400;
    double integral = 0.0;
    for (int k = 0; k < pieces; ++k) {
      const double a = tau * k / pieces;
      const double b = tau * (k + 1) / pieces;
      integral += 0.5 * (b - a) * (theta_of(a) + theta_of(b)) / rep.theta_tx;
    }
    integral = std::clamp(integral, 0.0, tau);
    P2Row row;
    row.tau = tau;
    row.v_hat = v_hat(tau, integral, ctx);
    const auto ur = radial_derivative(snap.x, snap.u);
    const int points = 81;
    for (int k = 0; k < points; ++k) {
      const double xi = -rep.xi_max + 2.0 * rep.xi_max * k / (points - 1);
      const double r = std::abs(rep.x + xi * root);
      const double U = offset * radial_lagrange4(snap.x, snap.u, r);
      const double dev = std::abs(1.0 / (U + offset) - row.v_hat);
      row.deviation = std::max(row.deviation, dev);
      if (2 * k + 1 == points) row.center_deviation = dev;
      const std::size_t i = bracket(snap.x, r);
      const double w = std::clamp((r - snap.x[i]) / (snap.x[i + 1] - snap.x[i]), 0.0, 1.0);
      const double grad = offset * root * std::abs((1.0 - w) * ur[i] + w * ur[i + 1]);
      row.gradient = std::max(row.gradient, grad);
    }
    rep.sup_deviation = std::max(rep.sup_deviation, row.deviation);
    rep.sup_center_deviation = std::max(rep.sup_center_deviation, row.center_deviation);
    rep.sup_gradient = std::max(rep.sup_gradient, row.gradient);
    rep.rows.push_back(row);
  }
  if (rep.rows.empty()) throw ProbeOutOfRange("no snapshot falls in the local time window of the probe");
  rep.gradient_scaled = rep.sup_gradient * std::sqrt(L);
  rep.within_delta0 = rep.sup_deviation <= rep.delta0;
  return rep;
}

ModeHistory mode_history(const Trajectory& traj, const Time& T_est, const ProfileContext& ctx,
                         const ModelParams& params, const GaussHermiteRule& rule, double window_fraction) {
  ModeHistory h;
  h.q2_reference = -(2.0 + ctx.constants.beta);
  std::size_t passes = 0;
  for (const auto& snap : traj.snapshots) {
    if (!(T_est - snap.t > 0.0)) continue;
    const SimilarityFrame f = to_similarity(snap, T_est, ctx);
    ModeRow row;
    row.s = f.s;
    row.dec = decompose(radial_sampled_field(params.dim, f.y, f.q), f.s, params.K0, rule);
    row.report = check_shrinking_set(row.dec, params.A);
    passes += row.report.pass ? 1 : 0;
    h.q1_max = std::max(h.q1_max, row.dec.q1_norm());
    h.rows.push_back(std::move(row));
  }
  if (h.rows.size() < 10) throw FitDegenerate("mode history needs at least 10 similarity frames");
  h.pass_fraction = static_cast<double>(passes) / static_cast<double>(h.rows.size());
  std::vector<double> s, q2;
  for (const auto& r : h.rows) {
    s.push_back(r.s);
    q2.push_back(r.dec.q2_norm());
  }
  try {
    h.q2_fit = power_law_fit(s, q2, window_fraction, 3);
    h.q2_fit_ok = true;
  } catch (const FitDegenerate& e) {
    h.q2_fit_message = e.what();
  }
  return h;
}

}  // namespace quench
