#include "quench/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "quench/cutoff.hpp"
#include "quench/error.hpp"
#include "quench/fit.hpp"
#include "quench/interp.hpp"
#include "quench/spectral.hpp"

namespace quench {

double compute_theta(std::span<const double> u, const RadialGrid& grid, const ModelParams& params) {
  if (params.gamma == 0.0) return 1.0;
  const auto w = grid.weights();
  double integral = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!std::isfinite(u[i])) throw NonFiniteIntegrand("non-finite value in u");
    integral += w[i] * std::pow(1.0 + u[i], params.r);
  }
  if (!std::isfinite(integral)) throw NonFiniteIntegrand("nonlocal integral overflowed");
  return std::pow(1.0 + params.gamma * integral, -params.q);
}

RhsParts rhs_parts(std::span<const double> u, const RadialGrid& grid, double p) {
  const auto x = grid.nodes();
  const std::size_t n = x.size();
  const double dim = grid.dim();
  RhsParts out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  {
    const double h = x[1];
    out.diffusion[0] = dim * 2.0 * (u[1] - u[0]) / (h * h);
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double hm = x[i] - x[i - 1];
    const double hp = x[i + 1] - x[i];
    const double fwd = (u[i + 1] - u[i]) / hp;
    const double bwd = (u[i] - u[i - 1]) / hm;
    const double urr = 2.0 * (fwd - bwd) / (hm + hp);
    const double ur = (hm * fwd + hp * bwd) / (hm + hp);
    out.diffusion[i] = urr + (dim - 1.0) / x[i] * ur - 2.0 * ur * ur / (1.0 + u[i]);
  }
  for (std::size_t i = 0; i + 1 < n; ++i) out.reaction[i] = std::pow(1.0 + u[i], p);
  return out;
}

std::vector<double> rhs(std::span<const double> u, double theta, const RadialGrid& grid, double p) {
  RhsParts parts = rhs_parts(u, grid, p);
  for (std::size_t i = 0; i < u.size(); ++i) parts.diffusion[i] += theta * parts.reaction[i];
  return parts.diffusion;
}

double reaction_time(double theta, double u_max, double p) {
  return 1.0 / ((p - 1.0) * theta * std::pow(1.0 + u_max, p - 1.0));
}

double max_value(std::span<const double> u) { return *std::max_element(u.begin(), u.end()); }

namespace {

// Right-hand side with the controls applied (diffusion switch, forcing).
void evaluate(std::span<const double> u, double theta, double t, const RadialGrid& grid, double p,
              const SolverControls& controls, RhsParts& parts, std::vector<double>& k) {
  const std::size_t n = u.size();
  if (controls.diffusion) {
    parts = rhs_parts(u, grid, p);
  } else {
    parts.diffusion.assign(n, 0.0);
    parts.reaction.resize(n);
    for (std::size_t i = 0; i < n; ++i) parts.reaction[i] = std::pow(1.0 + u[i], p);
  }
  k.resize(n);
  for (std::size_t i = 0; i < n; ++i) k[i] = parts.diffusion[i] + theta * parts.reaction[i];
  if (controls.forcing) {
    std::vector<double> extra(n, 0.0);
    controls.forcing(t, grid.nodes(), extra);
    for (std::size_t i = 0; i + 1 < n; ++i) k[i] += extra[i];
  }
}

}  // namespace

void step(SolverState& state, const RadialGrid& grid, const ModelParams& params, double p,
          const SolverControls& controls) {
  const std::size_t n = state.u.size();
  if (n != grid.size()) throw DomainError("state does not match the grid");
  const double theta = state.theta;
  const double u_max = max_value(state.u);
  const double tau = reaction_time(theta, u_max, p);
  double dt_limit = controls.reaction_safety / (p * theta * std::pow(1.0 + u_max, p - 1.0));
  if (controls.diffusion) {
    dt_limit = std::min(dt_limit, controls.diffusion_safety * grid.h_min() * grid.h_min() / (2.0 * grid.dim()));
  }
  double dt = state.dt > 0.0 ? std::min(state.dt, dt_limit) : dt_limit;

  const double t0 = state.t.value();
  std::vector<double> k1, k2, k3, k4, stage(n), u1(n);
  RhsParts scratch, parts4;
  if (state.cache_valid && !controls.forcing) {
    k1.resize(n);
    for (std::size_t i = 0; i < n; ++i) k1[i] = state.cache.diffusion[i] + theta * state.cache.reaction[i];
  } else {
    evaluate(state.u, theta, t0, grid, p, controls, scratch, k1);
  }

  while (true) {
    if (!(dt >= controls.underflow_factor * tau)) {
      std::ostringstream msg;
      msg << "step size " << dt << " fell below " << controls.underflow_factor << " of the reaction time " << tau;
      throw StepSizeUnderflow(msg.str());
    }
    for (std::size_t i = 0; i < n; ++i) stage[i] = state.u[i] + 0.5 * dt * k1[i];
    evaluate(stage, theta, t0 + 0.5 * dt, grid, p, controls, scratch, k2);
    for (std::size_t i = 0; i < n; ++i) stage[i] = state.u[i] + 0.75 * dt * k2[i];
    evaluate(stage, theta, t0 + 0.75 * dt, grid, p, controls, scratch, k3);
    for (std::size_t i = 0; i < n; ++i) {
      u1[i] = state.u[i] + dt * (2.0 / 9.0 * k1[i] + 1.0 / 3.0 * k2[i] + 4.0 / 9.0 * k3[i]);
    }
    if (controls.diffusion) u1[n - 1] = 0.0;
    evaluate(u1, theta, t0 + dt, grid, p, controls, parts4, k4);

    double err = 0.0;
    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = dt * (-5.0 / 72.0 * k1[i] + 1.0 / 12.0 * k2[i] + 1.0 / 9.0 * k3[i] - 1.0 / 8.0 * k4[i]);
      const double scale = controls.rel_tol * (1.0 + std::max(std::abs(state.u[i]), std::abs(u1[i])));
      err = std::max(err, std::abs(e) / scale);
      finite = finite && std::isfinite(u1[i]) && u1[i] > -1.0;
    }
    if (finite && err <= 1.0) {
      state.u.swap(u1);
      state.t += dt;
      state.theta = compute_theta(state.u, grid, params);
      state.cache = std::move(parts4);
      state.cache_valid = true;
      ++state.step_count;
      const double grow = err > 0.0 ? 0.9 * std::pow(err, -1.0 / 3.0) : 5.0;
      state.dt = dt * std::clamp(grow, 0.2, 5.0);
      return;
    }
    ++state.rejected;
    const double shrink = finite ? 0.9 * std::pow(err, -1.0 / 3.0) : 0.25;
    dt *= std::clamp(shrink, 0.1, 0.9);
  }
}

std::vector<double> build_initial_data(double d0, double d1, double T, double theta0,
                                       const ProfileContext& ctx, const ModelParams& params,
                                       const RadialGrid& grid) {
  if (std::abs(d0) > 2.0 || std::abs(d1) > 2.0) throw DomainError("|d0|, |d1| must be <= 2");
  if (!(T > 0.0) || T > 1e-2) throw DomainError("initial data needs 0 < T <= 1e-2");
  if (!(theta0 > 0.0)) throw DomainError("initial data needs theta0 > 0");
  const auto& c = ctx.constants;
  const double L = std::abs(std::log(T));
  const double pref = std::pow(theta0 * T, -1.0 / (c.p - 1.0));
  const double bump = d0 * std::pow(params.A, 3) / std::pow(L, 1.5);
  const double chi1_scale = params.K0 * std::sqrt(T) * std::pow(L, (c.p + 1.0) / 4.0);
  const double z_scale = params.K0 / 32.0;

  const auto x = grid.nodes();
  std::vector<double> u(x.size(), 0.0);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double chi1 = chi0(x[i] / chi1_scale);
    double value = 0.0;
    if (chi1 > 0.0) {
      const double z0 = x[i] / std::sqrt(T * L);
      const double inner = profile_phi(x[i] / std::sqrt(T), L, ctx) + bump * chi0(z0 / z_scale);
      value += pref * inner * chi1;
    }
    if (chi1 < 1.0) value += final_profile_H(x[i], ctx) * (1.0 - chi1);
    u[i] = value;
  }
  return u;
}

Theta0Result solve_theta0(double d0, double d1, double T, const ProfileContext& ctx,
                          const ModelParams& params, const RadialGrid& grid, int max_iterations) {
  const auto& c = ctx.constants;
  const double amplitude = ctx.theta_amplitude > 0.0 ? ctx.theta_amplitude : c.theta_inf;
  auto phi = [&](double xi) {
    return compute_theta(build_initial_data(d0, d1, T, xi, ctx, params, grid), grid, params);
  };
  double xi = amplitude / std::pow(std::abs(std::log(T)), c.beta);
  double f = phi(xi);
  double prev_xi = 0.0;
  double prev_f = 0.0;
  double relax = 1.0;
  for (int it = 1; it <= max_iterations; ++it) {
    if (it > 1 && xi != prev_xi) {
      // Secant estimate of Φ' gives the relaxation that cancels it to first order.
      const double slope = (f - prev_f) / (xi - prev_xi);
      if (std::isfinite(slope) && slope < 0.9) relax = std::clamp(1.0 / (1.0 - slope), 0.1, 10.0);
    }
    const double next = xi + relax * (f - xi);
    if (!(next > 0.0) || !std::isfinite(next)) throw Theta0NotConverged("theta0 iteration left (0, ∞)");
    prev_xi = xi;
    prev_f = f;
    const double change = std::abs(next - xi);
    xi = next;
    f = phi(xi);
    if (change <= 1e-10 * prev_xi) return {xi, it, std::abs(f - xi)};
  }
  throw Theta0NotConverged("theta0 fixed point did not converge");
}

std::string to_string(Termination reason) {
  switch (reason) {
    case Termination::quench: return "quench";
    case Termination::time_limit: return "time_limit";
    case Termination::step_underflow: return "step_underflow";
    case Termination::step_limit: return "step_limit";
    case Termination::theta_increase: return "theta_increase";
  }
  return "unknown";
}

namespace {

TrajectorySample make_sample(const SolverState& state, const RadialGrid& grid, const ModelParams& params,
                             double p) {
  TrajectorySample s;
  s.t = state.t;
  s.theta = state.theta;
  s.u_max = max_value(state.u);
  s.u_center = state.u.front();
  s.dt = state.dt;
  s.tau = reaction_time(state.theta, s.u_max, p);
  s.step = state.step_count;
  const auto w = grid.weights();
  const auto ur = radial_derivative(grid.nodes(), state.u);
  for (std::size_t i = 0; i < state.u.size(); ++i) {
    const double v = 1.0 + state.u[i];
    const double vr = std::pow(v, params.r);
    s.norm_r += w[i] * vr;
    s.grad_integral += w[i] * ur[i] * ur[i] * vr / (v * v);
    s.reaction_integral += w[i] * vr * std::pow(v, p - 1.0);
  }
  return s;
}

Snapshot make_snapshot(const SolverState& state, const RadialGrid& grid, double p) {
  (void)p;
  const auto x = grid.nodes();
  return Snapshot{state.t, state.theta, max_value(state.u), std::vector<double>(x.begin(), x.end()), state.u};
}

double length_scale(double tau) { return std::sqrt(tau * std::abs(std::log(tau))); }

// Removes the q0 component of the similarity deviation, using τ for T - t.
void damp_q0(SolverState& state, const RadialGrid& grid, const ProfileContext& ctx, const ModelParams& params,
             const GaussHermiteRule& rule, double tau) {
  const auto& c = ctx.constants;
  const double s = -std::log(tau);
  const double scale = std::pow(state.theta * tau, 1.0 / (c.p - 1.0));
  const auto x = grid.nodes();
  std::vector<double> y(x.size()), q(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = x[i] / std::sqrt(tau);
    q[i] = scale * state.u[i] - profile_phi(y[i], s, ctx);
  }
  const ModeDecomposition dec = decompose(radial_sampled_field(grid.dim(), y, q), s, params.K0, rule);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    state.u[i] -= dec.q0 * cutoff_chi_radial(y[i], s, params.K0) / scale;
  }
  state.theta = compute_theta(state.u, grid, params);
  state.cache_valid = false;
}

}  // namespace

Trajectory run_until_quench(const ModelParams& params, const RunOptions& options) {
  const DerivedConstants c = derive_constants(params);
  ProfileContext ctx = make_profile_context(params, c, options.T);
  if (options.use_full_amplitude) ctx.theta_amplitude = c.theta_inf_full;

  if (options.t_max <= 0.0) {
    Trajectory traj;
    traj.T_nominal = options.T;
    traj.reason = Termination::time_limit;
    return traj;
  }
  RadialGrid grid = RadialGrid::refined(length_scale(options.T), options.core_cells, options.cells, params.radius,
                                        params.dim, options.max_ratio);
  const Theta0Result th0 = solve_theta0(options.d0, options.d1, options.T, ctx, params, grid);
  SolverState state;
  state.u = build_initial_data(options.d0, options.d1, options.T, th0.theta0, ctx, params, grid);
  Trajectory traj = evolve(params, options, std::move(grid), std::move(state), &ctx);
  traj.theta0 = th0.theta0;
  return traj;
}

Trajectory evolve(const ModelParams& params, const RunOptions& options, RadialGrid grid, SolverState state,
                  const ProfileContext* ctx) {
  const double p = params.pbar + 2.0;
  Trajectory traj;
  traj.T_nominal = options.T;
  if (options.t_max <= 0.0) {
    traj.reason = Termination::time_limit;
    return traj;
  }
  if (options.mode_damping && ctx == nullptr) throw DomainError("mode damping needs a profile context");
  state.theta = compute_theta(state.u, grid, params);
  state.cache_valid = false;

  auto argmax_ok = [&]() {
    const auto it = std::max_element(state.u.begin(), state.u.end());
    return it == state.u.begin();
  };

  double tau = reaction_time(state.theta, max_value(state.u), p);
  double grid_scale = length_scale(std::min(tau, 0.1));
  double next_sample = -std::log(tau) + options.sample_ds;
  double next_snapshot = -std::log(tau) + options.snapshot_ds;
  double next_damping = -std::log(tau) + options.damping_ds;
  traj.samples.push_back(make_sample(state, grid, params, p));
  traj.snapshots.push_back(make_snapshot(state, grid, p));
  traj.argmax_at_origin = argmax_ok();
  std::unique_ptr<GaussHermiteRule> rule;
  if (options.mode_damping) rule = std::make_unique<GaussHermiteRule>(GaussHermiteRule::for_dim(params.dim));

  const Time t_start = state.t;
  const double transient_end = options.transient_fraction * options.T;
  double last_theta = state.theta;

  while (true) {
    if (max_value(state.u) >= options.U_stop) {
      traj.reason = Termination::quench;
      break;
    }
    const double remaining = options.t_max - state.t.value();
    if (remaining <= 0.0) {
      traj.reason = Termination::time_limit;
      break;
    }
    if (state.step_count >= options.max_steps) {
      traj.reason = Termination::step_limit;
      break;
    }
    if (state.dt <= 0.0 || state.dt > remaining) state.dt = remaining;
    try {
      step(state, grid, params, p, options.controls);
    } catch (const StepSizeUnderflow&) {
      traj.reason = Termination::step_underflow;
      break;
    }
    const double u_max = max_value(state.u);
    tau = reaction_time(state.theta, u_max, p);
    const double s_est = -std::log(tau);

    if (options.mode_damping && s_est >= next_damping) {
      damp_q0(state, grid, *ctx, params, *rule, tau);
      while (next_damping <= s_est) next_damping += options.damping_ds;
    }

    const bool done = u_max >= options.U_stop;
    if (s_est >= next_sample || done) {
      traj.samples.push_back(make_sample(state, grid, params, p));
      while (next_sample <= s_est) next_sample += options.sample_ds;
      if (state.t - t_start > transient_end) {
        traj.theta_strict = traj.theta_strict && state.theta < last_theta;
        if (state.theta > last_theta) {
          traj.theta_monotone = false;
          std::ostringstream msg;
          msg << "theta rose from " << last_theta << " to " << state.theta << " at t = " << state.t.value();
          traj.theta_violation = msg.str();
          if (options.abort_on_theta_increase) {
            traj.reason = Termination::theta_increase;
            break;
          }
        }
      }
      last_theta = state.theta;
    }
    if (s_est >= next_snapshot || done) {
      traj.snapshots.push_back(make_snapshot(state, grid, p));
      traj.argmax_at_origin = traj.argmax_at_origin && argmax_ok();
      while (next_snapshot <= s_est) next_snapshot += options.snapshot_ds;
    }

    if (options.regrid && !done && length_scale(tau) < 0.5 * grid_scale) {
      grid_scale = length_scale(tau);
      RadialGrid fine = RadialGrid::refined(grid_scale, options.core_cells, options.cells, params.radius,
                                            params.dim, options.max_ratio);
      const auto xo = grid.nodes();
      const MonotoneCubic interp(std::vector<double>(xo.begin(), xo.end()), state.u, 0.0);
      const auto xn = fine.nodes();
      std::vector<double> u(xn.size());
      for (std::size_t i = 0; i < xn.size(); ++i) u[i] = interp(xn[i]);
      if (options.controls.diffusion) u.back() = 0.0;
      state.u = std::move(u);
      grid = std::move(fine);
      state.theta = compute_theta(state.u, grid, params);
      state.cache_valid = false;
      ++traj.regrids;
    }
  }
  if (traj.samples.back().step != state.step_count) traj.samples.push_back(make_sample(state, grid, params, p));
  if (traj.snapshots.back().t - state.t != 0.0) {
    traj.snapshots.push_back(make_snapshot(state, grid, p));
    traj.argmax_at_origin = traj.argmax_at_origin && argmax_ok();
  }
  traj.steps = state.step_count;
  traj.rejected = state.rejected;
  return traj;
}

TEstimate estimate_T(const Trajectory& traj) {
  if (traj.samples.empty()) throw FitDegenerate("empty trajectory");
  const TrajectorySample& last = traj.samples.back();
  if (!(last.u_max >= 1e3)) throw FitDegenerate("trajectory did not reach u_max >= 1e3");
  const double floor = last.u_max / 10.0;
  std::vector<double> x, y, w;
  for (const auto& s : traj.samples) {
    if (s.u_max < floor) continue;
    x.push_back(s.t - last.t);
    y.push_back(s.tau);
    w.push_back(1.0 / (s.tau * s.tau));
  }
  if (x.size() < 10) throw FitDegenerate("fewer than 10 samples in the last decade of u_max");
  const LinearFit fit = weighted_linear_fit(x, y, w, 10);
  if (!(fit.slope < 0.0)) throw FitDegenerate("τ(t) is not decreasing in the fit window");
  TEstimate est;
  est.gap = -fit.intercept / fit.slope;
  est.T = last.t + est.gap;
  est.tau_final = last.tau;
  est.slope = fit.slope;
  est.rms = fit.rms;
  est.count = fit.count;
  return est;
}

}  // namespace quench
