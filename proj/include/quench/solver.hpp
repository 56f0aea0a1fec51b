#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "quench/constants.hpp"
#include "quench/grid.hpp"
#include "quench/profiles.hpp"
#include "quench/time.hpp"

namespace quench {

// θ = (1 + γ ∫_Ω (1+u)^r dx)^{-q} with the grid quadrature.
double compute_theta(std::span<const double> u, const RadialGrid& grid, const ModelParams& params);

// Split right-hand side: diffusion Δu - 2|∇u|²/(1+u) and reaction (1+u)^p,
// so that rhs = diffusion + θ·reaction. The last node carries the Dirichlet
// condition and gets zero in both parts.
struct RhsParts {
  std::vector<double> diffusion;
  std::vector<double> reaction;
};
RhsParts rhs_parts(std::span<const double> u, const RadialGrid& grid, double p);

std::vector<double> rhs(std::span<const double> u, double theta, const RadialGrid& grid, double p);

// Extra source added to the right-hand side (manufactured solutions).
using Forcing = std::function<void(double t, std::span<const double> x, std::span<double> out)>;

struct SolverControls {
  double rel_tol = 1e-6;
  double diffusion_safety = 0.4;  // dt ≤ safety · h_min² / (2N)
  double reaction_safety = 0.05;  // dt ≤ safety / (p θ (1+u_max)^{p-1})
  double underflow_factor = 1e-18;
  bool diffusion = true;          // off: pure reaction at every node
  Forcing forcing;
};

struct SolverState {
  Time t;
  std::vector<double> u;
  double theta = 1.0;
  double dt = 0.0;
  long step_count = 0;
  long rejected = 0;
  // Right-hand-side parts at u, reused by the next step while valid.
  RhsParts cache;
  bool cache_valid = false;
};

// τ = [(p-1) θ (1+u_max)^{p-1}]^{-1}, the local reaction time, ≈ T - t.
double reaction_time(double theta, double u_max, double p);

double max_value(std::span<const double> u);

// Advances by one accepted Bogacki-Shampine 3(2) step. θ is frozen over the
// step at its pre-step value and recomputed afterwards. The proposed dt is
// cut to the diffusion and reaction limits before any attempt.
void step(SolverState& state, const RadialGrid& grid, const ModelParams& params, double p,
          const SolverControls& controls);

// Prepared initial data: the rescaled profile plus the (d0, d1) directions in
// the blow-up zone, H* outside. The radial solver carries the angular average
// of d1·y, which is zero.
std::vector<double> build_initial_data(double d0, double d1, double T, double theta0,
                                       const ProfileContext& ctx, const ModelParams& params,
                                       const RadialGrid& grid);

struct Theta0Result {
  double theta0 = 0.0;
  int iterations = 0;
  double residual = 0.0;  // |Φ(θ0) - θ0|
};

// Fixed point θ0 = Φ(θ0), Φ(ξ) = (1 + γ ∫ (1 + u_ξ)^r)^{-q} where u_ξ is the
// initial data built with ξ. Damped iteration from θ∞/|log T|^β.
Theta0Result solve_theta0(double d0, double d1, double T, const ProfileContext& ctx,
                          const ModelParams& params, const RadialGrid& grid, int max_iterations = 1000);

struct TrajectorySample {
  Time t;
  double theta = 0.0;
  double u_max = 0.0;
  double u_center = 0.0;
  double dt = 0.0;
  double tau = 0.0;
  double norm_r = 0.0;             // ∫(1+u)^r
  double grad_integral = 0.0;      // ∫|∇u|²(1+u)^{r-2}
  double reaction_integral = 0.0;  // ∫(1+u)^{p+r-1}
  long step = 0;
};

struct Snapshot {
  Time t;
  double theta = 0.0;
  double u_max = 0.0;
  std::vector<double> x;
  std::vector<double> u;
};

enum class Termination { quench, time_limit, step_underflow, step_limit, theta_increase };
std::string to_string(Termination reason);

struct Trajectory {
  std::vector<TrajectorySample> samples;
  std::vector<Snapshot> snapshots;
  Termination reason = Termination::time_limit;
  double theta0 = 0.0;
  double T_nominal = 0.0;
  long steps = 0;
  long rejected = 0;
  int regrids = 0;
  bool argmax_at_origin = true;   // at every snapshot
  bool theta_monotone = true;     // nonincreasing after the transient
  bool theta_strict = true;       // strictly decreasing after the transient
  std::string theta_violation;
};

struct RunOptions {
  double T = 1e-6;
  double d0 = 0.0;
  double d1 = 0.0;
  int cells = 2000;
  int core_cells = 200;
  double max_ratio = 1.2;
  double U_stop = 1e6;
  double t_max = 1.0;
  long max_steps = 5'000'000;
  double sample_ds = 0.02;     // spacing of trajectory samples in -log τ
  double snapshot_ds = 0.25;   // spacing of profile snapshots in -log τ
  double transient_fraction = 0.01;
  bool regrid = true;
  bool use_full_amplitude = true;  // H* built with theta_inf_full
  bool abort_on_theta_increase = true;
  bool mode_damping = false;    // re-project q0 to zero every damping_ds in -log τ
  double damping_ds = 1.0;
  SolverControls controls;
};

// Builds the prepared data (θ0 fixed point, then the initial profile) and
// evolves it until quench, t_max, the step limit or a step-size underflow.
Trajectory run_until_quench(const ModelParams& params, const RunOptions& options);

// The time loop on its own, from an arbitrary state. Regridding (if enabled)
// keeps the uniform core four times wider than √(τ|log τ|).
Trajectory evolve(const ModelParams& params, const RunOptions& options, RadialGrid grid, SolverState state,
                  const ProfileContext* ctx = nullptr);

struct TEstimate {
  Time T;
  double gap = 0.0;        // T_est - t_final
  double tau_final = 0.0;
  double slope = 0.0;      // dτ/dt, ideally -1
  double rms = 0.0;
  std::size_t count = 0;
};

// Fits τ(t) linearly over the last decade of u_max growth, weighting by 1/τ²
// in coordinates relative to the final sample, and returns the root.
// Throws FitDegenerate with fewer than 10 samples in the window.
TEstimate estimate_T(const Trajectory& traj);

}  // namespace quench
