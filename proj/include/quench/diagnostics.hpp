#pragma once

#include <span>
#include <string>
#include <vector>

#include "quench/constants.hpp"
#include "quench/profiles.hpp"
#include "quench/solver.hpp"
#include "quench/spectral.hpp"
#include "quench/time.hpp"

namespace quench {

struct SimilarityFrame {
  double s = 0.0;
  double gap = 0.0;  // T_est - t
  std::vector<double> y;
  std::vector<double> W;
  std::vector<double> q;
};

// s = -log(T-t), y = x/√(T-t), W = (θ(T-t))^{1/(p-1)} u, q = W - φ(y, s).
// Throws DomainError when t >= T_est.
SimilarityFrame to_similarity(const Snapshot& snap, const Time& T_est, const ProfileContext& ctx);

struct ProfileError {
  double s = 0.0;
  double error = 0.0;        // sup over the ball
  double scaled = 0.0;       // √s · error
  double inner_error = 0.0;  // sup over |y| <= K0 √s
};

// Sup of |(θ∞(T-t)/s^β)^{1/(p-1)} (1+u) - (p-1 + b|x|²/((T-t)s))^{-1/(p-1)}|,
// with θ∞ taken from ctx.theta_amplitude.
ProfileError intermediate_profile_error(const Snapshot& snap, const Time& T_est, const ProfileContext& ctx);

struct LawFit {
  double exponent_emp = 0.0;
  double amplitude_emp = 0.0;  // log-amplitude (intercept)
  double residual = 0.0;       // RMS in log-log coordinates
  double s_lo = 0.0;
  double s_hi = 0.0;
  std::size_t count = 0;
};

// log value = amplitude + exponent · log s over the last window_fraction of
// the s range. Throws FitDegenerate below min_count points.
LawFit power_law_fit(std::span<const double> s, std::span<const double> value, double window_fraction,
                     std::size_t min_count);

// θ against |log(T_est - t)| on samples with u_max >= 100.
LawFit theta_law_fit(const Trajectory& traj, const Time& T_est, double window_fraction = 0.4);

struct ThetaPrimeResidual {
  std::vector<double> s;
  std::vector<double> residual;
  std::vector<bool> late;  // inside the fit window; earlier points are pre-asymptotic
  double late_max = 0.0;
  double late_median = 0.0;
};

// Relative deviation of the centered-difference θ' from
//   -r q γ θ^{1+1/q-N/2} (T-t)^{-1} |log(T-t)|^{N/2} · area · ∫_0^∞ φ_b^{p-1+r} ξ^{N-1} dξ,
// where area multiplies the radial bubble integral (|S^{N-1}| or 1).
// gap[i] = T - t_i must be strictly decreasing.
ThetaPrimeResidual theta_prime_residual(std::span<const double> gap, std::span<const double> theta,
                                        const ModelParams& params, const DerivedConstants& c, double area,
                                        double window_fraction = 0.4);
ThetaPrimeResidual theta_prime_residual(const Trajectory& traj, const Time& T_est, const ModelParams& params,
                                        const DerivedConstants& c, double area, double window_fraction = 0.4);

struct EnergyIdentity {
  std::vector<double> s;          // -log τ at the sample
  std::vector<double> relative;   // |d/dt ∫(1+u)^r - rhs| / |rhs|
  double tolerance = 0.0;
  double pass_fraction = 0.0;
  double median = 0.0;
  double max = 0.0;
};

// Nonuniform centered difference of ∫(1+u)^r along the samples against
//   -r(r+1) ∫|∇u|²(1+u)^{r-2} + r θ ∫(1+u)^{p+r-1}.
// Needs at least three samples with strictly increasing times.
EnergyIdentity energy_identity_check(const Trajectory& traj, const ModelParams& params, double tolerance = 0.02);

struct AnnulusRatio {
  double x_lo = 0.0;
  double x_hi = 0.0;
  double ratio = 0.0;  // mean over the nodes inside
  double ratio_min = 0.0;
  double ratio_max = 0.0;
  std::size_t nodes = 0;
};

// (1+u(x, t_f)) [θ∞ b |x|²/(2|log|x||)^{1+β}]^{1/(p-1)} averaged over
// logarithmically spaced annuli of [K0 √((T-t_f)|log(T-t_f)|), ε0].
std::vector<AnnulusRatio> final_profile_check(const Snapshot& last, const Time& T_est, const ProfileContext& ctx,
                                              double eps0, int annuli = 6);

struct P2Row {
  double tau = 0.0;
  double deviation = 0.0;  // sup over ξ of |V - V̂|
  double center_deviation = 0.0;  // |V - V̂| at ξ = 0
  double gradient = 0.0;   // sup over ξ of |∇_ξ U|
  double v_hat = 0.0;
};

struct P2Report {
  double x = 0.0;
  double varrho = 0.0;
  double t_of_x = 0.0;
  double theta_tx = 0.0;
  double xi_max = 0.0;
  std::vector<P2Row> rows;
  double sup_deviation = 0.0;
  double sup_center_deviation = 0.0;
  double sup_gradient = 0.0;
  double gradient_scaled = 0.0;  // sup_gradient · √|log ϱ|
  double delta0 = 0.0;
  bool within_delta0 = false;
};

// Compares V = 1/(U + (θ(t(x))ϱ)^{1/(p-1)}) with V̂ on the snapshots with
// τ = (t - t(x))/ϱ in [0, 1), over |ξ| <= α0 √|log ϱ| along the radial line.
// Throws ProbeOutOfRange when t(x) lies outside the trajectory.
P2Report p2_vhat_check(const Trajectory& traj, double x_probe, const Time& T_est, const ProfileContext& ctx,
                       const ModelParams& params);

// Probe position whose t(x) equals the given time.
double p2_probe_for_time(const Time& t, const Time& T_est, double K0);

struct ModeRow {
  double s = 0.0;
  ModeDecomposition dec;
  ShrinkingSetReport report;
};

struct ModeHistory {
  std::vector<ModeRow> rows;
  LawFit q2_fit;
  bool q2_fit_ok = false;
  std::string q2_fit_message;
  double q2_reference = 0.0;  // -(2+β)
  double q1_max = 0.0;
  double pass_fraction = 0.0;
};

// Decomposes every snapshot before T_est. Needs at least 10 frames.
ModeHistory mode_history(const Trajectory& traj, const Time& T_est, const ProfileContext& ctx,
                         const ModelParams& params, const GaussHermiteRule& rule, double window_fraction = 0.4);

}  // namespace quench
