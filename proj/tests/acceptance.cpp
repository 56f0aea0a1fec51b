// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "quench/cli.hpp"
#include "quench/constants.hpp"
#include "quench/diagnostics.hpp"
#include "quench/error.hpp"
#include "quench/oracles.hpp"
#include "quench/profiles.hpp"
#include "quench/solver.hpp"
#include "quench/spectral.hpp"

using namespace quench;

namespace {

int failures = 0;

void report(int id, const char* title, bool pass, const std::string& detail) {
  std::printf("%s criterion %2d  %-28s %s\n", pass ? "PASS" : "FAIL", id, title, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string describe(const OracleResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s %.3g (limit %.3g, %.3f s)", r.name.c_str(), r.measured, r.tolerance, r.seconds);
  return buf;
}

}  // namespace

int main() {
  {
    const OracleResult r = oracle_bubble();
    report(1, "bubble integral", r.pass && r.seconds < 1.0, describe(r));
  }
  {
    const OracleResult o = oracle_hermite_orthogonality();
    const OracleResult e = oracle_hermite_eigen();
    report(2, "hermite suite", o.pass && e.pass && o.seconds + e.seconds < 5.0, describe(o) + "; " + describe(e));
  }
  {
    const OracleResult r = oracle_phi_b();
    report(3, "phi_b identity", r.pass && r.seconds < 1.0, describe(r));
  }
  {
    const OracleResult a = oracle_varrho_asymptotics();
    const OracleResult t = oracle_varrho_roundtrip();
    report(4, "varrho asymptotics", a.pass && t.pass && a.seconds + t.seconds < 1.0,
           describe(a) + "; " + describe(t));
  }
  {
    const OracleResult m = oracle_manufactured();
    const OracleResult s = oracle_scalar_ode();
    const double rel = s.measured * 3.0;  // error of T_est relative to 1/3
    report(5, "solver convergence", m.pass && rel <= 1e-6 && m.seconds + s.seconds < 60.0,
           describe(m) + "; scalar ODE relative error " + fmt("%.3g", rel));
  }

  // The end-to-end default run feeds criteria 6 to 11.
  const RunConfig config;
  const RunRecord run = execute_run(config);
  const Trajectory& tr = run.trajectory;
  const RunDiagnostics& d = run.diagnostics;
  const DerivedConstants c = derive_constants(to_model_params(config));
  const bool usable = run.error.empty() && d.available;
  std::printf("      default run: %s, %ld steps, %zu snapshots, %.1f s%s%s\n", to_string(tr.reason).c_str(), tr.steps,
              tr.snapshots.size(), run.wall_seconds, run.error.empty() ? "" : ", error: ", run.error.c_str());
  for (const auto& e : d.errors) std::printf("      diagnostic error: %s\n", e.c_str());

  if (usable && d.energy) {
    report(6, "energy identity", d.energy->pass_fraction >= 0.95,
           fmt("pass fraction %.3f at 2%%", d.energy->pass_fraction) + fmt(", median %.2g", d.energy->median) +
               fmt(", max %.2g", d.energy->max));
  } else {
    report(6, "energy identity", false, "no energy diagnostic");
  }

  report(7, "end-to-end quench",
         run.error.empty() && tr.reason == Termination::quench && run.wall_seconds < 600.0 && tr.argmax_at_origin &&
             tr.theta_strict,
         "reason " + to_string(tr.reason) + fmt(", %.1f s", run.wall_seconds) +
             (tr.argmax_at_origin ? ", argmax at origin" : ", argmax left the origin") +
             (tr.theta_strict ? ", theta strictly decreasing" : ", theta not strictly decreasing: " + tr.theta_violation));

  {
    const OracleResult synthetic = oracle_theta_law();
    bool pass = synthetic.pass && synthetic.measured <= 1e-6;
    std::string detail = describe(synthetic);
    if (usable && d.theta_law && d.theta_prime) {
      const double slope = d.theta_law->exponent_emp;
      const bool in_band = slope >= -1.3 * c.beta && slope <= -0.7 * c.beta;
      const bool residual_ok = d.theta_prime->late_max <= 0.5;
      pass = pass && in_band && residual_ok;
      detail += fmt("; run slope %.4f", slope) + fmt(" against [%.4f,", -1.3 * c.beta) +
                fmt(" %.4f]", -0.7 * c.beta) + fmt("; theta' late max %.3f", d.theta_prime->late_max);
    } else {
      pass = false;
      detail += "; no theta law on the run";
    }
    report(8, "theta law", pass, detail);
  }

  if (usable && d.profile) {
    const auto& p = *d.profile;
    const bool pass = p.first_s >= 8.0 && p.decrease >= 0.3 && !p.tail_monotone_growth;
    report(9, "intermediate profile", pass,
           fmt("E %.4g", p.first_error) + fmt(" at s %.2f", p.first_s) + fmt(" -> %.4g", p.final_error) +
               fmt(" at s %.2f", p.final_s) + fmt(", decrease %.3f", p.decrease) +
               fmt("; tail sqrt(s)E in [%.3f,", p.tail_scaled_min) + fmt(" %.3f]", p.tail_scaled_max) +
               (p.tail_monotone_growth ? ", grows monotonically" : ", no monotone growth"));
  } else {
    report(9, "intermediate profile", false, "no profile diagnostic");
  }

  if (usable && !d.annuli.empty()) {
    const auto& a = d.annuli.front();
    report(10, "final profile", a.ratio_min >= 0.5 && a.ratio_max <= 2.0,
           fmt("innermost annulus [%.3g,", a.x_lo) + fmt(" %.3g]", a.x_hi) + fmt(": ratios %.3f", a.ratio_min) +
               fmt(" .. %.3f", a.ratio_max) + fmt(", mean %.3f", a.ratio));
  } else {
    report(10, "final profile", false, "no admissible annulus");
  }

  {
    const OracleResult synthetic = oracle_q2_law();
    bool pass = synthetic.pass && synthetic.measured <= 0.05;
    std::string detail = describe(synthetic);
    if (usable && d.modes && d.modes->q2_fit_ok) {
      const double e = d.modes->q2_fit.exponent_emp;
      pass = pass && e <= -1.5 && d.modes->q1_max <= 1e-8;
      detail += fmt("; run q2 exponent %.3f", e) + fmt(" (reference %.3f)", d.modes->q2_reference) +
                fmt("; max |q1| %.2g", d.modes->q1_max);
    } else {
      pass = false;
      detail += "; no mode history on the run";
    }
    report(11, "mode dynamics", pass, detail);
  }

  {
    const double T = 1e-6;
    const ModelParams params = to_model_params(config);
    ProfileContext ctx = make_profile_context(params, c, T);
    ctx.theta_amplitude = c.theta_inf_full;
    const RunOptions options = to_run_options(config);
    const double h = std::sqrt(T * std::abs(std::log(T)));
    const RadialGrid g = RadialGrid::refined(h, options.core_cells, options.cells, params.radius, params.dim,
                                             options.max_ratio);
    try {
      const Theta0Result r = solve_theta0(0.0, 0.0, T, ctx, params, g);
      const double L = std::pow(std::abs(std::log(T)), c.beta);
      const double ratio = r.theta0 * L / c.theta_inf;
      const double ratio_full = r.theta0 * L / c.theta_inf_full;
      const bool pass = r.iterations <= 100 && r.residual <= 1e-9 * r.theta0 && ratio >= 0.7 && ratio <= 1.3;
      report(12, "theta0 fixed point", pass,
             fmt("theta0 %.6g", r.theta0) + fmt(", %.0f iterations", r.iterations) +
                 fmt(", residual %.2g", r.residual / r.theta0) + fmt(" theta0; ratio %.4f", ratio) +
                 fmt(" (with |S^{N-1}| in the amplitude: %.4f)", ratio_full));
    } catch (const Error& e) {
      report(12, "theta0 fixed point", false, e.what());
    }
  }

  // Not a criterion: the same laws on a deeper run, T = 1e-20 with U_stop = 1e10.
  {
    RunConfig deep;
    deep.T = 1e-20;
    deep.U_stop = 1e10;
    const RunRecord r = execute_run(deep);
    const auto& dd = r.diagnostics;
    if (r.error.empty() && dd.theta_law && dd.modes && dd.modes->q2_fit_ok) {
      std::printf("INFO  deep run T=1e-20 U_stop=1e10: theta slope %.4f, q2 exponent %.3f, %.1f s\n",
                  dd.theta_law->exponent_emp, dd.modes->q2_fit.exponent_emp, r.wall_seconds);
    } else {
      std::printf("INFO  deep run T=1e-20 U_stop=1e10: no laws (%s)\n",
                  r.error.empty() ? to_string(r.trajectory.reason).c_str() : r.error.c_str());
    }
  }

  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
