#pragma once

#include <string>
#include <vector>

namespace quench {

// One exact check with its measured error and the tolerance it is held to.
struct OracleResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
  double seconds = 0.0;
};

// Quadrature against the closed form of ∫_0^∞ (p-1+bξ²)^{-1-N/2} ξ^{N-1} dξ
// over p ∈ {2.5, 3, 4, 6}, b ∈ {1/2, 1, 9/8, 9/4, 5}, N ∈ {1, 2, 3, 4}.
// b_multiplier scales the b handed to the quadrature only (mutation runs).
OracleResult oracle_bubble(double b_multiplier = 1.0);

// Orthogonality of h_0..h_8 under ρ, and ‖L h_m - (1 - m/2) h_m‖_∞ for m ≤ 4
// with L = d²/dξ² - (ξ/2) d/dξ + 1 taken by finite differences.
OracleResult oracle_hermite_orthogonality();
OracleResult oracle_hermite_eigen();

// φ_b ODE residual at 10³ points for four (p, b) pairs.
OracleResult oracle_phi_b();

// ϱ(x) round trip over |x| ∈ [1e-12, 1e-2] and the leading asymptotics at |x| = 1e-6.
OracleResult oracle_varrho_roundtrip();
OracleResult oracle_varrho_asymptotics();

struct ConvergenceStudy {
  std::vector<int> cells;
  std::vector<double> errors;  // max-norm error at the final time
  std::vector<double> orders;  // log2 of successive error ratios
};

// u*(x, t) = (1/2 + t)(exp(-x²/w²) - exp(-R²/w²)), w² = 0.04, on the unit disk with γ = 0 and the
// matching source, integrated to t = 0.1 on base_cells · 2^k uniform cells.
ConvergenceStudy manufactured_study(int base_cells = 16, int levels = 4);
OracleResult oracle_manufactured(int base_cells = 16);

// u' = (1+u)^p from u = 0 with diffusion off and γ = 0: the quench time
// recovered by estimate_T against 1/(p-1).
OracleResult oracle_scalar_ode();

// Exact θ = θ∞ |log(T-t)|^{-β} samples through theta_law_fit.
OracleResult oracle_theta_law();
// q2 = C s^{-(2+β)} (1 + 1/(2s)) through power_law_fit.
OracleResult oracle_q2_law();

struct SelfTestOptions {
  double b_multiplier = 1.0;
  int mms_base_cells = 16;
};

std::vector<OracleResult> run_selftest(const SelfTestOptions& options = {});

}  // namespace quench
