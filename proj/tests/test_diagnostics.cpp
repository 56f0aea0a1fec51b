#include <doctest.h>

#include <cmath>
#include <vector>

#include "quench/constants.hpp"
#include "quench/diagnostics.hpp"
#include "quench/error.hpp"
#include "quench/profiles.hpp"
#include "quench/solver.hpp"
#include "quench/spectral.hpp"

using namespace quench;

namespace {

struct Setup {
  ModelParams m;
  DerivedConstants c;
  ProfileContext ctx;
  Setup() : c(derive_constants(m)), ctx(make_profile_context(m, c, 1e-6)) { ctx.theta_amplitude = c.theta_inf_full; }
};

std::vector<double> nodes(int n) {
  std::vector<double> x;
  for (int i = 0; i <= n; ++i) x.push_back(std::pow(static_cast<double>(i) / n, 2.0));
  return x;
}

// Snapshot at T - gap whose similarity variable is φ(y, s) + extra(y, s).
template <class Extra>
Snapshot similarity_snapshot(const Time& T, double gap, double theta, const ProfileContext& ctx, Extra extra) {
  Snapshot snap;
  snap.t = T + (-gap);
  snap.theta = theta;
  const double s = -std::log(gap);
  const double scale = std::pow(theta * gap, -1.0 / (ctx.constants.p - 1.0));
  for (double x : nodes(6000)) {
    const double y = x / std::sqrt(gap);
    snap.x.push_back(x);
    snap.u.push_back(scale * (profile_phi(y, s, ctx) + extra(y, s)));
  }
  return snap;
}

}  // namespace

TEST_CASE("similarity variables of an exact profile") {
  const Setup st;
  const Time T(1e-3);
  const double gap = 1e-9;
  const Snapshot snap = similarity_snapshot(T, gap, 0.2, st.ctx, [](double, double) { return 0.0; });
  const SimilarityFrame f = to_similarity(snap, T, st.ctx);
  CHECK(f.s == doctest::Approx(-std::log(gap)).epsilon(1e-9));
  CHECK(f.gap == doctest::Approx(gap).epsilon(1e-9));
  for (std::size_t i = 0; i < f.q.size(); ++i) {
    CHECK(f.y[i] == doctest::Approx(snap.x[i] / std::sqrt(f.gap)).epsilon(1e-14));
    CHECK(std::abs(f.q[i]) <= 1e-9 * (1.0 + std::abs(f.W[i])));
  }
  CHECK_THROWS_AS(to_similarity(snap, snap.t, st.ctx), DomainError);
}

TEST_CASE("intermediate profile error of exact and shifted profiles") {
  const Setup st;
  const auto& c = st.c;
  const Time T(1e-3);
  const double theta_amp = st.ctx.theta_amplitude;
  for (double gap : {1e-6, 1e-9, 1e-12}) {
    const double s = -std::log(gap);
    const double pref = std::pow(theta_amp * gap / std::pow(s, c.beta), 1.0 / (c.p - 1.0));
    for (double shift : {0.0, 0.4}) {
      Snapshot snap;
      snap.t = T + (-gap);
      for (double x : nodes(3000)) {
        const double target = std::pow(c.p - 1.0 + c.b * x * x / (gap * s), -1.0 / (c.p - 1.0));
        snap.x.push_back(x);
        snap.u.push_back((target + shift / std::sqrt(s)) / pref - 1.0);
      }
      const ProfileError e = intermediate_profile_error(snap, T, st.ctx);
      CHECK(e.s == doctest::Approx(s).epsilon(1e-6));
      CHECK(std::abs(e.error - shift / std::sqrt(s)) <= 1e-12);
      CHECK(std::abs(e.scaled - shift) <= 1e-11);
      CHECK(e.inner_error <= e.error);
    }
  }
}

TEST_CASE("theta law fit") {
  const Setup st;
  const double beta = st.c.beta;
  const Time T(1e-2);
  auto make = [&](auto theta_of) {
    Trajectory tr;
    for (int k = 0; k <= 300; ++k) {
      const double s = 6.0 + 24.0 * k / 300.0;
      TrajectorySample smp;
      smp.t = T + (-std::exp(-s));
      smp.theta = theta_of(s);
      smp.u_max = 1e3;
      tr.samples.push_back(smp);
    }
    return tr;
  };
  const LawFit exact = theta_law_fit(make([&](double s) { return 6.5 * std::pow(s, -beta); }), T);
  CHECK(exact.exponent_emp == doctest::Approx(-beta).epsilon(1e-10));
  CHECK(std::exp(exact.amplitude_emp) == doctest::Approx(6.5).epsilon(1e-10));
  CHECK(exact.residual < 1e-12);

  const LawFit corrected =
      theta_law_fit(make([&](double s) { return 6.5 * std::pow(s, -beta) * (1.0 + 0.3 / std::sqrt(s)); }), T);
  CHECK(std::abs(corrected.exponent_emp / -beta - 1.0) <= 0.15);

  CHECK_THROWS_AS(theta_law_fit(make([](double) { return 1.0; }), T), FitDegenerate);
  Trajectory few = make([](double) { return 1.0; });
  few.samples.resize(10);
  CHECK_THROWS_AS(theta_law_fit(few, T), FitDegenerate);
}

TEST_CASE("theta' residual on an integrated nonlocal law") {
  // dθ/dσ = -C θ^{1+1/q-N/2} σ^{N/2} in σ = -log(T-t), integrated by RK4.
  const Setup st;
  const auto& m = st.m;
  const double area = 1.0;
  const double C = m.r * m.q * m.gamma * area * bubble_integral_closed(st.c.p, st.c.b, m.dim);
  const double power = 1.0 + 1.0 / m.q - 0.5 * m.dim;
  auto f = [&](double sigma, double th) { return -C * std::pow(th, power) * std::pow(sigma, 0.5 * m.dim); };
  std::vector<double> gap, theta;
  double sigma = 5.0;
  double th = 0.2;
  const int sub = 50;
  const double h = 0.02 / sub;
  for (int k = 0; k <= 750; ++k) {
    gap.push_back(std::exp(-sigma));
    theta.push_back(th);
    for (int j = 0; j < sub; ++j) {
      const double k1 = f(sigma, th);
      const double k2 = f(sigma + 0.5 * h, th + 0.5 * h * k1);
      const double k3 = f(sigma + 0.5 * h, th + 0.5 * h * k2);
      const double k4 = f(sigma + h, th + h * k3);
      th += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      sigma += h;
    }
  }
  const ThetaPrimeResidual res = theta_prime_residual(gap, theta, m, st.c, area);
  REQUIRE(res.residual.size() == gap.size() - 2);
  for (double r : res.residual) CHECK(r <= 1e-3);
  CHECK(res.late_max <= 1e-3);

  std::vector<double> doubled = theta;
  for (double& v : doubled) v = 2.0 * v - doubled.front();
  CHECK(theta_prime_residual(gap, doubled, m, st.c, area).late_max > 0.5);
  std::vector<double> bad_gap = gap;
  std::swap(bad_gap[3], bad_gap[4]);
  CHECK_THROWS_AS(theta_prime_residual(bad_gap, theta, m, st.c, area), DomainError);
}

TEST_CASE("energy identity on synthetic integrals") {
  const ModelParams m;
  Trajectory tr;
  for (int k = 0; k <= 200; ++k) {
    const double t = 0.01 * k;
    TrajectorySample smp;
    smp.t = Time(t);
    smp.theta = 0.5;
    smp.u_max = 1.0;
    smp.norm_r = std::exp(2.0 * t) + std::sin(t);
    // d/dt norm_r = -r(r+1) G + r θ R, split with G = 1.
    smp.grad_integral = 1.0;
    smp.reaction_integral = (2.0 * std::exp(2.0 * t) + std::cos(t) + m.r * (m.r + 1.0)) / (m.r * smp.theta);
    tr.samples.push_back(smp);
  }
  const EnergyIdentity e = energy_identity_check(tr, m);
  CHECK(e.pass_fraction == 1.0);
  CHECK(e.max <= 1e-3);
  for (auto& smp : tr.samples) smp.reaction_integral *= 1.1;
  CHECK(energy_identity_check(tr, m).pass_fraction == 0.0);
  tr.samples.resize(2);
  CHECK_THROWS_AS(energy_identity_check(tr, m), FitDegenerate);
}

TEST_CASE("annulus ratios of the exact final law are one") {
  const Setup st;
  const auto& c = st.c;
  const Time T(1e-3);
  const double gap = 1e-10;
  Snapshot last;
  last.t = T + (-gap);
  for (int i = 1; i <= 4000; ++i) {
    const double x = std::pow(10.0, -6.0 + 5.5 * i / 4000.0);
    const double law = st.ctx.theta_amplitude * c.b * x * x / std::pow(2.0 * std::abs(std::log(x)), 1.0 + c.beta);
    last.x.push_back(x);
    last.u.push_back(std::pow(law, -1.0 / (c.p - 1.0)) - 1.0);
  }
  const auto annuli = final_profile_check(last, T, st.ctx, 0.1, 6);
  REQUIRE(annuli.size() == 6);
  CHECK(annuli.front().x_lo == doctest::Approx(st.ctx.K0 * std::sqrt(gap * -std::log(gap))).epsilon(1e-6));
  CHECK(annuli.back().x_hi == 0.1);
  for (const auto& a : annuli) {
    CHECK(a.nodes > 10);
    CHECK(a.ratio == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a.ratio_min == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a.ratio_max == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(final_profile_check(last, T, st.ctx, 1e-8, 6).empty());
}

TEST_CASE("mode history recovers a prescribed q2 decay") {
  const Setup st;
  const double beta = st.c.beta;
  const int dim = st.m.dim;
  const Time T(1e-2);
  const double amp = 0.8;
  Trajectory tr;
  for (int k = 0; k <= 24; ++k) {
    const double s = 10.0 + 0.5 * k;
    tr.snapshots.push_back(similarity_snapshot(T, std::exp(-s), 0.1, st.ctx, [&](double y, double ss) {
      return amp * std::pow(ss, -(2.0 + beta)) * (y * y - 2.0 * dim);
    }));
  }
  const GaussHermiteRule rule = GaussHermiteRule::for_dim(dim);
  const ModeHistory h = mode_history(tr, T, st.ctx, st.m, rule);
  REQUIRE(h.rows.size() == 25);
  REQUIRE(h.q2_fit_ok);
  CHECK(h.q2_reference == doctest::Approx(-(2.0 + beta)));
  CHECK(std::abs(h.q2_fit.exponent_emp - h.q2_reference) <= 0.05);
  CHECK(h.q1_max <= 1e-8);
  for (const auto& row : h.rows) {
    CHECK(row.dec.q2_scalar == doctest::Approx(amp * std::pow(row.s, -(2.0 + beta))).epsilon(1e-6));
    CHECK(std::abs(row.dec.q0) <= 1e-8 * std::pow(row.s, -(2.0 + beta)) + 1e-12);
  }
  tr.snapshots.resize(5);
  CHECK_THROWS_AS(mode_history(tr, T, st.ctx, st.m, rule), FitDegenerate);
}

TEST_CASE("P2 probe position matches the local time") {
  const Setup st;
  const Time T(1e-3);
  for (double gap : {1e-5, 1e-8, 1e-11}) {
    const Time t = T + (-gap);
    const double x = p2_probe_for_time(t, T, st.ctx.K0);
    const LocalFrame f = solve_varrho(x, st.ctx);
    CHECK(f.varrho == doctest::Approx(gap).epsilon(1e-9));
  }
  CHECK_THROWS_AS(p2_probe_for_time(T, T, st.ctx.K0), ProbeOutOfRange);
  CHECK_THROWS_AS(p2_vhat_check(Trajectory{}, 1e-3, T, st.ctx, st.m), ProbeOutOfRange);
}

TEST_CASE("power law fit") {
  std::vector<double> s, v;
  for (int k = 1; k <= 50; ++k) {
    s.push_back(k);
    v.push_back(3.0 * std::pow(k, -2.4));
  }
  const LawFit f = power_law_fit(s, v, 0.5, 3);
  CHECK(f.exponent_emp == doctest::Approx(-2.4).epsilon(1e-12));
  CHECK(f.s_hi == 50.0);
  CHECK(f.s_lo == doctest::Approx(25.5));
  CHECK(f.count == 25);
  CHECK_THROWS_AS(power_law_fit(s, v, 0.0, 3), FitDegenerate);
  CHECK_THROWS_AS(power_law_fit(s, v, 0.01, 3), FitDegenerate);
}
