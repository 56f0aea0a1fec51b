#include <doctest.h>

#include <cmath>
#include <vector>

#include "quench/constants.hpp"
#include "quench/error.hpp"
#include "quench/spectral.hpp"

using namespace quench;

namespace {

double factorial(int n) { return std::tgamma(n + 1.0); }

// A field given in closed form on R^N, probed on a lattice of radius 8.
SampledField closed_form_field(int dim, FieldFn value,
                               std::function<void(std::span<const double>, std::span<double>)> gradient) {
  SampledField f;
  f.dim = dim;
  f.value = std::move(value);
  f.gradient = std::move(gradient);
  f.extent = 1e9;
  const int m = dim == 1 ? 161 : 41;
  for (int i = 0; i < m; ++i) {
    const double a = -8.0 + 16.0 * i / (m - 1);
    if (dim == 1) {
      f.probes.push_back({a});
    } else {
      for (int j = 0; j < m; ++j) f.probes.push_back({a, -8.0 + 16.0 * j / (m - 1)});
    }
  }
  return f;
}

}  // namespace

TEST_CASE("hermite values") {
  CHECK(hermite_eval(0, 0.7) == 1.0);
  CHECK(hermite_eval(1, 0.7) == 0.7);
  CHECK(hermite_eval(2, 3.0) == 7.0);
  CHECK(hermite_eval(3, 2.0) == -4.0);
  CHECK_THROWS_AS(hermite_eval(-1, 0.0), DomainError);
}

TEST_CASE("hermite table: degree, leading coefficient and recurrence") {
  const HermiteBasis basis(8);
  for (int m = 0; m <= 8; ++m) {
    const auto& c = basis.coefficients(m);
    REQUIRE(c.size() == static_cast<std::size_t>(m + 1));
    CHECK(c.back() == 1.0);
    for (double xi : {-2.5, -0.3, 0.0, 1.1, 4.0}) {
      double horner = 0.0;
      for (std::size_t k = c.size(); k-- > 0;) horner = horner * xi + c[k];
      CHECK(horner == doctest::Approx(hermite_eval(m, xi)).epsilon(1e-13));
      CHECK(basis(m, xi) == hermite_eval(m, xi));
    }
    CHECK(HermiteBasis::norm_squared(m) == doctest::Approx(std::pow(2.0, m) * factorial(m)));
  }
  CHECK_THROWS_AS(basis(9, 0.0), DomainError);
}

TEST_CASE("inner products under rho") {
  const GaussHermiteRule rule(1, 64);
  auto h = [](int m) { return FieldFn([m](std::span<const double> y) { return hermite_eval(m, y[0]); }); };
  CHECK(inner_product_rho(h(2), h(2), rule) == doctest::Approx(8.0).epsilon(1e-13));
  CHECK(std::abs(inner_product_rho(h(1), h(2), rule)) < 1e-13);
  CHECK(inner_product_rho(h(0), h(0), rule) == doctest::Approx(1.0).epsilon(1e-14));
  double wsum = 0.0;
  const GaussHermiteRule rule2 = GaussHermiteRule::for_dim(2);
  for (std::size_t k = 0; k < rule2.size(); ++k) wsum += rule2.weight(k);
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("orthogonality of h_0 .. h_8") {
  const GaussHermiteRule rule(1, 64);
  for (int n = 0; n <= 8; ++n) {
    for (int m = 0; m <= 8; ++m) {
      const double ip = inner_product_rho([n](std::span<const double> y) { return hermite_eval(n, y[0]); },
                                          [m](std::span<const double> y) { return hermite_eval(m, y[0]); }, rule);
      // Normalised Gram entries: ⟨h_n,h_n⟩ = 2^n n! grows past 1e7 at n = 8.
      const double norm = std::sqrt(HermiteBasis::norm_squared(n) * HermiteBasis::norm_squared(m));
      const double expected = n == m ? 1.0 : 0.0;
      CAPTURE(n);
      CAPTURE(m);
      CHECK(std::abs(ip / norm - expected) <= 1e-8);
    }
  }
}

TEST_CASE("h_m are eigenfunctions of L = d2 - (y/2) d + 1") {
  const double h = 1e-3;
  for (int m = 0; m <= 4; ++m) {
    double worst = 0.0;
    for (int i = -400; i <= 400; ++i) {
      const double y = 0.01 * i;
      const double f0 = hermite_eval(m, y);
      const double fp = hermite_eval(m, y + h);
      const double fm = hermite_eval(m, y - h);
      const double lh = (fp - 2.0 * f0 + fm) / (h * h) - 0.5 * y * (fp - fm) / (2.0 * h) + f0;
      worst = std::max(worst, std::abs(lh - (1.0 - 0.5 * m) * f0));
    }
    CAPTURE(m);
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("cutoff chi") {
  const double s = 9.0;
  const double K0 = 10.0;
  const double edge = K0 * std::sqrt(s);
  CHECK(cutoff_chi_radial(0.5 * edge, s, K0) == 1.0);
  CHECK(cutoff_chi_radial(3.0 * edge, s, K0) == 0.0);
  const double mid = cutoff_chi_radial(1.5 * edge, s, K0);
  CHECK(mid > 0.0);
  CHECK(mid < 1.0);
  CHECK(cutoff_chi_radial(1.6 * edge, s, K0) < mid);
  const std::vector<double> y{0.9 * edge, 1.2 * edge};
  CHECK(cutoff_chi(y, s, K0) == doctest::Approx(cutoff_chi_radial(std::hypot(y[0], y[1]), s, K0)));
}

TEST_CASE("decomposing h_2 in one dimension") {
  const GaussHermiteRule rule(1, 64);
  const SampledField f = closed_form_field(
      1, [](std::span<const double> y) { return y[0] * y[0] - 2.0; },
      [](std::span<const double> y, std::span<double> g) { g[0] = 2.0 * y[0]; });
  const ModeDecomposition dec = decompose(f, 100.0, 10.0, rule);
  CHECK(dec.q2[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dec.q2_scalar == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(dec.q0) < 1e-12);
  CHECK(std::abs(dec.q1[0]) < 1e-12);
  CHECK(dec.qminus_bound < 1e-10);
  CHECK(dec.grad_perp_bound < 1e-10);
}

TEST_CASE("decomposing a constant and y^3") {
  const GaussHermiteRule rule(1, 64);
  const SampledField c = closed_form_field(
      1, [](std::span<const double>) { return 0.37; }, [](std::span<const double>, std::span<double> g) { g[0] = 0.0; });
  const ModeDecomposition dc = decompose(c, 100.0, 10.0, rule);
  CHECK(dc.q0 == doctest::Approx(0.37).epsilon(1e-13));
  CHECK(std::abs(dc.q1[0]) < 1e-13);
  CHECK(std::abs(dc.q2[0]) < 1e-13);
  CHECK(dc.qminus_bound < 1e-12);

  // ⟨y·y³⟩_ρ / ⟨y·y⟩_ρ = 12/2 = 6 for the variance-2 Gaussian.
  const SampledField cube = closed_form_field(
      1, [](std::span<const double> y) { return y[0] * y[0] * y[0]; },
      [](std::span<const double> y, std::span<double> g) { g[0] = 3.0 * y[0] * y[0]; });
  const ModeDecomposition d3 = decompose(cube, 100.0, 10.0, rule);
  CHECK(d3.q1[0] == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(std::abs(d3.q0) < 1e-12);
  CHECK(std::abs(d3.q2[0]) < 1e-12);
  CHECK(d3.qminus_bound > 0.1);
}

TEST_CASE("decompose then reconstruct reproduces quadratic fields in two dimensions") {
  const GaussHermiteRule rule = GaussHermiteRule::for_dim(2);
  // q = c0 + c·y + yᵀ B y - 2 Tr B with B symmetric.
  const double c0 = 0.4, c1 = -0.2, c2 = 0.3, b11 = 0.05, b12 = -0.02, b22 = 0.11;
  auto value = [=](std::span<const double> y) {
    return c0 + c1 * y[0] + c2 * y[1] + b11 * y[0] * y[0] + 2.0 * b12 * y[0] * y[1] + b22 * y[1] * y[1] -
           2.0 * (b11 + b22);
  };
  const SampledField f = closed_form_field(2, value, [=](std::span<const double> y, std::span<double> g) {
    g[0] = c1 + 2.0 * b11 * y[0] + 2.0 * b12 * y[1];
    g[1] = c2 + 2.0 * b12 * y[0] + 2.0 * b22 * y[1];
  });
  const ModeDecomposition dec = decompose(f, 100.0, 10.0, rule);
  CHECK(dec.q0 == doctest::Approx(c0).epsilon(1e-10));
  CHECK(dec.q1[0] == doctest::Approx(c1).epsilon(1e-10));
  CHECK(dec.q1[1] == doctest::Approx(c2).epsilon(1e-10));
  CHECK(dec.q2[0] == doctest::Approx(b11).epsilon(1e-10));
  CHECK(dec.q2[1] == doctest::Approx(b12).epsilon(1e-10));
  CHECK(dec.q2[3] == doctest::Approx(b22).epsilon(1e-10));
  for (const auto& y : f.probes) {
    if (std::hypot(y[0], y[1]) > 6.0) continue;
    CHECK(std::abs(reconstruct(dec, y) - value(y)) <= 1e-8);
  }
}

TEST_CASE("radial samples give zero linear modes and pass their self-test") {
  std::vector<double> r, q;
  for (int i = 0; i <= 4000; ++i) {
    const double x = 0.01 * i;
    r.push_back(x);
    q.push_back(0.2 - 0.05 * (x * x - 4.0) + 0.01 * std::exp(-x));
  }
  const SampledField f = radial_sampled_field(2, r, q);
  const GaussHermiteRule rule = GaussHermiteRule::for_dim(2);
  CHECK(f.self_test(rule) < 1e-6);
  const ModeDecomposition dec = decompose(f, 4.0, 10.0, rule);
  CHECK(dec.q1_norm() <= 1e-8);
  CHECK(dec.q2_scalar == doctest::Approx(-0.05).epsilon(1e-3));

  // A sampling that stops short of the quadrature nodes is refused.
  std::vector<double> rs(r.begin(), r.begin() + 500), qs(q.begin(), q.begin() + 500);
  CHECK_THROWS_AS(decompose(radial_sampled_field(2, rs, qs), 4.0, 10.0, rule), GridTooCoarse);
}

TEST_CASE("shrinking-set bounds") {
  const double A = 20.0;
  const double s = 16.0;
  ModeDecomposition zero;
  zero.s = s;
  zero.q1.assign(2, 0.0);
  zero.q2.assign(4, 0.0);
  const ShrinkingSetReport z = check_shrinking_set(zero, A);
  CHECK(z.pass);
  CHECK(z.worst_margin == 0.0);

  ModeDecomposition twice = zero;
  twice.q0 = 2.0 * A * A * A / std::pow(s, 1.5);
  const ShrinkingSetReport t = check_shrinking_set(twice, A);
  CHECK_FALSE(t.pass);
  CHECK(t.bounds[0].name == "q0");
  CHECK(t.bounds[0].margin == doctest::Approx(2.0));
  CHECK_FALSE(t.bounds[0].pass);

  ModeDecomposition edge = zero;
  edge.q0 = A * A * A / std::pow(s, 1.5);
  const ShrinkingSetReport e = check_shrinking_set(edge, A);
  CHECK(e.bounds[0].margin == doctest::Approx(1.0));
  CHECK(e.pass);

  // Scaling every magnitude up never turns a failure into a pass.
  ModeDecomposition d = zero;
  d.q0 = 1.0;
  d.q1 = {0.3, 0.1};
  d.q2 = {2.0, 0.0, 0.0, 2.0};
  d.qminus_bound = 100.0;
  d.grad_perp_bound = 50.0;
  d.qe_norm = 1e6;
  bool failed = false;
  for (double scale = 0.01; scale < 1e6; scale *= 1.7) {
    ModeDecomposition sd = d;
    sd.q0 *= scale;
    for (auto& v : sd.q1) v *= scale;
    for (auto& v : sd.q2) v *= scale;
    sd.qminus_bound *= scale;
    sd.grad_perp_bound *= scale;
    sd.qe_norm *= scale;
    const bool pass = check_shrinking_set(sd, A).pass;
    if (failed) CHECK_FALSE(pass);
    failed = failed || !pass;
  }
  CHECK(failed);
  ModeDecomposition early = zero;
  early.s = 0.5;
  CHECK_THROWS_AS(check_shrinking_set(early, A), DomainError);
}

TEST_CASE("mode ODE: bounded solution tracks the asymptotic W2") {
  const ModelParams m;
  const DerivedConstants c = derive_constants(m);
  const double s0 = 1e3;
  const double w0 = c.beta * c.kappa / ((c.p - 1.0) * s0);
  const double w2_limit = -c.kappa * (1.0 + c.beta) / (4.0 * (c.p - 2.0));
  ModeOdeOptions opt;
  opt.ds = 0.05;
  opt.stable_manifold = true;
  const ModeTrajectory tr = mode_ode_integrate(w0, w2_limit / s0, s0, 1e4, c, m.dim, opt);
  CHECK_FALSE(tr.blowup);
  REQUIRE(tr.s.size() > 10);
  for (std::size_t i = 0; i < tr.s.size(); ++i) {
    CHECK(std::abs(tr.s[i] * tr.w2[i] / w2_limit - 1.0) <= 0.05);
    CHECK(tr.w2[i] < 0.0);
  }
}

TEST_CASE("mode ODE: zero stays zero when beta = 0, a kick in W0 blows up") {
  ModelParams m;
  m.q = 1e-14;
  DerivedConstants c = derive_constants(m);
  c.beta = 0.0;
  const ModeTrajectory zero = mode_ode_integrate(0.0, 0.0, 10.0, 60.0, c, m.dim);
  CHECK_FALSE(zero.blowup);
  for (std::size_t i = 0; i < zero.s.size(); ++i) {
    CHECK(zero.w0[i] == 0.0);
    CHECK(zero.w2[i] == 0.0);
  }
  const DerivedConstants cd = derive_constants(ModelParams{});
  const ModeTrajectory kicked = mode_ode_integrate(0.1, -1e-3, 10.0, 60.0, cd, 2);
  CHECK(kicked.blowup);
  CHECK(kicked.blowup_s > 10.0);
  CHECK(kicked.blowup_s < 30.0);
}
