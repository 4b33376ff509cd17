#include <doctest.h>

#include <cmath>
#include <random>

#include "phonon/analytic.hpp"
#include "phonon/errors.hpp"

using namespace phonon;

namespace {

// Trapezoid oracle; spectrally accurate for flat-ended bumps.
template <class F>
double trapezoid(F f, double a, double b, int n) {
  double h = (b - a) / n, s = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n; ++i) s += f(a + i * h);
  return s * h;
}

}  // namespace

TEST_CASE("bumps are normalized and compactly supported") {
  const BumpFunction& phi = BumpFunction::phi0();
  const BumpFunction& psi = BumpFunction::psi0();
  CHECK(phi(-0.5) == 0.0);
  CHECK(phi(0.0) == 0.0);
  CHECK(phi(1.0) == 0.0);
  CHECK(psi(-1.0) == 0.0);
  CHECK(psi(1.2) == 0.0);
  CHECK(std::abs(trapezoid([&](double z) { return phi(z); }, 0.0, 1.0, 20000) - 1.0) <= 1e-10);
  CHECK(std::abs(trapezoid([&](double z) { return psi(z); }, -1.0, 1.0, 20000) - 1.0) <= 1e-10);
  for (double z = 0.05; z < 1.0; z += 0.05) CHECK(phi(z) > 0.0);
}

TEST_CASE("probe evaluation") {
  ProbeSpec p{0.5, 1.0, 0.2};
  const BumpFunction& phi = BumpFunction::phi0();
  CHECK(eval_probe(p, 2.0 * p.epsilon, p.mu0, p.omega0) == 0.0);
  CHECK(eval_probe(p, -0.01, p.mu0 + 0.1, p.omega0 + 0.1) == 0.0);
  double mid = phi(0.5);
  CHECK(eval_probe(p, 0.1, 0.6, 1.1) ==
        doctest::Approx(mid * mid * mid / (0.2 * 0.2 * 0.2)).epsilon(1e-14));
}

TEST_CASE("probe carries unit mass") {
  ProbeSpec p{0.3, 2.0, 0.15};
  auto slice_t = [&](double t) {
    return trapezoid([&](double mu) {
      return trapezoid([&](double w) { return eval_probe(p, t, mu, w); }, p.omega0, p.omega0 + p.epsilon, 200);
    }, p.mu0, p.mu0 + p.epsilon, 200);
  };
  CHECK(trapezoid(slice_t, 0.0, p.epsilon, 200) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("probe admissibility") {
  CHECK_NOTHROW(check_probe({0.5, 1.0, 0.2}, 5.0));
  CHECK_THROWS_AS(check_probe({0.9, 1.0, 0.2}, 5.0), ConfigError);
  CHECK_THROWS_AS(check_probe({0.5, 4.9, 0.2}, 5.0), ConfigError);
  CHECK_THROWS_AS(check_probe({0.5, 1.0, 0.0}, 5.0), ConfigError);
  CHECK_THROWS_AS(check_probe({0.0, 1.0, 0.2}, 5.0), ConfigError);
}

TEST_CASE("ballistic outgoing data") {
  ProbeSpec p{0.5, 1.0, 0.2};
  const double t1 = 2.0 / p.mu0;
  CHECK(f0_outgoing(0.5 * t1, -p.mu0, p.omega0, 0.6, 5.0, 1.0, p) == 0.0);

  SUBCASE("lossless mirror is a pure time shift") {
    for (double mu : {-0.52, -0.61, -0.69})
      for (double t = 0.0; t < 6.0; t += 0.013) {
        double shift = 2.0 / std::abs(mu);
        double ex = t >= shift ? eval_probe(p, t - shift, -mu, 1.1) : 0.0;
        CHECK(f0_outgoing(t, mu, 1.1, 1.0, 1e300, 1.0, p) == doctest::Approx(ex).epsilon(1e-14));
      }
  }
  SUBCASE("linear in the reflectance") {
    for (double t = 3.0; t < 5.0; t += 0.01)
      CHECK(f0_outgoing(t, -0.6, 1.1, 0.8, 5.0, 1.3, p) ==
            doctest::Approx(2.0 * f0_outgoing(t, -0.6, 1.1, 0.4, 5.0, 1.3, p)).epsilon(1e-15));
  }
  SUBCASE("support starts at the return time and lasts epsilon") {
    for (double mu : {-0.55, -0.65}) {
      for (double v : {0.7, 1.0, 1.8}) {
        double tr = 2.0 / (std::abs(mu) * v);
        for (double t = 0.0; t < tr + 1.0; t += 0.001) {
          double val = f0_outgoing(t, mu, 1.1, 0.6, 5.0, v, p);
          if (t < tr || t > tr + p.epsilon) CHECK(val == 0.0);
        }
        CHECK(f0_outgoing(tr + 0.5 * p.epsilon, mu, 1.1, 0.6, 5.0, v, p) > 0.0);
      }
    }
  }
}

TEST_CASE("characteristic formulas") {
  RayData r;
  r.mu = -0.4;
  r.tau = 2.0;
  r.v = 1.5;
  r.xi = 0.7;
  r.eta1 = 0.6;
  r.zeta1 = 0.4;
  auto zero_h = [](double, double) { return 0.0; };
  auto zero_b = [](double) { return 0.0; };
  SUBCASE("zero data gives zero") {
    CHECK(characteristic_outgoing_left(3.0, r, zero_h, zero_b, 1e-3) == 0.0);
    CHECK(characteristic_incoming_interface(3.0, r, zero_h, zero_b, zero_b, 1e-3) == 0.0);
  }
  SUBCASE("constant source integrates in closed form") {
    const double c = 0.8, cross = 1.0 / (0.4 * 1.5);
    auto h = [c](double, double) { return c; };
    for (double t : {0.5, 1.0, 2.5}) {
      double Y = std::min(t, cross);
      double ex = r.xi * c * (1.0 - std::exp(-Y / r.tau));
      CHECK(characteristic_outgoing_left(t, r, h, zero_b, 1e-4) == doctest::Approx(ex).epsilon(1e-8));
    }
  }
  SUBCASE("interface value enters after the crossing time") {
    const double cross = 1.0 / (0.4 * 1.5);
    auto f1 = [](double s) { return 1.0 + s; };
    double t = cross + 0.3;
    double ex = f1(0.3) * std::exp(-cross / r.tau);
    CHECK(characteristic_outgoing_left(t, r, zero_h, f1, 1e-3) == doctest::Approx(ex).epsilon(1e-14));
    CHECK(characteristic_outgoing_left(0.9 * cross, r, zero_h, f1, 1e-3) == 0.0);
  }
  SUBCASE("interface incoming combines transmission and reflection") {
    const double cross = 1.0 / (0.4 * 1.5);
    auto g = [](double) { return 2.0; };
    auto ph = [](double s) { return 3.0 * s; };
    double t = cross + 0.5;
    double ex = r.zeta1 * 2.0 + r.eta1 * 1.5 * std::exp(-cross / r.tau);
    CHECK(characteristic_incoming_interface(t, r, zero_h, g, ph, 1e-3) == doctest::Approx(ex).epsilon(1e-14));
  }
}

TEST_CASE("C constant reduces to a one-dimensional integral without shift") {
  CConstantInputs in;
  in.mu0 = 1.0;
  in.v = 1e6;
  in.tau = 1e300;
  in.v_prime = 0.0;
  const BumpFunction& phi = BumpFunction::phi0();
  const BumpFunction& psi = BumpFunction::psi0();
  double oracle = trapezoid([&](double t) { return psi(t) * phi(t); }, 0.0, 1.0, 20000);
  CHECK(c_constant(in, 32) == doctest::Approx(oracle).epsilon(1e-5));
}

TEST_CASE("C constant is stable under refinement") {
  for (double vp : {0.0, 0.05, -0.1}) {
    CConstantInputs in{0.5, 5.0, 1.0, vp};
    double c32 = c_constant(in, 32), c64 = c_constant(in, 64);
    CHECK(std::abs(c64 - c32) <= 1e-8 * c64);
  }
}

TEST_CASE("C constant agrees with a seeded Monte Carlo oracle") {
  CConstantInputs in{0.5, 5.0, 1.0, 0.0};
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = c_integrand(in, u(rng), u(rng), u(rng));
    s += x;
    s2 += x * x;
  }
  double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / (n - 1));
  double scale = std::exp(-2.0 / (in.tau * in.mu0 * in.v));
  CHECK(std::abs(c_constant(in) - scale * mean) <= 3.0 * scale * se);
}

TEST_CASE("degenerate C is an error") {
  CConstantInputs in{0.1, 5.0, 1.0, 0.0};
  CHECK_THROWS_AS(c_constant(in), ModelError);
}
