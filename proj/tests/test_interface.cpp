#include <doctest.h>

#include <cmath>

#include "phonon/errors.hpp"
#include "phonon/interface.hpp"
#include "phonon/transport.hpp"

using namespace phonon;

namespace {

MaterialModel bose_model() {
  MaterialSpec s;
  s.n_omega = 24;
  s.tau = Profile::tanh_step(1.0, 3.0, 4.0, 2.0);
  s.v = Profile::tanh_step(2.0, 0.5, 5.0, 3.0);
  return build_material(s);
}

// One ordinate pair at +-0.5 with unit weights and one frequency node.
struct Tiny {
  AngularQuadrature q;
  MaterialModel m;
  Tiny() {
    q.nodes = {-0.5, 0.5};
    q.weights = {1.0, 1.0};
    m.grid.omega_max = 2.0;
    m.grid.nodes = {1.0};
    m.grid.weights = {1.0};
    m.tau = {1.0};
    m.v = {2.0};
    m.v_prime = {0.0};
    m.xi = {1.0};
    m.v0 = 2.0;
    m.tau0 = 1.0;
  }
};

}  // namespace

TEST_CASE("coefficients from eta1 = 0.3, gamma0 = 1") {
  MaterialModel m = bose_model();
  AngularQuadrature q = build_angular_quadrature(8);
  InterfaceCoefficients c = derive_coefficients(std::vector<double>(m.size(), 0.3), 1.0, m, q);
  for (std::size_t k = 0; k < m.size(); ++k) {
    CHECK(c.eta2[k] == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(c.zeta1[k] == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(c.zeta2[k] == doctest::Approx(0.3).epsilon(1e-15));
  }
}

TEST_CASE("perfect reflection decouples the layers") {
  MaterialModel m = bose_model();
  AngularQuadrature q = build_angular_quadrature(4);
  for (double g0 : {0.1, 1.0, 7.5}) {
    InterfaceCoefficients c = derive_coefficients(std::vector<double>(m.size(), 1.0), g0, m, q);
    for (std::size_t k = 0; k < m.size(); ++k) {
      CHECK(c.zeta1[k] == 0.0);
      CHECK(c.zeta2[k] == 1.0);
    }
  }
}

TEST_CASE("inadmissible zeta1 names the node") {
  MaterialModel m = bose_model();
  AngularQuadrature q = build_angular_quadrature(4);
  try {
    derive_coefficients(std::vector<double>(m.size(), 0.5), 0.25, m, q);
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("node 0") != std::string::npos);
  }
  CHECK_THROWS_AS(derive_coefficients(std::vector<double>(m.size() - 1, 0.5), 1.0, m, q), ConfigError);
}

TEST_CASE("constraints hold for random admissible tables") {
  MaterialModel m = bose_model();
  AngularQuadrature q = build_angular_quadrature(4);
  std::uint64_t state = 12345;
  auto uniform = [&] {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return static_cast<double>(state >> 11) / 9007199254740992.0;
  };
  for (int trial = 0; trial < 50; ++trial) {
    double gamma0 = 0.2 + 3.0 * uniform();
    std::vector<double> eta1(m.size());
    for (double& e : eta1) e = std::max(0.0, 1.0 - gamma0) + (1.0 - std::max(0.0, 1.0 - gamma0)) * uniform();
    InterfaceCoefficients c = derive_coefficients(eta1, gamma0, m, q);
    for (std::size_t k = 0; k < m.size(); ++k) {
      CHECK(std::abs(c.eta1[k] + c.eta2[k] - 1.0) <= 1e-15);
      CHECK(std::abs(c.zeta1[k] + c.zeta2[k] - 1.0) <= 1e-15);
      CHECK(std::abs(c.eta1[k] + gamma0 * c.zeta1[k] - 1.0) <= 1e-14);
    }
  }
}

TEST_CASE("alpha0 with a Gauss rule and unit spectral moment") {
  AngularQuadrature q = build_angular_quadrature(16);
  MaterialModel m;
  m.grid = build_spectral_grid(4.0, 8);
  m.v.assign(m.size(), 1.0);
  m.tau.assign(m.size(), 1.0);
  m.xi.assign(m.size(), 0.5);  // sum w xi = 2
  double half_moment = 0.0;
  for (std::size_t j = q.half(); j < q.size(); ++j) half_moment += q.weights[j] * q.nodes[j];
  CHECK(compute_alpha0(m, q) == doctest::Approx(1.0 / (2.0 * half_moment)).epsilon(1e-14));
  CHECK(compute_alpha0(m, q) == doctest::Approx(1.0).epsilon(5e-3));
  double a = compute_alpha0(m, q);
  for (double& x : m.xi) x *= 2.0;
  CHECK(compute_alpha0(m, q) == doctest::Approx(0.5 * a).epsilon(1e-14));
  for (double& x : m.xi) x = 0.0;
  CHECK_THROWS_AS(compute_alpha0(m, q), ModelError);
}

TEST_CASE("alpha0 single-node arithmetic") {
  Tiny t;
  CHECK(compute_alpha0(t.m, t.q) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("diffusive reflux is linear and vanishes for zero flux") {
  MaterialModel m = bose_model();
  AngularQuadrature q = build_angular_quadrature(8);
  InterfaceCoefficients c = derive_coefficients(std::vector<double>(m.size(), 0.6), 1.0, m, q);
  for (double v : diffusive_reflux(0.0, c, m)) CHECK(v == 0.0);
  auto a = diffusive_reflux(0.37, c, m), b = diffusive_reflux(0.74, c, m);
  for (std::size_t k = 0; k < m.size(); ++k) CHECK(b[k] == doctest::Approx(2.0 * a[k]).epsilon(1e-15));
}

TEST_CASE("equilibrium at x=L is re-emitted unchanged with zero net flux") {
  MaterialModel m = bose_model();
  AngularQuadrature q = build_angular_quadrature(12);
  const double gamma0 = 1.7;
  InterfaceCoefficients c = derive_coefficients(std::vector<double>(m.size(), 0.6), gamma0, m, q);
  const std::size_t nw = m.size(), h = q.half();
  std::vector<double> g_pos(h * nw);
  for (std::size_t j = 0; j < h; ++j)
    for (std::size_t k = 0; k < nw; ++k) g_pos[j * nw + k] = gamma0 * m.xi[k];
  auto g_neg = apply_boundary_right(g_pos, c, m, q);
  double net = 0.0;
  for (std::size_t j = 0; j < h; ++j)
    for (std::size_t k = 0; k < nw; ++k) {
      CHECK(g_neg[j * nw + k] == doctest::Approx(gamma0 * m.xi[k]).epsilon(1e-13));
      net += q.weights[j] * q.nodes[j] * m.grid.weights[k] * m.v[k] * g_neg[j * nw + k];
      net += q.weights[h + j] * q.nodes[h + j] * m.grid.weights[k] * m.v[k] * g_pos[j * nw + k];
    }
  CHECK(std::abs(net) <= 1e-13);
}

TEST_CASE("any multiple of xi at x=L gives zero net flux") {
  MaterialModel m = bose_model();
  AngularQuadrature q = build_angular_quadrature(6);
  InterfaceCoefficients c = derive_coefficients(std::vector<double>(m.size(), 0.6), 1.0, m, q);
  const std::size_t nw = m.size(), h = q.half();
  for (double scale : {0.0, 0.3, 12.0}) {
    std::vector<double> g(q.size() * nw);
    for (std::size_t j = h; j < q.size(); ++j)
      for (std::size_t k = 0; k < nw; ++k) g[j * nw + k] = scale * m.xi[k];
    double out = half_range_flux(g, m, q);
    auto back = diffusive_reflux(out, c, m);
    double in = 0.0;
    for (std::size_t j = 0; j < h; ++j)
      for (std::size_t k = 0; k < nw; ++k) in += q.weights[j] * -q.nodes[j] * m.grid.weights[k] * m.v[k] * back[k];
    CHECK(std::abs(in - out) <= 1e-13 * std::max(1.0, out));
  }
}

TEST_CASE("the equilibrium pair satisfies both interface conditions") {
  MaterialModel m = bose_model();
  AngularQuadrature q = build_angular_quadrature(8);
  const double gamma0 = 0.8;
  std::vector<double> eta1(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) eta1[k] = 0.25 + 0.7 * k / m.size();
  InterfaceCoefficients c = derive_coefficients(eta1, gamma0, m, q);
  const std::size_t nw = m.size(), h = q.half();
  std::vector<double> f_pos(h * nw), g_neg(h * nw);
  for (std::size_t j = 0; j < h; ++j)
    for (std::size_t k = 0; k < nw; ++k) {
      f_pos[j * nw + k] = m.xi[k];
      g_neg[j * nw + k] = gamma0 * m.xi[k];
    }
  auto [f_neg, g_pos] = apply_interface(f_pos, g_neg, c, q);
  for (std::size_t j = 0; j < h; ++j)
    for (std::size_t k = 0; k < nw; ++k) {
      CHECK(f_neg[j * nw + k] == doctest::Approx(m.xi[k]).epsilon(1e-14));
      CHECK(g_pos[j * nw + k] == doctest::Approx(gamma0 * m.xi[k]).epsilon(1e-14));
    }
}
