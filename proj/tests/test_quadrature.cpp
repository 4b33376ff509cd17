#include <doctest.h>

#include <cmath>
#include <numeric>

#include "phonon/errors.hpp"
#include "phonon/quadrature.hpp"

using namespace phonon;

TEST_CASE("two-point rule") {
  AngularQuadrature q = build_angular_quadrature(2);
  REQUIRE(q.size() == 2);
  CHECK(q.nodes[0] == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK(q.nodes[1] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK(q.weights[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(q.weights[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("weights sum to the interval length") {
  AngularQuadrature q = build_angular_quadrature(4);
  CHECK(std::accumulate(q.weights.begin(), q.weights.end(), 0.0) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("second moment with 16 nodes") {
  AngularQuadrature q = build_angular_quadrature(16);
  double s = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) s += q.weights[j] * q.nodes[j] * q.nodes[j];
  CHECK(std::abs(s - 2.0 / 3.0) <= 1e-12);
}

TEST_CASE("odd or too small counts are rejected") {
  CHECK_THROWS_AS(build_angular_quadrature(3), ConfigError);
  CHECK_THROWS_AS(build_angular_quadrature(0), ConfigError);
  CHECK_THROWS_AS(build_angular_quadrature(-2), ConfigError);
}

TEST_CASE("symmetry and no zero ordinate") {
  for (int n : {2, 4, 8, 16, 32, 64}) {
    AngularQuadrature q = build_angular_quadrature(n);
    for (std::size_t j = 0; j < q.size(); ++j) {
      CHECK(q.nodes[q.mirror(j)] == -q.nodes[j]);
      CHECK(q.weights[q.mirror(j)] == q.weights[j]);
      CHECK(q.nodes[j] != 0.0);
    }
    CHECK(q.nodes[q.half() - 1] < 0.0);
    CHECK(q.nodes[q.half()] > 0.0);
  }
}

TEST_CASE("polynomial exactness up to degree 2n-1") {
  for (int n : {2, 6, 12}) {
    GaussRule r = gauss_legendre(n, 0.5, 2.0);
    for (int d = 0; d <= 2 * n - 1; ++d) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += r.weights[i] * std::pow(r.nodes[i], d);
      double exact = (std::pow(2.0, d + 1) - std::pow(0.5, d + 1)) / (d + 1);
      CHECK(s == doctest::Approx(exact).epsilon(1e-12));
    }
  }
}

TEST_CASE("composite angular panels keep the half-range moment") {
  AngularQuadrature q = build_composite_angular({0.5, 0.7}, {8, 32, 8});
  CHECK(q.size() == 96);
  check_angular(q);
  double m1 = 0.0;
  for (std::size_t j = q.half(); j < q.size(); ++j) m1 += q.weights[j] * q.nodes[j];
  CHECK(m1 == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("spectral panels") {
  SpectralGrid g = build_spectral_grid(10.0, 18);
  CHECK(g.size() == 18);
  CHECK(std::accumulate(g.weights.begin(), g.weights.end(), 0.0) == doctest::Approx(10.0).epsilon(1e-14));
  for (std::size_t k = 1; k < g.size(); ++k) CHECK(g.nodes[k] > g.nodes[k - 1]);
  CHECK(g.nodes.front() > 0.0);
  CHECK_THROWS_AS(build_spectral_grid_panels({1.0, 0.5}, {4}), ConfigError);
  CHECK_THROWS_AS(build_spectral_grid(-1.0, 4), ConfigError);
}
