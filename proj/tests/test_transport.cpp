#include <doctest.h>

#include <cmath>
#include <limits>

#include "phonon/errors.hpp"
#include "phonon/transport.hpp"

using namespace phonon;

namespace {

struct Setup {
  MaterialModel m;
  AngularQuadrature q;
  InterfaceCoefficients c;
  SolverOptions o;
};

Setup small_setup(Advection adv, double eta1 = 0.6, double gamma0 = 1.0) {
  Setup s;
  MaterialSpec ms;
  ms.n_omega = 8;
  ms.omega_max = 8.0;
  ms.tau = Profile::tanh_step(2.0, 6.0, 3.0, 1.0);
  ms.v = Profile::tanh_step(1.0, 0.6, 4.0, 1.5);
  s.m = build_material(ms);
  s.q = build_angular_quadrature(8);
  s.c = derive_coefficients(std::vector<double>(s.m.size(), eta1), gamma0, s.m, s.q);
  s.o.grid = {40, 120, 4.0};
  s.o.dt = 0.01;
  s.o.advection = adv;
  return s;
}

// One ordinate pair at +-mu and one lossless frequency.
Setup single_ray(Advection adv, double mu, int nx) {
  Setup s;
  s.q.nodes = {-mu, mu};
  s.q.weights = {1.0, 1.0};
  s.m.grid.omega_max = 2.0;
  s.m.grid.nodes = {1.0};
  s.m.grid.weights = {1.0};
  s.m.tau = {1e9};
  s.m.xi = {1e9};
  s.m.v = {1.0};
  s.m.v_prime = {0.0};
  s.m.v0 = 1.0;
  s.m.tau0 = 1e9;
  s.c = derive_coefficients({1.0}, 1.0, s.m, s.q);
  s.o.grid = {nx, 3 * nx, 4.0};
  s.o.dt = 0.5 / (mu * nx);
  s.o.advection = adv;
  return s;
}

double max_abs(const std::vector<double>& v) {
  double r = 0.0;
  for (double x : v) r = std::max(r, std::abs(x));
  return r;
}

const Advection kModes[] = {Advection::kTracking, Advection::kSemiLagrangian};

}  // namespace

TEST_CASE("bracket of simple slices") {
  Setup s = small_setup(Advection::kTracking);
  const std::size_t nw = s.m.size();
  std::vector<double> slice(s.q.size() * nw, 0.0);
  CHECK(bracket(slice.data(), s.m, s.q) == 0.0);
  for (std::size_t j = 0; j < s.q.size(); ++j)
    for (std::size_t k = 0; k < nw; ++k) slice[j * nw + k] = s.m.xi[k];
  CHECK(bracket(slice.data(), s.m, s.q) == doctest::Approx(2.0).epsilon(1e-13));
  for (std::size_t j = 0; j < s.q.half(); ++j)
    for (std::size_t k = 0; k < nw; ++k) slice[j * nw + k] = 0.0;
  CHECK(bracket(slice.data(), s.m, s.q) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("left boundary values") {
  Setup s = small_setup(Advection::kTracking);
  ProbeSpec p{0.3, 1.0, 0.2};
  ProbeIncoming probe(p);
  for (double v : apply_boundary_left(0.5, probe, s.m, s.q)) CHECK(v == 0.0);
  EquilibriumIncoming eq(s.m, 1.0);
  auto b = apply_boundary_left(0.5, eq, s.m, s.q);
  const std::size_t nw = s.m.size();
  for (std::size_t j = 0; j < s.q.half(); ++j)
    for (std::size_t k = 0; k < nw; ++k) CHECK(b[j * nw + k] == doctest::Approx(s.m.xi[k]).epsilon(1e-15));
  FunctionIncoming neg([](double, double, double) { return -1.0; });
  CHECK_THROWS_AS(apply_boundary_left(0.0, neg, s.m, s.q), ConfigError);
}

TEST_CASE("zero data keeps the zero state") {
  for (Advection adv : kModes) {
    Setup s = small_setup(adv);
    TransportSolver sol(s.m, s.q, s.c, s.o);
    sol.set_incoming(std::make_shared<ZeroIncoming>());
    BoundaryTrace tr = run_forward(sol, 1.0);
    CHECK(max_abs(tr.outgoing) == 0.0);
    PhononState st = sol.state();
    CHECK(max_abs(st.f) == 0.0);
    CHECK(max_abs(st.g) == 0.0);
  }
}

TEST_CASE("equilibrium is a fixed point") {
  for (Advection adv : kModes) {
    for (double gamma0 : {1.0, 0.7, 2.5}) {
      Setup s = small_setup(adv, 0.6, gamma0);
      TransportSolver sol(s.m, s.q, s.c, s.o);
      sol.set_incoming(std::make_shared<EquilibriumIncoming>(s.m, 1.0));
      sol.set_initial_equilibrium(1.0);
      sol.start();
      double dev = 0.0;
      for (int n = 0; n < 100; ++n) {
        sol.step();
        PhononState st = sol.state();
        const std::size_t nmu = st.n_mu, nw = st.n_omega;
        for (int i = 0; i < st.nx_left; ++i)
          for (std::size_t j = 0; j < nmu; ++j)
            for (std::size_t k = 0; k < nw; ++k) dev = std::max(dev, std::abs(st.f_at(i, j, k) - s.m.xi[k]));
        for (int i = 0; i < st.nx_right; ++i)
          for (std::size_t j = 0; j < nmu; ++j)
            for (std::size_t k = 0; k < nw; ++k)
              dev = std::max(dev, std::abs(st.g_at(i, j, k) - gamma0 * s.m.xi[k]));
      }
      CHECK(dev <= 1e-10);
    }
  }
}

TEST_CASE("pure bounce returns at 2 / (mu v)") {
  const double mu = 0.5, width = 0.2;
  for (Advection adv : kModes) {
    Setup s = single_ray(adv, mu, 100);
    const BumpFunction& b = BumpFunction::phi0();
    TransportSolver sol(s.m, s.q, s.c, s.o);
    sol.set_incoming(std::make_shared<FunctionIncoming>(
        [&](double t, double, double) { return b(t / width) / width; }));
    BoundaryTrace tr = run_forward(sol, 5.0);
    double mass = 0.0, first = 0.0;
    for (std::size_t n = 0; n < tr.steps(); ++n) {
      mass += tr.at(n, 0, 0);
      first += tr.times[n] * tr.at(n, 0, 0);
    }
    REQUIRE(mass > 0.0);
    double arrival = first / mass - 0.5 * width;
    CHECK(std::abs(arrival - 2.0 / mu) <= s.o.grid.dx_left() / mu);
  }
}

TEST_CASE("traces are linear in the incoming data") {
  ProbeSpec p{0.3, 1.2, 0.25};
  for (Advection adv : kModes) {
    Setup s = small_setup(adv);
    auto a = run_forward(s.m, s.q, s.c, std::make_shared<ProbeIncoming>(p, 1.0), 2.0, s.o);
    auto b = run_forward(s.m, s.q, s.c, std::make_shared<ProbeIncoming>(p, 2.0), 2.0, s.o);
    double scale = max_abs(a.outgoing);
    REQUIRE(scale > 0.0);
    for (std::size_t i = 0; i < a.outgoing.size(); ++i)
      CHECK(std::abs(b.outgoing[i] - 2.0 * a.outgoing[i]) <= 1e-13 * scale);
  }
}

TEST_CASE("full system splits into ballistic and remainder parts") {
  ProbeSpec p{0.3, 1.2, 0.25};
  for (Advection adv : kModes) {
    Setup s = small_setup(adv);
    auto phi = std::make_shared<ProbeIncoming>(p);
    TransportSolver full(s.m, s.q, s.c, s.o, SystemKind::kFull);
    TransportSolver f0(s.m, s.q, s.c, s.o, SystemKind::kBallistic);
    TransportSolver f1(s.m, s.q, s.c, s.o, SystemKind::kRemainder);
    full.set_incoming(phi);
    f0.set_incoming(phi);
    f1.link(&full);
    double err = 0.0, scale = 0.0;
    for (int n = 0; n < 400; ++n) {
      full.step();
      f0.step();
      f1.step();
      auto a = full.outgoing_left(), b = f0.outgoing_left(), c = f1.outgoing_left();
      for (std::size_t i = 0; i < a.size(); ++i) {
        err = std::max(err, std::abs(a[i] - b[i] - c[i]));
        scale = std::max(scale, std::abs(a[i]));
      }
    }
    PhononState sf = full.state(), s0 = f0.state(), s1 = f1.state();
    for (std::size_t i = 0; i < sf.f.size(); ++i) err = std::max(err, std::abs(sf.f[i] - s0.f[i] - s1.f[i]));
    CHECK(scale > 0.0);
    CHECK(err <= 1e-8);
  }
}

TEST_CASE("outgoing energy never exceeds the injected energy") {
  ProbeSpec p{0.3, 1.2, 0.25};
  Setup s = small_setup(Advection::kTracking);
  TransportSolver sol(s.m, s.q, s.c, s.o);
  sol.set_incoming(std::make_shared<ProbeIncoming>(p));
  BoundaryTrace tr = run_forward(sol, 6.0);
  double out = 0.0;
  for (std::size_t n = 0; n < tr.steps(); ++n)
    for (std::size_t j = 0; j < tr.mu.size(); ++j)
      for (std::size_t k = 0; k < tr.omega.size(); ++k)
        out += tr.dt * tr.mu_weights[j] * -tr.mu[j] * tr.omega_weights[k] * s.m.v[k] * tr.at(n, j, k);
  CHECK(out > 0.0);
  CHECK(out <= sol.input_totals().flux * (1.0 + 1e-3));
}

TEST_CASE("results do not depend on the job count") {
  ProbeSpec p{0.3, 1.2, 0.25};
  for (Advection adv : kModes) {
    Setup s = small_setup(adv);
    SolverOptions o3 = s.o;
    o3.jobs = 3;
    auto a = run_forward(s.m, s.q, s.c, std::make_shared<ProbeIncoming>(p), 1.5, s.o);
    auto b = run_forward(s.m, s.q, s.c, std::make_shared<ProbeIncoming>(p), 1.5, o3);
    CHECK(a.outgoing == b.outgoing);
    CHECK(a.right_flux == b.right_flux);
  }
}

TEST_CASE("tracking and semi-Lagrangian agree on a resolved pulse") {
  ProbeSpec p{0.3, 1.0, 0.5};
  Setup a = small_setup(Advection::kTracking), b = small_setup(Advection::kSemiLagrangian);
  for (Setup* s : {&a, &b}) {
    s->o.grid = {800, 2400, 4.0};
    s->o.dt = 0.001;
  }
  auto ta = run_forward(a.m, a.q, a.c, std::make_shared<ProbeIncoming>(p), 1.2, a.o);
  auto tb = run_forward(b.m, b.q, b.c, std::make_shared<ProbeIncoming>(p), 1.2, b.o);
  double ia = 0.0, ib = 0.0;
  for (std::size_t n = 0; n < ta.steps(); ++n) {
    ia += ta.integrated(n);
    ib += tb.integrated(n);
  }
  REQUIRE(ia > 0.0);
  CHECK(std::abs(ia - ib) <= 0.05 * ia);
}

TEST_CASE("invalid setups are rejected") {
  Setup s = small_setup(Advection::kTracking);
  SolverOptions bad = s.o;
  bad.dt = 3.0;
  CHECK_THROWS_AS(TransportSolver(s.m, s.q, s.c, bad), ConfigError);
  bad = s.o;
  bad.grid.L = 1.0;
  CHECK_THROWS_AS(TransportSolver(s.m, s.q, s.c, bad), ConfigError);

  TransportSolver rem(s.m, s.q, s.c, s.o, SystemKind::kRemainder);
  CHECK_THROWS_AS(rem.step(), ConfigError);

  TransportSolver no_data(s.m, s.q, s.c, s.o);
  CHECK_THROWS_AS(no_data.step(), ConfigError);

  SolverOptions capped = s.o;
  capped.horizon_steps = 3;
  TransportSolver h(s.m, s.q, s.c, capped);
  h.set_incoming(std::make_shared<ZeroIncoming>());
  h.step();
  h.step();
  h.step();
  CHECK_THROWS_AS(h.step(), ConfigError);
}

TEST_CASE("non-finite data raises a numerical error with its step") {
  Setup s = small_setup(Advection::kSemiLagrangian);
  TransportSolver sol(s.m, s.q, s.c, s.o);
  sol.set_incoming(std::make_shared<FunctionIncoming>(
      [](double t, double, double) { return t > 0.05 ? std::numeric_limits<double>::quiet_NaN() : 0.0; },
      false));
  try {
    run_forward(sol, 1.0);
    FAIL("expected a numerical error");
  } catch (const NumericalError& e) {
    CHECK(e.step() > 0);
  }
}
