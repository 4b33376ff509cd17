#pragma once

#include <functional>

#include "phonon/material.hpp"

namespace phonon {

class BumpFunction {
 public:
  enum class Kind { kPhi0, kPsi0 };

  // phi0: c exp(-1/(z(1-z))) on (0,1); psi0: c exp(-1/(1-z^2)) on (-1,1).
  // The normalizer c is computed by quadrature so that the integral is 1.
  explicit BumpFunction(Kind kind);

  static const BumpFunction& phi0();
  static const BumpFunction& psi0();

  Kind kind() const { return kind_; }
  double normalizer() const { return c_; }
  double lower() const { return kind_ == Kind::kPhi0 ? 0.0 : -1.0; }
  double upper() const { return 1.0; }
  double operator()(double z) const;

 private:
  Kind kind_;
  double c_;
};

struct ProbeSpec {
  double mu0 = 0.5;
  double omega0 = 1.0;
  double epsilon = 0.2;
};

// Throws ConfigError when the probe support leaves the admissible ranges
// (mu0 + eps <= 1, omega0 + eps <= omega_max, eps < 1, mu0 > 0, omega0 > 0).
void check_probe(const ProbeSpec& p, double omega_max);

// eps^-3 phi0(t/eps) phi0((mu-mu0)/eps) phi0((omega-omega0)/eps).
double eval_probe(const ProbeSpec& p, double t, double mu, double omega);

// Closed-form outgoing ballistic data at x=0 for mu < 0: zero before the
// return time 2/(|mu| v), afterwards eta1 phi(t - 2/(|mu| v), -mu, omega)
// e^{-2/(tau |mu| v)}.
double f0_outgoing(double t, double mu, double omega, double eta1, double tau, double v,
                   const ProbeSpec& p);

// Data along one ordinate (mu, omega) for the characteristic formulas. The
// relaxation source is xi * h(t, x) / tau.
struct RayData {
  double mu = -0.5;  // the outgoing/incoming direction, mu < 0
  double tau = 1.0;
  double v = 1.0;
  double xi = 1.0;
  double eta1 = 1.0;
  double zeta1 = 0.0;
};

using SourceField = std::function<double(double t, double x)>;
using BoundarySeries = std::function<double(double t)>;

// f(t, 0, mu, omega) for mu < 0 given the source and f(., 1, mu, omega), the
// value entering layer 1 at the interface. `dy` bounds the midpoint step.
double characteristic_outgoing_left(double t, const RayData& r, const SourceField& h,
                                    const BoundarySeries& f_at_interface, double dy);

// f(t, 1, mu, omega) for mu < 0 from the interface condition: zeta1 g(t,1,mu)
// plus eta1 times the layer-1 solution at x=1 along direction -mu, which
// combines the source integral and the incoming data phi(., -mu, omega).
double characteristic_incoming_interface(double t, const RayData& r, const SourceField& h,
                                         const BoundarySeries& g_at_interface,
                                         const BoundarySeries& phi_reflected, double dy);

struct CConstantInputs {
  double mu0 = 0.5;
  double tau = 1.0;      // tau(omega0)
  double v = 1.0;        // v(omega0)
  double v_prime = 0.0;  // v'(omega0)
};

CConstantInputs c_inputs(const ProbeSpec& p, const MaterialModel& m);

// C = e^{-2/(tau mu0 v)} * triple integral over the unit cube of
// psi0(t - (2/(mu0 v)^2)(v mu + mu0 v' omega)) phi0(t) phi0(mu) phi0(omega),
// by nested n-point Gauss-Legendre rules restricted to the numerical support
// of the integrand. Throws ModelError when C <= 1e-14.
double c_constant(const CConstantInputs& in, int n = 32);
double c_constant(const ProbeSpec& p, const MaterialModel& m, int n = 32);

// The integrand of the triple integral (without the exponential factor).
double c_integrand(const CConstantInputs& in, double t, double mu, double omega);

}  // namespace phonon
