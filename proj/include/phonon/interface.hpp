#pragma once

#include <vector>

#include "phonon/material.hpp"
#include "phonon/quadrature.hpp"

namespace phonon {

struct InterfaceCoefficients {
  std::vector<double> eta1, eta2, zeta1, zeta2;  // per omega node
  double gamma0 = 1.0;
  double alpha0 = 1.0;
};

// Half-range first moment sum_{mu>0} sum_omega w_mu w_omega mu v xi.
double half_range_equilibrium_flux(const MaterialModel& m, const AngularQuadrature& q);

// alpha0 = 1 / half_range_equilibrium_flux; ModelError when it vanishes.
double compute_alpha0(const MaterialModel& m, const AngularQuadrature& q);

// eta2 = 1 - eta1, zeta1 = (1 - eta1)/gamma0, zeta2 = 1 - zeta1. Throws
// ConfigError naming the first inadmissible node.
InterfaceCoefficients derive_coefficients(const std::vector<double>& eta1, double gamma0,
                                          const MaterialModel& m, const AngularQuadrature& q);

// Re-emitted values alpha0 xi(omega) * flux for every omega node (the same for
// every mu < 0).
std::vector<double> diffusive_reflux(double flux, const InterfaceCoefficients& c,
                                     const MaterialModel& m);

// Discrete sum_{mu>0} sum_omega w_mu w_omega mu v g, with g laid out
// [mu index][omega index] over the full quadrature (only mu > 0 rows used).
double half_range_flux(const std::vector<double>& g, const MaterialModel& m,
                       const AngularQuadrature& q);

}  // namespace phonon
