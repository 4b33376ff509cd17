#include "phonon/interface.hpp"

#include <cmath>
#include <string>

#include "phonon/errors.hpp"

namespace phonon {

double half_range_equilibrium_flux(const MaterialModel& m, const AngularQuadrature& q) {
  double s_omega = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) s_omega += m.grid.weights[k] * m.v[k] * m.xi[k];
  double s_mu = 0.0;
  for (std::size_t j = q.half(); j < q.size(); ++j) s_mu += q.weights[j] * q.nodes[j];
  return s_mu * s_omega;
}

double compute_alpha0(const MaterialModel& m, const AngularQuadrature& q) {
  double d = half_range_equilibrium_flux(m, q);
  if (!(d > 0.0) || !std::isfinite(d))
    throw ModelError("alpha0: half-range equilibrium flux vanishes (degenerate xi)");
  return 1.0 / d;
}

InterfaceCoefficients derive_coefficients(const std::vector<double>& eta1, double gamma0,
                                          const MaterialModel& m, const AngularQuadrature& q) {
  if (eta1.size() != m.size())
    throw ConfigError("interface: eta1 table has " + std::to_string(eta1.size()) +
                      " entries, spectral grid has " + std::to_string(m.size()));
  if (!(gamma0 > 0.0) || !std::isfinite(gamma0))
    throw ConfigError("interface: gamma0 must be positive");
  InterfaceCoefficients c;
  c.gamma0 = gamma0;
  const std::size_t n = eta1.size();
  c.eta1 = eta1;
  c.eta2.resize(n);
  c.zeta1.resize(n);
  c.zeta2.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(eta1[k] >= 0.0 && eta1[k] <= 1.0))
      throw ConfigError("interface: eta1 = " + std::to_string(eta1[k]) + " outside [0,1] at node " +
                        std::to_string(k));
    c.eta2[k] = 1.0 - eta1[k];
    c.zeta1[k] = (1.0 - eta1[k]) / gamma0;
    if (!(c.zeta1[k] >= 0.0 && c.zeta1[k] <= 1.0))
      throw ConfigError("interface: inadmissible coefficients, zeta1 = " + std::to_string(c.zeta1[k]) +
                        " outside [0,1] at node " + std::to_string(k) + " (omega = " +
                        std::to_string(m.grid.nodes[k]) + ")");
    c.zeta2[k] = 1.0 - c.zeta1[k];
  }
  c.alpha0 = compute_alpha0(m, q);
  return c;
}

std::vector<double> diffusive_reflux(double flux, const InterfaceCoefficients& c,
                                     const MaterialModel& m) {
  std::vector<double> out(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) out[k] = c.alpha0 * m.xi[k] * flux;
  return out;
}

double half_range_flux(const std::vector<double>& g, const MaterialModel& m,
                       const AngularQuadrature& q) {
  const std::size_t nw = m.size();
  double s = 0.0;
  for (std::size_t j = q.half(); j < q.size(); ++j) {
    double inner = 0.0;
    for (std::size_t k = 0; k < nw; ++k) inner += m.grid.weights[k] * m.v[k] * g[j * nw + k];
    s += q.weights[j] * q.nodes[j] * inner;
  }
  return s;
}

}  // namespace phonon
