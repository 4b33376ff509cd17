#pragma once

#include <cstddef>
#include <vector>

namespace phonon {

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule mapped to [a, b]. Nodes ascending.
GaussRule gauss_legendre(int n, double a = -1.0, double b = 1.0);

struct AngularQuadrature {
  std::vector<double> nodes;    // ascending, symmetric about 0
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
  // Index of the node at -mu.
  std::size_t mirror(std::size_t j) const { return nodes.size() - 1 - j; }
  // Nodes [0, half()) are negative, [half(), size()) positive.
  std::size_t half() const { return nodes.size() / 2; }
};

// Gauss-Legendre on [-1, 1]; n must be even and >= 2.
AngularQuadrature build_angular_quadrature(int n);

// Panel on [0, 1] given by `breaks` (strictly increasing, interior to (0,1))
// with `counts[i]` Gauss nodes in panel i; mirrored onto [-1, 0).
AngularQuadrature build_composite_angular(const std::vector<double>& breaks,
                                          const std::vector<int>& counts);

struct SpectralGrid {
  double omega_max = 0.0;
  std::vector<double> nodes;    // strictly increasing, > 0
  std::vector<double> weights;  // > 0

  std::size_t size() const { return nodes.size(); }
};

// Composite Gauss-Legendre on (0, omega_max] with panels of 4 nodes; the last
// panel absorbs any remainder.
SpectralGrid build_spectral_grid(double omega_max, int n);

// Panels [breaks[i], breaks[i+1]] with counts[i] nodes each. breaks[0] >= 0,
// breaks.back() is the cutoff.
SpectralGrid build_spectral_grid_panels(const std::vector<double>& breaks,
                                        const std::vector<int>& counts);

// Checks the AngularQuadrature invariants; throws ConfigError when violated.
void check_angular(const AngularQuadrature& q);
void check_spectral(const SpectralGrid& g);

}  // namespace phonon
