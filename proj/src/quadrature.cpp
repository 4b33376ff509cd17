#include "phonon/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "phonon/errors.hpp"

namespace phonon {

namespace {

// Legendre P_n(x) and P_n'(x) by the three-term recurrence.
void legendre(int n, double x, double& p, double& dp) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  p = p1;
  dp = n * (x * p1 - p0) / (x * x - 1.0);
}

}  // namespace

GaussRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw ConfigError("gauss_legendre: need n >= 1");
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  GaussRule r;
  r.nodes.assign(n, mid);
  r.weights.assign(n, 2.0 * half);
  if (n == 1) return r;
  for (int i = 0; i < n / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double p = 0.0, dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      legendre(n, x, p, dp);
      double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    legendre(n, x, p, dp);
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[n - 1 - i] = mid + half * x;
    r.nodes[i] = mid - half * x;
    r.weights[n - 1 - i] = half * w;
    r.weights[i] = half * w;
  }
  if (n % 2 == 1) {
    double p = 0.0, dp = 1.0;
    legendre(n, 0.0, p, dp);
    r.weights[n / 2] = half * 2.0 / (dp * dp);
  }
  return r;
}

AngularQuadrature build_angular_quadrature(int n) {
  if (n < 2 || n % 2 != 0)
    throw ConfigError("angular quadrature needs an even node count >= 2, got " +
                      std::to_string(n));
  GaussRule g = gauss_legendre(n);
  AngularQuadrature q{std::move(g.nodes), std::move(g.weights)};
  // Enforce exact symmetry.
  for (std::size_t j = 0; j < q.half(); ++j) {
    std::size_t m = q.mirror(j);
    q.nodes[j] = -q.nodes[m];
    q.weights[j] = q.weights[m];
  }
  return q;
}

AngularQuadrature build_composite_angular(const std::vector<double>& breaks,
                                          const std::vector<int>& counts) {
  if (counts.size() != breaks.size() + 1)
    throw ConfigError("composite angular quadrature: counts/breaks mismatch");
  std::vector<double> edges{0.0};
  for (double b : breaks) {
    if (!(b > edges.back()) || !(b < 1.0))
      throw ConfigError("composite angular quadrature: breakpoints must increase inside (0,1)");
    edges.push_back(b);
  }
  edges.push_back(1.0);
  std::vector<double> pos_nodes, pos_weights;
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    if (counts[p] < 1) throw ConfigError("composite angular quadrature: empty panel");
    GaussRule g = gauss_legendre(counts[p], edges[p], edges[p + 1]);
    pos_nodes.insert(pos_nodes.end(), g.nodes.begin(), g.nodes.end());
    pos_weights.insert(pos_weights.end(), g.weights.begin(), g.weights.end());
  }
  AngularQuadrature q;
  const std::size_t h = pos_nodes.size();
  q.nodes.resize(2 * h);
  q.weights.resize(2 * h);
  for (std::size_t i = 0; i < h; ++i) {
    q.nodes[h + i] = pos_nodes[i];
    q.weights[h + i] = pos_weights[i];
    q.nodes[h - 1 - i] = -pos_nodes[i];
    q.weights[h - 1 - i] = pos_weights[i];
  }
  return q;
}

SpectralGrid build_spectral_grid(double omega_max, int n) {
  if (!(omega_max > 0.0)) throw ConfigError("spectral grid: omega_max must be positive");
  if (n < 1) throw ConfigError("spectral grid: need at least one node");
  const int per = 4;
  int panels = std::max(1, n / per);
  std::vector<double> breaks;
  std::vector<int> counts;
  for (int p = 0; p <= panels; ++p) breaks.push_back(omega_max * p / panels);
  for (int p = 0; p < panels; ++p) counts.push_back(p + 1 < panels ? per : n - per * (panels - 1));
  return build_spectral_grid_panels(breaks, counts);
}

SpectralGrid build_spectral_grid_panels(const std::vector<double>& breaks,
                                        const std::vector<int>& counts) {
  if (breaks.size() < 2 || counts.size() + 1 != breaks.size())
    throw ConfigError("spectral grid: counts/breaks mismatch");
  if (!(breaks.front() >= 0.0)) throw ConfigError("spectral grid: first breakpoint must be >= 0");
  SpectralGrid g;
  g.omega_max = breaks.back();
  for (std::size_t p = 0; p < counts.size(); ++p) {
    if (!(breaks[p + 1] > breaks[p]))
      throw ConfigError("spectral grid: breakpoints must increase");
    if (counts[p] < 1) throw ConfigError("spectral grid: empty panel");
    GaussRule r = gauss_legendre(counts[p], breaks[p], breaks[p + 1]);
    g.nodes.insert(g.nodes.end(), r.nodes.begin(), r.nodes.end());
    g.weights.insert(g.weights.end(), r.weights.begin(), r.weights.end());
  }
  check_spectral(g);
  return g;
}

void check_angular(const AngularQuadrature& q) {
  const std::size_t n = q.size();
  if (n < 2 || n % 2 != 0 || q.weights.size() != n)
    throw ConfigError("angular quadrature: need an even, matching node/weight count");
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double mu = q.nodes[j];
    if (!(std::abs(mu) < 1.0) || mu == 0.0)
      throw ConfigError("angular quadrature: node " + std::to_string(j) + " outside (-1,0)u(0,1)");
    if ((j < q.half()) != (mu < 0.0))
      throw ConfigError("angular quadrature: nodes must be ordered negative then positive");
    if (j > 0 && !(mu > q.nodes[j - 1]))
      throw ConfigError("angular quadrature: nodes must be strictly increasing");
    std::size_t m = q.mirror(j);
    if (q.nodes[m] != -mu || q.weights[m] != q.weights[j])
      throw ConfigError("angular quadrature: not symmetric at node " + std::to_string(j));
    if (!(q.weights[j] > 0.0))
      throw ConfigError("angular quadrature: non-positive weight at node " + std::to_string(j));
    sum += q.weights[j];
  }
  if (std::abs(sum - 2.0) > 2e-12)
    throw ConfigError("angular quadrature: weights do not sum to 2");
}

void check_spectral(const SpectralGrid& g) {
  if (g.nodes.empty() || g.nodes.size() != g.weights.size())
    throw ConfigError("spectral grid: empty or mismatched");
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!(g.nodes[k] > 0.0) || (k > 0 && !(g.nodes[k] > g.nodes[k - 1])))
      throw ConfigError("spectral grid: nodes must be positive and increasing (node " +
                        std::to_string(k) + ")");
    if (!(g.weights[k] > 0.0))
      throw ConfigError("spectral grid: non-positive weight at node " + std::to_string(k));
  }
}

}  // namespace phonon
