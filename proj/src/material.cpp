#include "phonon/material.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "phonon/errors.hpp"

namespace phonon {

Profile Profile::constant(double v) {
  Profile p;
  p.kind = Kind::kConst;
  p.value = v;
  return p;
}

Profile Profile::table(std::vector<double> omega, std::vector<double> values) {
  if (omega.empty() || omega.size() != values.size())
    throw ConfigError("tabulated profile: abscissae and values must be non-empty and match");
  for (std::size_t i = 1; i < omega.size(); ++i)
    if (!(omega[i] > omega[i - 1]))
      throw ConfigError("tabulated profile: abscissae must increase");
  Profile p;
  p.kind = Kind::kTable;
  p.omega = std::move(omega);
  p.values = std::move(values);
  return p;
}

Profile Profile::bose_einstein(double T_eq, double hbar_over_k0) {
  if (!(T_eq > 0.0) || !(hbar_over_k0 > 0.0))
    throw ConfigError("bose_einstein profile: T_eq and hbar_over_k0 must be positive");
  Profile p;
  p.kind = Kind::kBoseEinstein;
  p.T_eq = T_eq;
  p.hbar_over_k0 = hbar_over_k0;
  return p;
}

Profile Profile::tanh_step(double low, double high, double center, double width) {
  if (!(width > 0.0)) throw ConfigError("tanh profile: width must be positive");
  Profile p;
  p.kind = Kind::kTanh;
  p.low = low;
  p.high = high;
  p.center = center;
  p.width = width;
  return p;
}

namespace {

double interp_table(const std::vector<double>& x, const std::vector<double>& y, double at) {
  if (at <= x.front()) return y.front();
  if (at >= x.back()) return y.back();
  auto it = std::upper_bound(x.begin(), x.end(), at);
  std::size_t i = static_cast<std::size_t>(it - x.begin());
  double s = (at - x[i - 1]) / (x[i] - x[i - 1]);
  return (1.0 - s) * y[i - 1] + s * y[i];
}

// omega^2 e^x / (e^x - 1)^2 = omega^2 / (4 sinh^2(x/2)).
double bose_einstein_raw(double omega, double x_per_omega) {
  double x = x_per_omega * omega;
  if (x == 0.0) return 1.0 / (x_per_omega * x_per_omega);
  double s = std::sinh(0.5 * x);
  return omega * omega / (4.0 * s * s);
}

}  // namespace

double Profile::operator()(double omega) const {
  switch (kind) {
    case Kind::kConst:
      return value;
    case Kind::kTable:
      return interp_table(this->omega, values, omega);
    case Kind::kBoseEinstein:
      return bose_einstein_raw(omega, hbar_over_k0 / T_eq);
    case Kind::kTanh:
      return low + (high - low) * 0.5 * (1.0 + std::tanh((omega - center) / width));
  }
  return 0.0;
}

std::optional<double> Profile::derivative(double omega) const {
  switch (kind) {
    case Kind::kConst:
      return 0.0;
    case Kind::kTanh: {
      double c = std::cosh((omega - center) / width);
      return (high - low) * 0.5 / (width * c * c);
    }
    default:
      return std::nullopt;
  }
}

double MaterialModel::interpolate(const std::vector<double>& table, double omega) const {
  return interp_table(grid.nodes, table, omega);
}

double default_omega_max(double T_eq, double hbar_over_k0, double tail) {
  // Relative tail of x^2 e^{-x} beyond X is e^{-X}(X^2+2X+2) / (pi^2/3), an
  // upper bound for the Bose-Einstein weight.
  auto rel_tail = [](double X) {
    return std::exp(-X) * (X * X + 2.0 * X + 2.0) * 3.0 / (std::numbers::pi * std::numbers::pi);
  };
  double lo = 0.0, hi = 1.0;
  while (rel_tail(hi) > tail) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (rel_tail(mid) > tail ? lo : hi) = mid;
  }
  return hi * T_eq / hbar_over_k0;
}

void normalize_xi(std::vector<double>& xi, const SpectralGrid& grid,
                  const std::vector<double>& tau) {
  double s = 0.0;
  for (std::size_t k = 0; k < xi.size(); ++k) s += grid.weights[k] * xi[k] / tau[k];
  if (!(s > 0.0) || !std::isfinite(s))
    throw ModelError("equilibrium weight xi vanishes on the spectral grid "
                     "(cutoff too small or degenerate grid)");
  for (double& x : xi) x /= s;
  // A second pass absorbs the rounding of the first.
  s = 0.0;
  for (std::size_t k = 0; k < xi.size(); ++k) s += grid.weights[k] * xi[k] / tau[k];
  for (double& x : xi) x /= s;
}

std::vector<double> build_xi_from_bose_einstein(double T_eq, double hbar, double k0,
                                                const SpectralGrid& grid,
                                                const std::vector<double>& tau) {
  if (!(T_eq > 0.0)) throw ConfigError("bose_einstein: T_eq must be positive");
  if (!(hbar > 0.0) || !(k0 > 0.0)) throw ConfigError("bose_einstein: hbar and k0 must be positive");
  if (tau.size() != grid.size()) throw ConfigError("bose_einstein: tau table does not match grid");
  for (std::size_t k = 0; k < tau.size(); ++k)
    if (!(tau[k] > 0.0))
      throw ConfigError("bose_einstein: tau must be positive (node " + std::to_string(k) + ")");
  const double x_per_omega = hbar / (k0 * T_eq);
  std::vector<double> xi(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) xi[k] = bose_einstein_raw(grid.nodes[k], x_per_omega);
  normalize_xi(xi, grid, tau);
  return xi;
}

std::vector<double> centered_difference(const std::vector<double>& f,
                                        const std::vector<double>& x) {
  const std::size_t n = f.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  d[0] = (f[1] - f[0]) / (x[1] - x[0]);
  d[n - 1] = (f[n - 1] - f[n - 2]) / (x[n - 1] - x[n - 2]);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (x[i + 1] - x[i - 1]);
  return d;
}

SpectralGrid default_spectral_grid(const MaterialSpec& spec) {
  double wmax = spec.omega_max;
  if (wmax <= 0.0) {
    if (spec.xi.kind == Profile::Kind::kBoseEinstein)
      wmax = default_omega_max(spec.xi.T_eq, spec.xi.hbar_over_k0);
    else if (spec.xi.kind == Profile::Kind::kTable)
      wmax = spec.xi.omega.back();
    else
      throw ConfigError("material: omega_max required unless xi is Bose-Einstein or tabulated");
  }
  return build_spectral_grid(wmax, spec.n_omega);
}

MaterialModel build_material(const MaterialSpec& spec, const SpectralGrid& grid) {
  check_spectral(grid);
  if (!(spec.p0 > 1.0 && spec.p0 < 1.5))
    throw ConfigError("material: p0 must lie in (1, 3/2)");
  MaterialModel m;
  m.grid = grid;
  m.p0 = spec.p0;
  const std::size_t n = grid.size();
  m.tau.resize(n);
  m.v.resize(n);
  m.xi.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    m.tau[k] = spec.tau(grid.nodes[k]);
    m.v[k] = spec.v(grid.nodes[k]);
    if (!(m.tau[k] > 0.0))
      throw ConfigError("material: tau must be positive (node " + std::to_string(k) + ")");
    if (!(m.v[k] > 0.0))
      throw ConfigError("material: v must be positive (node " + std::to_string(k) + ")");
  }
  if (spec.xi.kind == Profile::Kind::kBoseEinstein) {
    m.xi = build_xi_from_bose_einstein(spec.xi.T_eq, spec.xi.hbar_over_k0, 1.0, grid, m.tau);
  } else {
    for (std::size_t k = 0; k < n; ++k) {
      m.xi[k] = spec.xi(grid.nodes[k]);
      if (m.xi[k] < 0.0) throw ConfigError("material: xi must be nonnegative (node " + std::to_string(k) + ")");
    }
    normalize_xi(m.xi, grid, m.tau);
  }
  m.v_prime.resize(n);
  const Profile* vp_src = spec.v_prime ? &*spec.v_prime : nullptr;
  bool analytic = vp_src == nullptr && spec.v.derivative(grid.nodes[0]).has_value();
  if (vp_src) {
    for (std::size_t k = 0; k < n; ++k) m.v_prime[k] = (*vp_src)(grid.nodes[k]);
  } else if (analytic) {
    for (std::size_t k = 0; k < n; ++k) m.v_prime[k] = *spec.v.derivative(grid.nodes[k]);
  } else {
    m.v_prime = centered_difference(m.v, grid.nodes);
  }
  m.v0 = *std::max_element(m.v.begin(), m.v.end());
  m.tau0 = *std::min_element(m.tau.begin(), m.tau.end());
  return m;
}

MaterialModel build_material(const MaterialSpec& spec) {
  return build_material(spec, default_spectral_grid(spec));
}

bool ValidationReport::ok() const {
  return std::all_of(items.begin(), items.end(), [](const ValidationItem& i) { return i.passed; });
}

const ValidationItem* ValidationReport::find(const std::string& name) const {
  for (const auto& i : items)
    if (i.name == name) return &i;
  return nullptr;
}

ValidationReport validate_material(const MaterialModel& m) {
  ValidationReport r;
  const std::size_t n = m.grid.size();
  auto sized = [n](const std::vector<double>& t) { return t.size() == n; };
  if (n == 0 || !sized(m.tau) || !sized(m.v) || !sized(m.xi) || !sized(m.grid.weights)) {
    r.items.push_back({"tables", false, -1, 0.0, "tables do not match the spectral grid"});
    return r;
  }

  ValidationItem a1{"A1", true, -1, 0.0, "v bounded and positive"};
  double vmax = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    if (!(m.v[k] > 0.0) || !std::isfinite(m.v[k]) || m.v[k] > m.v0) {
      a1.passed = false;
      a1.witness = static_cast<long>(k);
      a1.value = m.v[k];
      a1.detail = "v not in (0, v0] at node " + std::to_string(k);
      break;
    }
    if (m.v[k] > vmax) {
      vmax = m.v[k];
      a1.witness = static_cast<long>(k);
    }
  }
  if (a1.passed) a1.value = vmax;
  r.items.push_back(a1);

  ValidationItem a3{"A3", true, -1, 0.0, "tau bounded away from zero"};
  double tmin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    if (!(m.tau[k] > 0.0) || m.tau[k] < m.tau0) {
      a3.passed = false;
      a3.witness = static_cast<long>(k);
      a3.value = m.tau[k];
      a3.detail = "tau below tau0 or non-positive at node " + std::to_string(k);
      break;
    }
    if (m.tau[k] < tmin) {
      tmin = m.tau[k];
      a3.witness = static_cast<long>(k);
    }
  }
  if (a3.passed && !(m.tau0 > 0.0)) {
    a3.passed = false;
    a3.value = m.tau0;
    a3.detail = "tau0 must be positive";
  }
  if (a3.passed) a3.value = tmin;
  r.items.push_back(a3);

  ValidationItem a2{"A2", true, -1, 0.0, "sum w xi / (tau v^{1/p0})"};
  if (!(m.p0 > 1.0 && m.p0 < 1.5)) {
    a2.passed = false;
    a2.detail = "p0 outside (1, 3/2)";
  } else if (a1.passed && a3.passed) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      s += m.grid.weights[k] * m.xi[k] / (m.tau[k] * std::pow(m.v[k], 1.0 / m.p0));
    a2.value = s;
    a2.passed = std::isfinite(s);
  }
  r.items.push_back(a2);

  ValidationItem nonneg{"xi_nonnegative", true, -1, 0.0, "xi >= 0"};
  for (std::size_t k = 0; k < n; ++k)
    if (!(m.xi[k] >= 0.0)) {
      nonneg.passed = false;
      nonneg.witness = static_cast<long>(k);
      nonneg.value = m.xi[k];
      break;
    }
  r.items.push_back(nonneg);

  ValidationItem norm{"normalization", true, -1, 0.0, "sum w xi / tau = 1"};
  {
    double s = 0.0;
    bool finite = true;
    for (std::size_t k = 0; k < n; ++k) {
      if (!(m.tau[k] > 0.0)) {
        finite = false;
        break;
      }
      s += m.grid.weights[k] * m.xi[k] / m.tau[k];
    }
    norm.value = s;
    norm.passed = finite && std::abs(s - 1.0) <= 1e-12;
  }
  r.items.push_back(norm);

  for (int q : {1, 2, 4}) {
    ValidationItem mom{"xi_moment_" + std::to_string(q), true, -1, 0.0, "sum w xi^q finite"};
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += m.grid.weights[k] * std::pow(std::max(m.xi[k], 0.0), q);
    mom.value = s;
    mom.passed = std::isfinite(s);
    r.items.push_back(mom);
  }
  return r;
}

}  // namespace phonon
