#include "phonon/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "phonon/errors.hpp"
#include "phonon/quadrature.hpp"

namespace phonon {

namespace {

double raw_phi0(double z) { return (z > 0.0 && z < 1.0) ? std::exp(-1.0 / (z * (1.0 - z))) : 0.0; }
double raw_psi0(double z) { return (z > -1.0 && z < 1.0) ? std::exp(-1.0 / (1.0 - z * z)) : 0.0; }

double integrate_panels(double (*f)(double), double a, double b, int panels, int per) {
  GaussRule g = gauss_legendre(per, 0.0, 1.0);
  double h = (b - a) / panels, s = 0.0;
  for (int p = 0; p < panels; ++p)
    for (int i = 0; i < per; ++i) s += h * g.weights[i] * f(a + h * (p + g.nodes[i]));
  return s;
}

}  // namespace

BumpFunction::BumpFunction(Kind kind) : kind_(kind) {
  double mass = kind == Kind::kPhi0 ? integrate_panels(raw_phi0, 0.0, 1.0, 64, 16)
                                    : integrate_panels(raw_psi0, -1.0, 1.0, 128, 16);
  c_ = 1.0 / mass;
}

const BumpFunction& BumpFunction::phi0() {
  static const BumpFunction b(Kind::kPhi0);
  return b;
}

const BumpFunction& BumpFunction::psi0() {
  static const BumpFunction b(Kind::kPsi0);
  return b;
}

double BumpFunction::operator()(double z) const {
  return c_ * (kind_ == Kind::kPhi0 ? raw_phi0(z) : raw_psi0(z));
}

void check_probe(const ProbeSpec& p, double omega_max) {
  if (!(p.epsilon > 0.0 && p.epsilon < 1.0))
    throw ConfigError("probe: epsilon must lie in (0,1), got " + std::to_string(p.epsilon));
  if (!(p.mu0 > 0.0 && p.mu0 + p.epsilon <= 1.0))
    throw ConfigError("probe: need 0 < mu0 and mu0 + epsilon <= 1 (mu0 = " + std::to_string(p.mu0) +
                      ", epsilon = " + std::to_string(p.epsilon) + ")");
  if (!(p.omega0 > 0.0 && p.omega0 + p.epsilon <= omega_max))
    throw ConfigError("probe: need 0 < omega0 and omega0 + epsilon <= omega_max (omega0 = " +
                      std::to_string(p.omega0) + ", omega_max = " + std::to_string(omega_max) + ")");
}

double eval_probe(const ProbeSpec& p, double t, double mu, double omega) {
  const BumpFunction& b = BumpFunction::phi0();
  const double e = p.epsilon;
  double a = b(t / e);
  if (a == 0.0) return 0.0;
  double m = b((mu - p.mu0) / e);
  if (m == 0.0) return 0.0;
  return a * m * b((omega - p.omega0) / e) / (e * e * e);
}

double f0_outgoing(double t, double mu, double omega, double eta1, double tau, double v,
                   const ProbeSpec& p) {
  const double tr = 2.0 / (std::abs(mu) * v);
  if (t < tr) return 0.0;
  return eta1 * eval_probe(p, t - tr, -mu, omega) * std::exp(-tr / tau);
}

namespace {

// int_0^Y e^{-y/tau} (xi/tau) h(t-y, x(y)) dy by the composite midpoint rule.
template <class XofY>
double source_integral(double t, double Y, const RayData& r, const SourceField& h, XofY x_of_y,
                       double dy) {
  if (!(Y > 0.0)) return 0.0;
  long n = std::max(1L, static_cast<long>(std::ceil(Y / dy)));
  double step = Y / n, s = 0.0;
  for (long i = 0; i < n; ++i) {
    double y = (i + 0.5) * step;
    s += std::exp(-y / r.tau) * h(t - y, x_of_y(y));
  }
  return s * step * r.xi / r.tau;
}

}  // namespace

double characteristic_outgoing_left(double t, const RayData& r, const SourceField& h,
                                    const BoundarySeries& f_at_interface, double dy) {
  const double c = std::abs(r.mu) * r.v;
  const double cross = 1.0 / c;
  double val = source_integral(t, std::min(t, cross), r, h, [c](double y) { return c * y; }, dy);
  if (t > cross) val += f_at_interface(t - cross) * std::exp(-cross / r.tau);
  return val;
}

double characteristic_incoming_interface(double t, const RayData& r, const SourceField& h,
                                         const BoundarySeries& g_at_interface,
                                         const BoundarySeries& phi_reflected, double dy) {
  const double c = std::abs(r.mu) * r.v;
  const double cross = 1.0 / c;
  double right = source_integral(t, std::min(t, cross), r, h,
                                 [c](double y) { return 1.0 - c * y; }, dy);
  if (t > cross) right += phi_reflected(t - cross) * std::exp(-cross / r.tau);
  return r.zeta1 * g_at_interface(t) + r.eta1 * right;
}

CConstantInputs c_inputs(const ProbeSpec& p, const MaterialModel& m) {
  CConstantInputs in;
  in.mu0 = p.mu0;
  in.tau = m.interpolate(m.tau, p.omega0);
  in.v = m.interpolate(m.v, p.omega0);
  in.v_prime = m.interpolate(m.v_prime, p.omega0);
  return in;
}

double c_integrand(const CConstantInputs& in, double t, double mu, double omega) {
  const BumpFunction& phi = BumpFunction::phi0();
  const BumpFunction& psi = BumpFunction::psi0();
  const double A = 2.0 / ((in.mu0 * in.v) * (in.mu0 * in.v));
  return psi(t - A * (in.v * mu + in.mu0 * in.v_prime * omega)) * phi(t) * phi(mu) * phi(omega);
}

namespace {

// Gauss-Legendre integral of a nonnegative, unimodal F over [lo, hi]
// restricted to where F exceeds `rel` times its sampled peak.
template <class F>
double support_gauss(const F& f, double lo, double hi, const GaussRule& unit, double rel = 1e-15) {
  if (!(hi > lo)) return 0.0;
  int samples = 64;
  double best = 0.0, best_x = lo;
  for (int round = 0; round < 2 && best == 0.0; ++round, samples *= 16) {
    for (int i = 0; i < samples; ++i) {
      double x = lo + (hi - lo) * (i + 0.5) / samples;
      double v = f(x);
      if (v > best) {
        best = v;
        best_x = x;
      }
    }
  }
  if (best == 0.0) return 0.0;
  const double thr = rel * best;
  auto cut = [&](double inside, double edge) {
    if (f(edge) > thr) return edge;
    double a = inside, b = edge;
    for (int i = 0; i < 48; ++i) {
      double m = 0.5 * (a + b);
      (f(m) > thr ? a : b) = m;
    }
    return b;
  };
  double a = cut(best_x, lo), b = cut(best_x, hi);
  double s = 0.0;
  for (std::size_t i = 0; i < unit.nodes.size(); ++i)
    s += unit.weights[i] * f(a + (b - a) * unit.nodes[i]);
  return s * (b - a);
}

}  // namespace

double c_constant(const CConstantInputs& in, int n) {
  if (!(in.mu0 > 0.0) || !(in.v > 0.0) || !(in.tau > 0.0))
    throw ConfigError("c_constant: mu0, v and tau must be positive");
  if (n < 2) throw ConfigError("c_constant: need at least 2 nodes per dimension");
  const GaussRule unit = gauss_legendre(n, 0.0, 1.0);
  const BumpFunction& phi = BumpFunction::phi0();
  const BumpFunction& psi = BumpFunction::psi0();
  const double A = 2.0 / ((in.mu0 * in.v) * (in.mu0 * in.v));
  const double Av = A * in.v;
  const double B = A * in.mu0 * in.v_prime;

  auto inner = [&](double t, double omega) {
    // psi0 argument t - B omega - Av mu must lie in (-1, 1).
    double s = t - B * omega;
    double lo = std::max(0.0, (s - 1.0) / Av), hi = std::min(1.0, (s + 1.0) / Av);
    return support_gauss([&](double mu) { return phi(mu) * psi(s - Av * mu); }, lo, hi, unit);
  };
  auto middle = [&](double t) {
    return support_gauss([&](double omega) { return phi(omega) * inner(t, omega); }, 0.0, 1.0, unit);
  };
  double integral =
      support_gauss([&](double t) { return phi(t) * middle(t); }, 0.0, 1.0, unit);
  double C = std::exp(-2.0 / (in.tau * in.mu0 * in.v)) * integral;
  if (!(C > 1e-14))
    throw ModelError("c_constant: degenerate constant C = " + std::to_string(C) +
                     " (psi0 window misses the shifted return time; check mu0, omega0)");
  return C;
}

double c_constant(const ProbeSpec& p, const MaterialModel& m, int n) {
  return c_constant(c_inputs(p, m), n);
}

}  // namespace phonon
