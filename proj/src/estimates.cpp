#include "phonon/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "phonon/errors.hpp"
#include "phonon/reconstruction.hpp"

namespace phonon {

bool EstimateReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const EstimateCheck& c) { return c.passed; });
}

const EstimateCheck* EstimateReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

RunArtifacts collect_artifacts(TransportSolver& solver, double T_end, double p, long stride) {
  if (!(p >= 1.0)) throw ConfigError("estimates: p must be >= 1");
  RunArtifacts a;
  a.p = p;
  a.gamma0 = solver.coefficients().gamma0;
  stride = std::max(1L, stride);
  const long steps = static_cast<long>(std::llround(T_end / solver.options().dt));
  solver.set_lp_exponent(p);
  solver.start();
  auto sample = [&] { a.samples.push_back({solver.time(), solver.norms(p), solver.input_totals()}); };
  sample();
  while (solver.step_index() < steps) {
    solver.step();
    if (solver.step_index() % stride == 0 || solver.step_index() == steps) sample();
  }
  return a;
}

namespace {

template <class Fn>
void visit_incoming(const IncomingData& phi, const MaterialModel& m, const AngularQuadrature& q,
                    double T_end, double dt, Fn fn) {
  const long steps = static_cast<long>(std::llround(T_end / dt));
  for (long n = 0; n <= steps; ++n)
    for (std::size_t j = q.half(); j < q.size(); ++j)
      for (std::size_t k = 0; k < m.size(); ++k)
        fn(n * dt, q.nodes[j], k, phi.value(n * dt, q.nodes[j], m.grid.nodes[k]));
}

double rel_margin(double bound, double measured) {
  return bound > 0.0 ? (bound - measured) / bound : (measured <= 0.0 ? 0.0 : -1.0);
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

}  // namespace

double incoming_sup_ratio(const IncomingData& phi, const MaterialModel& m,
                          const AngularQuadrature& q, double T_end, double dt) {
  double sup = 0.0;
  visit_incoming(phi, m, q, T_end, dt, [&](double, double, std::size_t k, double v) {
    if (v == 0.0) return;
    sup = std::max(sup, m.xi[k] > 0.0 ? v / m.xi[k] : std::numeric_limits<double>::infinity());
  });
  return sup;
}

void check_incoming_bound(const IncomingData& phi, const MaterialModel& m,
                          const AngularQuadrature& q, double T_end, double dt, double m0) {
  visit_incoming(phi, m, q, T_end, dt, [&](double t, double mu, std::size_t k, double v) {
    if (v < 0.0 || v > m0 * m.xi[k] * (1.0 + 1e-14))
      throw ConfigError("maximum principle: incoming data violates 0 <= phi <= m0 xi at t = " +
                        fmt(t) + ", mu = " + fmt(mu) + ", omega = " + fmt(m.grid.nodes[k]));
  });
}

EstimateCheck l1_budget(const RunArtifacts& a, const EstimateTolerances& tol) {
  EstimateCheck c;
  c.name = "l1_budget";
  c.margin = std::numeric_limits<double>::infinity();
  double worst_norm = 0.0, worst_flux = 0.0;
  for (const RunSample& s : a.samples) {
    double lhs = s.norms.l1_f + s.norms.l1_g;
    double bound = std::min(s.inputs.l1, s.inputs.flux);
    if (lhs == 0.0 && bound == 0.0) continue;
    double mg = rel_margin(bound, lhs);
    if (mg < c.margin) {
      c.margin = mg;
      c.bound = bound;
      c.measured = lhs;
      worst_norm = s.inputs.l1;
      worst_flux = s.inputs.flux;
    }
    if (!(lhs <= bound * (1.0 + tol.integral))) c.passed = false;
  }
  if (!std::isfinite(c.margin)) c.margin = 0.0;
  c.detail = "norm bound " + fmt(worst_norm) + ", flux bound " + fmt(worst_flux) +
             " at the worst sample";
  return c;
}

std::vector<EstimateCheck> maximum_principle(const RunArtifacts& a, double m0,
                                             const EstimateTolerances& tol) {
  EstimateCheck lo{"max_principle_lower", -tol.lower, std::numeric_limits<double>::infinity(), 0.0, true,
                   "min over f and g"};
  EstimateCheck uf{"max_principle_f", m0, 0.0, 0.0, true, "max f / xi"};
  EstimateCheck ug{"max_principle_g", a.gamma0 * m0, 0.0, 0.0, true, "max g / xi"};
  for (const RunSample& s : a.samples) {
    lo.measured = std::min(lo.measured, s.norms.min_value);
    uf.measured = std::max(uf.measured, s.norms.max_f_over_xi);
    ug.measured = std::max(ug.measured, s.norms.max_g_over_xi);
  }
  if (a.samples.empty()) lo.measured = 0.0;
  lo.passed = lo.measured >= -tol.lower;
  lo.margin = lo.measured + tol.lower;
  uf.passed = uf.measured <= m0 * (1.0 + tol.pointwise);
  uf.margin = rel_margin(uf.bound, uf.measured);
  ug.passed = ug.measured <= ug.bound * (1.0 + tol.pointwise);
  ug.margin = rel_margin(ug.bound, ug.measured);
  return {lo, uf, ug};
}

EstimateCheck lp_bound(const RunArtifacts& a, const EstimateTolerances& tol) {
  EstimateCheck c;
  c.name = "lp_bound";
  c.margin = std::numeric_limits<double>::infinity();
  const double p = a.p;
  for (const RunSample& s : a.samples) {
    double lhs = std::pow(s.norms.lp_f + s.norms.lp_g, 1.0 / p);
    double bound = std::pow(1.0 + a.gamma0, 1.0 / p) * std::pow(s.inputs.lp, 1.0 / p);
    if (lhs == 0.0 && bound == 0.0) continue;
    double mg = rel_margin(bound, lhs);
    if (mg < c.margin) {
      c.margin = mg;
      c.bound = bound;
      c.measured = lhs;
    }
    if (!(lhs <= bound * (1.0 + tol.integral))) c.passed = false;
  }
  if (!std::isfinite(c.margin)) c.margin = 0.0;
  c.detail = "p = " + fmt(p) + ", weight xi^(1-p)";
  return c;
}

std::vector<EstimateCheck> assumption_audit(const MaterialModel& m, const InterfaceCoefficients& c,
                                            const ProbeSpec& p, double v_omega0,
                                            const SpatialGrid& grid) {
  std::vector<EstimateCheck> out;
  ValidationReport r = validate_material(m);
  for (const char* name : {"A1", "A2", "A3"}) {
    const ValidationItem* it = r.find(name);
    if (!it) continue;
    EstimateCheck e;
    e.name = name;
    e.measured = it->value;
    e.passed = it->passed;
    e.detail = it->detail + (it->witness >= 0 ? " (node " + std::to_string(it->witness) + ")" : "");
    if (e.name == "A1") e.bound = m.v0;
    if (e.name == "A3") e.bound = m.tau0;
    out.push_back(e);
  }
  EstimateCheck a4;
  a4.name = "A4";
  a4.bound = minimal_L(m.v0, p.mu0, v_omega0);
  a4.measured = grid.L;
  a4.passed = grid.L >= a4.bound * (1.0 - 1e-12);
  a4.margin = grid.L - a4.bound;
  a4.detail = "L >= v0/(mu0 v(omega0)) + v0/2 + 1; minimal L = " + fmt(a4.bound);
  out.push_back(a4);

  EstimateCheck cc;
  cc.name = "coefficients";
  cc.detail = "eta1 + eta2 = 1, zeta1 + zeta2 = 1, eta1 + gamma0 zeta1 = 1";
  for (std::size_t k = 0; k < c.eta1.size(); ++k) {
    double e = std::max({std::abs(c.eta1[k] + c.eta2[k] - 1.0), std::abs(c.zeta1[k] + c.zeta2[k] - 1.0),
                         std::abs(c.eta1[k] + c.gamma0 * c.zeta1[k] - 1.0)});
    cc.measured = std::max(cc.measured, e);
  }
  cc.bound = 1e-12;
  cc.passed = cc.measured <= cc.bound;
  cc.margin = cc.bound - cc.measured;
  out.push_back(cc);
  return out;
}

}  // namespace phonon
