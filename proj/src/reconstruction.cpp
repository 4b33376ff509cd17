#include "phonon/reconstruction.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <thread>

#include "phonon/errors.hpp"

namespace phonon {

InterfaceCoefficients build_coefficients(const CoefficientSpec& spec, const MaterialModel& m,
                                         const AngularQuadrature& q) {
  std::vector<double> eta1(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) eta1[k] = spec.eta1(m.grid.nodes[k]);
  return derive_coefficients(eta1, spec.gamma0, m, q);
}

double t1_of(const ProbeSpec& p, const MaterialModel& m) {
  if (!(p.mu0 > 0.0)) throw ConfigError("t1: mu0 must be positive");
  return 2.0 / (p.mu0 * m.interpolate(m.v, p.omega0));
}

double measure_integrated(const std::vector<double>& times, const std::vector<double>& integrated,
                          double dt, double t1, double eps) {
  if (times.empty() || times.front() > t1 - eps + 1e-12 || times.back() < t1 + eps - 1e-12)
    throw CoverageError("measurement: trace does not cover [t1 - eps, t1 + eps] = [" +
                        std::to_string(t1 - eps) + ", " + std::to_string(t1 + eps) + "]");
  const BumpFunction& psi = BumpFunction::psi0();
  double s = 0.0;
  for (std::size_t n = 0; n < times.size(); ++n) {
    double z = (times[n] - t1) / eps;
    if (z <= -1.0 || z >= 1.0) continue;
    s += psi(z) * integrated[n];
  }
  return s * dt;
}

double measure(const BoundaryTrace& trace, double t1, double eps) {
  std::vector<double> integ(trace.steps());
  for (std::size_t n = 0; n < trace.steps(); ++n) {
    double z = (trace.times[n] - t1) / eps;
    integ[n] = (z > -1.0 && z < 1.0) ? trace.integrated(n) : 0.0;
  }
  return measure_integrated(trace.times, integ, trace.dt, t1, eps);
}

AngularQuadrature probe_angular(const ProbeSpec& p, const OrdinateLayout& lay) {
  std::vector<double> breaks{p.mu0};
  std::vector<int> counts{lay.n_mu_bulk, lay.n_mu_probe};
  if (p.mu0 + p.epsilon < 1.0 - 1e-12) {
    breaks.push_back(p.mu0 + p.epsilon);
    counts.push_back(lay.n_mu_bulk);
  }
  AngularQuadrature q = build_composite_angular(breaks, counts);
  check_angular(q);
  return q;
}

SpectralGrid probe_spectral(const ProbeSpec& p, double omega_max, const OrdinateLayout& lay) {
  std::vector<double> breaks{0.0, p.omega0, p.omega0 + p.epsilon};
  std::vector<int> counts{lay.n_omega_low, lay.n_omega_probe};
  const double top = p.omega0 + p.epsilon;
  if (top < omega_max * (1.0 - 1e-12)) {
    int panels = std::max(1, lay.n_omega_high / 4);
    for (int i = 1; i <= panels; ++i) {
      breaks.push_back(top + (omega_max - top) * i / panels);
      counts.push_back(i < panels ? 4 : std::max(1, lay.n_omega_high - 4 * (panels - 1)));
    }
  }
  return build_spectral_grid_panels(breaks, counts);
}

double minimal_L(double v0, double mu0, double v_omega0) { return v0 / (mu0 * v_omega0) + v0 / 2.0 + 1.0; }

CConstantInputs c_inputs_from_spec(const MaterialSpec& spec, const MaterialModel& m,
                                   const ProbeSpec& p) {
  CConstantInputs in;
  in.mu0 = p.mu0;
  in.tau = spec.tau(p.omega0);
  in.v = spec.v(p.omega0);
  if (spec.v_prime)
    in.v_prime = (*spec.v_prime)(p.omega0);
  else if (auto d = spec.v.derivative(p.omega0))
    in.v_prime = *d;
  else
    in.v_prime = m.interpolate(m.v_prime, p.omega0);
  return in;
}

namespace {

double omega_cutoff(const MaterialSpec& spec) {
  if (spec.omega_max > 0.0) return spec.omega_max;
  return default_spectral_grid(spec).omega_max;
}

double max_abs_diff3(const std::vector<double>& a, const std::vector<double>& b,
                     const std::vector<double>& c) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i] - c[i]));
  return e;
}

double integrate_outgoing(const std::vector<double>& out, const AngularQuadrature& q,
                          const MaterialModel& m) {
  const std::size_t nw = m.size();
  double s = 0.0;
  for (std::size_t j = 0; j < q.half(); ++j) {
    double inner = 0.0;
    for (std::size_t k = 0; k < nw; ++k) inner += m.grid.weights[k] * out[j * nw + k];
    s += q.weights[j] * inner;
  }
  return s;
}

}  // namespace

MeasurementRecord run_probe_single(const MaterialSpec& mspec, const CoefficientSpec& cspec,
                                   const ExperimentConfig& cfg, double epsilon) {
  auto clock0 = std::chrono::steady_clock::now();
  ProbeSpec p{cfg.mu0, cfg.omega0, epsilon};
  const double wmax = omega_cutoff(mspec);
  check_probe(p, wmax);
  const OrdinateLayout& lay = cfg.layout;
  if (cfg.check_resolution) {
    double need = 4.0 * std::max({cfg.solver.dt, epsilon / lay.n_mu_probe, epsilon / lay.n_omega_probe});
    if (epsilon < need)
      throw ConfigError("probe: epsilon = " + std::to_string(epsilon) +
                        " is under-resolved (needs eps >= 4 max(dt, dmu_eff, domega_eff) = " +
                        std::to_string(need) + ")");
  }
  AngularQuadrature q = probe_angular(p, lay);
  MaterialModel m = build_material(mspec, probe_spectral(p, wmax, lay));
  InterfaceCoefficients coeffs = build_coefficients(cspec, m, q);
  const double v_w0 = mspec.v(p.omega0);
  const double Lmin = minimal_L(m.v0, p.mu0, v_w0);
  if (cfg.solver.grid.L < Lmin)
    throw AssumptionError("right layer too short: L = " + std::to_string(cfg.solver.grid.L) +
                          " < minimal admissible L = " + std::to_string(Lmin));

  MeasurementRecord rec;
  rec.epsilon = epsilon;
  rec.t1 = 2.0 / (p.mu0 * v_w0);
  rec.C = c_constant(c_inputs_from_spec(mspec, m, p), cfg.c_nodes);
  rec.n_mu = q.size();
  rec.n_omega = m.size();
  const double dt = cfg.solver.dt;
  const double T_end = rec.t1 + epsilon + 2.0 * dt;
  const long steps = static_cast<long>(std::ceil(T_end / dt));

  auto phi = std::make_shared<ProbeIncoming>(p);
  SolverOptions so = cfg.solver;
  so.horizon_steps = steps;
  TransportSolver full(m, q, coeffs, so, SystemKind::kFull);
  full.set_incoming(phi);
  std::optional<TransportSolver> f0, f1;
  if (cfg.instrument) {
    f0.emplace(m, q, coeffs, so, SystemKind::kBallistic);
    f0->set_incoming(phi);
    f1.emplace(m, q, coeffs, so, SystemKind::kRemainder);
    f1->link(&full);
  }

  std::vector<double> times, I_full, I_f0, I_f1, flux;
  times.reserve(steps + 1);
  double decomp = 0.0, l1_excess = -std::numeric_limits<double>::infinity();
  const long norm_stride = std::max(1L, steps / 200);
  auto record = [&] {
    times.push_back(full.time());
    std::vector<double> out = full.outgoing_left();
    I_full.push_back(integrate_outgoing(out, q, m));
    flux.push_back(full.right_flux());
    if (cfg.instrument) {
      std::vector<double> o0 = f0->outgoing_left(), o1 = f1->outgoing_left();
      I_f0.push_back(integrate_outgoing(o0, q, m));
      I_f1.push_back(integrate_outgoing(o1, q, m));
      decomp = std::max(decomp, max_abs_diff3(out, o0, o1));
    }
    if (full.step_index() % norm_stride == 0 || full.step_index() == steps) {
      StateNorms nm = full.norms(2.0);
      const InputTotals& it = full.input_totals();
      double bound = std::min(it.l1, it.flux);
      double lhs = nm.l1_f + nm.l1_g;
      double scale = std::max(bound, std::numeric_limits<double>::min());
      if (bound > 0.0 || lhs > 0.0) l1_excess = std::max(l1_excess, (lhs - bound) / scale);
    }
  };
  full.start();
  if (cfg.instrument) {
    f0->start();
    f1->start();
  }
  record();
  double full_seconds = 0.0;
  while (full.step_index() < steps) {
    auto c0 = std::chrono::steady_clock::now();
    full.step();
    full_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - c0).count();
    if (cfg.instrument) {
      f0->step();
      f1->step();
    }
    record();
  }
  if (cfg.instrument) {
    PhononState sf = full.state(), s0 = f0->state(), s1 = f1->state();
    decomp = std::max(decomp, max_abs_diff3(sf.f, s0.f, s1.f));
  }

  rec.M = measure_integrated(times, I_full, dt, rec.t1, epsilon);
  rec.eta1_raw = rec.M / rec.C;
  rec.l1_state_max_excess = l1_excess;
  if (cfg.instrument) {
    rec.instrumented = true;
    rec.M_f0 = measure_integrated(times, I_f0, dt, rec.t1, epsilon);
    rec.M_f1 = measure_integrated(times, I_f1, dt, rec.t1, epsilon);
    rec.max_decomposition_error = decomp;
    // Contribution of g0: re-emission at x = L carried ballistically to x = 0.
    const BumpFunction& psi = BumpFunction::psi0();
    const double L = cfg.solver.grid.L;
    auto F_at = [&](double t) {
      if (t <= 0.0) return 0.0;
      double x = t / dt;
      std::size_t i = static_cast<std::size_t>(std::floor(x));
      if (i + 1 >= flux.size()) return flux.back();
      double fr = x - std::floor(x);
      return flux[i] + fr * (flux[i + 1] - flux[i]);
    };
    double Mg0 = 0.0;
    for (std::size_t n = 0; n < times.size(); ++n) {
      double z = (times[n] - rec.t1) / epsilon;
      if (z <= -1.0 || z >= 1.0) continue;
      double inner = 0.0;
      for (std::size_t j = 0; j < q.half(); ++j)
        for (std::size_t k = 0; k < m.size(); ++k) {
          double speed = std::abs(q.nodes[j]) * m.v[k];
          double lag = L / speed;
          inner += q.weights[j] * m.grid.weights[k] * coeffs.zeta1[k] *
                   std::exp(-lag / m.tau[k]) * coeffs.alpha0 * m.xi[k] * F_at(times[n] - lag);
        }
      Mg0 += psi(z) * inner;
    }
    rec.M_g0 = Mg0 * dt;
  }
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock0).count();
  rec.seconds_full = full_seconds;
  return rec;
}

std::vector<MeasurementRecord> run_probe_experiment(const MaterialSpec& mspec,
                                                    const CoefficientSpec& cspec,
                                                    const ExperimentConfig& cfg) {
  if (cfg.epsilons.empty()) throw ConfigError("experiment: empty epsilon list");
  for (std::size_t i = 1; i < cfg.epsilons.size(); ++i)
    if (!(cfg.epsilons[i] < cfg.epsilons[i - 1]))
      throw ConfigError("experiment: epsilon list must be strictly decreasing");
  std::vector<MeasurementRecord> out;
  for (double e : cfg.epsilons) out.push_back(run_probe_single(mspec, cspec, cfg, e));
  return out;
}

namespace {

struct LinearFit {
  double eta = 0.0, b = 0.0, rss = 0.0;
};

LinearFit fit_fixed_q(const std::vector<double>& eps, const std::vector<double>& y, double q) {
  const std::size_t n = eps.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::pow(eps[i], q);
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  // Centred normal equations.
  double mx = sx / n, my = sy / n;
  double cxx = 0.0, cxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cxx += (x[i] - mx) * (x[i] - mx);
    cxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(cxx > 1e-300)) throw ExtrapolationError("extrapolation: singular design (epsilons not distinct)");
  LinearFit f;
  f.b = cxy / cxx;
  f.eta = my - f.b * mx;
  for (std::size_t i = 0; i < n; ++i) {
    double r = y[i] - f.eta - f.b * x[i];
    f.rss += r * r;
  }
  return f;
}

// d rss / d q at the profiled (eta, b), by the envelope theorem.
double rss_slope(const std::vector<double>& eps, const std::vector<double>& y, double q) {
  LinearFit f = fit_fixed_q(eps, y, q);
  double g = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    double x = std::pow(eps[i], q);
    double r = y[i] - f.eta - f.b * x;
    g += -2.0 * r * f.b * x * std::log(eps[i]);
  }
  return g;
}

}  // namespace

ReconstructionResult extrapolate_eta1(const std::vector<MeasurementRecord>& records,
                                      const FitOptions& fit, double gamma0, double omega0) {
  std::vector<double> eps, y;
  for (const auto& r : records) {
    if (!(r.epsilon > 0.0)) throw ExtrapolationError("extrapolation: epsilon must be positive");
    eps.push_back(r.epsilon);
    y.push_back(r.eta1_raw);
  }
  std::vector<double> distinct = eps;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3)
    throw ExtrapolationError("extrapolation: need at least 3 records with distinct epsilon, got " +
                             std::to_string(distinct.size()));

  double q;
  if (fit.pin_q) {
    if (!(fit.p0 > 1.0 && fit.p0 < 1.5)) throw ExtrapolationError("extrapolation: p0 outside (1, 3/2)");
    double p0c = fit.p0 / (fit.p0 - 1.0);
    q = 1.0 - 3.0 / p0c;
  } else {
    // Scan, then refine the stationary point of the profiled residual.
    const int N = 400;
    double best_q = fit.q_max, best = std::numeric_limits<double>::infinity();
    std::vector<double> qs(N + 1), rs(N + 1);
    for (int i = 0; i <= N; ++i) {
      qs[i] = fit.q_min + (fit.q_max - fit.q_min) * i / N;
      rs[i] = fit_fixed_q(eps, y, qs[i]).rss;
      if (rs[i] < best) {
        best = rs[i];
        best_q = qs[i];
      }
    }
    q = best_q;
    int ib = static_cast<int>(std::lround((best_q - fit.q_min) / (fit.q_max - fit.q_min) * N));
    double lo = qs[std::max(0, ib - 1)], hi = qs[std::min(N, ib + 1)];
    double glo = rss_slope(eps, y, lo), ghi = rss_slope(eps, y, hi);
    if (glo < 0.0 && ghi > 0.0) {
      for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        double mid = 0.5 * (lo + hi);
        (rss_slope(eps, y, mid) < 0.0 ? lo : hi) = mid;
      }
      double cand = 0.5 * (lo + hi);
      if (fit_fixed_q(eps, y, cand).rss <= best) q = cand;
    }
  }
  LinearFit f = fit_fixed_q(eps, y, q);
  ReconstructionResult res;
  res.omega0 = omega0;
  res.eta1_estimate = f.eta;
  res.fit_b = f.b;
  res.fit_exponent = q;
  res.exponent_pinned = fit.pin_q;
  res.residual = std::sqrt(f.rss);
  res.records = records;
  res.eta2 = 1.0 - f.eta;
  res.zeta1 = (1.0 - f.eta) / gamma0;
  res.zeta2 = 1.0 - res.zeta1;
  res.flagged = !(f.eta >= -0.1 && f.eta <= 1.1);
  return res;
}

double fit_power_exponent(const std::vector<double>& eps, const std::vector<double>& y) {
  if (eps.size() < 2 || eps.size() != y.size())
    throw ExtrapolationError("power fit: need at least two points");
  double sx = 0.0, sy = 0.0;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0) || y[i] == 0.0) throw ExtrapolationError("power fit: nonpositive data");
    lx.push_back(std::log(eps[i]));
    ly.push_back(std::log(std::abs(y[i])));
    sx += lx.back();
    sy += ly.back();
  }
  double mx = sx / lx.size(), my = sy / ly.size(), cxx = 0.0, cxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    cxx += (lx[i] - mx) * (lx[i] - mx);
    cxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(cxx > 0.0)) throw ExtrapolationError("power fit: epsilons not distinct");
  return cxy / cxx;
}

std::vector<SweepEntry> frequency_sweep(const MaterialSpec& mspec, const CoefficientSpec& cspec,
                                        const ExperimentConfig& cfg,
                                        const std::vector<double>& omega0_list,
                                        const FitOptions& fit, int jobs) {
  std::vector<SweepEntry> out(omega0_list.size());
  auto work = [&](std::size_t i) {
    SweepEntry& e = out[i];
    e.omega0 = omega0_list[i];
    try {
      ExperimentConfig c = cfg;
      c.omega0 = omega0_list[i];
      c.solver.jobs = 1;
      auto recs = run_probe_experiment(mspec, cspec, c);
      e.result = extrapolate_eta1(recs, fit, cspec.gamma0, c.omega0);
    } catch (const Error& err) {
      e.error = err.what();
    }
  };
  const std::size_t n = omega0_list.size();
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(jobs, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
    return out;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) work(i);
    });
  for (auto& t : pool) t.join();
  return out;
}

std::vector<double> knot_positions(const MaterialModel& m, int knots) {
  if (knots < 1) throw ConfigError("least squares: need at least one knot");
  const double a = m.grid.nodes.front(), b = m.grid.nodes.back();
  std::vector<double> pos(knots);
  if (knots == 1) {
    pos[0] = 0.5 * (a + b);
    return pos;
  }
  for (int i = 0; i < knots; ++i) pos[i] = a + (b - a) * i / (knots - 1);
  return pos;
}

std::vector<double> eta1_from_knots(const MaterialModel& m, const std::vector<double>& knot_omega,
                                    const std::vector<double>& knot_eta1) {
  std::vector<double> eta(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) {
    double w = m.grid.nodes[k];
    double v;
    if (knot_omega.size() == 1 || w <= knot_omega.front()) {
      v = knot_eta1.front();
    } else if (w >= knot_omega.back()) {
      v = knot_eta1.back();
    } else {
      auto it = std::upper_bound(knot_omega.begin(), knot_omega.end(), w);
      std::size_t i = static_cast<std::size_t>(it - knot_omega.begin());
      double s = (w - knot_omega[i - 1]) / (knot_omega[i] - knot_omega[i - 1]);
      v = (1.0 - s) * knot_eta1[i - 1] + s * knot_eta1[i];
    }
    eta[k] = v;
  }
  return eta;
}

std::vector<double> simulate_traces(const MaterialModel& m, const AngularQuadrature& q,
                                    double gamma0, const std::vector<double>& knot_omega,
                                    const std::vector<double>& knot_eta1,
                                    const std::vector<ProbeSpec>& probes, const SolverOptions& o,
                                    double T_end) {
  InterfaceCoefficients c = derive_coefficients(eta1_from_knots(m, knot_omega, knot_eta1), gamma0, m, q);
  std::vector<double> all;
  for (const ProbeSpec& p : probes) {
    BoundaryTrace tr = run_forward(m, q, c, std::make_shared<ProbeIncoming>(p), T_end, o);
    all.insert(all.end(), tr.outgoing.begin(), tr.outgoing.end());
  }
  return all;
}

void add_noise(std::vector<double>& obs, double level, std::uint64_t seed) {
  if (level <= 0.0) return;
  double scale = 0.0;
  for (double v : obs) scale = std::max(scale, std::abs(v));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, level * scale);
  for (double& v : obs) v += nd(rng);
}

LeastSquaresResult least_squares_reconstruct(const std::vector<double>& observed,
                                             const MaterialModel& m, const AngularQuadrature& q,
                                             double gamma0, const std::vector<ProbeSpec>& probes,
                                             const SolverOptions& o, double T_end,
                                             const LeastSquaresConfig& cfg) {
  LeastSquaresResult res;
  res.knot_omega = knot_positions(m, cfg.knots);
  res.knot_eta1.assign(cfg.knots, cfg.initial);
  const double lo = std::max(0.0, 1.0 - gamma0), hi = 1.0;
  for (double& e : res.knot_eta1) e = std::clamp(e, lo, hi);

  // Quadrature weights of one trace row, repeated over steps and probes.
  const std::size_t half = q.half(), nw = m.size();
  std::vector<double> w(half * nw);
  for (std::size_t j = 0; j < half; ++j)
    for (std::size_t k = 0; k < nw; ++k) w[j * nw + k] = q.weights[j] * m.grid.weights[k] * o.dt;

  auto misfit = [&](const std::vector<double>& eta) {
    ++res.evaluations;
    std::vector<double> sim = simulate_traces(m, q, gamma0, res.knot_omega, eta, probes, o, T_end);
    if (sim.size() != observed.size())
      throw ConfigError("least squares: observed trace length does not match the forward model");
    double s = 0.0;
    for (std::size_t i = 0; i < sim.size(); ++i) {
      double d = sim[i] - observed[i];
      s += w[i % w.size()] * d * d;
    }
    return s;
  };

  double current = misfit(res.knot_eta1);
  res.misfit_history.push_back(current);
  if (current == 0.0) {
    res.status = "converged";
    return res;
  }
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  int stall = 0;
  res.status = "max_sweeps";
  for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    double max_move = 0.0;
    for (int i = 0; i < cfg.knots; ++i) {
      std::vector<double> trial = res.knot_eta1;
      auto f = [&](double x) {
        trial[i] = x;
        return misfit(trial);
      };
      double a = lo, b = hi;
      double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
      double f1 = f(x1), f2 = f(x2);
      while (b - a > cfg.tol) {
        if (f1 < f2) {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - gr * (b - a);
          f1 = f(x1);
        } else {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + gr * (b - a);
          f2 = f(x2);
        }
      }
      double xb = f1 < f2 ? x1 : x2, fb = std::min(f1, f2);
      if (fb < current) {
        max_move = std::max(max_move, std::abs(xb - res.knot_eta1[i]));
        res.knot_eta1[i] = xb;
        current = fb;
      }
    }
    double prev = res.misfit_history.back();
    res.misfit_history.push_back(current);
    if (!(current < prev)) {
      if (++stall >= 3) {
        res.status = "stalled";
        break;
      }
    } else {
      stall = 0;
    }
    if (max_move < cfg.tol) {
      res.status = "converged";
      break;
    }
  }
  return res;
}

}  // namespace phonon
