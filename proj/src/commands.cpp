#include "phonon/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "phonon/errors.hpp"

namespace phonon {

namespace fs = std::filesystem;

namespace {

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string hex64(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("output: cannot write '" + p.string() + "'");
  out << text;
}

void write_json(const fs::path& p, const Json& j) { write_text(p, j.dump(2) + "\n"); }

double omega_cutoff(const MaterialSpec& spec) {
  return spec.omega_max > 0.0 ? spec.omega_max : default_spectral_grid(spec).omega_max;
}

Json metadata(const RunConfig& cfg, const std::string& command, double seconds, int jobs) {
  return Json{{"command", command},
              {"config_hash", hex64(fnv1a(cfg.resolved.dump()))},
              {"material_hash", hex64(fnv1a(cfg.resolved.at("material").dump()))},
              {"interface_hash", hex64(fnv1a(cfg.resolved.at("interface").dump()))},
              {"jobs", jobs},
              {"seconds", seconds}};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Runs the probe experiment with the epsilons spread over `jobs` threads.
std::vector<MeasurementRecord> probe_records(const RunConfig& cfg, int jobs) {
  const ExperimentConfig& ex = cfg.experiment;
  if (ex.epsilons.empty()) throw ConfigError("experiment: empty epsilon list");
  for (std::size_t i = 1; i < ex.epsilons.size(); ++i)
    if (!(ex.epsilons[i] < ex.epsilons[i - 1]))
      throw ConfigError("experiment: epsilon list must be strictly decreasing");
  const std::size_t n = ex.epsilons.size();
  std::vector<MeasurementRecord> out(n);
  if (jobs <= 1 || n == 1) {
    ExperimentConfig c = ex;
    c.solver.jobs = std::max(1, jobs);
    for (std::size_t i = 0; i < n; ++i)
      out[i] = run_probe_single(cfg.material, cfg.interface, c, ex.epsilons[i]);
    return out;
  }
  ExperimentConfig c = ex;
  c.solver.jobs = 1;
  std::vector<std::exception_ptr> errs(n);
  std::size_t workers = std::min<std::size_t>(jobs, n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          out[i] = run_probe_single(cfg.material, cfg.interface, c, ex.epsilons[i]);
        } catch (...) {
          errs[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return out;
}

std::string convergence_csv(const std::vector<MeasurementRecord>& recs,
                            const std::optional<double>& truth) {
  bool instr = std::any_of(recs.begin(), recs.end(), [](const MeasurementRecord& r) { return r.instrumented; });
  std::ostringstream os;
  os << "epsilon,M,C,M_over_C";
  if (truth) os << ",abs_error";
  if (instr) os << ",M_f0,M_f1,M_g0,decomposition_error";
  os << "\n";
  for (const auto& r : recs) {
    os << g17(r.epsilon) << ',' << g17(r.M) << ',' << g17(r.C) << ',' << g17(r.eta1_raw);
    if (truth) os << ',' << g17(std::abs(r.eta1_raw - *truth));
    if (instr)
      os << ',' << g17(r.M_f0) << ',' << g17(r.M_f1) << ',' << g17(r.M_g0) << ','
         << g17(r.max_decomposition_error);
    os << "\n";
  }
  return os.str();
}

Json records_json(const std::vector<MeasurementRecord>& recs) {
  Json a = Json::array();
  for (const auto& r : recs) a.push_back(record_to_json(r));
  return Json{{"records", a}};
}

std::string coefficient_row(const ReconstructionResult& r) {
  return g17(r.omega0) + "," + g17(r.eta1_estimate) + "," + g17(r.eta2) + "," + g17(r.zeta1) + "," +
         g17(r.zeta2) + "\n";
}

const char* kCoefficientHeader = "omega0,eta1,eta2,zeta1,zeta2\n";

std::vector<MeasurementRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("reconstruct: cannot open records file '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw ConfigError("reconstruct: '" + path + "' is not valid JSON: " + e.what());
  }
  const Json& arr = j.is_object() ? j.at("records") : j;
  if (!arr.is_array()) throw ConfigError("reconstruct: records must be a list");
  std::vector<MeasurementRecord> out;
  for (const Json& r : arr) out.push_back(record_from_json(r));
  return out;
}

double max_equilibrium_deviation(const TransportSolver& s, double m0) {
  PhononState st = s.state();
  const MaterialModel& m = s.material();
  const double g0 = s.coefficients().gamma0;
  double dev = 0.0;
  for (std::size_t idx = 0; idx < st.f.size(); ++idx)
    dev = std::max(dev, std::abs(st.f[idx] - m0 * m.xi[idx % st.n_omega]));
  for (std::size_t idx = 0; idx < st.g.size(); ++idx)
    dev = std::max(dev, std::abs(st.g[idx] - g0 * m0 * m.xi[idx % st.n_omega]));
  return dev;
}

}  // namespace

RunSetup make_setup(const RunConfig& cfg) {
  RunSetup S;
  const double wmax = omega_cutoff(cfg.material);
  const bool probe = cfg.incoming.kind == IncomingSpec::Kind::kProbe;
  if (probe) check_probe(cfg.probe, wmax);
  if (probe && cfg.probe_ordinates) {
    S.q = probe_angular(cfg.probe, cfg.experiment.layout);
    S.m = build_material(cfg.material, probe_spectral(cfg.probe, wmax, cfg.experiment.layout));
  } else {
    S.q = build_angular_quadrature(cfg.material.n_mu);
    S.m = build_material(cfg.material);
  }
  S.c = build_coefficients(cfg.interface, S.m, S.q);
  switch (cfg.incoming.kind) {
    case IncomingSpec::Kind::kZero:
      S.phi = std::make_shared<ZeroIncoming>();
      break;
    case IncomingSpec::Kind::kProbe:
      S.phi = std::make_shared<ProbeIncoming>(cfg.probe);
      break;
    case IncomingSpec::Kind::kEquilibrium:
      S.phi = std::make_shared<EquilibriumIncoming>(S.m, cfg.incoming.m0);
      break;
  }
  return S;
}

Json record_to_json(const MeasurementRecord& r) {
  Json j{{"epsilon", r.epsilon},     {"t1", r.t1},
         {"M", r.M},                 {"C", r.C},
         {"M_over_C", r.eta1_raw},   {"l1_state_max_excess", r.l1_state_max_excess},
         {"n_mu", r.n_mu},           {"n_omega", r.n_omega},
         {"instrumented", r.instrumented}};
  if (r.instrumented) {
    j["M_f0"] = r.M_f0;
    j["M_f1"] = r.M_f1;
    j["M_g0"] = r.M_g0;
    j["decomposition_error"] = r.max_decomposition_error;
  }
  return j;
}

MeasurementRecord record_from_json(const Json& j) {
  MeasurementRecord r;
  try {
    r.epsilon = j.at("epsilon").get<double>();
    r.M = j.at("M").get<double>();
    r.C = j.at("C").get<double>();
    r.t1 = j.value("t1", 0.0);
    r.eta1_raw = j.contains("M_over_C") ? j.at("M_over_C").get<double>() : r.M / r.C;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("records: malformed record: ") + e.what());
  }
  if (!(r.epsilon > 0.0) || !(r.C > 0.0)) throw ConfigError("records: need epsilon > 0 and C > 0");
  return r;
}

Json result_to_json(const ReconstructionResult& r) {
  Json recs = Json::array();
  for (const auto& m : r.records) recs.push_back(record_to_json(m));
  return Json{{"omega0", r.omega0},
              {"eta1_estimate", r.eta1_estimate},
              {"fit_b", r.fit_b},
              {"fit_exponent", r.fit_exponent},
              {"exponent_pinned", r.exponent_pinned},
              {"residual", r.residual},
              {"eta2", r.eta2},
              {"zeta1", r.zeta1},
              {"zeta2", r.zeta2},
              {"flagged", r.flagged},
              {"records", recs}};
}

Json report_to_json(const EstimateReport& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks)
    checks.push_back(Json{{"name", c.name},
                          {"bound", c.bound},
                          {"measured", c.measured},
                          {"margin", c.margin},
                          {"passed", c.passed},
                          {"detail", c.detail}});
  Json meta = Json::object();
  for (const auto& [k, v] : r.metadata) meta[k] = v;
  return Json{{"ok", r.ok()}, {"checks", checks}, {"metadata", meta}};
}

std::string report_table(const EstimateReport& r) {
  std::ostringstream os;
  os << std::left << std::setw(22) << "check" << std::setw(18) << "bound" << std::setw(18) << "measured"
     << std::setw(14) << "margin" << "result\n";
  for (const auto& c : r.checks) {
    char b[24], m[24], g[24];
    std::snprintf(b, sizeof b, "%.9g", c.bound);
    std::snprintf(m, sizeof m, "%.9g", c.measured);
    std::snprintf(g, sizeof g, "%.3g", c.margin);
    os << std::left << std::setw(22) << c.name << std::setw(18) << b << std::setw(18) << m << std::setw(14) << g
       << (c.passed ? "PASS" : "FAIL") << "\n";
  }
  return os.str();
}

int cmd_simulate(const RunConfig& cfg, int jobs, std::ostream& log) {
  auto t0 = std::chrono::steady_clock::now();
  RunSetup S = make_setup(cfg);
  SolverOptions o = cfg.solver;
  o.jobs = std::max(1, jobs);
  TransportSolver solver(S.m, S.q, S.c, o);
  solver.set_incoming(S.phi);
  if (cfg.initial.equilibrium) solver.set_initial_equilibrium(cfg.initial.m0);
  double dev = 0.0;
  auto observer = [&](const TransportSolver& s) {
    if (cfg.initial.equilibrium && s.step_index() % cfg.validate.stride == 0)
      dev = std::max(dev, max_equilibrium_deviation(s, cfg.initial.m0));
  };
  BoundaryTrace tr = run_forward(solver, cfg.T_end, observer);
  if (cfg.initial.equilibrium) dev = std::max(dev, max_equilibrium_deviation(solver, cfg.initial.m0));

  const fs::path out(cfg.out_dir);
  std::ostringstream csv;
  if (cfg.trace_mode == "full") {
    csv << "t,mu,omega,value\n";
    for (std::size_t n = 0; n < tr.steps(); n += cfg.trace_stride)
      for (std::size_t j = 0; j < tr.mu.size(); ++j)
        for (std::size_t k = 0; k < tr.omega.size(); ++k)
          csv << g17(tr.times[n]) << ',' << g17(tr.mu[j]) << ',' << g17(tr.omega[k]) << ','
              << g17(tr.at(n, j, k)) << "\n";
  } else {
    csv << "t,integrated\n";
    for (std::size_t n = 0; n < tr.steps(); n += cfg.trace_stride)
      csv << g17(tr.times[n]) << ',' << g17(tr.integrated(n)) << "\n";
  }
  write_text(out / "trace.csv", csv.str());

  Json summary{{"steps", tr.steps() - 1}, {"T_end", cfg.T_end}, {"n_mu", S.q.size()}, {"n_omega", S.m.size()}};
  StateNorms nm = solver.norms(cfg.validate.p);
  summary["final"] = Json{{"l1_f", nm.l1_f}, {"l1_g", nm.l1_g}, {"min", nm.min_value},
                          {"max_f_over_xi", nm.max_f_over_xi}, {"max_g_over_xi", nm.max_g_over_xi}};
  if (cfg.initial.equilibrium) summary["equilibrium_deviation"] = dev;
  if (cfg.incoming.kind == IncomingSpec::Kind::kProbe) {
    double t1 = t1_of(cfg.probe, S.m);
    Json meas{{"t1", t1}};
    try {
      double M = measure(tr, t1, cfg.probe.epsilon);
      double C = c_constant(c_inputs_from_spec(cfg.material, S.m, cfg.probe), cfg.experiment.c_nodes);
      meas["M"] = M;
      meas["C"] = C;
      meas["M_over_C"] = M / C;
    } catch (const CoverageError& e) {
      meas["note"] = e.what();
    }
    summary["measurement"] = meas;
  }
  write_json(out / "summary.json", summary);
  write_json(out / "config.json", cfg.resolved);
  Json meta = metadata(cfg, "simulate", seconds_since(t0), jobs);
  write_json(out / "metadata.json", meta);
  log << "simulate: " << tr.steps() - 1 << " steps to t = " << g17(tr.times.back()) << ", wrote "
      << (out / "trace.csv").string() << "\n";
  if (cfg.initial.equilibrium) log << "equilibrium deviation: " << g17(dev) << "\n";
  return kExitOk;
}

int cmd_probe(const RunConfig& cfg, int jobs, std::ostream& log) {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<MeasurementRecord> recs = probe_records(cfg, jobs);
  const fs::path out(cfg.out_dir);
  write_json(out / "records.json", records_json(recs));
  write_text(out / "convergence.csv", convergence_csv(recs, cfg.eta1_true));
  write_json(out / "config.json", cfg.resolved);
  Json meta = metadata(cfg, "probe", seconds_since(t0), jobs);
  Json per = Json::array();
  for (const auto& r : recs) per.push_back(Json{{"epsilon", r.epsilon}, {"seconds", r.seconds}});
  meta["records"] = per;
  write_json(out / "metadata.json", meta);
  log << "epsilon        M/C\n";
  for (const auto& r : recs) log << std::left << std::setw(15) << g17(r.epsilon) << g17(r.eta1_raw) << "\n";
  return kExitOk;
}

LeastSquaresResult run_least_squares_baseline(const RunConfig& cfg) {
  const LeastSquaresSpec& L = cfg.least_squares;
  if (L.probe_omega0.empty()) throw ConfigError("least squares: need at least one probe frequency");
  std::vector<ProbeSpec> probes;
  for (double w : L.probe_omega0) probes.push_back(ProbeSpec{cfg.probe.mu0, w, L.epsilon});
  const double wmax = omega_cutoff(cfg.material);
  for (const auto& p : probes) check_probe(p, wmax);
  OrdinateLayout lay{L.n_mu_probe, L.n_mu_bulk, L.n_omega_probe, L.n_omega_low, L.n_omega_high};
  AngularQuadrature q = probe_angular(probes.front(), lay);
  MaterialModel m = build_material(cfg.material, probe_spectral(probes.front(), wmax, lay));
  double T_end = 0.0;
  for (const auto& p : probes) T_end = std::max(T_end, t1_of(p, m) + p.epsilon + 2.0 * L.solver.dt);
  InterfaceCoefficients truth = build_coefficients(cfg.interface, m, q);
  std::vector<double> observed;
  for (const auto& p : probes) {
    BoundaryTrace tr = run_forward(m, q, truth, std::make_shared<ProbeIncoming>(p), T_end, L.solver);
    observed.insert(observed.end(), tr.outgoing.begin(), tr.outgoing.end());
  }
  add_noise(observed, L.cfg.noise, cfg.seed);
  return least_squares_reconstruct(observed, m, q, cfg.interface.gamma0, probes, L.solver, T_end, L.cfg);
}

int cmd_reconstruct(const RunConfig& cfg, int jobs, std::ostream& log) {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<MeasurementRecord> recs =
      cfg.records_path.empty() ? probe_records(cfg, jobs) : read_records(cfg.records_path);
  ReconstructionResult res = extrapolate_eta1(recs, cfg.fit, cfg.interface.gamma0, cfg.probe.omega0);
  FitOptions alt = cfg.fit;
  alt.pin_q = !cfg.fit.pin_q;
  const fs::path out(cfg.out_dir);
  Json rj = result_to_json(res);
  try {
    ReconstructionResult other = extrapolate_eta1(recs, alt, cfg.interface.gamma0, cfg.probe.omega0);
    rj["alternate_fit"] = Json{{"exponent_pinned", other.exponent_pinned},
                               {"eta1_estimate", other.eta1_estimate},
                               {"fit_exponent", other.fit_exponent}};
  } catch (const ExtrapolationError& e) {
    rj["alternate_fit"] = Json{{"error", e.what()}};
  }
  if (cfg.least_squares.enabled) {
    LeastSquaresResult ls = run_least_squares_baseline(cfg);
    Json lj{{"knot_omega", ls.knot_omega},
            {"knot_eta1", ls.knot_eta1},
            {"misfit_history", ls.misfit_history},
            {"status", ls.status},
            {"evaluations", ls.evaluations}};
    rj["least_squares"] = lj;
    log << "least squares: eta1 knots";
    for (double v : ls.knot_eta1) log << ' ' << g17(v);
    log << " (" << ls.status << ")\n";
  }
  write_json(out / "result.json", rj);
  if (cfg.records_path.empty()) {
    write_json(out / "records.json", records_json(recs));
    write_text(out / "convergence.csv", convergence_csv(recs, cfg.eta1_true));
  }
  write_text(out / "coefficients.csv", std::string(kCoefficientHeader) + coefficient_row(res));
  write_json(out / "config.json", cfg.resolved);
  write_json(out / "metadata.json", metadata(cfg, "reconstruct", seconds_since(t0), jobs));
  log << kCoefficientHeader << coefficient_row(res);
  if (res.flagged) log << "warning: estimate outside [-0.1, 1.1]\n";
  return kExitOk;
}

EstimateReport build_estimate_report(const RunConfig& cfg, int jobs) {
  RunSetup S = make_setup(cfg);
  SolverOptions o = cfg.solver;
  o.jobs = std::max(1, jobs);
  TransportSolver solver(S.m, S.q, S.c, o);
  solver.set_incoming(S.phi);
  if (cfg.initial.equilibrium) solver.set_initial_equilibrium(cfg.initial.m0);
  double m0 = cfg.validate.m0 ? *cfg.validate.m0 : incoming_sup_ratio(*S.phi, S.m, S.q, cfg.T_end, o.dt);
  if (cfg.initial.equilibrium) m0 = std::max(m0, cfg.initial.m0);
  check_incoming_bound(*S.phi, S.m, S.q, cfg.T_end, o.dt, m0);
  RunArtifacts a = collect_artifacts(solver, cfg.T_end, cfg.validate.p, cfg.validate.stride);

  EstimateReport rep;
  const EstimateTolerances& tol = cfg.validate.tolerances;
  if (!cfg.initial.equilibrium) rep.checks.push_back(l1_budget(a, tol));
  for (auto& c : maximum_principle(a, m0, tol)) rep.checks.push_back(c);
  if (!cfg.initial.equilibrium) rep.checks.push_back(lp_bound(a, tol));
  for (auto& c : assumption_audit(S.m, S.c, cfg.probe, cfg.material.v(cfg.probe.omega0), cfg.solver.grid))
    rep.checks.push_back(c);
  rep.metadata["m0"] = g17(m0);
  rep.metadata["p"] = g17(cfg.validate.p);
  rep.metadata["T_end"] = g17(cfg.T_end);
  rep.metadata["samples"] = std::to_string(a.samples.size());
  rep.metadata["config_hash"] = hex64(fnv1a(cfg.resolved.dump()));
  return rep;
}

int cmd_validate(const RunConfig& cfg, int jobs, std::ostream& log) {
  auto t0 = std::chrono::steady_clock::now();
  EstimateReport rep = build_estimate_report(cfg, jobs);
  const fs::path out(cfg.out_dir);
  write_json(out / "report.json", report_to_json(rep));
  write_json(out / "config.json", cfg.resolved);
  write_json(out / "metadata.json", metadata(cfg, "validate", seconds_since(t0), jobs));
  log << report_table(rep);
  bool audit_ok = true, checks_ok = true;
  for (const auto& c : rep.checks) {
    bool audit = c.name == "A1" || c.name == "A2" || c.name == "A3" || c.name == "A4" || c.name == "coefficients";
    if (!c.passed) (audit ? audit_ok : checks_ok) = false;
  }
  if (!audit_ok) return kExitAssumption;
  if (!checks_ok) return kExitNumerical;
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, int jobs, std::ostream& log) {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<SweepEntry> entries =
      frequency_sweep(cfg.material, cfg.interface, cfg.experiment, cfg.omega0_list, cfg.fit, std::max(1, jobs));
  const fs::path out(cfg.out_dir);
  std::string table = kCoefficientHeader;
  Json summary = Json::array();
  for (const auto& e : entries) {
    char name[64];
    std::snprintf(name, sizeof name, "omega0_%.6g", e.omega0);
    fs::path dir = out / name;
    if (e.result) {
      write_json(dir / "result.json", result_to_json(*e.result));
      write_json(dir / "records.json", records_json(e.result->records));
      write_text(dir / "convergence.csv", convergence_csv(e.result->records, cfg.eta1_true));
      table += coefficient_row(*e.result);
      summary.push_back(Json{{"omega0", e.omega0}, {"eta1_estimate", e.result->eta1_estimate}});
    } else {
      write_json(dir / "error.json", Json{{"omega0", e.omega0}, {"error", e.error}});
      summary.push_back(Json{{"omega0", e.omega0}, {"error", e.error}});
    }
    write_json(dir / "config.json", cfg.resolved);
  }
  write_text(out / "coefficients.csv", table);
  write_json(out / "sweep.json", Json{{"entries", summary}});
  write_json(out / "config.json", cfg.resolved);
  write_json(out / "metadata.json", metadata(cfg, "sweep", seconds_since(t0), jobs));
  log << table;
  for (const auto& e : entries)
    if (!e.result) log << "omega0 = " << g17(e.omega0) << ": " << e.error << "\n";
  return kExitOk;
}

int run_command(const std::string& name, const RunConfig& cfg, int jobs, std::ostream& log,
                std::ostream& err) {
  try {
    if (name == "simulate") return cmd_simulate(cfg, jobs, log);
    if (name == "probe") return cmd_probe(cfg, jobs, log);
    if (name == "reconstruct") return cmd_reconstruct(cfg, jobs, log);
    if (name == "validate") return cmd_validate(cfg, jobs, log);
    if (name == "sweep") return cmd_sweep(cfg, jobs, log);
    err << "error: unknown command '" << name << "'\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace phonon
