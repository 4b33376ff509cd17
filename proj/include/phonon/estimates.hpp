#pragma once

#include <map>
#include <string>
#include <vector>

#include "phonon/analytic.hpp"
#include "phonon/interface.hpp"
#include "phonon/material.hpp"
#include "phonon/transport.hpp"

namespace phonon {

struct EstimateTolerances {
  double integral = 1e-3;   // relative slack of the L^1 and L^p bounds
  double pointwise = 1e-6;  // relative slack of the maximum principle
  double lower = 1e-12;     // absolute floor for min f
};

struct EstimateCheck {
  std::string name;
  double bound = 0.0;
  double measured = 0.0;
  double margin = 0.0;  // (bound - measured) / bound at the worst sample, 0 when bound is 0
  bool passed = true;
  std::string detail;
};

struct EstimateReport {
  std::vector<EstimateCheck> checks;
  std::map<std::string, std::string> metadata;
  bool ok() const;
  const EstimateCheck* find(const std::string& name) const;
};

struct RunSample {
  double t = 0.0;
  StateNorms norms;
  InputTotals inputs;
};

// Norm history of one forward run.
struct RunArtifacts {
  double gamma0 = 1.0;
  double p = 2.0;
  std::vector<RunSample> samples;
};

// Runs `solver` (not yet started) to T_end recording norms every `stride`
// steps and at the end. Sets the L^p exponent before starting.
RunArtifacts collect_artifacts(TransportSolver& solver, double T_end, double p = 2.0,
                               long stride = 1);

// Throws ConfigError when some sampled incoming value violates 0 <= phi <= m0 xi.
void check_incoming_bound(const IncomingData& phi, const MaterialModel& m,
                          const AngularQuadrature& q, double T_end, double dt, double m0);

// sup over sampled (t, mu>0, omega) of phi / xi.
double incoming_sup_ratio(const IncomingData& phi, const MaterialModel& m,
                          const AngularQuadrature& q, double T_end, double dt);

// ||f||_1 + ||g||_1 against the smaller of the norm bound int ||phi||_1 and
// the flux bound int sum w w mu v |phi|. Both bounds go into `detail`.
EstimateCheck l1_budget(const RunArtifacts& a, const EstimateTolerances& tol = {});

// min >= -lower, max f/xi <= m0 (1 + pointwise), max g/xi <= gamma0 m0 (1 + pointwise).
std::vector<EstimateCheck> maximum_principle(const RunArtifacts& a, double m0,
                                             const EstimateTolerances& tol = {});

// (||f||_p^p + ||g||_p^p)^{1/p} against (1 + gamma0)^{1/p} (int ||phi||_p^p)^{1/p},
// both with weight xi^{1-p}. Uses the exponent recorded in `a`.
EstimateCheck lp_bound(const RunArtifacts& a, const EstimateTolerances& tol = {});

// A1-A3 from the material, A4 against the minimal L, plus the coefficient constraints.
std::vector<EstimateCheck> assumption_audit(const MaterialModel& m, const InterfaceCoefficients& c,
                                            const ProbeSpec& p, double v_omega0,
                                            const SpatialGrid& grid);

}  // namespace phonon
