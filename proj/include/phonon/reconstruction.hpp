#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phonon/analytic.hpp"
#include "phonon/interface.hpp"
#include "phonon/material.hpp"
#include "phonon/transport.hpp"

namespace phonon {

// Interface recipe: eta1 as a profile in omega plus gamma0.
struct CoefficientSpec {
  Profile eta1 = Profile::constant(0.6);
  double gamma0 = 1.0;
};

InterfaceCoefficients build_coefficients(const CoefficientSpec& spec, const MaterialModel& m,
                                         const AngularQuadrature& q);

// Ordinate counts used around the probe support.
struct OrdinateLayout {
  int n_mu_probe = 32;    // Gauss nodes on [mu0, mu0 + eps]
  int n_mu_bulk = 8;      // on each of [0, mu0] and [mu0 + eps, 1]
  int n_omega_probe = 16; // on [omega0, omega0 + eps]
  int n_omega_low = 4;    // on [0, omega0]
  int n_omega_high = 8;   // on [omega0 + eps, omega_max], panels of 4
};

struct ExperimentConfig {
  double mu0 = 0.5;
  double omega0 = 1.0;
  std::vector<double> epsilons{0.2, 0.14, 0.098, 0.0686};
  SolverOptions solver;
  OrdinateLayout layout;
  bool instrument = false;   // also run f0, f1 and the g0 bookkeeping
  int c_nodes = 32;          // per-dimension nodes for the C constant
  bool check_resolution = true;
};

struct MeasurementRecord {
  double epsilon = 0.0;
  double t1 = 0.0;
  double M = 0.0;
  double C = 0.0;
  double eta1_raw = 0.0;
  // Instrumented runs only.
  bool instrumented = false;
  double M_f0 = 0.0;
  double M_f1 = 0.0;
  double M_g0 = 0.0;
  double max_decomposition_error = 0.0;  // max |f - f0 - f1| (cells and trace)
  // Budget bookkeeping of the full run.
  double l1_state_max_excess = 0.0;  // max over time of (||f||+||g||) - bound, relative
  double seconds = 0.0;              // wall time, not part of deterministic output
  double seconds_full = 0.0;         // wall time spent stepping the coupled system
  std::size_t n_mu = 0, n_omega = 0;
};

struct ReconstructionResult {
  double omega0 = 0.0;
  double eta1_estimate = 0.0;
  double fit_b = 0.0;
  double fit_exponent = 0.0;
  bool exponent_pinned = false;
  double residual = 0.0;  // sqrt of the sum of squared fit residuals
  std::vector<MeasurementRecord> records;
  double eta2 = 0.0, zeta1 = 0.0, zeta2 = 0.0;
  bool flagged = false;  // estimate outside [-0.1, 1.1]
};

// 2 / (mu0 v(omega0)).
double t1_of(const ProbeSpec& p, const MaterialModel& m);

// Discrete measurement sum_n dt psi0((t_n - t1)/eps) * integrated(n), where
// integrated(n) = sum_{mu<0} sum_omega w w h(t_n). Throws CoverageError when
// the samples do not cover [t1 - eps, t1 + eps].
double measure_integrated(const std::vector<double>& times, const std::vector<double>& integrated,
                          double dt, double t1, double eps);
double measure(const BoundaryTrace& trace, double t1, double eps);

// Per-probe ordinates with the probe support as single Gauss panels.
AngularQuadrature probe_angular(const ProbeSpec& p, const OrdinateLayout& lay);
SpectralGrid probe_spectral(const ProbeSpec& p, double omega_max, const OrdinateLayout& lay);

// Minimal L such that L >= v0/(mu0 v(omega0)) + v0/2 + 1.
double minimal_L(double v0, double mu0, double v_omega0);

// Inputs of the C constant taken from the material recipe at omega0.
CConstantInputs c_inputs_from_spec(const MaterialSpec& spec, const MaterialModel& m,
                                   const ProbeSpec& p);

// Runs the full experiment for every epsilon (decreasing). Throws
// AssumptionError when L is too small, ConfigError for unresolved eps.
std::vector<MeasurementRecord> run_probe_experiment(const MaterialSpec& mspec,
                                                    const CoefficientSpec& cspec,
                                                    const ExperimentConfig& cfg);

// One epsilon of the experiment.
MeasurementRecord run_probe_single(const MaterialSpec& mspec, const CoefficientSpec& cspec,
                                   const ExperimentConfig& cfg, double epsilon);

struct FitOptions {
  bool pin_q = false;
  double p0 = 1.25;       // used when pin_q: q = 1 - 3/p0', p0' = p0/(p0-1)
  double q_min = 1e-3;
  double q_max = 1.0;
};

// Fits M/C = eta1 + b eps^q. Throws ExtrapolationError with fewer than three
// distinct epsilons.
ReconstructionResult extrapolate_eta1(const std::vector<MeasurementRecord>& records,
                                      const FitOptions& fit = {}, double gamma0 = 1.0,
                                      double omega0 = 0.0);

// Least-squares fit of log|y| = a + p log(eps); returns p.
double fit_power_exponent(const std::vector<double>& eps, const std::vector<double>& y);

struct SweepEntry {
  double omega0 = 0.0;
  std::optional<ReconstructionResult> result;
  std::string error;
};

std::vector<SweepEntry> frequency_sweep(const MaterialSpec& mspec, const CoefficientSpec& cspec,
                                        const ExperimentConfig& cfg,
                                        const std::vector<double>& omega0_list,
                                        const FitOptions& fit, int jobs);

// ---- least-squares baseline ----

struct LeastSquaresConfig {
  int knots = 1;           // piecewise-linear eta1 in omega
  double initial = 0.5;    // initial eta1 at every knot
  int max_sweeps = 20;
  double tol = 1e-6;       // golden-section tolerance on eta1
  double noise = 0.0;      // additive Gaussian, relative to max |trace|
  std::uint64_t seed = 1;
};

struct LeastSquaresResult {
  std::vector<double> knot_omega;
  std::vector<double> knot_eta1;
  std::vector<double> misfit_history;  // after each sweep (index 0: initial)
  std::string status;                   // "converged" | "stalled" | "max_sweeps"
  int evaluations = 0;
};

// Forward model for the baseline: outgoing traces for a piecewise-linear
// eta1, one trace per probe, concatenated.
std::vector<double> simulate_traces(const MaterialModel& m, const AngularQuadrature& q,
                                    double gamma0, const std::vector<double>& knot_omega,
                                    const std::vector<double>& knot_eta1,
                                    const std::vector<ProbeSpec>& probes, const SolverOptions& o,
                                    double T_end);

std::vector<double> knot_positions(const MaterialModel& m, int knots);
std::vector<double> eta1_from_knots(const MaterialModel& m, const std::vector<double>& knot_omega,
                                    const std::vector<double>& knot_eta1);

// Adds seeded Gaussian noise with standard deviation level * max|obs|.
void add_noise(std::vector<double>& obs, double level, std::uint64_t seed);

LeastSquaresResult least_squares_reconstruct(const std::vector<double>& observed,
                                             const MaterialModel& m, const AngularQuadrature& q,
                                             double gamma0, const std::vector<ProbeSpec>& probes,
                                             const SolverOptions& o, double T_end,
                                             const LeastSquaresConfig& cfg);

}  // namespace phonon
