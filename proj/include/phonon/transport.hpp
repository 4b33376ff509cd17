#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "phonon/analytic.hpp"
#include "phonon/interface.hpp"
#include "phonon/material.hpp"
#include "phonon/quadrature.hpp"

namespace phonon {

struct SpatialGrid {
  int nx_left = 400;
  int nx_right = 1200;
  double L = 4.0;

  double dx_left() const { return 1.0 / nx_left; }
  double dx_right() const { return (L - 1.0) / nx_right; }
  double center_left(int i) const { return (i + 0.5) * dx_left(); }
  double center_right(int i) const { return 1.0 + (i + 0.5) * dx_right(); }
};

// kSemiLagrangian: every ordinate lives on the grid, advanced along its
// characteristic with linear interpolation.
// kTracking: face-inflow deviations from their t=0 value are carried exactly
// along characteristics from a face history (linear in time); the grid part
// holds the initial data and the relaxation source.
enum class Advection { kSemiLagrangian, kTracking };

struct SolverOptions {
  SpatialGrid grid;
  double dt = 5e-4;
  Advection advection = Advection::kTracking;
  int jobs = 1;
  // Steps the solver will be advanced at most (0: unbounded). Bounds the
  // memory of the tracked inflow history; stepping past it is an error.
  long horizon_steps = 0;
};

// kFull: the coupled (f, g) system.
// kBallistic: f0, layer [0,1] only, no relaxation, interface reflection eta1.
// kRemainder: f1, layer [0,1] only, relaxation source and transmitted g taken
// from a linked kFull solver, zero data at x=0.
enum class SystemKind { kFull, kBallistic, kRemainder };

class IncomingData {
 public:
  virtual ~IncomingData() = default;
  virtual double value(double t, double mu, double omega) const = 0;
  // When true, negative values are a data error.
  virtual bool nonnegative() const { return true; }
};

class ZeroIncoming : public IncomingData {
 public:
  double value(double, double, double) const override { return 0.0; }
};

// m0 * xi(omega), constant in time.
class EquilibriumIncoming : public IncomingData {
 public:
  EquilibriumIncoming(const MaterialModel& m, double m0) : m_(m), m0_(m0) {}
  double value(double, double, double omega) const override {
    return m0_ * m_.interpolate(m_.xi, omega);
  }

 private:
  MaterialModel m_;
  double m0_;
};

class ProbeIncoming : public IncomingData {
 public:
  explicit ProbeIncoming(ProbeSpec p, double scale = 1.0) : p_(p), scale_(scale) {}
  double value(double t, double mu, double omega) const override {
    return scale_ * eval_probe(p_, t, mu, omega);
  }
  const ProbeSpec& probe() const { return p_; }

 private:
  ProbeSpec p_;
  double scale_;
};

class FunctionIncoming : public IncomingData {
 public:
  using Fn = std::function<double(double, double, double)>;
  explicit FunctionIncoming(Fn fn, bool nonneg = true) : fn_(std::move(fn)), nonneg_(nonneg) {}
  double value(double t, double mu, double omega) const override { return fn_(t, mu, omega); }
  bool nonnegative() const override { return nonneg_; }

 private:
  Fn fn_;
  bool nonneg_;
};

// Distribution values at cell centres, layout [(x * n_mu + j) * n_omega + k].
struct PhononState {
  double t = 0.0;
  int nx_left = 0, nx_right = 0;
  std::size_t n_mu = 0, n_omega = 0;
  std::vector<double> f;
  std::vector<double> g;

  double f_at(int i, std::size_t j, std::size_t k) const { return f[(i * n_mu + j) * n_omega + k]; }
  double g_at(int i, std::size_t j, std::size_t k) const { return g[(i * n_mu + j) * n_omega + k]; }
};

// Outgoing f(t, 0, mu<0, omega) at every step t_n = n dt, n = 0..steps.
struct BoundaryTrace {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<double> mu;             // negative nodes, ascending
  std::vector<double> mu_weights;
  std::vector<double> omega;
  std::vector<double> omega_weights;
  std::vector<double> outgoing;       // [step][j][k]
  std::vector<double> right_flux;     // half-range flux of g at x=L (kFull only)

  std::size_t steps() const { return times.size(); }
  std::size_t stride() const { return mu.size() * omega.size(); }
  double at(std::size_t n, std::size_t j, std::size_t k) const {
    return outgoing[n * stride() + j * omega.size() + k];
  }
  // sum_{mu<0} sum_omega w_mu w_omega f(t_n, 0, mu, omega).
  double integrated(std::size_t n) const;
};

// <f> = sum_mu sum_omega w_mu w_omega f / tau(omega); `slice` is laid out
// [j][k] over the full quadrature.
double bracket(const double* slice, const MaterialModel& m, const AngularQuadrature& q);

// phi(t, mu, omega) for the mu > 0 nodes, layout [j - half][k].
std::vector<double> apply_boundary_left(double t, const IncomingData& phi,
                                        const MaterialModel& m, const AngularQuadrature& q);

// Returns (f(1, mu<0), g(1, mu>0)). `f_pos` is f(1, mu>0) laid out
// [j - half][k]; `g_neg` is g(1, mu<0) laid out [j][k] with j < half. The
// outputs use the same layouts as g_neg and f_pos respectively.
std::pair<std::vector<double>, std::vector<double>> apply_interface(
    const std::vector<double>& f_pos, const std::vector<double>& g_neg,
    const InterfaceCoefficients& c, const AngularQuadrature& q);

// g(L, mu<0) layout [j][k], from g(L, mu>0) layout [j - half][k].
std::vector<double> apply_boundary_right(const std::vector<double>& g_pos,
                                         const InterfaceCoefficients& c, const MaterialModel& m,
                                         const AngularQuadrature& q);

struct InputTotals {
  double l1 = 0.0;    // int_0^t sum w w |phi|
  double flux = 0.0;  // int_0^t sum w w mu v |phi|
  double lp = 0.0;    // int_0^t sum w w |phi|^p xi^{1-p}
};

struct StateNorms {
  double l1_f = 0.0, l1_g = 0.0;
  double lp_f = 0.0, lp_g = 0.0;  // p-th powers, weight xi^{1-p}
  double min_value = 0.0;         // over f and g
  double max_f_over_xi = 0.0;
  double max_g_over_xi = 0.0;
};

class TransportSolver {
 public:
  TransportSolver(const MaterialModel& m, const AngularQuadrature& q,
                  const InterfaceCoefficients& c, const SolverOptions& o,
                  SystemKind kind = SystemKind::kFull);
  ~TransportSolver();
  TransportSolver(TransportSolver&&) noexcept;
  TransportSolver& operator=(TransportSolver&&) noexcept;

  // Incoming data at x=0 (kFull, kBallistic). Must be set before start().
  void set_incoming(std::shared_ptr<const IncomingData> phi);
  // Remainder systems read the source and the transmitted g from `full`,
  // which must be stepped first at every step.
  void link(const TransportSolver* full);
  // Validation mode: start from (m0 xi, gamma0 m0 xi) instead of zero.
  void set_initial_equilibrium(double m0);
  // Exponent used for the weighted L^p input accumulation (default 2).
  void set_lp_exponent(double p);

  // Applies boundary conditions at t=0; called automatically by step().
  void start();
  void step();

  double time() const;
  long step_index() const;
  SystemKind kind() const;
  const MaterialModel& material() const;
  const AngularQuadrature& angular() const;
  const SolverOptions& options() const;
  const InterfaceCoefficients& coefficients() const;

  PhononState state() const;
  StateNorms norms(double p = 2.0) const;
  const InputTotals& input_totals() const;

  // Exit values at the current time (all rows; layout [j][k]).
  std::vector<double> outgoing_left() const;   // f(t, 0, mu<0), [j][k], j < half
  std::vector<double> interface_left() const;  // f(t, 1, mu>0), [j - half][k]
  std::vector<double> interface_right() const; // g(t, 1, mu<0), [j][k] (kFull)
  double right_flux() const;                   // half-range flux of g at x=L (kFull)
  // Relaxation amplitude <f>/2 per left-layer cell at the current time.
  const std::vector<double>& source_left() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

// Runs `solver` to T_end collecting the outgoing trace. `observer` (optional)
// is invoked after start() and after every step.
BoundaryTrace run_forward(TransportSolver& solver, double T_end,
                          const std::function<void(const TransportSolver&)>& observer = {});

// Convenience wrapper building the solver.
BoundaryTrace run_forward(const MaterialModel& m, const AngularQuadrature& q,
                          const InterfaceCoefficients& c, std::shared_ptr<const IncomingData> phi,
                          double T_end, const SolverOptions& o);

// Builds an empty trace header for the negative nodes of `q`.
BoundaryTrace make_trace_header(const MaterialModel& m, const AngularQuadrature& q, double dt);

}  // namespace phonon
