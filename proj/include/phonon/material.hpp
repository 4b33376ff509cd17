#pragma once

#include <optional>
#include <string>
#include <vector>

#include "phonon/quadrature.hpp"

namespace phonon {

// A scalar function of frequency given either as a constant, a table on known
// nodes (linear interpolation, constant extrapolation), a Bose-Einstein weight,
// or a smooth tanh step.
struct Profile {
  enum class Kind { kConst, kTable, kBoseEinstein, kTanh };
  Kind kind = Kind::kConst;
  double value = 0.0;             // kConst
  std::vector<double> omega;      // kTable abscissae
  std::vector<double> values;     // kTable ordinates
  double T_eq = 1.0;              // kBoseEinstein
  double hbar_over_k0 = 1.0;      // kBoseEinstein
  double low = 0.0, high = 0.0;   // kTanh: low + (high-low)*(1+tanh((w-center)/width))/2
  double center = 0.0, width = 1.0;

  static Profile constant(double v);
  static Profile table(std::vector<double> omega, std::vector<double> values);
  static Profile bose_einstein(double T_eq, double hbar_over_k0);
  static Profile tanh_step(double low, double high, double center, double width);

  bool is_constant() const { return kind == Kind::kConst; }
  double operator()(double omega) const;
  // Derivative when known in closed form (const, tanh). Table and
  // Bose-Einstein profiles return nullopt.
  std::optional<double> derivative(double omega) const;
};

// Recipe from which a MaterialModel is built on any spectral grid.
struct MaterialSpec {
  double omega_max = 0.0;  // 0 selects the tail-mass default
  int n_omega = 32;
  int n_mu = 16;
  Profile tau = Profile::constant(1.0);
  Profile v = Profile::constant(1.0);
  std::optional<Profile> v_prime;
  Profile xi = Profile::bose_einstein(1.0, 1.0);
  double p0 = 1.25;
};

struct MaterialModel {
  SpectralGrid grid;
  std::vector<double> tau;
  std::vector<double> v;
  std::vector<double> v_prime;
  std::vector<double> xi;
  double v0 = 0.0;    // max v over nodes
  double tau0 = 0.0;  // min tau over nodes
  double p0 = 1.25;

  std::size_t size() const { return grid.size(); }
  // Linear interpolation of a per-node table at an arbitrary frequency
  // (constant beyond the end nodes).
  double interpolate(const std::vector<double>& table, double omega) const;
};

// omega at which the Bose-Einstein tail of xi/tau drops below `tail`
// (relative), for the given T_eq and hbar/k0.
double default_omega_max(double T_eq, double hbar_over_k0, double tail = 1e-10);

// xi = M_eq^2 e^{x} with M_eq = omega/(e^x - 1), x = hbar*omega/(k0*T_eq),
// rescaled so sum_w w xi / tau = 1.
std::vector<double> build_xi_from_bose_einstein(double T_eq, double hbar, double k0,
                                                const SpectralGrid& grid,
                                                const std::vector<double>& tau);

// Rescales xi in place so that sum_w w xi / tau = 1. Throws ModelError when
// the sum vanishes.
void normalize_xi(std::vector<double>& xi, const SpectralGrid& grid,
                  const std::vector<double>& tau);

// Centered differences of a tabulated function (one-sided at the ends).
std::vector<double> centered_difference(const std::vector<double>& f,
                                        const std::vector<double>& x);

SpectralGrid default_spectral_grid(const MaterialSpec& spec);
MaterialModel build_material(const MaterialSpec& spec, const SpectralGrid& grid);
MaterialModel build_material(const MaterialSpec& spec);

struct ValidationItem {
  std::string name;
  bool passed = true;
  long witness = -1;  // node index, -1 when not node-specific
  double value = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationItem> items;
  bool ok() const;
  const ValidationItem* find(const std::string& name) const;
};

ValidationReport validate_material(const MaterialModel& m);

}  // namespace phonon
