#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "phonon/estimates.hpp"
#include "phonon/reconstruction.hpp"

namespace phonon {

using Json = nlohmann::json;

struct IncomingSpec {
  enum class Kind { kZero, kProbe, kEquilibrium };
  Kind kind = Kind::kProbe;
  double m0 = 1.0;  // kEquilibrium: phi = m0 xi
};

struct InitialSpec {
  bool equilibrium = false;
  double m0 = 1.0;
};

struct ValidateSpec {
  double p = 2.0;
  std::optional<double> m0;  // default: sup phi / xi over the sampled input
  long stride = 10;
  EstimateTolerances tolerances;
};

struct LeastSquaresSpec {
  bool enabled = false;
  LeastSquaresConfig cfg;
  std::vector<double> probe_omega0{1.0};
  double epsilon = 0.2;
  SolverOptions solver;  // cheap forward model
  int n_mu_probe = 8, n_mu_bulk = 4, n_omega_probe = 8, n_omega_low = 4, n_omega_high = 4;
};

struct RunConfig {
  MaterialSpec material;
  CoefficientSpec interface;
  SolverOptions solver;
  double T_end = 4.5;
  ProbeSpec probe;
  IncomingSpec incoming;
  InitialSpec initial;
  bool probe_ordinates = true;  // adapt ordinates to the probe support
  ExperimentConfig experiment;
  std::vector<double> omega0_list;
  FitOptions fit;
  std::optional<double> eta1_true;
  std::string records_path;  // reconstruct: read records instead of running
  ValidateSpec validate;
  LeastSquaresSpec least_squares;
  std::string trace_mode = "integrated";  // or "full"
  long trace_stride = 1;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  Json resolved;  // fully resolved configuration
};

// Built-in defaults; configs/defaults.json holds the same document.
Json default_config_json();

// Merges `user` over the defaults, validates and converts. Unknown keys and
// non-positive numeric fields raise ConfigError.
RunConfig parse_config(const Json& user);
RunConfig load_config(const std::string& path);

Profile parse_profile(const Json& j, const std::string& where);
Json profile_to_json(const Profile& p);

// 64-bit FNV-1a of a string.
std::uint64_t fnv1a(const std::string& s);

}  // namespace phonon
