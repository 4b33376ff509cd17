#pragma once

#include <ostream>
#include <string>

#include "phonon/config.hpp"

namespace phonon {

// Ordinates, material and coefficients for a single forward run.
struct RunSetup {
  MaterialModel m;
  AngularQuadrature q;
  InterfaceCoefficients c;
  std::shared_ptr<const IncomingData> phi;
};

RunSetup make_setup(const RunConfig& cfg);

Json record_to_json(const MeasurementRecord& r);
MeasurementRecord record_from_json(const Json& j);
Json result_to_json(const ReconstructionResult& r);
Json report_to_json(const EstimateReport& r);
std::string report_table(const EstimateReport& r);

// Every command writes into cfg.out_dir (created when missing) and returns a
// process exit code. Errors derived from phonon::Error propagate.
int cmd_simulate(const RunConfig& cfg, int jobs, std::ostream& log);
int cmd_probe(const RunConfig& cfg, int jobs, std::ostream& log);
int cmd_reconstruct(const RunConfig& cfg, int jobs, std::ostream& log);
int cmd_validate(const RunConfig& cfg, int jobs, std::ostream& log);
int cmd_sweep(const RunConfig& cfg, int jobs, std::ostream& log);

// Builds the validation report of a fresh run (no files written).
EstimateReport build_estimate_report(const RunConfig& cfg, int jobs);

// Least-squares baseline on synthetic traces generated with cfg.interface.
LeastSquaresResult run_least_squares_baseline(const RunConfig& cfg);

// Dispatches by name and maps phonon::Error to its exit code, printing the
// message to `err`.
int run_command(const std::string& name, const RunConfig& cfg, int jobs, std::ostream& log,
                std::ostream& err);

}  // namespace phonon
