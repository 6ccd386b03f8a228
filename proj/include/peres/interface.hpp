#pragma once

// Log files, run configuration and report serialization.
//
// Log format (CSV, one record per line, '#' lines are metadata):
//   # seed: <uint64>
//   # spec: <free text, one line per snapshot line>
//   cycle,config,mean_power_w,std_power_w,n_samples,housing_temp_c,input_power_w,timestamp_s
// Floats are written with 17 significant digits, so write/read is lossless.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "peres/budget.hpp"
#include "peres/fitting.hpp"
#include "peres/forward.hpp"
#include "peres/reconstruct.hpp"

namespace peres {

inline constexpr const char* kLogHeader =
    "cycle,config,mean_power_w,std_power_w,n_samples,housing_temp_c,input_power_w,timestamp_s";

void write_log(const MeasurementLog& log, std::ostream& out);
void write_log(const MeasurementLog& log, const std::string& path);

/// Throws DataError naming the offending line for malformed rows, missing
/// header or columns, duplicate (cycle, config) pairs and empty logs.
MeasurementLog read_log(std::istream& in, const std::string& source_name = "<stream>");
MeasurementLog read_log(const std::string& path);

/// Shortest-round-trip-safe float text: 17 significant digits.
std::string format_double(double x);

struct AnalysisOptions {
  std::int64_t mc_samples = kDefaultMcSamples;
  int sweep_points = kDefaultSweepPoints;
  bool filter_malfunctions = false;
  double malfunction_threshold = 5.0;
};

struct RunConfig {
  SourceSpec source;
  PhasePoint phases;
  ImperfectionSpec imperfections;
  SimulationProtocol protocol;
  std::uint64_t seed = 0;
  AnalysisOptions analysis;
};

/// Strict JSON schema: unknown keys are rejected, errors carry the key path
/// ("residual.tau must be ≥ 0"). Missing keys take their defaults; only
/// "phases" is required.
RunConfig parse_config(const std::string& json_text);
RunConfig read_config(const std::string& path);

/// Full config with every default written out; parse_config(serialize_config(c))
/// reproduces c. `indent` < 0 gives a single line.
std::string serialize_config(const RunConfig& config, int indent = 2);

// --- reports ----------------------------------------------------------------

std::string analysis_report_json(const LogAnalysis& analysis, const MalfunctionReport* filter = nullptr);
std::string reconstruction_json(const CorrectedPoint& corrected);
std::string budget_report_json(const BudgetReport& report);
/// One row per entry plus totals and measured: name,delta_f,lower,upper,sigma_f.
std::string budget_table_csv(const BudgetReport& report);
std::string budget_report_text(const BudgetReport& report);
std::string sweep_csv(const SweepCurve& curve);
std::string mc_report_json(const McResult& power, const McResult& phase, const ContrastEstimate& contrast);
std::string contrast_fit_json(const ContrastFit& fit, const ThermalizationFit* thermal);

}  // namespace peres
