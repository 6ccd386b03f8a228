#pragma once

// Deviation of the Peres parameter caused by each modelled imperfection, and
// the end-to-end analysis of measurement logs.
//
// Budget calculators take the phase point the deviations are evaluated at.
// full_budget uses the principal arccos of the corrected interference terms
// (all components in [0, pi]); the calculators themselves accept any point.
// Every delta_f is relative to the imperfection-free value at that point, so
// it is exactly 0 when the imperfection parameter is 0.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "peres/core.hpp"
#include "peres/forward.hpp"
#include "peres/reconstruct.hpp"
#include "peres/stats.hpp"

namespace peres {

// --- log analysis -----------------------------------------------------------

struct CycleAnalysis {
  int cycle = 0;
  InterferenceTerms terms;
  double f = 0.0;
  double epsilon = 0.0;      // W
  double denominator = 0.0;  // summed |pairwise interference|, W
};

struct LogAnalysis {
  std::vector<CycleAnalysis> cycles;
  InterferenceTerms mean_terms;
  SeriesStats f;  // sem fields are 0 with fewer than 8 cycles
  double mean_epsilon = 0.0;
  SorkinResult sorkin;  // kappa = mean(eps) / mean(denominator); 0 if degenerate
  bool sorkin_degenerate = false;
};

/// Per-cycle F, epsilon and terms after background subtraction, plus aggregates.
LogAnalysis analyze_log(const MeasurementLog& log);

// --- nonlinearity -----------------------------------------------------------

struct NonlinearityCorrection {
  MeasurementLog log;
  double delta_f = 0.0;  // mean over cycles of F_corrected - F_raw
};

/// Inverts the detector response record by record. Sample std is divided by
/// the local slope r'(P).
NonlinearityCorrection correct_nonlinearity(const MeasurementLog& log, const NonlinearitySpec& nl);

// --- fluctuations -----------------------------------------------------------

struct McResult {
  double delta_f = 0.0;
  double sigma_f = 0.0;
  double delta_f_error = 0.0;  // Monte Carlo standard error of delta_f
  double sigma_f_error = 0.0;  // large-sample standard error of sigma_f
  std::int64_t n_samples = 0;
  std::int64_t rejected = 0;   // power draws <= 0 that were redrawn
};

inline constexpr std::int64_t kDefaultMcSamples = 100000;
inline constexpr std::int64_t kMcBlock = 1024;

/// Independent Gaussian input power for each of the six non-dark settings.
McResult mc_power_fluctuations(const PhasePoint& phases, const SourceSpec& source, double sigma_rel,
                               std::int64_t n_samples, std::uint64_t seed);

/// Independent Gaussian shift of the phase difference in each two-path setting.
McResult mc_phase_fluctuations(const PhasePoint& phases, const SourceSpec& source,
                               double sigma_phase, std::int64_t n_samples, std::uint64_t seed);

// --- contrast ---------------------------------------------------------------

/// dF for terms scaled by (1 - delta_c):
/// 2(abg - 1) dC - (4 abg - 1) dC^2 + 2 abg dC^3, exact for on-plane terms.
double contrast_deviation(const InterferenceTerms& terms, double delta_c);

struct ContrastEstimate {
  double contrast = 1.0;
  double standard_error = 0.0;
};

/// mean(cos d), d ~ N(0, sigma^2).
ContrastEstimate contrast_from_phase_noise(double sigma_fast, std::int64_t n_samples, std::uint64_t seed);

// --- crosstalk --------------------------------------------------------------

/// Signs (s_bc, s_ab) with which dphi_DH enters dphi_BC and dphi_AB.
std::pair<int, int> crosstalk_signs(CrosstalkConvention c);

InterferenceTerms apply_crosstalk(const PhasePoint& phases, const CrosstalkSpec& ct);

/// F(apply_crosstalk) - F(unshifted).
double crosstalk_delta_f(const PhasePoint& phases, const CrosstalkSpec& ct);

/// Sorkin epsilon produced by crosstalk alone:
/// 2 P_in ( sqrt(T_A T_B)(cos ab - cos(ab + s_ab dh)) + sqrt(T_B T_C)(cos bc - cos(bc + s_bc dh)) ).
double epsilon_from_crosstalk(const PhasePoint& phases, const SourceSpec& source,
                              const CrosstalkSpec& ct);

struct CrosstalkInversion {
  std::vector<double> roots;  // all roots on (-pi, pi), smallest magnitude first
  double dphi_dh = 0.0;       // roots.front()
};

/// Solves epsilon_from_crosstalk(dh) = epsilon on (-pi, pi). Throws
/// AnalysisError when there is no real root.
CrosstalkInversion crosstalk_from_epsilon(double epsilon, const PhasePoint& phases,
                                          const SourceSpec& source, CrosstalkConvention convention);

// --- residual light ---------------------------------------------------------

struct SweepCurve {
  std::vector<double> phi_sh;   // radians
  std::vector<double> delta_f;
  double max = 0.0;
  double argmax = 0.0;
  double min = 0.0;
  double argmin = 0.0;
  double at_pi = 0.0;    // delta_f at phi_Sh = pi
  double at_zero = 0.0;  // delta_f at phi_Sh = 0
};

inline constexpr int kDefaultSweepPoints = 721;

/// delta_f of the full pipeline (simulate 8 settings, subtract background,
/// terms, F) for residual light (tau, phi_sh).
double residual_light_delta_f(const PhasePoint& phases, const SourceSpec& source, double tau,
                              double phi_sh);

std::vector<double> default_phi_grid(int n = kDefaultSweepPoints);

/// Sweep over phi_Sh; extrema refined by a parabola through the neighbours.
SweepCurve residual_light_sweep(const PhasePoint& phases, const SourceSpec& source, double tau,
                                const std::vector<double>& grid = default_phi_grid());

struct TauEstimate {
  double mean = 0.0;
  double sem = 0.0;
  std::vector<double> per_cycle;
  std::vector<int> excluded_cycles;  // nonpositive denominator
};

/// tau = (P_0 - P_dark) / (P_A + P_B + P_C + 2 sqrt(P_A P_B) g + 2 sqrt(P_A P_C) b
///                         + 2 sqrt(P_B P_C) a), per cycle, with P_i = raw - P_dark.
TauEstimate estimate_tau(std::span<const CyclePowers> raw_cycles, const InterferenceTerms& terms,
                         double p_dark);

// --- polarization -----------------------------------------------------------

/// F of the incoherent sum of an H and a V component. The share of T_k in H
/// is splits.h_fraction(k); with the polarizer only H remains.
PeresResult polarization_f(const InterferenceTerms& terms_h, const InterferenceTerms& terms_v,
                           const PolarizationSpec& splits, const SourceSpec& source);

// --- full budget ------------------------------------------------------------

struct BudgetEntry {
  std::string name;
  double delta_f = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::optional<double> sigma_f;
};

struct ReferenceValue {
  std::string label;
  double delta_f = 0.0;
  double delta_f_error = 0.0;
  double kappa = 0.0;
  double kappa_error = 0.0;
};

/// Published laboratory values kept for side-by-side comparison only.
const std::vector<ReferenceValue>& reference_values();

struct BudgetInputs {
  SourceSpec source;
  ImperfectionSpec imperfections;
  std::int64_t mc_samples = kDefaultMcSamples;
  std::uint64_t seed = 0;
  int sweep_points = kDefaultSweepPoints;
};

struct BudgetReport {
  PhasePoint phases;  // point the models were evaluated at
  InterferenceTerms terms;
  std::vector<BudgetEntry> entries;  // nonlinearity, power_fluct, phase_fluct, contrast,
                                     // crosstalk, residual_light
  double total_lower = 0.0;
  double total_upper = 0.0;
  double measured_delta_f = 0.0;
  double measured_sem = 0.0;  // autocorrelation corrected
  double measured_kappa = 0.0;
  SweepCurve residual_sweep;
  std::vector<ReferenceValue> references;

  const BudgetEntry& entry(const std::string& name) const;
};

BudgetReport full_budget(const MeasurementLog& log, const BudgetInputs& inputs,
                         const CorrectedPoint& corrected);

}  // namespace peres
