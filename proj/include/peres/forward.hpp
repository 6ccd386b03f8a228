#pragma once

// Forward model of the three-path interferometer and a shutter-cycle
// measurement simulator.
//
// Powers are evaluated in pairwise-phase form,
//
//   P = P_in * ( sum_k w_k + 2 c sum_{k<l} sqrt(w_k w_l) cos(dphi_kl + o_k - o_l) ),
//
// with w_k = T_k for an open path and tau*T_k for a closed one, o_k the extra
// phase of path k (-phi_Sh when closed, crosstalk shifts when open) and c the
// fast-noise contrast factor. For phase points on a plane sum = 2 pi n this is
// the coherent sum |sum_k sqrt(w_k) exp(i(phi_k + o_k))|^2; off the plane it is
// the natural continuation used when analysing measured (inconsistent) phases.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "peres/core.hpp"

namespace peres {

/// Path order for per-path vectors is (A, B, C).
struct SourceSpec {
  double p_in = 1.0;  // watts
  Eigen::Vector3d transmission{0.26, 0.52, 0.22};
  double p_dark = 0.0;  // watts, shutter-independent background

  void validate() const;
};

struct ShutterConfig {
  bool open_a = false;
  bool open_b = false;
  bool open_c = false;

  bool open(int path) const { return path == 0 ? open_a : path == 1 ? open_b : open_c; }
  Slot slot() const;
  std::string label() const;  // "0", "A", "B", "C", "AB", "BC", "CA", "ABC"

  static ShutterConfig from_slot(Slot s);
  static ShutterConfig from_label(const std::string& label);  // throws DataError

  bool operator==(const ShutterConfig&) const = default;
};

/// The eight configurations in canonical slot order.
std::array<ShutterConfig, 8> all_shutter_configs();

struct ResidualLightSpec {
  double tau = 0.0;     // closed-state transmissivity
  double phi_sh = 0.0;  // radians, phase of residual light relative to the open state
};

enum class CrosstalkConvention { kCancelling, kComovingPlus, kComovingMinus };

std::string to_string(CrosstalkConvention c);
CrosstalkConvention crosstalk_convention_from_string(const std::string& s);

/// Phase crosstalk reduced to the single observable difference dphi_DH.
/// kCancelling: closing A shifts dphi_BC by +dh, closing C shifts dphi_AB by
/// -dh, closing B leaves dphi_CA unchanged. The comoving conventions shift
/// both dphi_BC and dphi_AB by +dh (plus) or -dh (minus).
struct CrosstalkSpec {
  double dphi_dh = 0.0;
  CrosstalkConvention convention = CrosstalkConvention::kCancelling;
};

struct FluctuationSpec {
  double sigma_pin_rel = 0.0;     // per-setting relative input-power noise
  double sigma_phase = 0.0;       // per-setting noise of each pairwise phase, radians
  double sigma_phase_fast = 0.0;  // within-setting phase noise, enters as contrast
  double sigma_sample_rel = 0.0;  // per-sample relative reading noise (sample std only)

  /// exp(-sigma_phase_fast^2 / 2).
  double contrast() const;
};

/// Detector reading r(P) = P (1 + c2 P + c3 P^2), monotone on [0, max_power_w].
struct NonlinearitySpec {
  double c2 = 0.0;  // 1/W
  double c3 = 0.0;  // 1/W^2
  double max_power_w = 10.0;

  bool linear() const { return c2 == 0.0 && c3 == 0.0; }
  void validate() const;  // throws ConfigError when not monotone on the range
};

struct PolarizationSpec {
  Eigen::Vector3d h_fraction = Eigen::Vector3d::Ones();  // share of T_k in the H component
  PhasePoint phases_v;                                   // phase point of the V component
  bool polarizer_enabled = false;                        // keep only the H component
};

struct ImperfectionSpec {
  ResidualLightSpec residual;
  CrosstalkSpec crosstalk;
  FluctuationSpec fluctuations;
  NonlinearitySpec nonlinearity;
  PolarizationSpec polarization;

  void validate() const;
};

/// Gaussian variates for one shutter setting: (power, dphi_BC, dphi_CA, dphi_AB).
inline constexpr std::size_t kNoiseDrawSize = 4;

double ideal_power(const SourceSpec& source, const PhasePoint& phases, ShutterConfig config);

/// Optical power before dark background and detector response.
double optical_power(const SourceSpec& source, const PhasePoint& phases, const ImperfectionSpec& spec,
                     ShutterConfig config, std::span<const double> noise_draw = {});

/// Detector reading including dark background and nonlinearity. `noise_draw`
/// is empty (no slow fluctuations) or holds kNoiseDrawSize standard normals.
double imperfect_power(const SourceSpec& source, const PhasePoint& phases,
                       const ImperfectionSpec& spec, ShutterConfig config,
                       std::span<const double> noise_draw = {});

double detector_response(double power, const NonlinearitySpec& nl);

/// Inverse of detector_response on [0, max_power_w]; throws DomainError for a
/// reading outside the image of that range.
double invert_detector_response(double reading, const NonlinearitySpec& nl);

/// Powers of all eight configurations, in slot order.
CyclePowers ideal_cycle(const SourceSpec& source, const PhasePoint& phases);
CyclePowers imperfect_cycle(const SourceSpec& source, const PhasePoint& phases,
                            const ImperfectionSpec& spec);

// --- measurement logs -------------------------------------------------------

struct MeasurementRecord {
  int cycle = 0;
  ShutterConfig config;
  double mean_power = 0.0;  // W
  double std_power = 0.0;   // W
  int n_samples = 1;
  double housing_temp = 0.0;  // deg C
  double input_power = 0.0;   // W
  double timestamp = 0.0;     // s

  bool operator==(const MeasurementRecord&) const = default;
};

struct MeasurementLog {
  std::vector<MeasurementRecord> records;
  std::uint64_t seed = 0;
  std::string spec_snapshot;  // free-form (JSON when produced by the CLI)

  bool operator==(const MeasurementLog&) const = default;
};

struct SimulationProtocol {
  int n_cycles = 100;
  int samples_per_setting = 1;
  double setting_duration_s = 13.0;
  double housing_temp_c = 23.0;
};

MeasurementLog simulate_measurement(const SourceSpec& source, const PhasePoint& phases,
                                    const ImperfectionSpec& spec, const SimulationProtocol& protocol,
                                    std::uint64_t seed);

/// Raw (not background-subtracted) cycle powers grouped from a log, ordered by
/// cycle index. Throws DataError when a cycle lacks a configuration.
struct CycleSeries {
  std::vector<int> cycle;
  std::vector<CyclePowers> powers;
};

CycleSeries group_cycles(const MeasurementLog& log);

}  // namespace peres
