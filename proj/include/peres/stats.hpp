#pragma once

#include <span>
#include <string>
#include <vector>

#include "peres/core.hpp"
#include "peres/forward.hpp"

namespace peres {

struct SeriesStats {
  double mean = 0.0;
  double naive_sem = 0.0;
  double corrected_sem = 0.0;
  double n_effective = 0.0;
  int autocorr_cutoff_lag = 0;  // first lag with rho <= 0 (n if none)
};

/// Standard error of the mean corrected for autocorrelation with the
/// initial-positive-sequence estimator:
///   sem_c = sem * sqrt(1 + 2 sum_{k=1}^{K-1} (1 - k/n) rho_k),
/// K being the first lag whose sample autocorrelation is <= 0.
/// Requires n >= 8.
SeriesStats autocorr_sem(std::span<const double> series);

struct DroppedCycle {
  int cycle = 0;
  std::string reason;
};

struct MalfunctionReport {
  std::vector<DroppedCycle> dropped;
  int passes = 0;
};

/// Drops whole cycles that contain a record further than threshold * sigma
/// from its configuration's median, sigma being the MAD scaled to a Gaussian
/// standard deviation. Repeats until nothing more is dropped, so the result
/// is a fixed point. Configurations with zero spread never trigger.
std::pair<MeasurementLog, MalfunctionReport> filter_malfunctions(const MeasurementLog& log,
                                                                 double threshold = 5.0);

struct FluctuationEstimates {
  Eigen::Vector3d sigma_power = Eigen::Vector3d::Zero();         // single paths A, B, C, W
  Eigen::Vector3d sigma_pair_measured = Eigen::Vector3d::Zero(); // pairs BC, CA, AB, W
  Eigen::Vector3d sigma_pair_power = Eigen::Vector3d::Zero();    // propagated power part, W
  Eigen::Vector3d sigma_pair_phase = Eigen::Vector3d::Zero();    // phase part, W
  Eigen::Vector3d sigma_phase = Eigen::Vector3d::Zero();         // phase part, radians
  std::array<bool, 3> clamped{};  // sigma_meas^2 < sigma_pow^2 for the pair
};

/// Splits the observed spread of the two-path powers into an input-power part
/// (propagated from the single-path spreads) and a phase part. Pairs are in
/// (BC, CA, AB) order. With window >= 2 the spreads are pooled over
/// consecutive windows of that many cycles instead of the whole series.
FluctuationEstimates decompose_fluctuations(const MeasurementLog& log, const PhasePoint& phases,
                                            int window = 0);

double mean(std::span<const double> x);
double sample_std(std::span<const double> x);
double median(std::vector<double> x);

}  // namespace peres
