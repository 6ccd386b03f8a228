#pragma once

// Reference data points shared by the unit tests and the acceptance binary.

#include "peres/core.hpp"
#include "peres/forward.hpp"

namespace peres::testdata {

// Interference terms as reconstructed from the two measured datasets
// (housing at 23 and 30 deg C), and their physically corrected versions.
inline const InterferenceTerms kMeasured23{-0.765, 0.941, -0.664};
inline const InterferenceTerms kMeasured30{-0.405, 0.980, -0.355};
inline const InterferenceTerms kCorrected23{-0.806, 0.961, -0.612};
inline const InterferenceTerms kCorrected30{-0.449, 0.989, -0.310};

inline constexpr double kMeanF23 = 0.9553;
inline constexpr double kMeanF30 = 0.9683;

inline constexpr double kTau23 = 2.20e-4;
inline constexpr double kTau30 = 2.707e-4;

inline SourceSpec lab_source() {
  SourceSpec s;
  s.p_in = 1.0;
  s.transmission = Eigen::Vector3d(0.26, 0.52, 0.22);
  return s;
}

}  // namespace peres::testdata
