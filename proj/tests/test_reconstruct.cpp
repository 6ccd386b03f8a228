#include <gtest/gtest.h>

#include <random>

#include "reference_points.hpp"
#include "peres/reconstruct.hpp"

using namespace peres;

TEST(Candidates, DegenerateAllOnes) {
  const CandidateSet s = candidate_phase_points(InterferenceTerms(1, 1, 1));
  ASSERT_EQ(s.candidates.size(), 1u);
  EXPECT_EQ(s.candidates[0].v.norm(), 0.0);
}

TEST(Candidates, Measured23IncludesKnownPoint) {
  const CandidateSet s = candidate_phase_points(testdata::kMeasured23);
  ASSERT_EQ(s.candidates.size(), 4u);
  const Eigen::Vector3d want(std::acos(-0.765), -std::acos(0.941), -std::acos(-0.664));
  bool found = false;
  for (const auto& c : s.candidates) {
    found = found || (c.v - want).cwiseAbs().maxCoeff() < 1e-12 || (c.v + want).cwiseAbs().maxCoeff() < 1e-12;
  }
  EXPECT_TRUE(found);
}

TEST(Candidates, CosinesReproduceTerms) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 1000; ++i) {
    const InterferenceTerms t(u(rng), u(rng), u(rng));
    for (const auto& c : candidate_phase_points(t).candidates) {
      EXPECT_LE((terms_from_phases(c).v - t.v).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Candidates, ClampAndReject) {
  const CandidateSet s = candidate_phase_points(InterferenceTerms(1 + 5e-10, 0.2, 0.3));
  EXPECT_TRUE(s.clamped);
  EXPECT_THROW(candidate_phase_points(InterferenceTerms(1 + 1e-8, 0.2, 0.3)), DomainError);
}

TEST(Projection, Examples) {
  const PhasePoint on(0.4, -1.1, 0.7);
  EXPECT_LE((project_to_plane(on, 0).v - on.v).cwiseAbs().maxCoeff(), 1e-15);

  const PhasePoint p(0.1, 0.1, 0.1);
  EXPECT_LE(project_to_plane(p, 0).v.cwiseAbs().maxCoeff(), 1e-16);
  EXPECT_NEAR(plane_distance(p, 0), 0.1 * std::sqrt(3.0), 1e-15);
}

TEST(Projection, IdempotentAndExactPlane) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 1000; ++i) {
    const PhasePoint p(u(rng), u(rng), u(rng));
    for (int n : {-1, 0, 1}) {
      const PhasePoint q = project_to_plane(p, n);
      EXPECT_LE(std::abs(q.plane_residual(n)), 1e-12);
      EXPECT_LE((project_to_plane(q, n).v - q.v).cwiseAbs().maxCoeff(), 1e-14);
    }
  }
}

TEST(Correct, TableRows) {
  const CorrectedPoint a = correct_phase_point(testdata::kMeasured23);
  EXPECT_LE((a.corrected_terms.v - testdata::kCorrected23.v).cwiseAbs().maxCoeff(), 1e-3);
  const CorrectedPoint b = correct_phase_point(testdata::kMeasured30);
  EXPECT_LE((b.corrected_terms.v - testdata::kCorrected30.v).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_EQ(a.plane_index, 0);
  EXPECT_EQ(a.surviving.size(), 2u);  // two candidates land nearest n = 0
  EXPECT_EQ(a.all.size(), 4u);
  EXPECT_NEAR(peres_parameter(a.corrected_terms).f, 1.0, 1e-12);
}

TEST(Correct, OnPlaneRoundTrip) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng);
    const double b = u(rng);
    const double c = -a - b;
    if (std::abs(c) > std::numbers::pi) continue;
    const InterferenceTerms t = terms_from_phases(PhasePoint(a, b, c));
    const CorrectedPoint cp = correct_phase_point(t);
    EXPECT_LE(cp.distance, 1e-7);
    EXPECT_LE((cp.corrected_terms.v - t.v).cwiseAbs().maxCoeff(), 1e-12);
    ++checked;
  }
  EXPECT_GT(checked, 500);
}

TEST(Correct, DistanceMinimalAmongAdmissible) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng);
    const double b = u(rng);
    Eigen::Vector3d t(std::cos(a), std::cos(b), std::cos(-a - b));
    for (int k = 0; k < 3; ++k) t(k) = std::clamp(t(k) + 0.05 * noise(rng), -1.0, 1.0);
    CorrectedPoint cp;
    try {
      cp = correct_phase_point(InterferenceTerms(t));
    } catch (const AnalysisError&) {
      continue;
    }
    EXPECT_NEAR(peres_parameter(cp.corrected_terms).f, 1.0, 1e-12);
    for (const auto& c : candidate_phase_points(InterferenceTerms(t)).candidates) {
      if (nearest_plane(c) != 0) continue;
      EXPECT_GE(plane_distance(c, 0), cp.distance - 1e-15);
    }
  }
}

TEST(Correct, TieBreakPrefersPositive) {
  // alpha = gamma: (a, b, -a) and (a, -b, -a) sit at the same distance from n = 0.
  const CorrectedPoint cp = correct_phase_point(InterferenceTerms(std::cos(1.0), std::cos(0.5), std::cos(1.0)));
  ASSERT_GE(cp.surviving.size(), 2u);
  EXPECT_NEAR(cp.surviving[0].distance, cp.surviving[1].distance, 1e-14);
  EXPECT_GT(cp.surviving[0].candidate.v(1), 0.0);
  EXPECT_LT(cp.surviving[1].candidate.v(1), 0.0);
}

TEST(Correct, ExtendedPrecision) {
  const BasicInterferenceTerms<long double> t(-0.765L, 0.941L, -0.664L);
  const auto cp = correct_phase_point(t);
  EXPECT_NEAR(static_cast<double>(cp.corrected_terms.alpha()), -0.806, 1e-3);
  EXPECT_LE(std::abs(static_cast<double>(peres_parameter(cp.corrected_terms).f - 1.0L)), 1e-15);
}
