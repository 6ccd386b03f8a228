#pragma once

// Recovery of the closest physical point in phase space from measured
// interference terms: every sign assignment of the arccos values is projected
// normally onto the planes dphi_BC + dphi_CA + dphi_AB = 2 pi n and the
// closest admissible projection on n = 0 is kept.

#include <cmath>
#include <numbers>
#include <vector>

#include "peres/core.hpp"

namespace peres {

template <typename Scalar>
struct BasicCandidateSet {
  /// Distinct candidates, one representative per global sign flip, in sign
  /// pattern order (+++), (++-), (+-+), (+--).
  std::vector<BasicPhasePoint<Scalar>> candidates;
  BasicInterferenceTerms<Scalar> source_terms;
  bool clamped = false;  // some |term| was marginally above 1
};

template <typename Scalar>
struct BasicProjection {
  BasicPhasePoint<Scalar> candidate;
  BasicPhasePoint<Scalar> projected;
  int plane_index = 0;
  Scalar distance{};
};

template <typename Scalar>
struct BasicCorrectedPoint {
  BasicPhasePoint<Scalar> point;
  int plane_index = 0;
  Scalar distance{};
  int chosen_candidate = 0;
  BasicInterferenceTerms<Scalar> corrected_terms;
  bool clamped = false;
  /// All candidates that project onto n = 0, closest first (the chosen one is
  /// element 0). Kept so callers can check sensitivity to the choice.
  std::vector<BasicProjection<Scalar>> surviving;
  /// Every candidate with its nearest plane, in candidate order.
  std::vector<BasicProjection<Scalar>> all;
};

inline constexpr double kTermClampTolerance = 1e-9;

template <typename Scalar>
BasicCandidateSet<Scalar> candidate_phase_points(const BasicInterferenceTerms<Scalar>& terms) {
  if (!terms.finite()) throw DomainError("candidate_phase_points: non-finite term");
  BasicCandidateSet<Scalar> set;
  set.source_terms = terms;
  Vector3<Scalar> ac;
  for (int i = 0; i < 3; ++i) {
    Scalar t = terms.v(i);
    if (std::abs(t) > Scalar(1)) {
      if (std::abs(t) > Scalar(1) + Scalar(kTermClampTolerance)) {
        throw DomainError("candidate_phase_points: |interference term| exceeds 1");
      }
      set.clamped = true;
      t = std::copysign(Scalar(1), t);
    }
    ac(i) = std::acos(t);
  }
  for (int pattern = 0; pattern < 4; ++pattern) {
    const Vector3<Scalar> signs(Scalar(1), (pattern & 2) ? Scalar(-1) : Scalar(1),
                                (pattern & 1) ? Scalar(-1) : Scalar(1));
    BasicPhasePoint<Scalar> c(Vector3<Scalar>(signs.cwiseProduct(ac)));
    bool duplicate = false;
    for (const auto& seen : set.candidates) {
      if (seen == c || seen == -c) duplicate = true;
    }
    if (!duplicate) set.candidates.push_back(c);
  }
  return set;
}

/// Normal projection onto the plane sum = 2 pi n.
template <typename Scalar>
BasicPhasePoint<Scalar> project_to_plane(const BasicPhasePoint<Scalar>& p, int n) {
  if (!p.finite()) throw DomainError("project_to_plane: non-finite phase");
  const Scalar r = p.plane_residual(n);
  Vector3<Scalar> out = p.v - Vector3<Scalar>::Constant(r / Scalar(3));
  // Absorb the last rounding error into the largest component so the plane
  // equation holds to working precision.
  Eigen::Index k;
  out.cwiseAbs().maxCoeff(&k);
  out(k) -= BasicPhasePoint<Scalar>(out).plane_residual(n);
  return BasicPhasePoint<Scalar>(out);
}

template <typename Scalar>
Scalar plane_distance(const BasicPhasePoint<Scalar>& p, int n) {
  return std::abs(p.plane_residual(n)) / std::sqrt(Scalar(3));
}

/// Index in {-1, 0, 1} of the plane closest to p.
template <typename Scalar>
int nearest_plane(const BasicPhasePoint<Scalar>& p) {
  const Scalar turns = p.sum() / (Scalar(2) * std::numbers::pi_v<Scalar>);
  const int n = static_cast<int>(std::lround(turns));
  return std::clamp(n, -1, 1);
}

template <typename Scalar>
BasicCorrectedPoint<Scalar> correct_phase_point(const BasicInterferenceTerms<Scalar>& terms) {
  const auto set = candidate_phase_points(terms);

  BasicCorrectedPoint<Scalar> out;
  out.clamped = set.clamped;
  std::vector<int> surviving_index;
  for (int i = 0; i < static_cast<int>(set.candidates.size()); ++i) {
    const auto& c = set.candidates[i];
    BasicProjection<Scalar> proj;
    proj.candidate = c;
    proj.plane_index = nearest_plane(c);
    proj.distance = plane_distance(c, proj.plane_index);
    proj.projected = project_to_plane(c, proj.plane_index);
    out.all.push_back(proj);
    if (proj.plane_index == 0) surviving_index.push_back(i);
  }
  if (surviving_index.empty()) {
    throw AnalysisError(
        "correct_phase_point: every candidate is closest to an n = +-1 plane; no selection made");
  }

  auto positives = [](const BasicPhasePoint<Scalar>& p) { return (p.v.array() > Scalar(0)).count(); };
  // Closer first; within 1e-12 relative, more positive components first.
  std::stable_sort(surviving_index.begin(), surviving_index.end(), [&](int a, int b) {
    const Scalar da = out.all[a].distance;
    const Scalar db = out.all[b].distance;
    const Scalar tol = Scalar(1e-12) * std::max({da, db, Scalar(1e-300)});
    if (std::abs(da - db) > tol) return da < db;
    return positives(out.all[a].candidate) > positives(out.all[b].candidate);
  });
  for (int i : surviving_index) out.surviving.push_back(out.all[i]);

  const auto& best = out.surviving.front();
  out.chosen_candidate = surviving_index.front();
  out.point = best.projected;
  out.plane_index = 0;
  out.distance = best.distance;
  out.corrected_terms = terms_from_phases(out.point);
  return out;
}

using CandidateSet = BasicCandidateSet<double>;
using Projection = BasicProjection<double>;
using CorrectedPoint = BasicCorrectedPoint<double>;

}  // namespace peres
