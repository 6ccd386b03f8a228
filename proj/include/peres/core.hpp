#pragma once

// Fundamental quantities of the three-path Peres and Sorkin tests.
//
// Types are templated on the scalar so the formulas can be evaluated in
// extended precision (long double) by the tests; the library itself uses the
// double aliases at the bottom of this file.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>

#include "peres/errors.hpp"

namespace peres {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

/// Point in phase space: the pairwise phase differences
/// (dphi_BC, dphi_CA, dphi_AB), stored in that order.
template <typename Scalar>
struct BasicPhasePoint {
  Vector3<Scalar> v = Vector3<Scalar>::Zero();

  BasicPhasePoint() = default;
  explicit BasicPhasePoint(const Vector3<Scalar>& values) : v(values) {}
  BasicPhasePoint(Scalar bc, Scalar ca, Scalar ab) : v(bc, ca, ab) {}

  Scalar dphi_bc() const { return v(0); }
  Scalar dphi_ca() const { return v(1); }
  Scalar dphi_ab() const { return v(2); }

  Scalar sum() const { return v.sum(); }

  /// Residual r = sum - 2 pi n with respect to the plane of index n.
  Scalar plane_residual(int n) const {
    return sum() - Scalar(2) * std::numbers::pi_v<Scalar> * Scalar(n);
  }

  bool finite() const { return v.allFinite(); }

  BasicPhasePoint operator-() const { return BasicPhasePoint(Vector3<Scalar>(-v)); }
  bool operator==(const BasicPhasePoint& o) const { return v == o.v; }
};

/// Normalized interference terms (alpha, beta, gamma) = cosines of
/// (dphi_BC, dphi_CA, dphi_AB). Measured terms may leave [-1, 1]; they are kept
/// as they are and `out_of_range()` reports it.
template <typename Scalar>
struct BasicInterferenceTerms {
  Vector3<Scalar> v = Vector3<Scalar>::Zero();

  BasicInterferenceTerms() = default;
  explicit BasicInterferenceTerms(const Vector3<Scalar>& values) : v(values) {}
  BasicInterferenceTerms(Scalar a, Scalar b, Scalar g) : v(a, b, g) {}

  Scalar alpha() const { return v(0); }
  Scalar beta() const { return v(1); }
  Scalar gamma() const { return v(2); }

  bool out_of_range() const { return (v.array().abs() > Scalar(1)).any(); }
  bool finite() const { return v.allFinite(); }
};

/// Canonical slot order of the eight shutter combinations.
enum class Slot : int { k0 = 0, kA, kB, kC, kAB, kBC, kCA, kABC };

/// The eight detector powers (watts) of one measurement cycle.
template <typename Scalar>
struct BasicCyclePowers {
  std::array<Scalar, 8> p{};
  bool background_subtracted = false;

  Scalar& operator[](Slot s) { return p[static_cast<int>(s)]; }
  Scalar operator[](Slot s) const { return p[static_cast<int>(s)]; }

  Scalar p0() const { return (*this)[Slot::k0]; }
  Scalar pa() const { return (*this)[Slot::kA]; }
  Scalar pb() const { return (*this)[Slot::kB]; }
  Scalar pc() const { return (*this)[Slot::kC]; }
  Scalar pab() const { return (*this)[Slot::kAB]; }
  Scalar pbc() const { return (*this)[Slot::kBC]; }
  Scalar pca() const { return (*this)[Slot::kCA]; }
  Scalar pabc() const { return (*this)[Slot::kABC]; }
};

template <typename Scalar>
struct BasicPeresResult {
  Scalar f{};
  BasicInterferenceTerms<Scalar> terms;
};

template <typename Scalar>
struct BasicSorkinResult {
  Scalar epsilon{};      // mean epsilon over the cycles, watts
  Scalar kappa{};
  Scalar denominator{};  // mean summed |pairwise interference|, watts
};

// ---------------------------------------------------------------------------

/// F = a^2 + b^2 + g^2 - 2abg.
template <typename Scalar>
Scalar peres_f(Scalar a, Scalar b, Scalar g) {
  return a * a + b * b + g * g - Scalar(2) * a * b * g;
}

template <typename Scalar>
BasicPeresResult<Scalar> peres_parameter(const BasicInterferenceTerms<Scalar>& terms) {
  if (!terms.finite()) throw DomainError("peres_parameter: non-finite interference term");
  return {peres_f(terms.alpha(), terms.beta(), terms.gamma()), terms};
}

template <typename Scalar>
BasicCyclePowers<Scalar> subtract_background(const BasicCyclePowers<Scalar>& raw) {
  if (raw.background_subtracted) {
    throw UsageError("subtract_background: powers are already background subtracted");
  }
  BasicCyclePowers<Scalar> out = raw;
  const Scalar p0 = raw.p0();
  for (auto& x : out.p) x -= p0;
  out[Slot::k0] = Scalar(0);
  out.background_subtracted = true;
  return out;
}

namespace detail {

template <typename Scalar>
Scalar pair_term(Scalar pij, Scalar pi, Scalar pj) {
  return (pij - pi - pj) / (Scalar(2) * std::sqrt(pi * pj));
}

}  // namespace detail

/// (alpha, beta, gamma) from background-subtracted single- and two-path powers.
template <typename Scalar>
BasicInterferenceTerms<Scalar> interference_terms(const BasicCyclePowers<Scalar>& powers) {
  if (!powers.background_subtracted) {
    throw UsageError("interference_terms: powers must be background subtracted first");
  }
  const char* names[] = {"A", "B", "C"};
  const Scalar single[] = {powers.pa(), powers.pb(), powers.pc()};
  for (int i = 0; i < 3; ++i) {
    if (!(single[i] > Scalar(0))) {
      throw DomainError(std::string("interference_terms: single-path power of path ") + names[i] +
                        " is not positive");
    }
  }
  return {detail::pair_term(powers.pbc(), powers.pb(), powers.pc()),
          detail::pair_term(powers.pca(), powers.pa(), powers.pc()),
          detail::pair_term(powers.pab(), powers.pa(), powers.pb())};
}

/// epsilon = P_ABC + P_A + P_B + P_C - P_AB - P_BC - P_CA.
template <typename Scalar>
Scalar sorkin_epsilon(const BasicCyclePowers<Scalar>& powers) {
  if (!powers.background_subtracted) {
    throw UsageError("sorkin_epsilon: powers must be background subtracted first");
  }
  return powers.pabc() + powers.pa() + powers.pb() + powers.pc() - powers.pab() - powers.pbc() -
         powers.pca();
}

/// Summed magnitude of the three pairwise interference contributions.
template <typename Scalar>
Scalar pairwise_interference_magnitude(const BasicCyclePowers<Scalar>& p) {
  return std::abs(p.pab() - p.pa() - p.pb()) + std::abs(p.pbc() - p.pb() - p.pc()) +
         std::abs(p.pca() - p.pa() - p.pc());
}

/// kappa = <epsilon> / <|P_AB-P_A-P_B| + |P_BC-P_B-P_C| + |P_CA-P_A-P_C|>.
template <typename Scalar>
BasicSorkinResult<Scalar> sorkin_kappa(std::span<const BasicCyclePowers<Scalar>> cycles) {
  if (cycles.empty()) throw DataError("sorkin_kappa: no cycles");
  Scalar eps_sum = 0;
  Scalar den_sum = 0;
  for (const auto& c : cycles) {
    eps_sum += sorkin_epsilon(c);
    den_sum += pairwise_interference_magnitude(c);
  }
  const Scalar n = static_cast<Scalar>(cycles.size());
  BasicSorkinResult<Scalar> r;
  r.epsilon = eps_sum / n;
  r.denominator = den_sum / n;
  if (!(r.denominator > Scalar(0))) {
    throw DataError("sorkin_kappa: pairwise interference sum is zero");
  }
  r.kappa = r.epsilon / r.denominator;
  return r;
}

/// Wraps an angle into (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar x) {
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  Scalar y = std::remainder(x, Scalar(2) * pi);  // [-pi, pi]
  if (y <= -pi) y += Scalar(2) * pi;
  return y;
}

template <typename Scalar>
BasicPhasePoint<Scalar> normalize_phase(const BasicPhasePoint<Scalar>& p) {
  if (!p.finite()) throw DomainError("normalize_phase: non-finite phase");
  return BasicPhasePoint<Scalar>(p.v.unaryExpr([](Scalar x) { return wrap_angle(x); }).eval());
}

/// Cosines of the three pairwise phase differences.
template <typename Scalar>
BasicInterferenceTerms<Scalar> terms_from_phases(const BasicPhasePoint<Scalar>& p) {
  return BasicInterferenceTerms<Scalar>(p.v.array().cos().matrix().eval());
}

/// Principal-branch phases (arccos of each term, all in [0, pi]). Terms up to
/// 1e-9 outside [-1, 1] are clamped; larger excursions are a domain error.
template <typename Scalar>
BasicPhasePoint<Scalar> principal_phases(const BasicInterferenceTerms<Scalar>& terms) {
  Vector3<Scalar> out;
  for (int i = 0; i < 3; ++i) {
    const Scalar t = terms.v(i);
    if (!(std::abs(t) <= Scalar(1) + Scalar(1e-9))) {
      throw DomainError("principal_phases: interference term outside [-1, 1]");
    }
    out(i) = std::acos(std::clamp(t, Scalar(-1), Scalar(1)));
  }
  return BasicPhasePoint<Scalar>(out);
}

using PhasePoint = BasicPhasePoint<double>;
using InterferenceTerms = BasicInterferenceTerms<double>;
using CyclePowers = BasicCyclePowers<double>;
using PeresResult = BasicPeresResult<double>;
using SorkinResult = BasicSorkinResult<double>;

}  // namespace peres
