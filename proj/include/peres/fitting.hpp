#pragma once

// Small dense nonlinear least squares (damped Gauss-Newton / Levenberg-
// Marquardt with a central-difference Jacobian) and the two thermal-sweep fits
// built on it.

#include <functional>
#include <span>

#include <Eigen/Dense>

#include "peres/errors.hpp"

namespace peres {

/// y = model(x, params)
using ScalarModel = std::function<double(double, const Eigen::VectorXd&)>;

struct NllsOptions {
  int max_iterations = 500;
  double jacobian_step = 1e-6;     // relative central-difference step
  double gradient_tolerance = 1e-10;
  double step_tolerance = 1e-15;
};

struct NllsResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;  // s^2 (J^T J)^-1, s^2 = RSS / (n - p)
  double residual_norm = 0.0;  // ||y - model||_2
  double initial_residual_norm = 0.0;
  double gradient_norm = 0.0;  // ||J^T r||_inf at the solution
  int iterations = 0;
  bool converged = false;
};

/// Thrown when the iteration budget runs out; carries the best point found.
class FitError : public AnalysisError {
 public:
  FitError(const std::string& what, NllsResult best) : AnalysisError(what), best_(std::move(best)) {}
  const NllsResult& best() const { return best_; }

 private:
  NllsResult best_;
};

NllsResult nlls_minimize(const ScalarModel& model, std::span<const double> x,
                         std::span<const double> y, const Eigen::VectorXd& init,
                         const NllsOptions& options = {});

struct ThermalizationFit {
  double t0 = 0.0;        // deg C, asymptotic temperature
  double delta_t = 0.0;   // deg C
  double kappa_th = 0.0;  // per cycle
  double residual_norm = 0.0;
  Eigen::Vector3d uncertainties = Eigen::Vector3d::Zero();  // (t0, delta_t, kappa)
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
};

/// Fits T(k) = t0 + delta_t exp(-kappa k), k = 0, 1, ... (at least 4 points).
ThermalizationFit fit_thermalization(std::span<const double> temps);

struct ContrastFit {
  double c_alpha = 0.0;
  double dphi0 = 0.0;  // radians, in [0, 2 pi)
  double eta = 0.0;    // radians per deg C, reported >= 0
  double kappa_th = 0.0;
  double residual_norm = 0.0;
  Eigen::Vector4d uncertainties = Eigen::Vector4d::Zero();  // (c, dphi0, eta, kappa)
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();
};

/// Fits alpha(k) = c cos(dphi0 + eta delta_t exp(-kappa k)) with delta_t held
/// fixed. The model is invariant under (dphi0, eta) -> (-dphi0, -eta); the
/// representative with eta >= 0 is returned.
ContrastFit fit_contrast(std::span<const double> alphas, double delta_t);

}  // namespace peres
