#include <gtest/gtest.h>

#include <random>

#include "peres/fitting.hpp"

using namespace peres;

namespace {

std::vector<double> contrast_series(double c, double phi0, double eta, double dt, double kappa, int n) {
  std::vector<double> y(n);
  for (int k = 0; k < n; ++k) y[k] = c * std::cos(phi0 + eta * dt * std::exp(-kappa * k));
  return y;
}

}  // namespace

TEST(Nlls, ExponentialRecovered) {
  const ScalarModel m = [](double x, const Eigen::VectorXd& p) { return p(0) * std::exp(-p(1) * x); };
  std::vector<double> x, y;
  for (int i = 0; i < 30; ++i) {
    x.push_back(0.1 * i);
    y.push_back(2.5 * std::exp(-1.3 * 0.1 * i));
  }
  const NllsResult r = nlls_minimize(m, x, y, Eigen::Vector2d(1.0, 0.5));
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.params(0), 2.5, 1e-9);
  EXPECT_NEAR(r.params(1), 1.3, 1e-9);
  EXPECT_LE(r.residual_norm, r.initial_residual_norm);
}

TEST(Nlls, CovariancePsdAndResidualDecreases) {
  const ScalarModel m = [](double x, const Eigen::VectorXd& p) { return p(0) + p(1) * std::sin(p(2) * x); };
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0, 0.01);
  std::vector<double> x, y;
  for (int i = 0; i < 60; ++i) {
    x.push_back(0.1 * i);
    y.push_back(0.3 + 1.1 * std::sin(0.9 * 0.1 * i) + z(rng));
  }
  const NllsResult r = nlls_minimize(m, x, y, Eigen::Vector3d(0.0, 1.0, 1.0));
  EXPECT_LE(r.residual_norm, r.initial_residual_norm);
  EXPECT_NEAR(r.params(2), 0.9, 0.02);
  EXPECT_LE((r.covariance - r.covariance.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r.covariance);
  EXPECT_GE(es.eigenvalues().minCoeff(), 0.0);
  EXPECT_GT(es.eigenvalues().maxCoeff(), 0.0);
}

TEST(Nlls, Errors) {
  const ScalarModel m = [](double x, const Eigen::VectorXd& p) { return p(0) * x; };
  const std::vector<double> x{1, 2};
  const std::vector<double> y{1};
  EXPECT_THROW(nlls_minimize(m, x, y, Eigen::VectorXd::Ones(1)), UsageError);
  EXPECT_THROW(nlls_minimize(m, std::vector<double>{}, std::vector<double>{}, Eigen::VectorXd::Ones(1)), DataError);
}

TEST(Nlls, IterationBudgetGivesFitError) {
  const ScalarModel m = [](double x, const Eigen::VectorXd& p) { return p(0) * std::exp(-p(1) * x); };
  std::vector<double> x, y;
  for (int i = 0; i < 30; ++i) {
    x.push_back(0.1 * i);
    y.push_back(2.5 * std::exp(-1.3 * 0.1 * i));
  }
  NllsOptions opt;
  opt.max_iterations = 1;
  try {
    nlls_minimize(m, x, y, Eigen::Vector2d(100.0, -3.0), opt);
    FAIL() << "expected FitError";
  } catch (const FitError& e) {
    EXPECT_EQ(e.best().params.size(), 2);
    EXPECT_LE(e.best().residual_norm, e.best().initial_residual_norm);
  }
}

TEST(Thermalization, Recovered) {
  std::vector<double> t;
  for (int k = 0; k < 40; ++k) t.push_back(29.8 - 6.5 * std::exp(-0.12 * k));
  const ThermalizationFit f = fit_thermalization(t);
  EXPECT_NEAR(f.t0, 29.8, 1e-8);
  EXPECT_NEAR(f.delta_t, -6.5, 1e-8);
  EXPECT_NEAR(f.kappa_th, 0.12, 1e-9);

  const std::vector<double> flat(10, 23.0);
  EXPECT_EQ(fit_thermalization(flat).t0, 23.0);
  EXPECT_THROW(fit_thermalization(std::vector<double>{1, 2, 3}), DataError);
}

TEST(ContrastFitTest, NoiseFreeRecovery) {
  const std::vector<double> y = contrast_series(0.97, 2.1, 0.35, 5.0, 0.08, 72);
  const ContrastFit f = fit_contrast(y, 5.0);
  EXPECT_NEAR(f.c_alpha, 0.97, 1e-8);
  EXPECT_NEAR(f.kappa_th, 0.08, 1e-8);
  // (phi0, eta) and (-phi0, -eta) are the same curve
  const bool direct = std::abs(f.dphi0 - 2.1) < 1e-7 && std::abs(f.eta - 0.35) < 1e-8;
  const bool mirrored = std::abs(f.dphi0 - (2 * std::numbers::pi - 2.1)) < 1e-7 && std::abs(f.eta + 0.35) < 1e-8;
  EXPECT_TRUE(direct || mirrored) << f.dphi0 << " " << f.eta;
  EXPECT_GE(f.eta, 0.0);
  EXPECT_GE(f.dphi0, 0.0);
  EXPECT_LT(f.dphi0, 2 * std::numbers::pi);
}

TEST(ContrastFitTest, AmplitudeScales) {
  const ContrastFit a = fit_contrast(contrast_series(0.9, 1.0, 0.4, 4.0, 0.1, 60), 4.0);
  const ContrastFit b = fit_contrast(contrast_series(0.45, 1.0, 0.4, 4.0, 0.1, 60), 4.0);
  EXPECT_NEAR(b.c_alpha / a.c_alpha, 0.5, 1e-8);
  EXPECT_NEAR(a.kappa_th, b.kappa_th, 1e-8);
}

TEST(ContrastFitTest, NoisyUncertainty) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z(0, 0.02);
  std::vector<double> y = contrast_series(0.95, 1.2, 0.5, 5.0, 0.07, 72);
  for (double& v : y) v += z(rng);
  const ContrastFit f = fit_contrast(y, 5.0);
  EXPECT_NEAR(f.c_alpha, 0.95, 5 * f.uncertainties(0));
  EXPECT_GT(f.uncertainties(0), 0.0);
  EXPECT_LE((f.covariance - f.covariance.transpose()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ContrastFitTest, Errors) {
  EXPECT_THROW(fit_contrast(std::vector<double>(20, 0.3), 5.0), AnalysisError);
  EXPECT_THROW(fit_contrast(std::vector<double>{0.1, 0.2, 0.3, 0.4}, 5.0), DataError);
  EXPECT_THROW(fit_contrast(contrast_series(0.9, 1.0, 0.4, 4.0, 0.1, 20), 0.0), DataError);
}
