#include "peres/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace peres {

namespace {

Eigen::VectorXd residuals(const ScalarModel& model, std::span<const double> x,
                          std::span<const double> y, const Eigen::VectorXd& p) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) r(static_cast<Eigen::Index>(i)) = y[i] - model(x[i], p);
  return r;
}

/// Jacobian of the model (not of the residual).
Eigen::MatrixXd jacobian(const ScalarModel& model, std::span<const double> x,
                         const Eigen::VectorXd& p, double rel_step) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd j(n, p.size());
  for (Eigen::Index c = 0; c < p.size(); ++c) {
    const double h = rel_step * std::max(std::abs(p(c)), 1.0);
    Eigen::VectorXd hi = p;
    Eigen::VectorXd lo = p;
    hi(c) += h;
    lo(c) -= h;
    const double width = hi(c) - lo(c);
    for (Eigen::Index i = 0; i < n; ++i) {
      j(i, c) = (model(x[i], hi) - model(x[i], lo)) / width;
    }
  }
  return j;
}

Eigen::MatrixXd covariance_from(const Eigen::MatrixXd& j, double rss, Eigen::Index n, Eigen::Index np) {
  const Eigen::MatrixXd jtj = j.transpose() * j;
  Eigen::MatrixXd inv = jtj.completeOrthogonalDecomposition().pseudoInverse();
  const double s2 = n > np ? rss / static_cast<double>(n - np) : 0.0;
  Eigen::MatrixXd cov = s2 * inv;
  return 0.5 * (cov + cov.transpose());
}

}  // namespace

NllsResult nlls_minimize(const ScalarModel& model, std::span<const double> x,
                         std::span<const double> y, const Eigen::VectorXd& init,
                         const NllsOptions& options) {
  if (x.size() != y.size()) throw UsageError("nlls_minimize: x and y differ in length");
  if (x.size() < static_cast<std::size_t>(init.size())) {
    throw DataError("nlls_minimize: fewer data points than parameters");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw DataError("nlls_minimize: non-finite data");
  }

  const auto n = static_cast<Eigen::Index>(x.size());
  const Eigen::Index np = init.size();

  NllsResult res;
  res.params = init;
  Eigen::VectorXd r = residuals(model, x, y, res.params);
  double cost = r.squaredNorm();
  res.initial_residual_norm = std::sqrt(cost);
  if (!std::isfinite(cost)) throw DataError("nlls_minimize: model is not finite at the initial point");

  double lambda = 1e-3;
  Eigen::MatrixXd j = jacobian(model, x, res.params, options.jacobian_step);
  for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
    const Eigen::VectorXd g = j.transpose() * r;
    res.gradient_norm = g.cwiseAbs().maxCoeff();
    const double scale = j.norm() * std::sqrt(cost) + 1e-300;
    if (cost == 0.0 || res.gradient_norm <= options.gradient_tolerance * scale) {
      res.converged = true;
      break;
    }

    const Eigen::MatrixXd jtj = j.transpose() * j;
    Eigen::VectorXd diag = jtj.diagonal().cwiseMax(1e-12 * jtj.diagonal().maxCoeff() + 1e-300);

    bool improved = false;
    bool tiny_step = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * diag;
      const Eigen::VectorXd step = a.ldlt().solve(g);
      const Eigen::VectorXd trial = res.params + step;
      const Eigen::VectorXd r_trial = residuals(model, x, y, trial);
      const double cost_trial = r_trial.squaredNorm();
      if (std::isfinite(cost_trial) && cost_trial < cost) {
        tiny_step = step.norm() <= options.step_tolerance * (res.params.norm() + options.step_tolerance);
        res.params = trial;
        r = r_trial;
        cost = cost_trial;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!improved || tiny_step) {
      // No further decrease representable: a minimum to working precision.
      res.converged = true;
      j = jacobian(model, x, res.params, options.jacobian_step);
      res.gradient_norm = (j.transpose() * r).cwiseAbs().maxCoeff();
      break;
    }
    j = jacobian(model, x, res.params, options.jacobian_step);
  }

  res.residual_norm = std::sqrt(cost);
  res.covariance = covariance_from(j, cost, n, np);
  if (!res.converged) {
    throw FitError("nlls_minimize: no convergence within " + std::to_string(options.max_iterations) +
                       " iterations",
                   res);
  }
  return res;
}

// --- thermalization ---------------------------------------------------------

ThermalizationFit fit_thermalization(std::span<const double> temps) {
  const std::size_t n = temps.size();
  if (n < 4) throw DataError("fit_thermalization: need at least 4 points");

  const auto [lo_it, hi_it] = std::minmax_element(temps.begin(), temps.end());
  double sum = 0.0;
  for (double t : temps) sum += t;
  const double mean_t = sum / static_cast<double>(n);
  ThermalizationFit fit;
  if (*hi_it - *lo_it <= 1e-12 * std::max(1.0, std::abs(mean_t))) {
    fit.t0 = mean_t;
    return fit;
  }

  std::vector<double> k(n);
  for (std::size_t i = 0; i < n; ++i) k[i] = static_cast<double>(i);

  const double t0 = temps.back();
  const double dt = temps.front() - temps.back();
  // kappa from a log-linear fit of |T - T0| over the points that are clearly
  // above the floor.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double d = (temps[i] - t0) / dt;
    if (d > 1e-3) {
      const double ly = std::log(d);
      sx += k[i];
      sy += ly;
      sxx += k[i] * k[i];
      sxy += k[i] * ly;
      ++m;
    }
  }
  double kappa = 1.0 / static_cast<double>(n);
  if (m >= 2) {
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    if (slope < 0.0 && std::isfinite(slope)) kappa = -slope;
  }

  const ScalarModel model = [](double x, const Eigen::VectorXd& p) {
    return p(0) + p(1) * std::exp(-p(2) * x);
  };
  const NllsResult r = nlls_minimize(model, k, temps, Eigen::Vector3d(t0, dt, kappa));
  fit.t0 = r.params(0);
  fit.delta_t = r.params(1);
  fit.kappa_th = r.params(2);
  fit.residual_norm = r.residual_norm;
  fit.covariance = r.covariance;
  fit.uncertainties = r.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  return fit;
}

// --- contrast ---------------------------------------------------------------

ContrastFit fit_contrast(std::span<const double> alphas, double delta_t) {
  const std::size_t n = alphas.size();
  if (n < 5) throw DataError("fit_contrast: need at least 5 points");
  if (!(std::abs(delta_t) > 0.0)) throw DataError("fit_contrast: delta_t must be nonzero");

  double amax = 0.0;
  double mean_a = 0.0;
  for (double a : alphas) {
    amax = std::max(amax, std::abs(a));
    mean_a += a;
  }
  mean_a /= static_cast<double>(n);
  double var = 0.0;
  for (double a : alphas) var += (a - mean_a) * (a - mean_a);
  if (var <= 1e-24 * std::max(1.0, amax * amax) * static_cast<double>(n)) {
    throw AnalysisError("fit_contrast: flat data, parameters are not identifiable");
  }

  std::vector<double> k(n);
  for (std::size_t i = 0; i < n; ++i) k[i] = static_cast<double>(i);

  const ScalarModel model = [delta_t](double x, const Eigen::VectorXd& p) {
    return p(0) * std::cos(p(1) + p(2) * delta_t * std::exp(-p(3) * x));
  };

  // Multistart: score a grid of seeds, refine the best few.
  constexpr double two_pi = 2.0 * std::numbers::pi;
  struct Seed {
    Eigen::Vector4d p;
    double cost;
  };
  std::vector<Seed> seeds;
  const double swings[] = {0.5 * std::numbers::pi, std::numbers::pi, two_pi};
  const double decays[] = {1.0, 3.0, 10.0};
  for (int g = 0; g < 16; ++g) {
    const double phi0 = two_pi * g / 16.0;
    for (double sign : {1.0, -1.0}) {
      for (double swing : swings) {
        for (double decay : decays) {
          Eigen::Vector4d p(amax, phi0, sign * swing / delta_t, decay / static_cast<double>(n));
          double c = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            const double e = alphas[i] - model(k[i], p);
            c += e * e;
          }
          seeds.push_back({p, c});
        }
      }
    }
  }
  std::stable_sort(seeds.begin(), seeds.end(), [](const Seed& a, const Seed& b) { return a.cost < b.cost; });

  NllsResult best;
  bool have = false;
  const std::size_t n_refine = std::min<std::size_t>(seeds.size(), 12);
  for (std::size_t s = 0; s < n_refine; ++s) {
    try {
      NllsResult r = nlls_minimize(model, k, alphas, seeds[s].p);
      if (r.params(3) <= 0.0) continue;  // a growing exponential is not a thermalisation
      if (!have || r.residual_norm < best.residual_norm) {
        best = std::move(r);
        have = true;
      }
    } catch (const FitError&) {
      continue;
    }
  }
  if (!have) throw AnalysisError("fit_contrast: no seed converged to a decaying solution");

  Eigen::Vector4d p = best.params;
  Eigen::Matrix4d cov = best.covariance;
  // Canonical representative: c > 0, eta >= 0, dphi0 in [0, 2 pi).
  if (p(0) < 0.0) {
    p(0) = -p(0);
    p(1) += std::numbers::pi;
    cov.row(0) *= -1.0;
    cov.col(0) *= -1.0;
  }
  if (p(2) < 0.0) {
    p(1) = -p(1);
    p(2) = -p(2);
    for (int i : {1, 2}) {
      cov.row(i) *= -1.0;
      cov.col(i) *= -1.0;
    }
  }
  p(1) = std::fmod(p(1), two_pi);
  if (p(1) < 0.0) p(1) += two_pi;

  ContrastFit fit;
  fit.c_alpha = p(0);
  fit.dphi0 = p(1);
  fit.eta = p(2);
  fit.kappa_th = p(3);
  fit.residual_norm = best.residual_norm;
  fit.covariance = cov;
  fit.uncertainties = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  return fit;
}

}  // namespace peres
