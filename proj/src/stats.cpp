#include "peres/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace peres {

double mean(std::span<const double> x) {
  if (x.empty()) throw DataError("mean of an empty series");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_std(std::span<const double> x) {
  if (x.size() < 2) throw DataError("sample_std needs at least 2 values");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double median(std::vector<double> x) {
  if (x.empty()) throw DataError("median of an empty series");
  const std::size_t mid = x.size() / 2;
  std::nth_element(x.begin(), x.begin() + mid, x.end());
  const double upper = x[mid];
  if (x.size() % 2 == 1) return upper;
  const double lower = *std::max_element(x.begin(), x.begin() + mid);
  return 0.5 * (lower + upper);
}

SeriesStats autocorr_sem(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 8) throw DataError("autocorr_sem: need at least 8 values, got " + std::to_string(n));

  const Eigen::Map<const Eigen::VectorXd> x(series.data(), static_cast<Eigen::Index>(n));
  SeriesStats s;
  s.mean = x.mean();
  const Eigen::VectorXd d = x.array() - s.mean;
  const double c0 = d.squaredNorm() / static_cast<double>(n);
  s.naive_sem = std::sqrt(d.squaredNorm() / static_cast<double>(n - 1) / static_cast<double>(n));

  if (c0 == 0.0) {
    s.corrected_sem = 0.0;
    s.n_effective = static_cast<double>(n);
    s.autocorr_cutoff_lag = 1;
    return s;
  }

  double acc = 0.0;
  std::size_t k = 1;
  for (; k < n; ++k) {
    const auto len = static_cast<Eigen::Index>(n - k);
    const double ck = d.head(len).dot(d.tail(len)) / static_cast<double>(n);
    const double rho = ck / c0;
    if (rho <= 0.0) break;
    acc += (1.0 - static_cast<double>(k) / static_cast<double>(n)) * rho;
  }
  s.autocorr_cutoff_lag = static_cast<int>(k);
  const double factor = 1.0 + 2.0 * acc;
  s.corrected_sem = s.naive_sem * std::sqrt(factor);
  s.n_effective = static_cast<double>(n) / factor;
  return s;
}

std::pair<MeasurementLog, MalfunctionReport> filter_malfunctions(const MeasurementLog& log,
                                                                 double threshold) {
  if (!(threshold > 0.0)) throw UsageError("filter_malfunctions: threshold must be > 0");
  constexpr double kMadToSigma = 1.4826;

  MeasurementLog current = log;
  MalfunctionReport report;
  for (;;) {
    ++report.passes;
    std::map<int, std::vector<double>> by_slot;
    for (const auto& r : current.records) {
      by_slot[static_cast<int>(r.config.slot())].push_back(r.mean_power);
    }
    std::map<int, std::pair<double, double>> center_scale;
    for (auto& [slot, values] : by_slot) {
      const double med = median(values);
      std::vector<double> dev;
      dev.reserve(values.size());
      for (double v : values) dev.push_back(std::abs(v - med));
      center_scale[slot] = {med, kMadToSigma * median(dev)};
    }

    std::map<int, std::string> bad;
    for (const auto& r : current.records) {
      const auto [med, scale] = center_scale[static_cast<int>(r.config.slot())];
      if (scale == 0.0) continue;
      const double z = std::abs(r.mean_power - med) / scale;
      if (z > threshold && !bad.count(r.cycle)) {
        bad[r.cycle] = "configuration " + r.config.label() + " deviates by " + std::to_string(z) +
                       " robust sigma";
      }
    }
    if (bad.empty()) break;

    MeasurementLog next;
    next.seed = current.seed;
    next.spec_snapshot = current.spec_snapshot;
    for (const auto& r : current.records) {
      if (!bad.count(r.cycle)) next.records.push_back(r);
    }
    for (const auto& [cycle, reason] : bad) report.dropped.push_back({cycle, reason});
    current = std::move(next);
  }
  return {std::move(current), std::move(report)};
}

namespace {

/// Spread of a series: plain sample std, or pooled over windows.
double spread(const std::vector<double>& x, int window) {
  if (window < 2 || static_cast<std::size_t>(window) >= x.size()) return sample_std(x);
  double ss = 0.0;
  double dof = 0.0;
  for (std::size_t start = 0; start + 1 < x.size(); start += static_cast<std::size_t>(window)) {
    const std::size_t end = std::min(x.size(), start + static_cast<std::size_t>(window));
    if (end - start < 2) continue;
    const std::span<const double> w(x.data() + start, end - start);
    const double m = mean(w);
    for (double v : w) ss += (v - m) * (v - m);
    dof += static_cast<double>(w.size() - 1);
  }
  return std::sqrt(ss / dof);
}

}  // namespace

FluctuationEstimates decompose_fluctuations(const MeasurementLog& log, const PhasePoint& phases,
                                            int window) {
  const CycleSeries series = group_cycles(log);
  if (series.powers.size() < 2) throw DataError("decompose_fluctuations: need at least 2 cycles");

  std::array<std::vector<double>, 8> by_slot;
  for (const auto& raw : series.powers) {
    const CyclePowers c = subtract_background(raw);
    for (int s = 0; s < 8; ++s) by_slot[s].push_back(c.p[s]);
  }

  const int single[3] = {static_cast<int>(Slot::kA), static_cast<int>(Slot::kB),
                         static_cast<int>(Slot::kC)};
  FluctuationEstimates out;
  Eigen::Vector3d mean_single;
  for (int k = 0; k < 3; ++k) {
    out.sigma_power(k) = spread(by_slot[single[k]], window);
    mean_single(k) = mean(by_slot[single[k]]);
  }

  // Pair p in (BC, CA, AB) order: paths (i, j) and slot.
  const int pair_i[3] = {1, 2, 0};
  const int pair_j[3] = {2, 0, 1};
  const int pair_slot[3] = {static_cast<int>(Slot::kBC), static_cast<int>(Slot::kCA),
                            static_cast<int>(Slot::kAB)};
  for (int p = 0; p < 3; ++p) {
    const int i = pair_i[p];
    const int j = pair_j[p];
    const double pi = mean_single(i);
    const double pj = mean_single(j);
    if (!(pi > 0.0 && pj > 0.0)) throw DataError("decompose_fluctuations: non-positive single-path power");
    const double c = std::cos(phases.v(p));
    const double gi = std::sqrt(pj / pi) * c + 1.0;
    const double gj = std::sqrt(pi / pj) * c + 1.0;
    const double var_pow = gi * gi * out.sigma_power(i) * out.sigma_power(i) +
                           gj * gj * out.sigma_power(j) * out.sigma_power(j);
    const double meas = spread(by_slot[pair_slot[p]], window);
    out.sigma_pair_measured(p) = meas;
    out.sigma_pair_power(p) = std::sqrt(var_pow);
    const double var_ph = meas * meas - var_pow;
    out.clamped[p] = var_ph < 0.0;
    out.sigma_pair_phase(p) = std::sqrt(std::max(0.0, var_ph));
    const double slope = 2.0 * std::sqrt(pi * pj) * std::abs(std::sin(phases.v(p)));
    if (slope > 0.0) {
      out.sigma_phase(p) = out.sigma_pair_phase(p) / slope;
    } else {
      out.sigma_phase(p) =
          out.sigma_pair_phase(p) == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
  }
  return out;
}

}  // namespace peres
