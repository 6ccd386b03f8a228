#include "peres/budget.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include "peres/rng.hpp"

namespace peres {

namespace {

constexpr double kPi = std::numbers::pi;

SeriesStats basic_stats(std::span<const double> x) {
  if (x.size() >= 8) return autocorr_sem(x);
  SeriesStats s;
  s.mean = mean(x);
  s.n_effective = static_cast<double>(x.size());
  if (x.size() >= 2) {
    s.naive_sem = sample_std(x) / std::sqrt(static_cast<double>(x.size()));
    s.corrected_sem = s.naive_sem;
  }
  return s;
}

double pair_term(double pij, double pi, double pj) {
  return (pij - pi - pj) / (2.0 * std::sqrt(pi * pj));
}

// Running moments, merged block by block (Chan et al.).
struct Moments {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  std::int64_t rejected = 0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  void merge(const Moments& o) {
    if (o.n == 0) return;
    const std::int64_t total = n + o.n;
    const double d = o.mean - mean;
    mean += d * static_cast<double>(o.n) / static_cast<double>(total);
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / static_cast<double>(total);
    n = total;
    rejected += o.rejected;
  }
};

/// Runs `sample(engine, rejected)` n times in fixed blocks, each block on its
/// own substream, and merges in block order so the result does not depend on
/// the thread count.
template <typename Sampler>
Moments run_blocks(std::int64_t n_samples, std::uint64_t seed, StreamTag tag, const Sampler& sample) {
  const std::int64_t n_blocks = (n_samples + kMcBlock - 1) / kMcBlock;
  std::vector<Moments> blocks(static_cast<std::size_t>(n_blocks));
  auto work = [&](std::int64_t first, std::int64_t stride) {
    for (std::int64_t b = first; b < n_blocks; b += stride) {
      Engine engine = substream(seed, tag, static_cast<std::uint64_t>(b));
      Moments& m = blocks[static_cast<std::size_t>(b)];
      const std::int64_t count = std::min(kMcBlock, n_samples - b * kMcBlock);
      for (std::int64_t i = 0; i < count; ++i) m.add(sample(engine, m.rejected));
    }
  };
  const auto n_threads = static_cast<std::int64_t>(
      std::min<std::int64_t>(worker_threads(), std::max<std::int64_t>(n_blocks, 1)));
  if (n_threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::int64_t t = 0; t < n_threads; ++t) pool.emplace_back(work, t, n_threads);
    for (auto& th : pool) th.join();
  }
  Moments total;
  for (const auto& m : blocks) total.merge(m);
  return total;
}

McResult finish(const Moments& m, double f0) {
  McResult r;
  r.n_samples = m.n;
  r.rejected = m.rejected;
  r.delta_f = m.mean - f0;
  r.sigma_f = m.n > 1 ? std::sqrt(m.m2 / static_cast<double>(m.n - 1)) : 0.0;
  r.delta_f_error = r.sigma_f / std::sqrt(static_cast<double>(std::max<std::int64_t>(m.n, 1)));
  r.sigma_f_error = m.n > 1 ? r.sigma_f / std::sqrt(2.0 * static_cast<double>(m.n - 1)) : 0.0;
  return r;
}

/// Ideal two-path powers divided by P_in, in (BC, CA, AB) order.
Eigen::Vector3d pair_powers(const PhasePoint& phases, const Eigen::Vector3d& t) {
  return {t(1) + t(2) + 2.0 * std::sqrt(t(1) * t(2)) * std::cos(phases.dphi_bc()),
          t(2) + t(0) + 2.0 * std::sqrt(t(2) * t(0)) * std::cos(phases.dphi_ca()),
          t(0) + t(1) + 2.0 * std::sqrt(t(0) * t(1)) * std::cos(phases.dphi_ab())};
}

double f_from_powers(const Eigen::Vector3d& single, const Eigen::Vector3d& pair) {
  return peres_f(pair_term(pair(0), single(1), single(2)), pair_term(pair(1), single(2), single(0)),
                 pair_term(pair(2), single(0), single(1)));
}

void check_mc_args(double sigma, std::int64_t n_samples, const char* what) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw UsageError(std::string(what) + ": sigma must be finite and >= 0");
  }
  if (n_samples < 2) throw UsageError(std::string(what) + ": need at least 2 samples");
}

}  // namespace

// --- log analysis -----------------------------------------------------------

LogAnalysis analyze_log(const MeasurementLog& log) {
  if (log.records.empty()) throw DataError("analyze_log: empty log");
  const CycleSeries series = group_cycles(log);

  LogAnalysis out;
  std::vector<CyclePowers> subtracted;
  std::vector<double> f;
  Eigen::Vector3d term_sum = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < series.powers.size(); ++i) {
    CycleAnalysis c;
    c.cycle = series.cycle[i];
    const CyclePowers p = subtract_background(series.powers[i]);
    try {
      c.terms = interference_terms(p);
    } catch (const DomainError& e) {
      throw DataError("cycle " + std::to_string(c.cycle) + ": " + e.what());
    }
    c.f = peres_parameter(c.terms).f;
    c.epsilon = sorkin_epsilon(p);
    c.denominator = pairwise_interference_magnitude(p);
    term_sum += c.terms.v;
    f.push_back(c.f);
    subtracted.push_back(p);
    out.cycles.push_back(c);
  }
  const auto n = static_cast<double>(out.cycles.size());
  out.mean_terms = InterferenceTerms(Eigen::Vector3d(term_sum / n));
  out.f = basic_stats(f);
  double eps = 0.0;
  for (const auto& c : out.cycles) eps += c.epsilon;
  out.mean_epsilon = eps / n;
  try {
    out.sorkin = sorkin_kappa(std::span<const CyclePowers>(subtracted));
  } catch (const DataError&) {
    out.sorkin_degenerate = true;
    out.sorkin.epsilon = out.mean_epsilon;
  }
  return out;
}

// --- nonlinearity -----------------------------------------------------------

NonlinearityCorrection correct_nonlinearity(const MeasurementLog& log, const NonlinearitySpec& nl) {
  NonlinearityCorrection out;
  out.log = log;
  if (nl.linear()) return out;
  nl.validate();

  for (auto& r : out.log.records) {
    try {
      r.mean_power = invert_detector_response(r.mean_power, nl);
    } catch (const DomainError&) {
      throw DomainError("correct_nonlinearity: cycle " + std::to_string(r.cycle) + " configuration " +
                        r.config.label() + ": reading outside the invertible range");
    }
    const double slope = 1.0 + 2.0 * nl.c2 * r.mean_power + 3.0 * nl.c3 * r.mean_power * r.mean_power;
    r.std_power /= slope;
  }

  const LogAnalysis raw = analyze_log(log);
  const LogAnalysis corrected = analyze_log(out.log);
  double acc = 0.0;
  for (std::size_t i = 0; i < raw.cycles.size(); ++i) acc += corrected.cycles[i].f - raw.cycles[i].f;
  out.delta_f = acc / static_cast<double>(raw.cycles.size());
  return out;
}

// --- fluctuations -----------------------------------------------------------

McResult mc_power_fluctuations(const PhasePoint& phases, const SourceSpec& source, double sigma_rel,
                               std::int64_t n_samples, std::uint64_t seed) {
  check_mc_args(sigma_rel, n_samples, "mc_power_fluctuations");
  source.validate();
  if (sigma_rel == 0.0) {
    McResult r;
    r.n_samples = n_samples;
    return r;
  }
  const Eigen::Vector3d single = source.p_in * source.transmission;
  const Eigen::Vector3d pair = source.p_in * pair_powers(phases, source.transmission);
  const double f0 = f_from_powers(single, pair);

  const auto sample = [&](Engine& engine, std::int64_t& rejected) {
    std::normal_distribution<double> normal;
    auto factor = [&] {
      for (;;) {
        const double g = 1.0 + sigma_rel * normal(engine);
        if (g > 0.0) return g;
        ++rejected;
      }
    };
    Eigen::Vector3d s;
    Eigen::Vector3d p;
    for (int k = 0; k < 3; ++k) s(k) = single(k) * factor();
    for (int k = 0; k < 3; ++k) p(k) = pair(k) * factor();
    return f_from_powers(s, p);
  };
  return finish(run_blocks(n_samples, seed, StreamTag::kMcPower, sample), f0);
}

McResult mc_phase_fluctuations(const PhasePoint& phases, const SourceSpec& source,
                               double sigma_phase, std::int64_t n_samples, std::uint64_t seed) {
  check_mc_args(sigma_phase, n_samples, "mc_phase_fluctuations");
  source.validate();
  if (sigma_phase == 0.0) {
    McResult r;
    r.n_samples = n_samples;
    return r;
  }
  const Eigen::Vector3d single = source.p_in * source.transmission;
  const double f0 = f_from_powers(single, source.p_in * pair_powers(phases, source.transmission));

  const auto sample = [&](Engine& engine, std::int64_t&) {
    std::normal_distribution<double> normal;
    PhasePoint shifted = phases;
    for (int k = 0; k < 3; ++k) shifted.v(k) += sigma_phase * normal(engine);
    return f_from_powers(single, source.p_in * pair_powers(shifted, source.transmission));
  };
  return finish(run_blocks(n_samples, seed, StreamTag::kMcPhase, sample), f0);
}

// --- contrast ---------------------------------------------------------------

double contrast_deviation(const InterferenceTerms& terms, double delta_c) {
  if (!(delta_c >= 0.0 && delta_c <= 1.0)) throw UsageError("contrast_deviation: delta_c must lie in [0, 1]");
  const double p = terms.alpha() * terms.beta() * terms.gamma();
  return 2.0 * (p - 1.0) * delta_c - (4.0 * p - 1.0) * delta_c * delta_c +
         2.0 * p * delta_c * delta_c * delta_c;
}

ContrastEstimate contrast_from_phase_noise(double sigma_fast, std::int64_t n_samples, std::uint64_t seed) {
  check_mc_args(sigma_fast, n_samples, "contrast_from_phase_noise");
  ContrastEstimate out;
  if (sigma_fast == 0.0) return out;
  const auto sample = [&](Engine& engine, std::int64_t&) {
    std::normal_distribution<double> normal(0.0, sigma_fast);
    return std::cos(normal(engine));
  };
  const Moments m = run_blocks(n_samples, seed, StreamTag::kMcContrast, sample);
  out.contrast = m.mean;
  out.standard_error = std::sqrt(m.m2 / static_cast<double>(m.n - 1) / static_cast<double>(m.n));
  return out;
}

// --- crosstalk --------------------------------------------------------------

std::pair<int, int> crosstalk_signs(CrosstalkConvention c) {
  switch (c) {
    case CrosstalkConvention::kCancelling: return {1, -1};
    case CrosstalkConvention::kComovingPlus: return {1, 1};
    case CrosstalkConvention::kComovingMinus: return {-1, -1};
  }
  throw UsageError("crosstalk_signs: unknown convention");
}

InterferenceTerms apply_crosstalk(const PhasePoint& phases, const CrosstalkSpec& ct) {
  const auto [s_bc, s_ab] = crosstalk_signs(ct.convention);
  return InterferenceTerms(Eigen::Vector3d(std::cos(phases.dphi_bc() + s_bc * ct.dphi_dh),
                                           std::cos(phases.dphi_ca()),
                                           std::cos(phases.dphi_ab() + s_ab * ct.dphi_dh)));
}

double crosstalk_delta_f(const PhasePoint& phases, const CrosstalkSpec& ct) {
  if (ct.dphi_dh == 0.0) return 0.0;
  return peres_parameter(apply_crosstalk(phases, ct)).f - peres_parameter(terms_from_phases(phases)).f;
}

double epsilon_from_crosstalk(const PhasePoint& phases, const SourceSpec& source,
                              const CrosstalkSpec& ct) {
  if (ct.dphi_dh == 0.0) return 0.0;
  const auto [s_bc, s_ab] = crosstalk_signs(ct.convention);
  const Eigen::Vector3d& t = source.transmission;
  const double ab = phases.dphi_ab();
  const double bc = phases.dphi_bc();
  return 2.0 * source.p_in *
         (std::sqrt(t(0) * t(1)) * (std::cos(ab) - std::cos(ab + s_ab * ct.dphi_dh)) +
          std::sqrt(t(1) * t(2)) * (std::cos(bc) - std::cos(bc + s_bc * ct.dphi_dh)));
}

CrosstalkInversion crosstalk_from_epsilon(double epsilon, const PhasePoint& phases,
                                          const SourceSpec& source, CrosstalkConvention convention) {
  CrosstalkInversion out;
  if (epsilon == 0.0) {
    out.roots.push_back(0.0);
  }
  const auto g = [&](double dh) {
    return epsilon_from_crosstalk(phases, source, CrosstalkSpec{dh, convention}) - epsilon;
  };

  constexpr double step = 1e-3;
  const int n_max = static_cast<int>(std::floor(kPi / step));
  double x_prev = -n_max * step;
  double g_prev = g(x_prev);
  if (g_prev == 0.0 && epsilon != 0.0) out.roots.push_back(x_prev);
  for (int i = -n_max + 1; i <= n_max; ++i) {
    const double x = i * step;
    const double gx = g(x);
    if (gx == 0.0) {
      if (!(epsilon == 0.0 && i == 0)) out.roots.push_back(x);
    } else if (g_prev != 0.0 && (gx > 0.0) != (g_prev > 0.0)) {
      double lo = x_prev;
      double hi = x;
      double g_lo = g_prev;
      for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double gm = g(mid);
        if (gm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((gm > 0.0) == (g_lo > 0.0)) {
          lo = mid;
          g_lo = gm;
        } else {
          hi = mid;
        }
      }
      out.roots.push_back(std::abs(g(lo)) <= std::abs(g(hi)) ? lo : hi);
    }
    x_prev = x;
    g_prev = gx;
  }
  if (out.roots.empty()) {
    throw AnalysisError("crosstalk_from_epsilon: no real solution for dphi_DH on (-pi, pi)");
  }
  std::stable_sort(out.roots.begin(), out.roots.end(),
                   [](double a, double b) { return std::abs(a) < std::abs(b); });
  out.dphi_dh = out.roots.front();
  return out;
}

// --- residual light ---------------------------------------------------------

namespace {

double pipeline_f(const CyclePowers& raw) { return peres_parameter(interference_terms(subtract_background(raw))).f; }

}  // namespace

double residual_light_delta_f(const PhasePoint& phases, const SourceSpec& source, double tau,
                              double phi_sh) {
  if (!(tau >= 0.0 && tau < 1.0)) throw UsageError("residual_light_delta_f: tau must lie in [0, 1)");
  if (tau == 0.0) return 0.0;
  ImperfectionSpec clean;
  ImperfectionSpec spec;
  spec.residual = {tau, phi_sh};
  return pipeline_f(imperfect_cycle(source, phases, spec)) - pipeline_f(imperfect_cycle(source, phases, clean));
}

std::vector<double> default_phi_grid(int n) {
  if (n < 3) throw UsageError("phi grid needs at least 3 points");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[i] = -kPi + 2.0 * kPi * i / (n - 1);
  g.back() = kPi;
  return g;
}

SweepCurve residual_light_sweep(const PhasePoint& phases, const SourceSpec& source, double tau,
                                const std::vector<double>& grid) {
  if (grid.size() < 3) throw UsageError("residual_light_sweep: grid needs at least 3 points");
  source.validate();
  SweepCurve c;
  c.phi_sh = grid;
  c.delta_f.reserve(grid.size());
  for (double phi : grid) c.delta_f.push_back(residual_light_delta_f(phases, source, tau, phi));
  c.at_pi = residual_light_delta_f(phases, source, tau, kPi);
  c.at_zero = residual_light_delta_f(phases, source, tau, 0.0);

  const auto n = grid.size();
  // Parabola through (i-1, i, i+1) on a locally uniform grid.
  auto refine = [&](std::size_t i, double& x, double& y) {
    x = grid[i];
    y = c.delta_f[i];
    if (i == 0 || i + 1 == n) return;
    const double h = grid[i + 1] - grid[i];
    if (std::abs(h - (grid[i] - grid[i - 1])) > 1e-9 * std::abs(h)) return;
    const double ym = c.delta_f[i - 1];
    const double yp = c.delta_f[i + 1];
    const double den = ym - 2.0 * y + yp;
    if (den == 0.0) return;
    const double d = 0.5 * (ym - yp) / den;
    if (std::abs(d) > 1.0) return;
    x += d * h;
    y -= 0.25 * (ym - yp) * d;
  };
  const auto imax = static_cast<std::size_t>(
      std::max_element(c.delta_f.begin(), c.delta_f.end()) - c.delta_f.begin());
  const auto imin = static_cast<std::size_t>(
      std::min_element(c.delta_f.begin(), c.delta_f.end()) - c.delta_f.begin());
  refine(imax, c.argmax, c.max);
  refine(imin, c.argmin, c.min);
  return c;
}

TauEstimate estimate_tau(std::span<const CyclePowers> raw_cycles, const InterferenceTerms& terms,
                         double p_dark) {
  TauEstimate out;
  for (std::size_t i = 0; i < raw_cycles.size(); ++i) {
    const CyclePowers& c = raw_cycles[i];
    if (c.background_subtracted) throw UsageError("estimate_tau: cycles must be raw (not background subtracted)");
    const double pa = c.pa() - p_dark;
    const double pb = c.pb() - p_dark;
    const double pc = c.pc() - p_dark;
    if (!(pa > 0.0 && pb > 0.0 && pc > 0.0)) {
      out.excluded_cycles.push_back(static_cast<int>(i));
      continue;
    }
    const double den = pa + pb + pc + 2.0 * std::sqrt(pa * pb) * terms.gamma() +
                       2.0 * std::sqrt(pa * pc) * terms.beta() + 2.0 * std::sqrt(pb * pc) * terms.alpha();
    if (!(den > 0.0)) {
      out.excluded_cycles.push_back(static_cast<int>(i));
      continue;
    }
    out.per_cycle.push_back((c.p0() - p_dark) / den);
  }
  if (out.per_cycle.empty()) throw DataError("estimate_tau: no cycle with a positive denominator");
  const SeriesStats s = basic_stats(out.per_cycle);
  out.mean = s.mean;
  out.sem = s.corrected_sem;
  return out;
}

// --- polarization -----------------------------------------------------------

PeresResult polarization_f(const InterferenceTerms& terms_h, const InterferenceTerms& terms_v,
                           const PolarizationSpec& splits, const SourceSpec& source) {
  source.validate();
  const Eigen::Vector3d& t = source.transmission;
  const Eigen::Vector3d h = splits.h_fraction;
  const Eigen::Vector3d v = splits.polarizer_enabled ? Eigen::Vector3d::Zero().eval()
                                                     : (Eigen::Vector3d::Ones() - h).eval();
  CyclePowers p;
  p.background_subtracted = true;
  const Slot single[3] = {Slot::kA, Slot::kB, Slot::kC};
  for (int k = 0; k < 3; ++k) p[single[k]] = source.p_in * t(k) * (h(k) + v(k));

  // Pairs (i, j) for the terms alpha (BC), beta (CA), gamma (AB).
  const int pi[3] = {1, 2, 0};
  const int pj[3] = {2, 0, 1};
  const Slot pair[3] = {Slot::kBC, Slot::kCA, Slot::kAB};
  for (int q = 0; q < 3; ++q) {
    const int i = pi[q];
    const int j = pj[q];
    const double cross = std::sqrt(h(i) * h(j)) * terms_h.v(q) + std::sqrt(v(i) * v(j)) * terms_v.v(q);
    p[pair[q]] = p[single[i]] + p[single[j]] + 2.0 * source.p_in * std::sqrt(t(i) * t(j)) * cross;
  }
  return peres_parameter(interference_terms(p));
}

// --- full budget ------------------------------------------------------------

const std::vector<ReferenceValue>& reference_values() {
  static const std::vector<ReferenceValue> refs = {
      {"23C", -4.47e-2, 0.04e-2, -14.0e-4, 0.8e-4},
      {"30C", -3.16e-2, 0.09e-2, 11e-4, 4e-4},
  };
  return refs;
}

const BudgetEntry& BudgetReport::entry(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return e;
  }
  throw UsageError("BudgetReport: no entry named " + name);
}

BudgetReport full_budget(const MeasurementLog& log, const BudgetInputs& inputs,
                         const CorrectedPoint& corrected) {
  inputs.source.validate();
  inputs.imperfections.validate();
  const ImperfectionSpec& spec = inputs.imperfections;

  BudgetReport rep;
  rep.terms = corrected.corrected_terms;
  rep.phases = principal_phases(rep.terms);

  auto interval = [](const std::string& name, double d) {
    BudgetEntry e;
    e.name = name;
    e.delta_f = d;
    e.lower = std::min(0.0, d);
    e.upper = std::max(0.0, d);
    return e;
  };

  rep.entries.push_back(interval("nonlinearity", correct_nonlinearity(log, spec.nonlinearity).delta_f));

  const McResult pow = mc_power_fluctuations(rep.phases, inputs.source, spec.fluctuations.sigma_pin_rel,
                                             inputs.mc_samples, inputs.seed);
  rep.entries.push_back(interval("power_fluct", pow.delta_f));
  rep.entries.back().sigma_f = pow.sigma_f;

  const McResult ph = mc_phase_fluctuations(rep.phases, inputs.source, spec.fluctuations.sigma_phase,
                                            inputs.mc_samples, inputs.seed);
  rep.entries.push_back(interval("phase_fluct", ph.delta_f));
  rep.entries.back().sigma_f = ph.sigma_f;

  rep.entries.push_back(interval("contrast", contrast_deviation(rep.terms, 1.0 - spec.fluctuations.contrast())));
  rep.entries.push_back(interval("crosstalk", crosstalk_delta_f(rep.phases, spec.crosstalk)));

  rep.residual_sweep = residual_light_sweep(rep.phases, inputs.source, spec.residual.tau,
                                            default_phi_grid(inputs.sweep_points));
  BudgetEntry rl;
  rl.name = "residual_light";
  rl.delta_f = residual_light_delta_f(rep.phases, inputs.source, spec.residual.tau, spec.residual.phi_sh);
  rl.lower = std::min(0.0, rep.residual_sweep.min);
  rl.upper = std::max(0.0, rep.residual_sweep.max);
  rep.entries.push_back(rl);

  for (const auto& e : rep.entries) {
    rep.total_lower += e.lower;
    rep.total_upper += e.upper;
  }

  const LogAnalysis la = analyze_log(log);
  rep.measured_delta_f = la.f.mean - 1.0;
  rep.measured_sem = la.f.corrected_sem;
  rep.measured_kappa = la.sorkin.kappa;
  rep.references = reference_values();
  return rep;
}

}  // namespace peres
