#include "peres/forward.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "peres/rng.hpp"

namespace peres {

namespace {

constexpr int kA = 0;
constexpr int kB = 1;
constexpr int kC = 2;

/// Antisymmetric matrix of pairwise differences dphi_kl = phi_k - phi_l.
Eigen::Matrix3d pairwise(const PhasePoint& p) {
  Eigen::Matrix3d d = Eigen::Matrix3d::Zero();
  d(kA, kB) = p.dphi_ab();
  d(kB, kC) = p.dphi_bc();
  d(kC, kA) = p.dphi_ca();
  d(kB, kA) = -d(kA, kB);
  d(kC, kB) = -d(kB, kC);
  d(kA, kC) = -d(kC, kA);
  return d;
}

double gram_power(const Eigen::Vector3d& weight, const Eigen::Vector3d& offset,
                  const Eigen::Matrix3d& dphi, double contrast) {
  double p = weight.sum();
  for (int k = 0; k < 3; ++k) {
    for (int l = k + 1; l < 3; ++l) {
      const double w = weight(k) * weight(l);
      if (w == 0.0) continue;
      p += 2.0 * contrast * std::sqrt(w) * std::cos(dphi(k, l) + offset(k) - offset(l));
    }
  }
  return p;
}

/// Extra phase of each open path caused by the closed shutters.
Eigen::Vector3d crosstalk_offsets(const CrosstalkSpec& ct, ShutterConfig config) {
  Eigen::Vector3d o = Eigen::Vector3d::Zero();
  const double dh = ct.dphi_dh;
  if (dh == 0.0) return o;
  switch (ct.convention) {
    case CrosstalkConvention::kCancelling:
      // dphi_H = 0, dphi_D = dh: closed A and closed C push B, closed B pushes A and C.
      if (!config.open_a) o(kB) += dh;
      if (!config.open_c) o(kB) += dh;
      if (!config.open_b) {
        o(kA) += dh;
        o(kC) += dh;
      }
      break;
    case CrosstalkConvention::kComovingPlus:
    case CrosstalkConvention::kComovingMinus: {
      const double s = ct.convention == CrosstalkConvention::kComovingPlus ? dh : -dh;
      if (!config.open_a) o(kB) += s;  // dphi_BC += s
      if (!config.open_c) o(kA) += s;  // dphi_AB += s
      break;
    }
  }
  for (int k = 0; k < 3; ++k) {
    if (!config.open(k)) o(k) = 0.0;
  }
  return o;
}

void check_noise(std::span<const double> noise) {
  if (!noise.empty() && noise.size() != kNoiseDrawSize) {
    throw UsageError("imperfect_power: noise draw must hold 0 or " +
                     std::to_string(kNoiseDrawSize) + " variates, got " +
                     std::to_string(noise.size()));
  }
}

}  // namespace

// --- specs ------------------------------------------------------------------

void SourceSpec::validate() const {
  if (!(p_in > 0.0) || !std::isfinite(p_in)) throw ConfigError("source.p_in must be > 0");
  for (int k = 0; k < 3; ++k) {
    if (!(transmission(k) > 0.0 && transmission(k) <= 1.0)) {
      throw ConfigError("source.transmissions must lie in (0, 1]");
    }
  }
  if (!(p_dark >= 0.0) || !std::isfinite(p_dark)) throw ConfigError("source.p_dark must be >= 0");
}

Slot ShutterConfig::slot() const {
  const int n = int(open_a) + int(open_b) + int(open_c);
  if (n == 0) return Slot::k0;
  if (n == 3) return Slot::kABC;
  if (n == 1) return open_a ? Slot::kA : open_b ? Slot::kB : Slot::kC;
  if (!open_c) return Slot::kAB;
  if (!open_a) return Slot::kBC;
  return Slot::kCA;
}

ShutterConfig ShutterConfig::from_slot(Slot s) {
  switch (s) {
    case Slot::k0: return {false, false, false};
    case Slot::kA: return {true, false, false};
    case Slot::kB: return {false, true, false};
    case Slot::kC: return {false, false, true};
    case Slot::kAB: return {true, true, false};
    case Slot::kBC: return {false, true, true};
    case Slot::kCA: return {true, false, true};
    case Slot::kABC: return {true, true, true};
  }
  throw UsageError("ShutterConfig::from_slot: invalid slot");
}

std::string ShutterConfig::label() const {
  static const char* labels[] = {"0", "A", "B", "C", "AB", "BC", "CA", "ABC"};
  return labels[static_cast<int>(slot())];
}

ShutterConfig ShutterConfig::from_label(const std::string& label) {
  for (const auto& c : all_shutter_configs()) {
    if (c.label() == label) return c;
  }
  throw DataError("unknown shutter configuration label '" + label + "'");
}

std::array<ShutterConfig, 8> all_shutter_configs() {
  std::array<ShutterConfig, 8> out;
  for (int i = 0; i < 8; ++i) out[i] = ShutterConfig::from_slot(static_cast<Slot>(i));
  return out;
}

std::string to_string(CrosstalkConvention c) {
  switch (c) {
    case CrosstalkConvention::kCancelling: return "cancelling";
    case CrosstalkConvention::kComovingPlus: return "comoving_plus";
    case CrosstalkConvention::kComovingMinus: return "comoving_minus";
  }
  return "cancelling";
}

CrosstalkConvention crosstalk_convention_from_string(const std::string& s) {
  if (s == "cancelling") return CrosstalkConvention::kCancelling;
  if (s == "comoving_plus") return CrosstalkConvention::kComovingPlus;
  if (s == "comoving_minus") return CrosstalkConvention::kComovingMinus;
  throw ConfigError("unknown crosstalk convention '" + s + "'");
}

double FluctuationSpec::contrast() const {
  return std::exp(-0.5 * sigma_phase_fast * sigma_phase_fast);
}

void NonlinearitySpec::validate() const {
  if (!(max_power_w > 0.0)) throw ConfigError("nonlinearity.max_power_w must be > 0");
  // r'(P) = 1 + 2 c2 P + 3 c3 P^2 must stay positive on [0, max].
  auto slope = [&](double p) { return 1.0 + 2.0 * c2 * p + 3.0 * c3 * p * p; };
  double worst = std::min(slope(0.0), slope(max_power_w));
  if (c3 != 0.0) {
    const double stationary = -c2 / (3.0 * c3);
    if (stationary > 0.0 && stationary < max_power_w) worst = std::min(worst, slope(stationary));
  }
  if (!(worst > 0.0)) {
    throw ConfigError("nonlinearity: detector response is not strictly increasing on [0, max_power_w]");
  }
}

void ImperfectionSpec::validate() const {
  if (!(residual.tau >= 0.0 && residual.tau < 1.0)) {
    throw ConfigError("residual.tau must be >= 0 and < 1");
  }
  if (!std::isfinite(residual.phi_sh)) throw ConfigError("residual.phi_sh must be finite");
  if (!(std::abs(crosstalk.dphi_dh) < std::numbers::pi)) {
    throw ConfigError("crosstalk.dphi_dh must satisfy |dphi_dh| < pi");
  }
  const auto& f = fluctuations;
  if (!(f.sigma_pin_rel >= 0.0 && f.sigma_phase >= 0.0 && f.sigma_phase_fast >= 0.0 &&
        f.sigma_sample_rel >= 0.0)) {
    throw ConfigError("fluctuations: standard deviations must be >= 0");
  }
  nonlinearity.validate();
  for (int k = 0; k < 3; ++k) {
    const double h = polarization.h_fraction(k);
    if (!(h >= 0.0 && h <= 1.0)) throw ConfigError("polarization.h_fraction must lie in [0, 1]");
  }
  if (!polarization.phases_v.finite()) throw ConfigError("polarization.phases_v must be finite");
}

// --- powers -----------------------------------------------------------------

double ideal_power(const SourceSpec& source, const PhasePoint& phases, ShutterConfig config) {
  Eigen::Vector3d w;
  for (int k = 0; k < 3; ++k) w(k) = config.open(k) ? source.transmission(k) : 0.0;
  return source.p_in * gram_power(w, Eigen::Vector3d::Zero(), pairwise(phases), 1.0);
}

double optical_power(const SourceSpec& source, const PhasePoint& phases, const ImperfectionSpec& spec,
                     ShutterConfig config, std::span<const double> noise_draw) {
  check_noise(noise_draw);

  double p_in = source.p_in;
  PhasePoint ph = phases;
  PhasePoint ph_v = spec.polarization.phases_v;
  if (!noise_draw.empty()) {
    const auto& f = spec.fluctuations;
    p_in *= 1.0 + f.sigma_pin_rel * noise_draw[0];
    const Eigen::Vector3d dz(noise_draw[1], noise_draw[2], noise_draw[3]);
    ph.v += f.sigma_phase * dz;
    ph_v.v += f.sigma_phase * dz;
  }

  const double tau = spec.residual.tau;
  Eigen::Vector3d w;
  Eigen::Vector3d offset = crosstalk_offsets(spec.crosstalk, config);
  for (int k = 0; k < 3; ++k) {
    if (config.open(k)) {
      w(k) = source.transmission(k);
    } else {
      w(k) = tau * source.transmission(k);
      offset(k) = -spec.residual.phi_sh;
    }
  }

  const double contrast = spec.fluctuations.contrast();
  const Eigen::Vector3d& h = spec.polarization.h_fraction;
  double p = gram_power(w.cwiseProduct(h), offset, pairwise(ph), contrast);
  if (!spec.polarization.polarizer_enabled) {
    const Eigen::Vector3d v_share = (Eigen::Vector3d::Ones() - h).eval();
    if (!v_share.isZero(0.0)) {
      p += gram_power(w.cwiseProduct(v_share), offset, pairwise(ph_v), contrast);
    }
  }
  return p_in * p;
}

double imperfect_power(const SourceSpec& source, const PhasePoint& phases,
                       const ImperfectionSpec& spec, ShutterConfig config,
                       std::span<const double> noise_draw) {
  const double optical = optical_power(source, phases, spec, config, noise_draw);
  return detector_response(optical + source.p_dark, spec.nonlinearity);
}

double detector_response(double power, const NonlinearitySpec& nl) {
  if (nl.linear()) return power;
  return power * (1.0 + nl.c2 * power + nl.c3 * power * power);
}

double invert_detector_response(double reading, const NonlinearitySpec& nl) {
  if (nl.linear()) return reading;
  const double hi_reading = detector_response(nl.max_power_w, nl);
  if (!(reading >= 0.0 && reading <= hi_reading)) {
    throw DomainError("invert_detector_response: reading outside the invertible range");
  }
  // Safeguarded Newton on a monotone function.
  double lo = 0.0;
  double hi = nl.max_power_w;
  double p = reading;
  if (!(p > lo && p < hi)) p = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double f = detector_response(p, nl) - reading;
    if (f == 0.0) return p;
    if (f > 0.0) hi = p; else lo = p;
    const double slope = 1.0 + 2.0 * nl.c2 * p + 3.0 * nl.c3 * p * p;
    double next = p - f / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - p) <= 1e-15 * std::max(1.0, std::abs(p))) return next;
    p = next;
  }
  return p;
}

CyclePowers ideal_cycle(const SourceSpec& source, const PhasePoint& phases) {
  CyclePowers c;
  for (const auto& cfg : all_shutter_configs()) c[cfg.slot()] = ideal_power(source, phases, cfg);
  return c;
}

CyclePowers imperfect_cycle(const SourceSpec& source, const PhasePoint& phases,
                            const ImperfectionSpec& spec) {
  CyclePowers c;
  for (const auto& cfg : all_shutter_configs()) {
    c[cfg.slot()] = imperfect_power(source, phases, spec, cfg);
  }
  return c;
}

// --- simulation -------------------------------------------------------------

MeasurementLog simulate_measurement(const SourceSpec& source, const PhasePoint& phases,
                                    const ImperfectionSpec& spec, const SimulationProtocol& protocol,
                                    std::uint64_t seed) {
  if (protocol.n_cycles < 1) throw UsageError("simulate_measurement: n_cycles must be >= 1");
  if (protocol.samples_per_setting < 1) {
    throw UsageError("simulate_measurement: samples_per_setting must be >= 1");
  }
  source.validate();
  spec.validate();

  const auto configs = all_shutter_configs();
  const bool slow_noise = spec.fluctuations.sigma_pin_rel > 0.0 || spec.fluctuations.sigma_phase > 0.0;
  const double sample_sigma = spec.fluctuations.sigma_sample_rel;

  MeasurementLog log;
  log.seed = seed;
  log.records.reserve(static_cast<std::size_t>(protocol.n_cycles) * 8);

  for (int k = 0; k < protocol.n_cycles; ++k) {
    std::array<int, 8> order;
    std::iota(order.begin(), order.end(), 0);
    auto perm_engine = substream(seed, StreamTag::kCyclePermutation, static_cast<std::uint64_t>(k));
    std::shuffle(order.begin(), order.end(), perm_engine);

    for (int slot = 0; slot < 8; ++slot) {
      const ShutterConfig cfg = configs[order[slot]];
      auto engine = substream(seed, StreamTag::kSettingNoise, static_cast<std::uint64_t>(k),
                              static_cast<std::uint64_t>(order[slot]));
      std::normal_distribution<double> normal;
      std::array<double, kNoiseDrawSize> draw;
      for (auto& z : draw) z = normal(engine);

      const std::span<const double> noise =
          slow_noise ? std::span<const double>(draw) : std::span<const double>();
      const double value = imperfect_power(source, phases, spec, cfg, noise);

      MeasurementRecord rec;
      rec.cycle = k;
      rec.config = cfg;
      rec.n_samples = protocol.samples_per_setting;
      rec.housing_temp = protocol.housing_temp_c;
      rec.input_power = source.p_in * (1.0 + spec.fluctuations.sigma_pin_rel * (slow_noise ? draw[0] : 0.0));
      rec.timestamp = static_cast<double>(k * 8 + slot) * protocol.setting_duration_s;

      if (sample_sigma == 0.0) {
        rec.mean_power = value;
        rec.std_power = 0.0;
      } else {
        const int n = protocol.samples_per_setting;
        Eigen::VectorXd samples(n);
        for (int i = 0; i < n; ++i) samples(i) = value * (1.0 + sample_sigma * normal(engine));
        rec.mean_power = samples.mean();
        rec.std_power =
            n > 1 ? std::sqrt((samples.array() - rec.mean_power).square().sum() / (n - 1)) : 0.0;
      }
      log.records.push_back(rec);
    }
  }
  return log;
}

CycleSeries group_cycles(const MeasurementLog& log) {
  std::map<int, std::array<int, 8>> index;  // cycle -> record index per slot
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const auto& r = log.records[i];
    auto [it, inserted] = index.try_emplace(r.cycle);
    if (inserted) it->second.fill(-1);
    int& slot = it->second[static_cast<int>(r.config.slot())];
    if (slot >= 0) {
      throw DataError("cycle " + std::to_string(r.cycle) + " has configuration " + r.config.label() +
                      " more than once");
    }
    slot = static_cast<int>(i);
  }
  CycleSeries out;
  for (const auto& [cycle, slots] : index) {
    CyclePowers c;
    for (int s = 0; s < 8; ++s) {
      if (slots[s] < 0) {
        throw DataError("cycle " + std::to_string(cycle) + " is missing configuration " +
                        ShutterConfig::from_slot(static_cast<Slot>(s)).label());
      }
      c.p[s] = log.records[slots[s]].mean_power;
    }
    out.cycle.push_back(cycle);
    out.powers.push_back(c);
  }
  return out;
}

}  // namespace peres
