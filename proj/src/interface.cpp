#include "peres/interface.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace peres {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// --- logs -------------------------------------------------------------------

void write_log(const MeasurementLog& log, std::ostream& out) {
  out << "# seed: " << log.seed << '\n';
  if (!log.spec_snapshot.empty()) {
    std::istringstream snap(log.spec_snapshot);
    std::string line;
    while (std::getline(snap, line)) out << "# spec: " << line << '\n';
  }
  out << kLogHeader << '\n';
  for (const auto& r : log.records) {
    out << r.cycle << ',' << r.config.label() << ',' << format_double(r.mean_power) << ','
        << format_double(r.std_power) << ',' << r.n_samples << ',' << format_double(r.housing_temp)
        << ',' << format_double(r.input_power) << ',' << format_double(r.timestamp) << '\n';
  }
}

void write_log(const MeasurementLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  write_log(log, out);
  if (!out) throw DataError("write to " + path + " failed");
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

template <typename T>
bool parse_field(const std::string& s, T& value) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last && !s.empty();
}

}  // namespace

MeasurementLog read_log(std::istream& in, const std::string& source_name) {
  MeasurementLog log;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  std::vector<std::string> spec_lines;
  std::map<std::pair<int, int>, int> seen;  // (cycle, slot) -> line
  const auto fail = [&](const std::string& what) {
    throw DataError(source_name + ":" + std::to_string(line_no) + ": " + what);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# seed: ", 0) == 0) {
        if (!parse_field(line.substr(8), log.seed)) fail("malformed seed comment");
      } else if (line.rfind("# spec: ", 0) == 0) {
        spec_lines.push_back(line.substr(8));
      }
      continue;
    }
    if (!header_seen) {
      if (line != kLogHeader) {
        const auto cols = split_csv(line);
        const auto expected = split_csv(kLogHeader);
        for (const auto& e : expected) {
          if (std::find(cols.begin(), cols.end(), e) == cols.end()) fail("missing column '" + e + "'");
        }
        fail("header must be exactly '" + std::string(kLogHeader) + "'");
      }
      header_seen = true;
      continue;
    }

    const auto f = split_csv(line);
    if (f.size() != 8) fail("expected 8 fields, found " + std::to_string(f.size()));
    MeasurementRecord r;
    if (!parse_field(f[0], r.cycle) || r.cycle < 0) fail("cycle must be a non-negative integer");
    try {
      r.config = ShutterConfig::from_label(f[1]);
    } catch (const DataError&) {
      fail("unknown configuration label '" + f[1] + "'");
    }
    const char* names[] = {"mean_power_w", "std_power_w"};
    double* dst[] = {&r.mean_power, &r.std_power};
    for (int k = 0; k < 2; ++k) {
      if (!parse_field(f[2 + k], *dst[k])) fail(std::string(names[k]) + " is not a number: '" + f[2 + k] + "'");
    }
    if (!parse_field(f[4], r.n_samples) || r.n_samples < 1) fail("n_samples must be an integer >= 1");
    if (!parse_field(f[5], r.housing_temp)) fail("housing_temp_c is not a number: '" + f[5] + "'");
    if (!parse_field(f[6], r.input_power)) fail("input_power_w is not a number: '" + f[6] + "'");
    if (!parse_field(f[7], r.timestamp)) fail("timestamp_s is not a number: '" + f[7] + "'");
    if (!(r.std_power >= 0.0)) fail("std_power_w must be >= 0");

    const auto key = std::make_pair(r.cycle, static_cast<int>(r.config.slot()));
    const auto [it, inserted] = seen.emplace(key, line_no);
    if (!inserted) {
      fail("duplicate (cycle=" + std::to_string(r.cycle) + ", config=" + r.config.label() +
           "), first seen on line " + std::to_string(it->second));
    }
    log.records.push_back(r);
  }
  if (!header_seen && log.records.empty()) {
    throw DataError(source_name + ": empty log (no header, no records)");
  }
  if (log.records.empty()) throw DataError(source_name + ": empty log (no records)");

  for (std::size_t i = 0; i < spec_lines.size(); ++i) {
    if (i) log.spec_snapshot += '\n';
    log.spec_snapshot += spec_lines[i];
  }
  return log;
}

MeasurementLog read_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return read_log(in, path);
}

// --- config -----------------------------------------------------------------

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void check_object(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError((path.empty() ? std::string("config") : path) + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* allowed : keys) known = known || k == allowed;
    if (!known) throw ConfigError("unknown key '" + join(path, k) + "'");
  }
}

double number(const json& obj, const std::string& path, const char* key, double def) {
  const auto it = obj.find(key);
  if (it == obj.end()) return def;
  if (!it->is_number()) throw ConfigError(join(path, key) + " must be a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw ConfigError(join(path, key) + " must be finite");
  return v;
}

bool boolean(const json& obj, const std::string& path, const char* key, bool def) {
  const auto it = obj.find(key);
  if (it == obj.end()) return def;
  if (!it->is_boolean()) throw ConfigError(join(path, key) + " must be true or false");
  return it->get<bool>();
}

std::int64_t integer(const json& obj, const std::string& path, const char* key, std::int64_t def) {
  const auto it = obj.find(key);
  if (it == obj.end()) return def;
  if (!it->is_number_integer()) throw ConfigError(join(path, key) + " must be an integer");
  return it->get<std::int64_t>();
}

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path + " must be " + what);
}

Eigen::Vector3d triple(const json& obj, const std::string& path, const char* key, const Eigen::Vector3d& def) {
  const auto it = obj.find(key);
  if (it == obj.end()) return def;
  const std::string p = join(path, key);
  if (!it->is_array() || it->size() != 3) throw ConfigError(p + " must be an array of 3 numbers");
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) {
    if (!(*it)[i].is_number()) throw ConfigError(p + "[" + std::to_string(i) + "] must be a number");
    v(i) = (*it)[i].get<double>();
  }
  return v;
}

PhasePoint phase_point(const json& j, const std::string& path) {
  check_object(j, path, {"dphi_bc", "dphi_ca", "dphi_ab"});
  for (const char* k : {"dphi_bc", "dphi_ca", "dphi_ab"}) {
    if (!j.contains(k)) throw ConfigError("missing key '" + join(path, k) + "'");
  }
  return {number(j, path, "dphi_bc", 0), number(j, path, "dphi_ca", 0), number(j, path, "dphi_ab", 0)};
}

ojson phase_json(const PhasePoint& p) {
  return ojson{{"dphi_bc", p.dphi_bc()}, {"dphi_ca", p.dphi_ca()}, {"dphi_ab", p.dphi_ab()}};
}

ojson terms_json(const InterferenceTerms& t) {
  return ojson{{"alpha", t.alpha()}, {"beta", t.beta()}, {"gamma", t.gamma()}};
}

ojson vec_json(const Eigen::Vector3d& v) { return ojson::array({v(0), v(1), v(2)}); }

const json empty_object = json::object();

const json& section(const json& root, const char* key) {
  const auto it = root.find(key);
  return it == root.end() ? empty_object : *it;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_object(root, "", {"source", "phases", "residual", "crosstalk", "fluctuations", "nonlinearity",
                          "polarization", "protocol", "seed", "analysis"});
  RunConfig c;

  const json& src = section(root, "source");
  check_object(src, "source", {"p_in", "transmission", "p_dark"});
  c.source.p_in = number(src, "source", "p_in", c.source.p_in);
  require(c.source.p_in > 0, "source.p_in", "> 0");
  c.source.transmission = triple(src, "source", "transmission", c.source.transmission);
  for (int i = 0; i < 3; ++i) {
    const double t = c.source.transmission(i);
    require(t > 0 && t <= 1, "source.transmission[" + std::to_string(i) + "]", "in (0, 1]");
  }
  c.source.p_dark = number(src, "source", "p_dark", c.source.p_dark);
  require(c.source.p_dark >= 0, "source.p_dark", "≥ 0");

  if (!root.contains("phases")) throw ConfigError("missing key 'phases'");
  c.phases = phase_point(root["phases"], "phases");

  auto& im = c.imperfections;
  const json& res = section(root, "residual");
  check_object(res, "residual", {"tau", "phi_sh"});
  im.residual.tau = number(res, "residual", "tau", 0.0);
  require(im.residual.tau >= 0, "residual.tau", "≥ 0");
  require(im.residual.tau < 1, "residual.tau", "< 1");
  im.residual.phi_sh = number(res, "residual", "phi_sh", 0.0);

  const json& ct = section(root, "crosstalk");
  check_object(ct, "crosstalk", {"dphi_dh", "convention"});
  im.crosstalk.dphi_dh = number(ct, "crosstalk", "dphi_dh", 0.0);
  require(std::abs(im.crosstalk.dphi_dh) < std::numbers::pi, "crosstalk.dphi_dh", "in (-pi, pi)");
  if (const auto it = ct.find("convention"); it != ct.end()) {
    if (!it->is_string()) throw ConfigError("crosstalk.convention must be a string");
    try {
      im.crosstalk.convention = crosstalk_convention_from_string(it->get<std::string>());
    } catch (const Error&) {
      throw ConfigError("crosstalk.convention must be one of cancelling, comoving_plus, comoving_minus");
    }
  }

  const json& fl = section(root, "fluctuations");
  check_object(fl, "fluctuations", {"sigma_pin_rel", "sigma_phase", "sigma_phase_fast", "sigma_sample_rel"});
  im.fluctuations.sigma_pin_rel = number(fl, "fluctuations", "sigma_pin_rel", 0.0);
  im.fluctuations.sigma_phase = number(fl, "fluctuations", "sigma_phase", 0.0);
  im.fluctuations.sigma_phase_fast = number(fl, "fluctuations", "sigma_phase_fast", 0.0);
  im.fluctuations.sigma_sample_rel = number(fl, "fluctuations", "sigma_sample_rel", 0.0);
  require(im.fluctuations.sigma_pin_rel >= 0, "fluctuations.sigma_pin_rel", "≥ 0");
  require(im.fluctuations.sigma_phase >= 0, "fluctuations.sigma_phase", "≥ 0");
  require(im.fluctuations.sigma_phase_fast >= 0, "fluctuations.sigma_phase_fast", "≥ 0");
  require(im.fluctuations.sigma_sample_rel >= 0, "fluctuations.sigma_sample_rel", "≥ 0");

  const json& nl = section(root, "nonlinearity");
  check_object(nl, "nonlinearity", {"c2", "c3", "max_power_w"});
  im.nonlinearity.c2 = number(nl, "nonlinearity", "c2", 0.0);
  im.nonlinearity.c3 = number(nl, "nonlinearity", "c3", 0.0);
  im.nonlinearity.max_power_w = number(nl, "nonlinearity", "max_power_w", im.nonlinearity.max_power_w);
  require(im.nonlinearity.max_power_w > 0, "nonlinearity.max_power_w", "> 0");

  const json& pol = section(root, "polarization");
  check_object(pol, "polarization", {"h_fraction", "phases_v", "polarizer_enabled"});
  im.polarization.h_fraction = triple(pol, "polarization", "h_fraction", im.polarization.h_fraction);
  for (int i = 0; i < 3; ++i) {
    const double h = im.polarization.h_fraction(i);
    require(h >= 0 && h <= 1, "polarization.h_fraction[" + std::to_string(i) + "]", "in [0, 1]");
  }
  if (pol.contains("phases_v")) im.polarization.phases_v = phase_point(pol["phases_v"], "polarization.phases_v");
  im.polarization.polarizer_enabled = boolean(pol, "polarization", "polarizer_enabled", false);

  const json& pr = section(root, "protocol");
  check_object(pr, "protocol", {"n_cycles", "samples_per_setting", "setting_duration_s", "housing_temp_c"});
  const auto n_cycles = integer(pr, "protocol", "n_cycles", c.protocol.n_cycles);
  require(n_cycles >= 1 && n_cycles <= 100000000, "protocol.n_cycles", "an integer ≥ 1");
  c.protocol.n_cycles = static_cast<int>(n_cycles);
  const auto sps = integer(pr, "protocol", "samples_per_setting", c.protocol.samples_per_setting);
  require(sps >= 1 && sps <= 100000000, "protocol.samples_per_setting", "an integer ≥ 1");
  c.protocol.samples_per_setting = static_cast<int>(sps);
  c.protocol.setting_duration_s = number(pr, "protocol", "setting_duration_s", c.protocol.setting_duration_s);
  require(c.protocol.setting_duration_s >= 0, "protocol.setting_duration_s", "≥ 0");
  c.protocol.housing_temp_c = number(pr, "protocol", "housing_temp_c", c.protocol.housing_temp_c);

  if (const auto it = root.find("seed"); it != root.end()) {
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0)) {
      throw ConfigError("seed must be a non-negative integer");
    }
    c.seed = it->get<std::uint64_t>();
  }

  const json& an = section(root, "analysis");
  check_object(an, "analysis", {"mc_samples", "sweep_points", "filter_malfunctions", "malfunction_threshold"});
  c.analysis.mc_samples = integer(an, "analysis", "mc_samples", c.analysis.mc_samples);
  require(c.analysis.mc_samples >= 2, "analysis.mc_samples", "an integer ≥ 2");
  const auto sweep = integer(an, "analysis", "sweep_points", c.analysis.sweep_points);
  require(sweep >= 3 && sweep <= 10000000, "analysis.sweep_points", "an integer ≥ 3");
  c.analysis.sweep_points = static_cast<int>(sweep);
  c.analysis.filter_malfunctions = boolean(an, "analysis", "filter_malfunctions", false);
  c.analysis.malfunction_threshold = number(an, "analysis", "malfunction_threshold", 5.0);
  require(c.analysis.malfunction_threshold > 0, "analysis.malfunction_threshold", "> 0");

  try {
    im.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

RunConfig read_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c, int indent) {
  const auto& im = c.imperfections;
  ojson j;
  j["source"] = {{"p_in", c.source.p_in}, {"transmission", vec_json(c.source.transmission)}, {"p_dark", c.source.p_dark}};
  j["phases"] = phase_json(c.phases);
  j["residual"] = {{"tau", im.residual.tau}, {"phi_sh", im.residual.phi_sh}};
  j["crosstalk"] = {{"dphi_dh", im.crosstalk.dphi_dh}, {"convention", to_string(im.crosstalk.convention)}};
  j["fluctuations"] = {{"sigma_pin_rel", im.fluctuations.sigma_pin_rel},
                       {"sigma_phase", im.fluctuations.sigma_phase},
                       {"sigma_phase_fast", im.fluctuations.sigma_phase_fast},
                       {"sigma_sample_rel", im.fluctuations.sigma_sample_rel}};
  j["nonlinearity"] = {{"c2", im.nonlinearity.c2}, {"c3", im.nonlinearity.c3}, {"max_power_w", im.nonlinearity.max_power_w}};
  j["polarization"] = {{"h_fraction", vec_json(im.polarization.h_fraction)},
                       {"phases_v", phase_json(im.polarization.phases_v)},
                       {"polarizer_enabled", im.polarization.polarizer_enabled}};
  j["protocol"] = {{"n_cycles", c.protocol.n_cycles},
                   {"samples_per_setting", c.protocol.samples_per_setting},
                   {"setting_duration_s", c.protocol.setting_duration_s},
                   {"housing_temp_c", c.protocol.housing_temp_c}};
  j["seed"] = c.seed;
  j["analysis"] = {{"mc_samples", c.analysis.mc_samples},
                   {"sweep_points", c.analysis.sweep_points},
                   {"filter_malfunctions", c.analysis.filter_malfunctions},
                   {"malfunction_threshold", c.analysis.malfunction_threshold}};
  return j.dump(indent);
}

// --- reports ----------------------------------------------------------------

std::string analysis_report_json(const LogAnalysis& a, const MalfunctionReport* filter) {
  ojson j;
  ojson cycles = ojson::array();
  for (const auto& c : a.cycles) {
    cycles.push_back({{"cycle", c.cycle},
                      {"f", c.f},
                      {"epsilon_w", c.epsilon},
                      {"denominator_w", c.denominator},
                      {"terms", terms_json(c.terms)}});
  }
  j["n_cycles"] = a.cycles.size();
  j["mean_terms"] = terms_json(a.mean_terms);
  j["f"] = {{"mean", a.f.mean},
            {"naive_sem", a.f.naive_sem},
            {"corrected_sem", a.f.corrected_sem},
            {"n_effective", a.f.n_effective}};
  j["sorkin"] = {{"mean_epsilon_w", a.mean_epsilon},
                 {"mean_denominator_w", a.sorkin.denominator},
                 {"kappa", a.sorkin.kappa},
                 {"degenerate", a.sorkin_degenerate}};
  if (filter) {
    ojson dropped = ojson::array();
    for (const auto& d : filter->dropped) dropped.push_back({{"cycle", d.cycle}, {"reason", d.reason}});
    j["malfunction_filter"] = {{"passes", filter->passes}, {"dropped", dropped}};
  }
  j["cycles"] = cycles;
  return j.dump(2) + "\n";
}

std::string reconstruction_json(const CorrectedPoint& c) {
  ojson j;
  auto proj = [](const Projection& p) {
    return ojson{{"candidate", phase_json(p.candidate)},
                 {"plane_index", p.plane_index},
                 {"distance", p.distance},
                 {"projected", phase_json(p.projected)}};
  };
  j["point"] = phase_json(c.point);
  j["corrected_terms"] = terms_json(c.corrected_terms);
  j["peres_f"] = peres_parameter(c.corrected_terms).f;
  j["plane_index"] = c.plane_index;
  j["distance"] = c.distance;
  j["chosen_candidate"] = c.chosen_candidate;
  j["clamped"] = c.clamped;
  ojson all = ojson::array();
  for (const auto& p : c.all) all.push_back(proj(p));
  ojson surviving = ojson::array();
  for (const auto& p : c.surviving) surviving.push_back(proj(p));
  j["candidates"] = all;
  j["surviving"] = surviving;
  return j.dump(2) + "\n";
}

std::string budget_report_json(const BudgetReport& r) {
  ojson j;
  j["phases"] = phase_json(r.phases);
  j["terms"] = terms_json(r.terms);
  ojson entries = ojson::array();
  for (const auto& e : r.entries) {
    ojson o{{"name", e.name}, {"delta_f", e.delta_f}, {"lower", e.lower}, {"upper", e.upper}};
    if (e.sigma_f) o["sigma_f"] = *e.sigma_f;
    entries.push_back(o);
  }
  j["entries"] = entries;
  j["totals"] = {{"lower", r.total_lower}, {"upper", r.total_upper}};
  j["measured"] = {{"delta_f", r.measured_delta_f}, {"sem", r.measured_sem}, {"kappa", r.measured_kappa}};
  j["residual_light_sweep"] = {{"max", r.residual_sweep.max},
                               {"argmax", r.residual_sweep.argmax},
                               {"min", r.residual_sweep.min},
                               {"argmin", r.residual_sweep.argmin},
                               {"at_pi", r.residual_sweep.at_pi},
                               {"at_zero", r.residual_sweep.at_zero}};
  ojson refs = ojson::array();
  for (const auto& ref : r.references) {
    refs.push_back({{"label", ref.label},
                    {"delta_f", ref.delta_f},
                    {"delta_f_error", ref.delta_f_error},
                    {"kappa", ref.kappa},
                    {"kappa_error", ref.kappa_error}});
  }
  j["references"] = refs;
  return j.dump(2) + "\n";
}

std::string budget_table_csv(const BudgetReport& r) {
  std::string out = "name,delta_f,lower,upper,sigma_f\n";
  for (const auto& e : r.entries) {
    out += e.name + "," + format_double(e.delta_f) + "," + format_double(e.lower) + "," +
           format_double(e.upper) + "," + (e.sigma_f ? format_double(*e.sigma_f) : "") + "\n";
  }
  out += "total,," + format_double(r.total_lower) + "," + format_double(r.total_upper) + ",\n";
  out += "measured," + format_double(r.measured_delta_f) + ",,," + format_double(r.measured_sem) + "\n";
  return out;
}

std::string budget_report_text(const BudgetReport& r) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "phase point (bc, ca, ab) rad: %.6f %.6f %.6f\n", r.phases.dphi_bc(),
                r.phases.dphi_ca(), r.phases.dphi_ab());
  out += buf;
  std::snprintf(buf, sizeof buf, "%-16s %12s %12s %12s %12s\n", "model", "delta_f", "lower", "upper", "sigma_f");
  out += buf;
  for (const auto& e : r.entries) {
    char sig[32] = "";
    if (e.sigma_f) std::snprintf(sig, sizeof sig, "%12.3e", *e.sigma_f);
    std::snprintf(buf, sizeof buf, "%-16s %12.3e %12.3e %12.3e %12s\n", e.name.c_str(), e.delta_f, e.lower,
                  e.upper, sig);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%-16s %12s %12.3e %12.3e\n", "total", "", r.total_lower, r.total_upper);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-16s %12.3e +- %.1e (kappa %.3e)\n", "measured", r.measured_delta_f,
                r.measured_sem, r.measured_kappa);
  out += buf;
  for (const auto& ref : r.references) {
    std::snprintf(buf, sizeof buf, "reference %-6s %12.3e +- %.1e (kappa %.2e +- %.1e)\n", ref.label.c_str(),
                  ref.delta_f, ref.delta_f_error, ref.kappa, ref.kappa_error);
    out += buf;
  }
  return out;
}

std::string sweep_csv(const SweepCurve& c) {
  std::string out = "phi_sh_rad,delta_f\n";
  for (std::size_t i = 0; i < c.phi_sh.size(); ++i) {
    out += format_double(c.phi_sh[i]) + "," + format_double(c.delta_f[i]) + "\n";
  }
  return out;
}

std::string mc_report_json(const McResult& power, const McResult& phase, const ContrastEstimate& contrast) {
  auto mc = [](const McResult& m) {
    return ojson{{"delta_f", m.delta_f},
                 {"sigma_f", m.sigma_f},
                 {"delta_f_error", m.delta_f_error},
                 {"sigma_f_error", m.sigma_f_error},
                 {"n_samples", m.n_samples},
                 {"rejected", m.rejected}};
  };
  ojson j;
  j["power"] = mc(power);
  j["phase"] = mc(phase);
  j["contrast"] = {{"contrast", contrast.contrast}, {"standard_error", contrast.standard_error}};
  return j.dump(2) + "\n";
}

std::string contrast_fit_json(const ContrastFit& fit, const ThermalizationFit* thermal) {
  ojson j;
  if (thermal) {
    j["thermalization"] = {{"t0", thermal->t0},
                           {"delta_t", thermal->delta_t},
                           {"kappa_th", thermal->kappa_th},
                           {"uncertainties", vec_json(thermal->uncertainties)},
                           {"residual_norm", thermal->residual_norm}};
  }
  j["contrast"] = {{"c_alpha", fit.c_alpha},
                   {"dphi0", fit.dphi0},
                   {"eta", fit.eta},
                   {"kappa_th", fit.kappa_th},
                   {"uncertainties", ojson::array({fit.uncertainties(0), fit.uncertainties(1),
                                                   fit.uncertainties(2), fit.uncertainties(3)})},
                   {"residual_norm", fit.residual_norm}};
  return j.dump(2) + "\n";
}

}  // namespace peres
