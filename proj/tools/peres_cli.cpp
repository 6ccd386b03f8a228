// Command-line front end. Every subcommand is a thin wrapper over library
// calls; nothing is computed here.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "peres/budget.hpp"
#include "peres/fitting.hpp"
#include "peres/interface.hpp"
#include "peres/reconstruct.hpp"
#include "peres/stats.hpp"

using namespace peres;

namespace {

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << text;
}

RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
  RunConfig c = read_config(path);
  if (seed) c.seed = *seed;
  return c;
}

MeasurementLog load_log(const std::string& path, bool filter, double threshold, MalfunctionReport* report) {
  MeasurementLog log = read_log(path);
  if (!filter) return log;
  auto [clean, rep] = filter_malfunctions(log, threshold);
  if (report) *report = rep;
  return clean;
}

/// Column of a small CSV with a header row.
std::vector<double> read_column(const std::string& path, const std::string& name, bool required) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  int line_no = 0;
  int col = -1;
  std::vector<double> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (col < 0) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i] == name) col = static_cast<int>(i);
      }
      if (col < 0) {
        if (required) throw DataError(path + ":" + std::to_string(line_no) + ": no column '" + name + "'");
        return {};
      }
      continue;
    }
    if (static_cast<std::size_t>(col) >= fields.size()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": missing field '" + name + "'");
    }
    try {
      std::size_t used = 0;
      out.push_back(std::stod(fields[col], &used));
      if (used != fields[col].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(line_no) + ": '" + fields[col] + "' is not a number");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and analysis of three-path interferometric Peres tests"};
  app.require_subcommand(1);

  std::string config_path, log_path, out_path, report_path, table_path, input_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> tau, delta_t;
  std::optional<int> points;
  std::optional<std::int64_t> samples;
  std::vector<double> terms;
  bool filter = false;
  bool signed_point = false;

  auto* sim = app.add_subcommand("simulate", "simulate a measurement log");
  sim->add_option("--config", config_path, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out_path, "output log (CSV), '-' for stdout")->required();
  sim->add_option("--seed", seed, "override the configured seed");

  auto* ana = app.add_subcommand("analyze", "per-cycle F, epsilon, kappa and aggregates of a log");
  ana->add_option("--log", log_path, "measurement log (CSV)")->required()->check(CLI::ExistingFile);
  ana->add_option("--report", report_path, "output report (JSON), default stdout");
  ana->add_flag("--filter", filter, "drop malfunctioning cycles first");

  auto* rec = app.add_subcommand("reconstruct", "closest physical phase point for measured terms");
  auto* rec_terms = rec->add_option("--terms", terms, "alpha beta gamma")->expected(3);
  auto* rec_log = rec->add_option("--log", log_path, "use the mean terms of a log")->check(CLI::ExistingFile);
  rec_terms->excludes(rec_log);
  rec->add_option("--out", out_path, "output (JSON), default stdout");

  auto* bud = app.add_subcommand("budget", "per-imperfection deviation budget");
  bud->add_option("--log", log_path, "measurement log (CSV)")->required()->check(CLI::ExistingFile);
  bud->add_option("--config", config_path, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  bud->add_option("--report", report_path, "budget report (JSON)");
  bud->add_option("--table", table_path, "budget table (CSV)");
  bud->add_option("--seed", seed, "override the configured seed");

  auto* swp = app.add_subcommand("sweep-residual", "deviation versus residual-light phase");
  swp->add_option("--config", config_path, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  swp->add_option("--tau", tau, "override residual.tau");
  swp->add_option("--points", points, "grid points over [-pi, pi]")->check(CLI::Range(3, 10000000));
  swp->add_option("--out", out_path, "curve (CSV), default stdout");
  swp->add_flag("--signed", signed_point, "use the configured phases as given, not their principal values");

  auto* fit = app.add_subcommand("fit-contrast", "fit the thermal sweep of an interference term");
  fit->add_option("--input", input_path, "CSV with column 'alpha' and optionally 'temperature_c'")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--delta-t", delta_t, "temperature step in deg C (else fitted from temperature_c)");
  fit->add_option("--out", out_path, "output (JSON), default stdout");

  auto* mc = app.add_subcommand("mc-fluct", "Monte Carlo of power and phase fluctuations");
  mc->add_option("--config", config_path, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  mc->add_option("--samples", samples, "samples per estimate")->check(CLI::Range(std::int64_t{2}, std::int64_t{1} << 40));
  mc->add_option("--seed", seed, "override the configured seed");
  mc->add_option("--out", out_path, "output (JSON), default stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) {
      const RunConfig c = load_config(config_path, seed);
      MeasurementLog log = simulate_measurement(c.source, c.phases, c.imperfections, c.protocol, c.seed);
      log.spec_snapshot = serialize_config(c, -1);
      std::ostringstream os;
      write_log(log, os);
      emit(os.str(), out_path);
    } else if (ana->parsed()) {
      MalfunctionReport mr;
      const MeasurementLog log = load_log(log_path, filter, 5.0, &mr);
      emit(analysis_report_json(analyze_log(log), filter ? &mr : nullptr), report_path);
    } else if (rec->parsed()) {
      InterferenceTerms t;
      if (!terms.empty()) {
        t = InterferenceTerms(terms[0], terms[1], terms[2]);
      } else if (!log_path.empty()) {
        t = analyze_log(read_log(log_path)).mean_terms;
      } else {
        throw UsageError("reconstruct needs --terms or --log");
      }
      emit(reconstruction_json(correct_phase_point(t)), out_path);
    } else if (bud->parsed()) {
      const RunConfig c = load_config(config_path, seed);
      MalfunctionReport mr;
      const MeasurementLog log =
          load_log(log_path, c.analysis.filter_malfunctions, c.analysis.malfunction_threshold, &mr);
      const CorrectedPoint corrected = correct_phase_point(analyze_log(log).mean_terms);
      BudgetInputs in;
      in.source = c.source;
      in.imperfections = c.imperfections;
      in.mc_samples = c.analysis.mc_samples;
      in.seed = c.seed;
      in.sweep_points = c.analysis.sweep_points;
      const BudgetReport rep = full_budget(log, in, corrected);
      if (!report_path.empty()) emit(budget_report_json(rep), report_path);
      if (!table_path.empty()) emit(budget_table_csv(rep), table_path);
      std::cout << budget_report_text(rep);
    } else if (swp->parsed()) {
      const RunConfig c = load_config(config_path, std::nullopt);
      const PhasePoint ph = signed_point ? c.phases : principal_phases(terms_from_phases(c.phases));
      const double t = tau.value_or(c.imperfections.residual.tau);
      const SweepCurve curve =
          residual_light_sweep(ph, c.source, t, default_phi_grid(points.value_or(c.analysis.sweep_points)));
      emit(sweep_csv(curve), out_path);
      std::fprintf(stderr, "max %.6e at %.6f rad, min %.6e at %.6f rad\n", curve.max, curve.argmax, curve.min,
                   curve.argmin);
    } else if (fit->parsed()) {
      const std::vector<double> alphas = read_column(input_path, "alpha", true);
      const std::vector<double> temps = read_column(input_path, "temperature_c", false);
      std::optional<ThermalizationFit> thermal;
      if (!temps.empty()) thermal = fit_thermalization(temps);
      double dt = 0.0;
      if (delta_t) {
        dt = *delta_t;
      } else if (thermal) {
        dt = thermal->delta_t;
      } else {
        throw UsageError("fit-contrast needs --delta-t or a temperature_c column");
      }
      const ContrastFit cf = fit_contrast(alphas, dt);
      emit(contrast_fit_json(cf, thermal ? &*thermal : nullptr), out_path);
    } else if (mc->parsed()) {
      const RunConfig c = load_config(config_path, seed);
      const PhasePoint ph = principal_phases(terms_from_phases(c.phases));
      const std::int64_t n = samples.value_or(c.analysis.mc_samples);
      const auto& fl = c.imperfections.fluctuations;
      emit(mc_report_json(mc_power_fluctuations(ph, c.source, fl.sigma_pin_rel, n, c.seed),
                          mc_phase_fluctuations(ph, c.source, fl.sigma_phase, n, c.seed),
                          contrast_from_phase_noise(fl.sigma_phase_fast, n, c.seed)),
           out_path);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
