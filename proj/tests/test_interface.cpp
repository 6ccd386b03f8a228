#include <gtest/gtest.h>

#include <sstream>

#include <json.hpp>

#include "reference_points.hpp"
#include "peres/interface.hpp"

using namespace peres;

namespace {

MeasurementLog small_log() {
  ImperfectionSpec spec;
  spec.fluctuations.sigma_pin_rel = 0.003;
  spec.fluctuations.sigma_sample_rel = 0.001;
  SimulationProtocol proto;
  proto.n_cycles = 5;
  proto.samples_per_setting = 4;
  MeasurementLog log = simulate_measurement(testdata::lab_source(), PhasePoint(2.4, 0.3, 2.3), spec, proto, 99);
  log.spec_snapshot = "{\"a\": 1}\nsecond line";
  return log;
}

std::string message(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Log, RoundTripIsLossless) {
  const MeasurementLog log = small_log();
  std::stringstream ss;
  write_log(log, ss);
  const MeasurementLog back = read_log(ss);
  EXPECT_EQ(back, log);
  std::stringstream again;
  write_log(back, again);
  std::stringstream first;
  write_log(log, first);
  EXPECT_EQ(again.str(), first.str());
}

TEST(Log, HeaderAndPrecision) {
  std::stringstream ss;
  write_log(small_log(), ss);
  const std::string text = ss.str();
  EXPECT_NE(text.find(kLogHeader), std::string::npos);
  EXPECT_NE(text.find("# seed: 99"), std::string::npos);
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
}

TEST(Log, DuplicateNamesLine) {
  std::stringstream in(std::string(kLogHeader) +
                       "\n3,AB,1,0,1,23,1,0\n"
                       "3,A,1,0,1,23,1,13\n"
                       "3,AB,1,0,1,23,1,26\n");
  const std::string msg = message([&] { read_log(in, "run.csv"); });
  EXPECT_NE(msg.find("run.csv:4"), std::string::npos) << msg;
  EXPECT_NE(msg.find("AB"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
}

TEST(Log, MalformedRows) {
  std::stringstream empty("");
  EXPECT_THROW(read_log(empty), DataError);
  std::stringstream header_only(std::string(kLogHeader) + "\n");
  EXPECT_THROW(read_log(header_only), DataError);

  std::stringstream bad_num(std::string(kLogHeader) + "\n0,A,abc,0,1,23,1,0\n");
  const std::string m1 = message([&] { read_log(bad_num, "x.csv"); });
  EXPECT_NE(m1.find("x.csv:2"), std::string::npos) << m1;

  std::stringstream short_row(std::string(kLogHeader) + "\n0,A,1,0\n");
  EXPECT_THROW(read_log(short_row), DataError);

  std::stringstream bad_cfg(std::string(kLogHeader) + "\n0,AC,1,0,1,23,1,0\n");
  EXPECT_THROW(read_log(bad_cfg), DataError);

  std::stringstream missing_col("cycle,config,mean_power_w\n0,A,1\n");
  const std::string m2 = message([&] { read_log(missing_col, "y.csv"); });
  EXPECT_NE(m2.find("std_power_w"), std::string::npos) << m2;
}

TEST(Log, MissingFile) { EXPECT_THROW(read_log(std::string("/nonexistent/log.csv")), DataError); }

TEST(Config, MinimalTakesDefaults) {
  const RunConfig c = parse_config(R"({"phases": {"dphi_bc": 0.1, "dphi_ca": 0.2, "dphi_ab": -0.3}})");
  EXPECT_EQ(c.phases.dphi_bc(), 0.1);
  EXPECT_EQ(c.phases.dphi_ab(), -0.3);
  EXPECT_EQ(c.imperfections.residual.tau, 0.0);
  EXPECT_EQ(c.imperfections.crosstalk.convention, CrosstalkConvention::kCancelling);
  EXPECT_EQ(c.source.transmission, SourceSpec{}.transmission);
  EXPECT_EQ(c.analysis.mc_samples, kDefaultMcSamples);
  EXPECT_EQ(c.protocol.n_cycles, SimulationProtocol{}.n_cycles);
}

TEST(Config, ErrorsCarryKeyPath) {
  const std::string base = R"("phases": {"dphi_bc": 0, "dphi_ca": 0, "dphi_ab": 0})";
  EXPECT_EQ(message([&] { parse_config("{" + base + R"(, "residual": {"tau": -1}})"); }),
            "residual.tau must be ≥ 0");
  EXPECT_NE(message([&] { parse_config("{" + base + R"(, "residual": {"tua": 0.1}})"); }).find("residual.tua"),
            std::string::npos);
  EXPECT_NE(message([&] { parse_config("{" + base + R"(, "bogus": 1})"); }).find("bogus"), std::string::npos);
  EXPECT_NE(message([&] { parse_config("{}"); }).find("phases"), std::string::npos);
  EXPECT_NE(message([&] { parse_config("{" + base + R"(, "crosstalk": {"convention": "sideways"}})"); })
                .find("crosstalk.convention"),
            std::string::npos);
  EXPECT_NE(message([&] { parse_config("{" + base + R"(, "source": {"p_in": "1"}})"); }).find("source.p_in"),
            std::string::npos);
  EXPECT_THROW(parse_config("{not json"), ConfigError);
}

TEST(Config, SerializeRoundTrip) {
  RunConfig c;
  c.phases = PhasePoint(2.4, -0.3, -2.1);
  c.imperfections.residual = {2.2e-4, 3.0};
  c.imperfections.crosstalk = {-0.017, CrosstalkConvention::kComovingMinus};
  c.imperfections.fluctuations.sigma_pin_rel = 0.0032;
  c.imperfections.nonlinearity.c2 = 1e-3;
  c.imperfections.polarization.h_fraction = Eigen::Vector3d(0.9, 0.8, 0.7);
  c.imperfections.polarization.phases_v = PhasePoint(0.1, 0.2, 0.3);
  c.seed = 12345678901234ULL;
  c.protocol.n_cycles = 72;
  c.analysis.sweep_points = 101;
  const std::string text = serialize_config(c);
  const RunConfig back = parse_config(text);
  EXPECT_EQ(serialize_config(back), text);
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_EQ(back.imperfections.residual.tau, 2.2e-4);
  EXPECT_EQ(back.imperfections.crosstalk.convention, CrosstalkConvention::kComovingMinus);
  EXPECT_EQ(serialize_config(c, -1).find('\n'), std::string::npos);
}

TEST(Reports, AreJson) {
  const MeasurementLog log = small_log();
  const LogAnalysis a = analyze_log(log);
  const auto j = nlohmann::json::parse(analysis_report_json(a));
  EXPECT_EQ(j["n_cycles"], 5);
  const auto r = nlohmann::json::parse(reconstruction_json(correct_phase_point(testdata::kMeasured23)));
  EXPECT_TRUE(r.is_object());
}
