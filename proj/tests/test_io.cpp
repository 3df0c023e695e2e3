#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "shersim/io_formats.hpp"
#include "support.hpp"

using namespace shersim;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

std::string source_path(const std::string& rel) { return std::string(SHERSIM_SOURCE_DIR) + "/" + rel; }

std::string scenario_error_path(const std::string& text) {
  try {
    io::parse_scenario_text(text);
  } catch (const ScenarioError& e) {
    return e.path();
  }
  return "<no error>";
}

std::size_t parse_error_line(const std::string& text, ControlMode mode = ControlMode::bmat) {
  try {
    io::parse_trace_text(text, mode);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

const std::string kHeader = "t,r_vx,r_vy,r_vz,r_wx,r_wy,r_wz,r_pedal,r_clutch,l_vx,l_vy,l_vz,l_wx,l_wy,l_wz,l_pedal,l_clutch\n";
const std::string kRow0 = "0,0.001,0,0,0,0,0,1,1,0,0,0,0,0,0,0,0\n";
const std::string kRow1 = "0.5,0,0.002,0,0,0,0,0.5,1,0,0,0.001,0,0,0,1,1\n";

}  // namespace

TEST(ScenarioIo, MinimalDocumentFillsDefaults) {
  const Scenario s = io::parse_scenario_text("{}");
  const Scenario d = Scenario::standard();
  EXPECT_EQ(s.mode, ControlMode::bmat);
  EXPECT_EQ(s.dt, 0.001);
  EXPECT_EQ(s.scene.radius, d.scene.radius);
  EXPECT_EQ(s.scene.sclera_stiffness, 100.0);
  EXPECT_EQ(s.noise.force_sigma, 2.0);
  EXPECT_EQ(s.robots[kLeft].port, 1);
  EXPECT_LT((s.robots[kRight].base.translation - d.robots[kRight].base.translation).norm(), 1e-15);
  EXPECT_EQ(s.robots[kRight].afc[0].threshold, 100.0);
}

TEST(ScenarioIo, ShippedScenariosLoad) {
  for (const char* name : {"default.json", "cooperative.json", "misregistered.json"}) {
    EXPECT_NO_THROW(io::load_scenario(source_path(std::string("scenarios/") + name))) << name;
  }
  EXPECT_EQ(io::load_scenario(source_path("scenarios/cooperative.json")).mode, ControlMode::bmac);
}

TEST(ScenarioIo, ErrorsNameTheJsonPath) {
  EXPECT_EQ(scenario_error_path(R"({"scene": {"radius": -0.01}})"), "$.scene.radius");
  EXPECT_EQ(scenario_error_path(R"({"robots": {"right": {"scaling": [1, 1, 1, 1, 1]}}})"), "$.robots.right.scaling");
  EXPECT_EQ(scenario_error_path(R"({"scene": {"radius": 0.01, "colour": "red"}})"), "$.scene.colour");
  EXPECT_EQ(scenario_error_path(R"({"robots": {"middle": {}}})"), "$.robots.middle");
  EXPECT_EQ(scenario_error_path(R"({"mode": "XYZ"})"), "$.mode");
  EXPECT_EQ(scenario_error_path(R"({"dt": 0})"), "$.dt");
  EXPECT_EQ(scenario_error_path(R"({"robots": {"left": {"afc": {"threshold": 130}}}})"), "$.robots.left.afc.threshold");
  EXPECT_EQ(scenario_error_path(R"({"robots": {"right": {"master_map": {"axis": [0, 0, 0], "angle_deg": 5}}}})"),
            "$.robots.right.master_map.axis");
  EXPECT_EQ(scenario_error_path("{not json"), "$");
}

TEST(ScenarioIo, SerialisedScenarioParsesBackIdentically) {
  const Scenario a = io::load_scenario(source_path("scenarios/misregistered.json"));
  const std::string text = io::scenario_to_json(a).dump();
  const Scenario b = io::parse_scenario_text(text);
  EXPECT_EQ(io::scenario_to_json(b).dump(), text);
  EXPECT_EQ(a.robots[kRight].master_map.rotation, b.robots[kRight].master_map.rotation);
  EXPECT_EQ(a.robots[kLeft].base.translation, b.robots[kLeft].base.translation);
}

TEST(ScenarioIo, LoadingIsPure) {
  const std::string path = source_path("scenarios/default.json");
  EXPECT_EQ(io::scenario_to_json(io::load_scenario(path)).dump(), io::scenario_to_json(io::load_scenario(path)).dump());
}

TEST(ScenarioIo, MissingFileIsAnIoErrorWithPath) {
  try {
    io::load_scenario("/nonexistent/scenario.json");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_EQ(e.path(), "/nonexistent/scenario.json");
  }
}

TEST(TraceIo, TwoLinesGiveTwoSamples) {
  const auto s = io::parse_trace_text(kHeader + kRow0 + kRow1, ControlMode::bmat);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].hands[kRight].command[0], 0.001);
  EXPECT_TRUE(s[0].hands[kRight].clutch);
  EXPECT_FALSE(s[0].hands[kLeft].clutch);
  EXPECT_EQ(s[1].t, 0.5);
  EXPECT_EQ(s[1].hands[kRight].pedal, 0.5);
  EXPECT_EQ(s[1].hands[kLeft].command[2], 0.001);
}

TEST(TraceIo, CommentsBlankLinesAndCrlfAreAccepted) {
  std::string crlf = "# recorded by hand\r\n" + kHeader + "\r\n" + kRow0;
  const auto s = io::parse_trace_text(crlf, ControlMode::bmat);
  EXPECT_EQ(s.size(), 1u);
}

TEST(TraceIo, ErrorsCarryTheOffendingLine) {
  EXPECT_EQ(parse_error_line(kHeader + kRow1 + kRow0), 3u);  // out of order
  EXPECT_EQ(parse_error_line(kHeader + kRow0 + kRow0), 3u);  // repeated timestamp
  EXPECT_EQ(parse_error_line(kHeader + "0,nan,0,0,0,0,0,1,1,0,0,0,0,0,0,0,0\n"), 2u);
  EXPECT_EQ(parse_error_line(kHeader + "0,0,0,0,0,0,0,1.5,1,0,0,0,0,0,0,0,0\n"), 2u);
  EXPECT_EQ(parse_error_line(kHeader + "0,0,0,0,0,0,0,1,2,0,0,0,0,0,0,0,0\n"), 2u);
  EXPECT_EQ(parse_error_line(kHeader + kRow0 + "1,2,3\n"), 3u);
  EXPECT_EQ(parse_error_line(kHeader + "0,abc,0,0,0,0,0,1,1,0,0,0,0,0,0,0,0\n"), 2u);
  EXPECT_EQ(parse_error_line("t,x\n"), 1u);
  // wrench names are required in cooperative mode
  EXPECT_EQ(parse_error_line(kHeader + kRow0, ControlMode::bmac), 1u);
}

TEST(TraceIo, FileErrorsIncludeThePath) {
  const fs::path p = fs::temp_directory_path() / "shersim_bad_trace.csv";
  io::write_file(p.string(), kHeader + kRow1 + kRow0);
  try {
    io::parse_trace(p.string(), ControlMode::bmat);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find(p.string()), std::string::npos);
    EXPECT_EQ(e.line(), 3u);
  }
  fs::remove(p);
}

TEST(TraceIo, WriteThenParseRoundTripsExactly) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0), unit(0.0, 1.0);
  std::vector<InputSample> samples;
  double t = 0.0;
  for (int k = 0; k < 300; ++k) {
    InputSample s;
    t += 1e-3 * (1.0 + unit(rng));
    s.t = t;
    for (auto& h : s.hands) {
      for (int i = 0; i < 6; ++i) h.command[i] = u(rng) * std::pow(10.0, -3.0 * unit(rng));
      h.pedal = unit(rng);
      h.clutch = unit(rng) > 0.5;
    }
    samples.push_back(s);
  }
  for (ControlMode mode : {ControlMode::bmat, ControlMode::bmac}) {
    const auto back = io::parse_trace_text(io::format_trace(samples, mode), mode);
    ASSERT_EQ(back.size(), samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
      ASSERT_EQ(back[k].t, samples[k].t);
      for (int h = 0; h < kRobotCount; ++h) {
        ASSERT_EQ(back[k].hands[h].command, samples[k].hands[h].command);
        ASSERT_EQ(back[k].hands[h].pedal, samples[k].hands[h].pedal);
        ASSERT_EQ(back[k].hands[h].clutch, samples[k].hands[h].clutch);
      }
    }
  }
}

TEST(TraceIo, ShippedTracesParse) {
  const Scenario def = io::load_scenario(source_path("scenarios/default.json"));
  const Scenario coop = io::load_scenario(source_path("scenarios/cooperative.json"));
  EXPECT_GT(io::parse_trace(source_path("scenarios/traces/tour_rgby.csv"), def.mode).size(), 100u);
  EXPECT_GT(io::parse_trace(source_path("scenarios/traces/coop_tour_rgby.csv"), coop.mode).size(), 100u);
}

namespace {

TrialLog sample_log() {
  Scenario s = Scenario::standard();
  World w = World::from_scenario(s);
  InputSample a;
  a.hands[kRight].command << 0.004, 0.001, 0.0005, 0.01, -0.02, 0.0;
  a.hands[kRight].pedal = 0.8;
  a.hands[kRight].clutch = true;
  a.hands[kLeft].command << -0.001, 0.0, 0.0, 0.0, 0.0, 0.0;
  a.hands[kLeft].pedal = 1.0;
  a.hands[kLeft].clutch = true;
  InputSample b = a;
  b.t = 0.3;
  TraceSource src({a, b});
  TrialLog log = run_trial(w, src, 1.0);
  log.meta.scenario_hash = "abc123";
  log.ticks[5].events = {"touch:red", "return"};
  return log;
}

void expect_close9(double a, double b, const char* what) {
  EXPECT_LE(std::abs(a - b), 1e-8 * std::max(std::abs(a), std::abs(b)) + 1e-300) << what << ": " << a << " vs " << b;
}

}  // namespace

TEST(TrialIo, EmptyLogIsHeaderOnly) {
  const std::string text = io::format_trial_csv(TrialLog{});
  std::istringstream in(text);
  std::string line, last;
  int non_comment = 0;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') ++non_comment, last = line;
  EXPECT_EQ(non_comment, 1);
  EXPECT_EQ(last.rfind("tick,t,r_theta1", 0), 0u);
  EXPECT_TRUE(io::parse_trial_csv_text(text).ticks.empty());
}

TEST(TrialIo, IdenticalLogsGiveIdenticalBytes) {
  EXPECT_EQ(io::format_trial_csv(sample_log()), io::format_trial_csv(sample_log()));
}

TEST(TrialIo, ParseReproducesEveryFieldToPrintedPrecision) {
  const TrialLog log = sample_log();
  const std::string text = io::format_trial_csv(log);
  const TrialLog back = io::parse_trial_csv_text(text);
  ASSERT_EQ(back.ticks.size(), log.ticks.size());
  EXPECT_EQ(back.meta.scenario_hash, "abc123");
  EXPECT_EQ(back.meta.mode, log.meta.mode);
  EXPECT_EQ(back.meta.completion, log.meta.completion);
  EXPECT_EQ(back.meta.dt, log.meta.dt);
  for (std::size_t k = 0; k < log.ticks.size(); ++k) {
    const TickRecord &a = log.ticks[k], &b = back.ticks[k];
    ASSERT_EQ(a.tick, b.tick);
    expect_close9(a.t, b.t, "t");
    EXPECT_EQ(a.events, b.events);
    for (int h = 0; h < kRobotCount; ++h) {
      const RobotTick &x = a.robots[h], &y = b.robots[h];
      for (int i = 0; i < 5; ++i) expect_close9(x.theta[i], y.theta[i], "theta");
      for (int i = 0; i < 5; ++i) expect_close9(x.theta_dot[i], y.theta_dot[i], "theta_dot");
      for (int i = 0; i < 6; ++i) expect_close9(x.x_spatial[i], y.x_spatial[i], "x_spatial");
      for (int i = 0; i < 6; ++i) expect_close9(x.x_des[i], y.x_des[i], "x_des");
      for (int i = 0; i < 6; ++i) expect_close9(x.input[i], y.input[i], "input");
      for (int i = 0; i < 3; ++i) expect_close9(x.tip[i], y.tip[i], "tip");
      expect_close9(x.reading.fsx, y.reading.fsx, "fsx");
      expect_close9(x.reading.fsy, y.reading.fsy, "fsy");
      expect_close9(x.reading.norm, y.reading.norm, "fs");
      expect_close9(x.reading.tip_force, y.reading.tip_force, "ft");
      expect_close9(x.reading.insertion_depth, y.reading.insertion_depth, "depth");
      EXPECT_EQ(x.reading.engaged, y.reading.engaged);
      EXPECT_EQ(x.delta_x, y.delta_x);
      EXPECT_EQ(x.delta_y, y.delta_y);
      expect_close9(x.f_dx, y.f_dx, "fdx");
      expect_close9(x.pedal, y.pedal, "pedal");
      EXPECT_EQ(x.clutch, y.clutch);
    }
  }
  EXPECT_EQ(io::format_trial_csv(back), text);
}

TEST(TrialIo, WriteFailureNamesThePath) {
  try {
    io::write_trial_csv(TrialLog{}, "/nonexistent-dir/trial.csv");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_EQ(e.path(), "/nonexistent-dir/trial.csv");
  }
}

TEST(TrialIo, MalformedRowsReportLines) {
  const std::string text = io::format_trial_csv(sample_log());
  std::string broken = text;
  const auto pos = broken.find("\n0,0,");
  ASSERT_NE(pos, std::string::npos);
  broken.insert(pos + 1, "1,2,3\n");
  try {
    io::parse_trial_csv_text(broken);
    FAIL();
  } catch (const ParseError& e) {
    std::size_t header_lines = 0;
    for (std::size_t i = 0; i <= pos; ++i) header_lines += text[i] == '\n';
    EXPECT_EQ(e.line(), header_lines + 1);
  }
}

TEST(Text, FormatDoubleIsShortestRoundTrip) {
  EXPECT_EQ(io::format_double(0.1), "0.1");
  EXPECT_EQ(io::format_double(1e-7), "1e-07");
  EXPECT_EQ(io::format_double(0.123456789012, 9), "0.123456789");
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int k = 0; k < 1000; ++k) {
    const double v = u(rng);
    ASSERT_EQ(*io::parse_double(io::format_double(v)), v);
  }
  EXPECT_FALSE(io::parse_double("1.5x").has_value());
  EXPECT_FALSE(io::parse_double("").has_value());
}
