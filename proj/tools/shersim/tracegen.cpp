// Generates input traces: a closed-loop scripted vessel tour (recorded and
// written as an open-loop trace that replays exactly) or a constant drift.

#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "shersim/shersim.hpp"

using namespace shersim;

namespace {

std::vector<Vec3> parse_points(const std::string& text) {
  std::vector<Vec3> out;
  for (auto item : io::split(text, ';')) {
    if (item.empty()) continue;
    const auto f = io::split(item, ',');
    if (f.size() != 3) throw Error("points are 'x,y,z;x,y,z' in metres, got '" + std::string(item) + "'");
    Vec3 p;
    for (int i = 0; i < 3; ++i) {
      const auto v = io::parse_double(f[i]);
      if (!v) throw Error("bad coordinate '" + std::string(f[i]) + "'");
      p[i] = *v;
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shersim-tracegen: write input traces for shersim run/batch"};
  std::string scenario_path, out_path, order = "red,green,blue,yellow", left;
  double update_period = 0.01, pivot_gain = 10.0, speed = 0.002;
  std::string drift;
  double duration = 4.0;
  std::string hand = "right";
  app.add_option("--scenario", scenario_path, "Scenario JSON")->required();
  app.add_option("--out", out_path, "Trace CSV to write")->required();
  app.add_option("--order", order, "Pin visiting order for the right hand")->capture_default_str();
  app.add_option("--left", left, "Targets for the left hand, eye frame, 'x,y,z;...' in m");
  app.add_option("--update-period", update_period, "Seconds between recorded samples")->capture_default_str();
  app.add_option("--pivot-gain", pivot_gain, "Operator's port re-centring gain, 1/s")->capture_default_str();
  app.add_option("--speed", speed, "Maximum tip speed, m/s")->capture_default_str();
  app.add_option("--drift", drift, "Instead of a tour: constant body velocity 'vx,vy,vz' (m/s) on one hand");
  app.add_option("--hand", hand, "Hand for --drift")->check(CLI::IsMember({"right", "left"}));
  app.add_option("--duration", duration, "Length of a --drift trace, s")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    const Scenario s = io::load_scenario(scenario_path);
    std::vector<InputSample> trace;
    if (!drift.empty()) {
      const auto v = parse_points(drift);
      if (v.size() != 1) throw Error("--drift takes one 'vx,vy,vz'");
      const int h = hand == "right" ? kRight : kLeft;
      const int n = static_cast<int>(std::llround(duration / update_period));
      for (int k = 0; k <= n; ++k) {
        InputSample in;
        in.t = k * update_period;
        HandInput& hi = in.hands[h];
        hi.command.head<3>() = v.front();
        if (s.mode == ControlMode::bmac)
          for (int c = 0; c < 3; ++c) hi.command[c] /= s.robots[h].admittance[c];
        hi.pedal = 1.0;
        hi.clutch = true;
        trace.push_back(in);
      }
    } else {
      std::vector<int> pins;
      for (auto name : io::split(order, ',')) {
        const auto it = std::find(s.task.names.begin(), s.task.names.end(), std::string(name));
        if (it == s.task.names.end()) throw Error("unknown pin '" + std::string(name) + "'");
        pins.push_back(static_cast<int>(it - s.task.names.begin()));
      }
      World world = World::from_scenario(s);
      OperatorOptions opts;
      opts.update_period = update_period;
      opts.pivot_gain = pivot_gain;
      opts.max_tip_speed = speed;
      ScriptedOperator op(world, {ScriptedOperator::vessel_tour(s.task, pins), parse_points(left)}, opts);
      const TrialLog log = run_trial(world, op, s.max_duration);
      trace = op.trace(log.ticks.empty() ? 0.0 : log.ticks.back().t);
      std::cerr << "scripted run: " << to_string(log.meta.completion) << " after " << log.ticks.size() << " ticks\n";
    }
    io::write_trace(trace, s.mode, out_path);
    std::cerr << "wrote " << trace.size() << " samples to " << out_path << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
