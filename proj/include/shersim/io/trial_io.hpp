#pragma once

// Trial CSV (one file per trial), metrics JSON and condition reports.
//
// Trial CSV layout: `# key=value` metadata lines, one header line, then one
// row per tick. Numbers use 9 significant digits, booleans 0/1. The column
// order is fixed by trial_columns(); docs/formats.md lists it.

#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shersim/io/text.hpp"
#include "shersim/metrics.hpp"
#include "shersim/sim_engine.hpp"

namespace shersim::io {

inline constexpr const char* kTrialFormatTag = "shersim-trial/1";
inline constexpr int kTrialPrecision = 9;

inline std::vector<std::string> robot_columns(const std::string& p) {
  std::vector<std::string> c;
  for (int i = 1; i <= kJointCount; ++i) c.push_back(p + "theta" + std::to_string(i));
  for (int i = 1; i <= kJointCount; ++i) c.push_back(p + "thetadot" + std::to_string(i));
  for (const char* n : {"vx", "vy", "vz", "wx", "wy", "wz"}) c.push_back(p + "xs_" + n);
  for (const char* n : {"vx", "vy", "vz", "wx", "wy", "wz"}) c.push_back(p + "xdes_" + n);
  for (const char* n : {"fsx", "fsy", "fs", "ft", "depth", "engaged", "delta_x", "delta_y", "fdx", "fdy", "pedal",
                        "clutch", "tip_x", "tip_y", "tip_z"})
    c.push_back(p + n);
  for (int i = 1; i <= 6; ++i) c.push_back(p + "u" + std::to_string(i));
  return c;
}

inline std::vector<std::string> trial_columns() {
  std::vector<std::string> c = {"tick", "t"};
  for (const char* p : {"r_", "l_"}) {
    const auto rc = robot_columns(p);
    c.insert(c.end(), rc.begin(), rc.end());
  }
  c.push_back("events");
  return c;
}

inline std::string format_trial_csv(const TrialLog& log) {
  auto num = [](double v) { return format_double(v, kTrialPrecision); };
  std::string out;
  out += std::string("# format=") + kTrialFormatTag + "\n";
  out += "# mode=" + std::string(to_string(log.meta.mode)) + "\n";
  out += "# posture=" + log.meta.posture + "\n";
  out += "# scenario_hash=" + log.meta.scenario_hash + "\n";
  out += "# seed=" + std::to_string(log.meta.seed) + "\n";
  out += "# dt=" + format_double(log.meta.dt) + "\n";
  out += "# completion=" + std::string(to_string(log.meta.completion)) + "\n";
  out += "# completion_time=" + (log.meta.completion_time ? num(*log.meta.completion_time) : std::string()) + "\n";
  std::string order;
  for (const auto& p : log.meta.pin_order) order += (order.empty() ? "" : ";") + p;
  out += "# pin_order=" + order + "\n";
  out += "# ticks=" + std::to_string(log.ticks.size()) + "\n";

  const auto cols = trial_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += "\n";

  for (const auto& r : log.ticks) {
    out += std::to_string(r.tick) + "," + num(r.t);
    for (const auto& rt : r.robots) {
      for (int i = 0; i < kJointCount; ++i) out += "," + num(rt.theta[i]);
      for (int i = 0; i < kJointCount; ++i) out += "," + num(rt.theta_dot[i]);
      for (int i = 0; i < 6; ++i) out += "," + num(rt.x_spatial[i]);
      for (int i = 0; i < 6; ++i) out += "," + num(rt.x_des[i]);
      const auto& s = rt.reading;
      for (double v : {s.fsx, s.fsy, s.norm, s.tip_force, s.insertion_depth}) out += "," + num(v);
      out += s.engaged ? ",1" : ",0";
      out += rt.delta_x ? ",1" : ",0";
      out += rt.delta_y ? ",1" : ",0";
      out += "," + num(rt.f_dx) + "," + num(rt.f_dy) + "," + num(rt.pedal);
      out += rt.clutch ? ",1" : ",0";
      for (int i = 0; i < 3; ++i) out += "," + num(rt.tip[i]);
      for (int i = 0; i < 6; ++i) out += "," + num(rt.input[i]);
    }
    std::string ev;
    for (const auto& e : r.events) ev += (ev.empty() ? "" : ";") + e;
    out += "," + ev + "\n";
  }
  return out;
}

inline void write_trial_csv(const TrialLog& log, const std::string& path) { write_file(path, format_trial_csv(log)); }

/// Reads a trial CSV back; numeric fields carry the printed precision.
inline TrialLog parse_trial_csv_text(const std::string& text) {
  TrialLog log;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  const auto cols = trial_columns();

  auto meta_value = [](const std::string& line, const std::string& key) -> std::optional<std::string> {
    const std::string prefix = "# " + key + "=";
    if (line.rfind(prefix, 0) != 0) return std::nullopt;
    return line.substr(prefix.size());
  };
  auto number = [&line_no](std::string_view s) {
    const auto v = parse_double(s);
    if (!v) throw ParseError(line_no, "malformed number '" + std::string(s) + "'");
    return *v;
  };

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip_cr(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (auto v = meta_value(line, "format"); v && *v != kTrialFormatTag)
        throw ParseError(line_no, "unsupported trial format '" + *v + "'");
      if (auto v = meta_value(line, "mode")) {
        if (*v == "BMAT") log.meta.mode = ControlMode::bmat;
        else if (*v == "BMAC") log.meta.mode = ControlMode::bmac;
        else throw ParseError(line_no, "unknown mode '" + *v + "'");
      }
      if (auto v = meta_value(line, "posture")) log.meta.posture = *v;
      if (auto v = meta_value(line, "scenario_hash")) log.meta.scenario_hash = *v;
      if (auto v = meta_value(line, "seed")) log.meta.seed = std::stoull(*v);
      if (auto v = meta_value(line, "dt")) log.meta.dt = number(*v);
      if (auto v = meta_value(line, "completion")) {
        if (*v == "completed") log.meta.completion = CompletionReason::completed;
        else if (*v == "timeout") log.meta.completion = CompletionReason::timeout;
        else log.meta.completion = CompletionReason::trace_end;
      }
      if (auto v = meta_value(line, "completion_time"); v && !v->empty()) log.meta.completion_time = number(*v);
      if (auto v = meta_value(line, "pin_order"); v && !v->empty()) {
        for (auto p : split(*v, ';')) log.meta.pin_order.emplace_back(p);
      }
      continue;
    }
    if (!header_seen) {
      std::string expected;
      for (std::size_t i = 0; i < cols.size(); ++i) expected += (i ? "," : "") + cols[i];
      if (line != expected) throw ParseError(line_no, "unexpected trial CSV header");
      header_seen = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != cols.size()) throw ParseError(line_no, "wrong field count");
    TickRecord r;
    std::size_t k = 0;
    r.tick = static_cast<std::int64_t>(number(f[k++]));
    r.t = number(f[k++]);
    for (auto& rt : r.robots) {
      for (int i = 0; i < kJointCount; ++i) rt.theta[i] = number(f[k++]);
      for (int i = 0; i < kJointCount; ++i) rt.theta_dot[i] = number(f[k++]);
      for (int i = 0; i < 6; ++i) rt.x_spatial[i] = number(f[k++]);
      for (int i = 0; i < 6; ++i) rt.x_des[i] = number(f[k++]);
      rt.reading.fsx = number(f[k++]);
      rt.reading.fsy = number(f[k++]);
      rt.reading.norm = number(f[k++]);
      rt.reading.tip_force = number(f[k++]);
      rt.reading.insertion_depth = number(f[k++]);
      rt.reading.engaged = number(f[k++]) != 0.0;
      rt.reading.timestamp = r.t;
      rt.delta_x = number(f[k++]) != 0.0;
      rt.delta_y = number(f[k++]) != 0.0;
      rt.f_dx = number(f[k++]);
      rt.f_dy = number(f[k++]);
      rt.pedal = number(f[k++]);
      rt.clutch = number(f[k++]) != 0.0;
      for (int i = 0; i < 3; ++i) rt.tip[i] = number(f[k++]);
      for (int i = 0; i < 6; ++i) rt.input[i] = number(f[k++]);
    }
    if (!f[k].empty())
      for (auto e : split(f[k], ';')) r.events.emplace_back(e);
    log.ticks.push_back(std::move(r));
  }
  if (!header_seen) throw ParseError(line_no, "missing trial CSV header");
  return log;
}

inline TrialLog read_trial_csv(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return parse_trial_csv_text(text);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.message(), path);
  }
}

// ---------------------------------------------------------------------------

inline nlohmann::ordered_json metrics_to_json(const TrialMetrics& m) {
  nlohmann::ordered_json j;
  j["mode"] = std::string(to_string(m.mode));
  j["ticks"] = m.ticks;
  j["completed"] = m.completed;
  j["completion_time_s"] = m.completion_time;
  const char* labels[kRobotCount] = {"dominant_right", "non_dominant_left"};
  for (int h = 0; h < kRobotCount; ++h) {
    const HandMetrics& hm = m.hands[h];
    nlohmann::ordered_json hj = {{"mean_sclera_mN", hm.mean_sclera},
                                 {"max_sclera_mN", hm.max_sclera},
                                 {"pct_time_over_limit", hm.pct_time_over_limit}};
    if (m.mode == ControlMode::bmac) {
      hj["mean_handle_force_N"] = hm.mean_handle_force;
      hj["max_handle_force_N"] = hm.max_handle_force;
      hj["mean_handle_torque_Nm"] = hm.mean_handle_torque;
      hj["max_handle_torque_Nm"] = hm.max_handle_torque;
    }
    j[labels[h]] = hj;
  }
  return j;
}

/// Per-condition summary CSV: condition,trials,warning,metric,mean,std.
inline std::string format_summary_csv(const ConditionReport& report) {
  std::string out = "condition,trials,warning,metric,mean,std\n";
  for (const auto& c : report.conditions) {
    for (const auto& m : c.metrics) {
      out += c.condition + "," + std::to_string(c.trials) + "," + (c.single_trial_warning ? "single-trial" : "") +
             "," + m.metric + "," + format_double(m.mean, kTrialPrecision) + "," +
             format_double(m.std, kTrialPrecision) + "\n";
    }
  }
  return out;
}

/// Pairwise Welch tests: condition_a,condition_b,metric,t,dof,p,significant.
inline std::string format_pvalues_csv(const ConditionReport& report) {
  std::string out = "condition_a,condition_b,metric,t,dof,p,significant\n";
  for (const auto& t : report.tests) {
    out += t.condition_a + "," + t.condition_b + "," + t.metric + ",";
    if (!t.valid) {
      out += "na,na,na,na\n";
      continue;
    }
    out += format_double(t.result.t, kTrialPrecision) + "," + format_double(t.result.dof, kTrialPrecision) + "," +
           format_p(t.result.p) + "," + (t.result.significant() ? "1" : "0") + "\n";
  }
  return out;
}

/// Aligned plain-text table: one row per metric, one `mean +- std` column per
/// condition, followed by the pairwise p-values.
inline std::string format_report_table(const ConditionReport& report) {
  std::ostringstream os;
  std::vector<std::string> header = {"metric"};
  for (const auto& c : report.conditions) header.push_back(c.condition + " (n=" + std::to_string(c.trials) + ")");
  std::vector<std::vector<std::string>> rows;
  const auto& defs = summary_metrics();
  for (std::size_t m = 0; m < defs.size(); ++m) {
    std::vector<std::string> row = {defs[m].name};
    for (const auto& c : report.conditions) {
      row.push_back(format_double(c.metrics[m].mean, 5) + " +- " + format_double(c.metrics[m].std, 4));
    }
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  auto emit = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      os << r[i] << std::string(width[i] - r[i].size(), ' ') << (i + 1 < r.size() ? "  " : "");
    }
    os << "\n";
  };
  emit(header);
  for (const auto& r : rows) emit(r);
  for (const auto& c : report.conditions)
    if (c.single_trial_warning) os << "warning: condition '" << c.condition << "' has a single trial; std is 0\n";
  if (!report.tests.empty()) {
    os << "\nWelch t-tests (p < 0.05 marked *)\n";
    for (const auto& t : report.tests) {
      os << t.condition_a << " vs " << t.condition_b << "  " << t.metric << "  p=";
      os << (t.valid ? format_p(t.result.p) : std::string("na"));
      if (t.valid && t.result.significant()) os << " *";
      os << "\n";
    }
  }
  return os.str();
}

}  // namespace shersim::io
