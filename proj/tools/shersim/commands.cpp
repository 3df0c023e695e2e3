#include "commands.hpp"

#include <glob.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <iomanip>
#include <map>
#include <ostream>
#include <thread>

#include <openssl/evp.h>

#include <CLI11.hpp>

#include "shersim/teleop/server.hpp"

namespace shersim::cli {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::string scenario_hash(const Scenario& s) { return sha256_hex(io::scenario_to_json(s).dump()); }

Scenario load_with_overrides(const std::string& path, const Overrides& o) {
  Scenario s = io::load_scenario(path);
  if (o.seed) s.seed = *o.seed;
  if (o.dt) {
    if (!(*o.dt > 0.0) || !std::isfinite(*o.dt)) throw ScenarioError("$.dt", "--dt must be > 0");
    s.dt = *o.dt;
  }
  s.validate();
  return s;
}

namespace {

nlohmann::ordered_json trial_json(const std::string& id, const TrialLog& log, const TrialMetrics& m) {
  nlohmann::ordered_json j;
  j["trial"] = id;
  j["scenario_hash"] = log.meta.scenario_hash;
  j["posture"] = log.meta.posture;
  j["seed"] = log.meta.seed;
  j["dt"] = log.meta.dt;
  j["completion"] = std::string(to_string(log.meta.completion));
  j["pin_order"] = log.meta.pin_order;
  const nlohmann::ordered_json metrics = io::metrics_to_json(m);
  for (const auto& [k, v] : metrics.items()) j[k] = v;
  return j;
}

void print_headline(std::ostream& out, const TrialOutput& t) {
  const auto& m = t.metrics;
  out << "trial " << t.trial_id << ": " << to_string(t.log.meta.completion) << " at t=" << std::fixed
      << std::setprecision(3) << m.completion_time << " s (" << m.ticks << " ticks)\n";
  const char* labels[kRobotCount] = {"dominant (right)   ", "non-dominant (left)"};
  for (int h = 0; h < kRobotCount; ++h) {
    const HandMetrics& hm = m.hands[h];
    out << "  " << labels[h] << "  mean " << std::setprecision(2) << hm.mean_sclera << " mN  max " << hm.max_sclera
        << " mN  over " << kSafeScleraLimit << " mN " << hm.pct_time_over_limit << " %\n";
  }
  out.unsetf(std::ios::floatfield);
  out << std::setprecision(6);
  if (!t.log.meta.pin_order.empty()) {
    out << "  pins:";
    for (const auto& p : t.log.meta.pin_order) out << " " << p;
    out << "\n";
  }
}

/// Maps library exceptions to exit codes; everything user-fixable is 2.
template <class F>
int guarded(std::ostream& err, F&& f) {
  try {
    return f();
  } catch (const NumericalFault& e) {
    err << "error: numerical fault: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ScenarioError& e) {
    err << "error: invalid scenario: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const teleop::PortBusyError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

std::pair<std::string, std::string> split_label(const std::string& arg, const char* what) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size())
    throw Error(std::string(what) + " must look like label=value, got '" + arg + "'");
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError(dir, "cannot create output directory");
}

void write_report(const ConditionReport& report, const std::string& out_dir, std::ostream& out) {
  const std::string table = io::format_report_table(report);
  io::write_file((fs::path(out_dir) / "summary.csv").string(), io::format_summary_csv(report));
  io::write_file((fs::path(out_dir) / "pvalues.csv").string(), io::format_pvalues_csv(report));
  io::write_file((fs::path(out_dir) / "report.txt").string(), table);
  out << table;
}

}  // namespace

TrialOutput run_and_write(const Scenario& s, const std::vector<InputSample>& trace, const std::string& out_dir) {
  ensure_dir(out_dir);
  TrialOutput t;
  const std::string s_hash = scenario_hash(s);
  t.trial_id = sha256_hex(s_hash + "\n" + io::format_trace(trace, s.mode)).substr(0, 16);

  World world = World::from_scenario(s);
  TraceSource source(trace);
  t.log = run_trial(world, source, s.max_duration);
  t.log.meta.scenario_hash = s_hash;

  t.csv_path = (fs::path(out_dir) / ("trial_" + t.trial_id + ".csv")).string();
  t.metrics_path = (fs::path(out_dir) / ("metrics_" + t.trial_id + ".json")).string();
  io::write_trial_csv(t.log, t.csv_path);
  if (t.log.ticks.empty()) {
    // Nothing was simulated: there is no metrics window.
    nlohmann::ordered_json j = {{"trial", t.trial_id},
                                {"scenario_hash", s_hash},
                                {"completion", std::string(to_string(t.log.meta.completion))},
                                {"ticks", 0},
                                {"empty_window", true}};
    io::write_file(t.metrics_path, j.dump(2) + "\n");
    return t;
  }
  t.metrics = trial_metrics(t.log);
  io::write_file(t.metrics_path, trial_json(t.trial_id, t.log, t.metrics).dump(2) + "\n");
  return t;
}

std::vector<std::string> glob_paths(const std::string& pattern) {
  glob_t g{};
  std::vector<std::string> out;
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  if (rc == 0)
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  globfree(&g);
  std::sort(out.begin(), out.end());
  return out;
}

int cmd_run(const RunOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Scenario s = load_with_overrides(o.scenario, o.overrides);
    const auto trace = io::parse_trace(o.trace, s.mode);
    const TrialOutput t = run_and_write(s, trace, o.out_dir);
    if (t.log.ticks.empty()) {
      out << "trial " << t.trial_id << ": empty trace, no ticks simulated (metrics window empty)\n";
    } else {
      print_headline(out, t);
    }
    out << "wrote " << t.csv_path << "\nwrote " << t.metrics_path << "\n";
    return static_cast<int>(kExitOk);
  });
}

int cmd_batch(const BatchOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::vector<std::pair<std::string, std::string>> conditions;
    if (o.traces) conditions.emplace_back("all", *o.traces);
    for (const auto& c : o.conditions) conditions.push_back(split_label(c, "--conditions"));
    if (conditions.empty()) throw Error("give --traces or at least one --conditions label=glob");

    std::map<std::string, std::string> scenario_for;
    for (const auto& c : o.condition_scenarios) {
      auto [label, path] = split_label(c, "--condition-scenario");
      scenario_for[label] = path;
    }
    for (const auto& [label, _] : scenario_for) {
      const bool known = std::any_of(conditions.begin(), conditions.end(), [&](const auto& c) { return c.first == label; });
      if (!known) throw Error("--condition-scenario names unknown condition '" + label + "'");
    }

    // Resolve everything before running anything, so bad input fails fast.
    std::map<std::string, std::vector<std::string>> files;
    for (const auto& [label, pattern] : conditions) {
      if (files.contains(label)) throw Error("condition '" + label + "' given twice");
      files[label] = glob_paths(pattern);
      if (files[label].empty()) throw IoError(pattern, "glob for condition '" + label + "' matched no trace files");
    }

    std::map<std::string, std::vector<TrialMetrics>> groups;
    for (const auto& [label, paths] : files) {
      const std::string scenario_path = scenario_for.contains(label) ? scenario_for[label] : o.scenario;
      const Scenario s = load_with_overrides(scenario_path, o.overrides);
      const std::string dir = (fs::path(o.out_dir) / label).string();
      for (const auto& p : paths) {
        const TrialOutput t = run_and_write(s, io::parse_trace(p, s.mode), dir);
        if (t.log.ticks.empty()) throw Error(p + ": trace produced no ticks");
        out << label << ": " << p << " -> " << t.csv_path << " (" << to_string(t.log.meta.completion) << ")\n";
        groups[label].push_back(t.metrics);
      }
    }
    out << "\n";
    write_report(summarize_conditions(groups), o.out_dir, out);
    return static_cast<int>(kExitOk);
  });
}

int cmd_metrics(const MetricsOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (o.trials.empty() && o.conditions.empty()) throw Error("give trial CSV files or --conditions label=glob");
    if (!o.trials.empty()) {
      nlohmann::ordered_json all = nlohmann::ordered_json::array();
      for (const auto& p : o.trials) {
        const TrialLog log = io::read_trial_csv(p);
        if (log.ticks.empty()) throw Error(p + ": trial has no ticks");
        std::string id = fs::path(p).stem().string();
        if (id.rfind("trial_", 0) == 0) id.erase(0, 6);
        nlohmann::ordered_json j = trial_json(id, log, trial_metrics(log));
        j["file"] = p;
        all.push_back(j);
      }
      out << all.dump(2) << "\n";
    }
    if (!o.conditions.empty()) {
      std::map<std::string, std::vector<TrialMetrics>> groups;
      for (const auto& c : o.conditions) {
        const auto [label, pattern] = split_label(c, "--conditions");
        const auto paths = glob_paths(pattern);
        if (paths.empty()) throw IoError(pattern, "glob for condition '" + label + "' matched no trial files");
        for (const auto& p : paths) {
          const TrialLog log = io::read_trial_csv(p);
          if (log.ticks.empty()) throw Error(p + ": trial has no ticks");
          groups[label].push_back(trial_metrics(log));
        }
      }
      const ConditionReport report = summarize_conditions(groups);
      if (o.out_dir) {
        ensure_dir(*o.out_dir);
        write_report(report, *o.out_dir, out);
      } else {
        out << io::format_report_table(report);
      }
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_validate(const ValidateOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Scenario s = io::load_scenario(o.scenario);
    out << "scenario ok: " << o.scenario << " (" << to_string(s.mode) << ", sha256 " << scenario_hash(s) << ")\n";
    if (o.trace) {
      const auto trace = io::parse_trace(*o.trace, s.mode);
      out << "trace ok: " << *o.trace << " (" << trace.size() << " samples";
      if (!trace.empty()) out << ", t = " << trace.front().t << " .. " << trace.back().t << " s";
      out << ")\n";
    }
    if (o.print) out << io::scenario_to_json(s).dump(2) << "\n";
    return static_cast<int>(kExitOk);
  });
}

namespace {
std::atomic<bool> g_interrupted{false};
extern "C" void on_signal(int) { g_interrupted = true; }
}  // namespace

int cmd_serve(const ServeOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Scenario s = load_with_overrides(o.scenario, o.overrides);
    ensure_dir(o.out_dir);
    teleop::ServerOptions so;
    so.address = o.address;
    so.port = o.port;
    so.tick_hz = o.tick_hz;
    so.duration = o.duration;
    teleop::SessionOptions sess;
    sess.decimation = o.decimation;
    teleop::TeleopServer server(s, so, sess);

    g_interrupted = false;
    auto old_int = std::signal(SIGINT, on_signal);
    auto old_term = std::signal(SIGTERM, on_signal);
    server.start();
    out << "serving ws://" << o.address << ":" << server.port() << "/ (" << to_string(s.mode)
        << ", decimation " << o.decimation << ")" << std::endl;
    while (server.running() && !g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(20));
    server.stop();
    std::signal(SIGINT, old_int);
    std::signal(SIGTERM, old_term);

    TrialLog log = server.take_log();
    log.meta.scenario_hash = scenario_hash(s);
    const std::string id = log.meta.scenario_hash.substr(0, 8) + "-live-" +
                           std::to_string(std::chrono::duration_cast<std::chrono::seconds>(
                                              std::chrono::system_clock::now().time_since_epoch())
                                              .count());
    const std::string path = (fs::path(o.out_dir) / ("trial_" + id + ".csv")).string();
    io::write_trial_csv(log, path);
    out << "session ended after " << log.ticks.size() << " ticks; wrote " << path << "\n";
    return static_cast<int>(kExitOk);
  });
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"shersim: bimanual eye-surgery robot simulator with adaptive sclera-force control"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "shersim 1.0.0");

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run one trial from an input trace");
  run_cmd->add_option("--scenario", run.scenario, "Scenario JSON")->required();
  run_cmd->add_option("--trace", run.trace, "Input trace CSV")->required();
  run_cmd->add_option("--out", run.out_dir, "Output directory")->required();

  BatchOptions batch;
  auto* batch_cmd = app.add_subcommand("batch", "Run many trials grouped by condition and write a report");
  batch_cmd->add_option("--scenario", batch.scenario, "Scenario JSON (default for every condition)")->required();
  batch_cmd->add_option("--traces", batch.traces, "Trace glob forming a single condition named 'all'");
  batch_cmd->add_option("--conditions", batch.conditions, "label=glob, repeatable");
  batch_cmd->add_option("--condition-scenario", batch.condition_scenarios, "label=scenario.json, repeatable");
  batch_cmd->add_option("--out", batch.out_dir, "Output directory")->required();

  MetricsOptions metrics;
  auto* metrics_cmd = app.add_subcommand("metrics", "Recompute metrics and statistics from trial CSV files");
  metrics_cmd->add_option("trials", metrics.trials, "Trial CSV files");
  metrics_cmd->add_option("--conditions", metrics.conditions, "label=glob over trial CSVs, repeatable");
  metrics_cmd->add_option("--out", metrics.out_dir, "Write summary.csv, pvalues.csv and report.txt here");

  ValidateOptions validate;
  auto* validate_cmd = app.add_subcommand("validate", "Check a scenario (and optionally a trace)");
  validate_cmd->add_option("--scenario", validate.scenario, "Scenario JSON")->required();
  validate_cmd->add_option("--trace", validate.trace, "Input trace CSV");
  validate_cmd->add_flag("--print", validate.print, "Print the scenario with all defaults filled in");

  ServeOptions serve;
  auto* serve_cmd = app.add_subcommand("serve", "Serve a live teleoperation session over WebSocket");
  serve_cmd->add_option("--scenario", serve.scenario, "Scenario JSON")->required();
  serve_cmd->add_option("--port", serve.port, "TCP port (0 picks a free one)")->capture_default_str();
  serve_cmd->add_option("--address", serve.address, "Listen address")->capture_default_str();
  serve_cmd->add_option("--tick-hz", serve.tick_hz, "Tick rate in Hz (default 1/dt)");
  serve_cmd->add_option("--decimation", serve.decimation, "Publish every n-th tick")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  serve_cmd->add_option("--duration", serve.duration, "Stop after this much sim time in s (0: until Ctrl-C)")
      ->check(CLI::NonNegativeNumber);
  serve_cmd->add_option("--out", serve.out_dir, "Directory for the session trial CSV")->capture_default_str();

  for (auto* cmd : {run_cmd, batch_cmd, serve_cmd}) {
    Overrides* ov = cmd == run_cmd ? &run.overrides : cmd == batch_cmd ? &batch.overrides : &serve.overrides;
    cmd->add_option("--seed", ov->seed, "Override the scenario seed");
    cmd->add_option("--dt", ov->dt, "Override the tick length in s");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  if (*run_cmd) return cmd_run(run, out, err);
  if (*batch_cmd) return cmd_batch(batch, out, err);
  if (*metrics_cmd) return cmd_metrics(metrics, out, err);
  if (*validate_cmd) return cmd_validate(validate, out, err);
  if (*serve_cmd) return cmd_serve(serve, out, err);
  return kExitInvalid;
}

}  // namespace shersim::cli
