#pragma once

// Per-trial safety metrics and cross-condition statistics.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "shersim/sim_engine.hpp"

namespace shersim {

inline constexpr double kSafeScleraLimit = 120.0;  // mN

struct HandMetrics {
  double mean_sclera = 0.0;          // mN
  double max_sclera = 0.0;           // mN
  double pct_time_over_limit = 0.0;  // %
  // Cooperative mode only: handle force (N) and torque (N m) magnitudes.
  double mean_handle_force = 0.0;
  double max_handle_force = 0.0;
  double mean_handle_torque = 0.0;
  double max_handle_torque = 0.0;
};

struct TrialMetrics {
  ControlMode mode = ControlMode::bmat;
  std::array<HandMetrics, kRobotCount> hands{};  // dominant (right), non-dominant (left)
  double completion_time = 0.0;  // s; trial duration when not completed
  bool completed = false;
  std::size_t ticks = 0;
};

/// Time-weighted share (%) of a piecewise-constant series above `limit`.
/// Sample i holds from times[i] until times[i+1]; the last one for `last_hold`.
inline double pct_time_over(std::span<const double> times, std::span<const double> values, double limit,
                            double last_hold) {
  double over = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double hold = i + 1 < times.size() ? times[i + 1] - times[i] : last_hold;
    total += hold;
    if (values[i] > limit) over += hold;
  }
  return total > 0.0 ? 100.0 * over / total : 0.0;
}

inline TrialMetrics trial_metrics(const TrialLog& log, double limit = kSafeScleraLimit) {
  if (log.ticks.empty()) throw ContractViolation("trial_metrics requires a non-empty log");
  TrialMetrics m;
  m.mode = log.meta.mode;
  m.ticks = log.ticks.size();
  const double dt = log.meta.dt;
  std::vector<double> times;
  times.reserve(log.ticks.size());
  for (const auto& r : log.ticks) times.push_back(r.t);

  for (int h = 0; h < kRobotCount; ++h) {
    HandMetrics& hm = m.hands[h];
    std::vector<double> fs;
    fs.reserve(log.ticks.size());
    double sum = 0.0, force_sum = 0.0, torque_sum = 0.0;
    for (const auto& r : log.ticks) {
      const RobotTick& rt = r.robots[h];
      const double f = rt.reading.norm;
      fs.push_back(f);
      sum += f;
      hm.max_sclera = std::max(hm.max_sclera, f);
      if (m.mode == ControlMode::bmac) {
        const double force = rt.input.head<3>().norm();
        const double torque = rt.input.tail<3>().norm();
        force_sum += force;
        torque_sum += torque;
        hm.max_handle_force = std::max(hm.max_handle_force, force);
        hm.max_handle_torque = std::max(hm.max_handle_torque, torque);
      }
    }
    const auto n = static_cast<double>(fs.size());
    hm.mean_sclera = sum / n;
    hm.pct_time_over_limit = pct_time_over(times, fs, limit, dt);
    if (m.mode == ControlMode::bmac) {
      hm.mean_handle_force = force_sum / n;
      hm.mean_handle_torque = torque_sum / n;
    }
  }

  m.completed = log.meta.completion == CompletionReason::completed && log.meta.completion_time.has_value();
  m.completion_time = m.completed ? *log.meta.completion_time : log.ticks.back().t + dt;
  return m;
}

// ---------------------------------------------------------------------------
// Student t distribution via the regularised incomplete beta function.

namespace detail {

/// Continued fraction for I_x(a, b) (modified Lentz).
inline double incomplete_beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

/// Regularised incomplete beta I_x(a, b).
inline double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::incomplete_beta_cf(a, b, x) / a;
  return 1.0 - front * detail::incomplete_beta_cf(b, a, 1.0 - x) / b;
}

/// Two-sided tail probability P(|T| >= |t|) for Student t with `dof` degrees.
inline double student_t_two_sided_p(double t, double dof) {
  if (std::isinf(t)) return 0.0;
  const double x = dof / (dof + t * t);
  return std::clamp(regularized_incomplete_beta(0.5 * dof, 0.5, x), 0.0, 1.0);
}

struct WelchResult {
  double t = 0.0;
  double p = 1.0;
  double dof = std::numeric_limits<double>::quiet_NaN();

  bool significant(double alpha = 0.05) const { return p < alpha; }
};

inline double sample_mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Unbiased (n - 1) sample variance; 0 for fewer than two samples.
inline double sample_variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = sample_mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

/// Unequal-variance two-sample t-test with Welch-Satterthwaite degrees of
/// freedom. Zero variance in both groups: p = 1 for equal means, p = 0
/// (t = +-inf) otherwise.
inline WelchResult welch_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw ContractViolation("welch_ttest requires at least two samples per group");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = sample_mean(a), mb = sample_mean(b);
  const double va = sample_variance(a) / na, vb = sample_variance(b) / nb;
  const double se2 = va + vb;
  WelchResult r;
  if (se2 == 0.0) {
    if (ma == mb) return {0.0, 1.0, na + nb - 2.0};
    r.t = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.p = 0.0;
    r.dof = na + nb - 2.0;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(se2);
  r.dof = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  r.p = student_t_two_sided_p(r.t, r.dof);
  return r;
}

// ---------------------------------------------------------------------------
// Condition summaries.

struct MetricDef {
  const char* name;
  double (*get)(const TrialMetrics&);
};

inline const std::vector<MetricDef>& summary_metrics() {
  static const std::vector<MetricDef> defs = {
      {"dh_mean_sclera_mN", [](const TrialMetrics& m) { return m.hands[kRight].mean_sclera; }},
      {"dh_max_sclera_mN", [](const TrialMetrics& m) { return m.hands[kRight].max_sclera; }},
      {"dh_pct_over_limit", [](const TrialMetrics& m) { return m.hands[kRight].pct_time_over_limit; }},
      {"ndh_mean_sclera_mN", [](const TrialMetrics& m) { return m.hands[kLeft].mean_sclera; }},
      {"ndh_max_sclera_mN", [](const TrialMetrics& m) { return m.hands[kLeft].max_sclera; }},
      {"ndh_pct_over_limit", [](const TrialMetrics& m) { return m.hands[kLeft].pct_time_over_limit; }},
      {"dh_mean_handle_force_N", [](const TrialMetrics& m) { return m.hands[kRight].mean_handle_force; }},
      {"dh_max_handle_force_N", [](const TrialMetrics& m) { return m.hands[kRight].max_handle_force; }},
      {"ndh_mean_handle_force_N", [](const TrialMetrics& m) { return m.hands[kLeft].mean_handle_force; }},
      {"ndh_max_handle_force_N", [](const TrialMetrics& m) { return m.hands[kLeft].max_handle_force; }},
      {"completion_time_s", [](const TrialMetrics& m) { return m.completion_time; }},
  };
  return defs;
}

struct MetricSummary {
  std::string metric;
  double mean = 0.0;
  double std = 0.0;
};

struct ConditionSummary {
  std::string condition;
  std::size_t trials = 0;
  bool single_trial_warning = false;
  std::vector<MetricSummary> metrics;
};

struct PairwiseTest {
  std::string condition_a;
  std::string condition_b;
  std::string metric;
  WelchResult result;
  bool valid = true;  // false when a group has fewer than two trials
};

struct ConditionReport {
  std::vector<ConditionSummary> conditions;
  std::vector<PairwiseTest> tests;
};

inline ConditionReport summarize_conditions(const std::map<std::string, std::vector<TrialMetrics>>& groups) {
  ConditionReport report;
  const auto& defs = summary_metrics();
  auto column = [](const std::vector<TrialMetrics>& trials, const MetricDef& d) {
    std::vector<double> v;
    v.reserve(trials.size());
    for (const auto& t : trials) v.push_back(d.get(t));
    return v;
  };

  for (const auto& [label, trials] : groups) {
    if (trials.empty()) throw ContractViolation("condition '" + label + "' has no trials");
    ConditionSummary cs;
    cs.condition = label;
    cs.trials = trials.size();
    cs.single_trial_warning = trials.size() == 1;
    for (const auto& d : defs) {
      const auto v = column(trials, d);
      cs.metrics.push_back({d.name, sample_mean(v), std::sqrt(sample_variance(v))});
    }
    report.conditions.push_back(std::move(cs));
  }

  for (auto a = groups.begin(); a != groups.end(); ++a) {
    for (auto b = std::next(a); b != groups.end(); ++b) {
      for (const auto& d : defs) {
        PairwiseTest pt;
        pt.condition_a = a->first;
        pt.condition_b = b->first;
        pt.metric = d.name;
        if (a->second.size() < 2 || b->second.size() < 2) {
          constexpr double nan = std::numeric_limits<double>::quiet_NaN();
          pt.valid = false;
          pt.result = {nan, nan, nan};
        } else {
          pt.result = welch_ttest(column(a->second, d), column(b->second, d));
        }
        report.tests.push_back(std::move(pt));
      }
    }
  }
  return report;
}

/// p-values below 1e-15 print as "<1e-15" rather than 0.
inline std::string format_p(double p) {
  if (std::isnan(p)) return "na";
  if (p < 1e-15) return "<1e-15";
  std::ostringstream os;
  os.precision(6);
  os << p;
  return os.str();
}

}  // namespace shersim
