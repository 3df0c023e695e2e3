#pragma once

// Scenario JSON. Every key is optional; missing keys take the documented
// defaults and the loaded Scenario is fully materialised. Unknown keys and
// out-of-range values are rejected with the JSON path of the offending key.
// The same layout is published as schema/scenario.schema.json.

#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "shersim/io/text.hpp"
#include "shersim/scenario.hpp"

namespace shersim::io {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace detail {

inline std::string join_path(const std::string& base, const std::string& key) { return base + "." + key; }
inline std::string index_path(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ScenarioError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ScenarioError(path, "expected a finite number");
  return v;
}

template <int N>
Eigen::Matrix<double, N, 1> vector(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(N))
    throw ScenarioError(path, "expected an array of " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v[i] = number(j[i], index_path(path, i));
  return v;
}

/// Either a 3x3 row-major nested array or {"axis": [3], "angle_deg": x}.
inline Mat3 rotation(const json& j, const std::string& path) {
  Mat3 r;
  if (j.is_object()) {
    std::set<std::string> allowed = {"axis", "angle_deg"};
    for (const auto& [k, _] : j.items())
      if (!allowed.contains(k)) throw ScenarioError(join_path(path, k), "unknown key");
    if (!j.contains("axis") || !j.contains("angle_deg"))
      throw ScenarioError(path, "axis-angle rotation needs 'axis' and 'angle_deg'");
    const Vec3 axis = vector<3>(j["axis"], join_path(path, "axis"));
    if (axis.norm() == 0.0) throw ScenarioError(join_path(path, "axis"), "axis must be non-zero");
    return axis_angle(axis, deg_to_rad(number(j["angle_deg"], join_path(path, "angle_deg"))));
  }
  if (!j.is_array() || j.size() != 3) throw ScenarioError(path, "expected a 3x3 array or an axis-angle object");
  for (int row = 0; row < 3; ++row) r.row(row) = vector<3>(j[row], index_path(path, row)).transpose();
  if (!is_rotation(r, 1e-9)) throw ScenarioError(path, "not a proper rotation matrix");
  return r;
}

/// Object reader that tracks consumed keys so leftovers can be rejected.
class Object {
 public:
  Object(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ScenarioError(path_, "expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& at(const std::string& key) const { return j_.at(key); }
  std::string path(const std::string& key) const { return join_path(path_, key); }

  void number(const std::string& key, double& out) {
    if (has(key)) out = detail::number(j_[key], path(key));
  }
  void positive(const std::string& key, double& out) {
    number(key, out);
    if (!(out > 0.0)) throw ScenarioError(path(key), "must be > 0");
  }
  void non_negative(const std::string& key, double& out) {
    number(key, out);
    if (!(out >= 0.0)) throw ScenarioError(path(key), "must be >= 0");
  }
  template <int N>
  void vec(const std::string& key, Eigen::Matrix<double, N, 1>& out) {
    if (has(key)) out = vector<N>(j_[key], path(key));
  }
  template <int N>
  void non_negative_vec(const std::string& key, Eigen::Matrix<double, N, 1>& out) {
    vec<N>(key, out);
    if ((out.array() < 0.0).any()) throw ScenarioError(path(key), "entries must be >= 0");
  }

  void finish() const {
    for (const auto& [k, _] : j_.items())
      if (!seen_.contains(k)) throw ScenarioError(path(k), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline RigidTransform transform(const json& j, const std::string& path) {
  Object o(j, path);
  RigidTransform g;
  if (o.has("rotation")) g.rotation = rotation(o.at("rotation"), o.path("rotation"));
  o.vec<3>("translation", g.translation);
  o.finish();
  return g;
}

inline JointAxis axis(const json& j, const std::string& path) {
  Object o(j, path);
  if (!o.has("type") || !o.at("type").is_string()) throw ScenarioError(o.path("type"), "expected 'prismatic' or 'revolute'");
  const auto type = o.at("type").get<std::string>();
  JointAxis out;
  auto unit = [&](const std::string& key) {
    if (!o.has(key)) throw ScenarioError(o.path(key), "required");
    Vec3 v = vector<3>(o.at(key), o.path(key));
    if (std::abs(v.norm() - 1.0) > 1e-9) throw ScenarioError(o.path(key), "must be a unit vector");
    return Vec3(v.normalized());
  };
  if (type == "prismatic") {
    out = PrismaticAxis{unit("v")};
  } else if (type == "revolute") {
    const Vec3 w = unit("omega");
    if (!o.has("q")) throw ScenarioError(o.path("q"), "required");
    out = RevoluteAxis{w, vector<3>(o.at("q"), o.path("q"))};
  } else {
    throw ScenarioError(o.path("type"), "expected 'prismatic' or 'revolute'");
  }
  o.finish();
  return out;
}

inline void robot(const json& j, const std::string& path, RobotConfig& r, const EyePhantom& scene, int default_port) {
  Object o(j, path);
  r.port = default_port;
  if (o.has("geometry")) {
    Object g(o.at("geometry"), o.path("geometry"));
    if (g.has("axes")) {
      const json& axes = g.at("axes");
      if (!axes.is_array() || axes.size() != kJointCount)
        throw ScenarioError(g.path("axes"), "expected 5 joint axes (3 prismatic, then 2 revolute)");
      for (int i = 0; i < kJointCount; ++i) {
        r.model.axes[i] = axis(axes[i], index_path(g.path("axes"), i));
        if (is_prismatic(r.model.axes[i]) != (i < 3))
          throw ScenarioError(index_path(g.path("axes"), i), i < 3 ? "must be prismatic" : "must be revolute");
      }
    }
    if (g.has("home")) r.model.home = transform(g.at("home"), g.path("home"));
    g.finish();
  }
  if (o.has("limits")) {
    Object l(o.at("limits"), o.path("limits"));
    l.vec<5>("pos_min", r.model.limits.pos_min);
    l.vec<5>("pos_max", r.model.limits.pos_max);
    l.vec<5>("vel_max", r.model.limits.vel_max);
    if (!(r.model.limits.vel_max.array() > 0.0).all()) throw ScenarioError(l.path("vel_max"), "entries must be > 0");
    if (!(r.model.limits.pos_min.array() < r.model.limits.pos_max.array()).all())
      throw ScenarioError(l.path("pos_max"), "must exceed pos_min");
    l.finish();
  }
  if (o.has("tool")) {
    Object t(o.at("tool"), o.path("tool"));
    t.positive("shaft_length", r.shaft_length);
    t.finish();
  }
  if (o.has("port")) {
    const json& p = o.at("port");
    if (!p.is_number_integer() || p.get<int>() < 0 || p.get<int>() >= kPortCount)
      throw ScenarioError(o.path("port"), "expected port index 0 or 1");
    r.port = p.get<int>();
  }
  o.vec<5>("initial_theta", r.initial_theta);
  if (!r.model.limits.contains(r.initial_theta)) throw ScenarioError(o.path("initial_theta"), "outside joint limits");

  if (o.has("afc")) {
    Object a(o.at("afc"), o.path("afc"));
    double threshold = r.afc[0].threshold, safe = r.afc[0].safe_limit;
    a.positive("threshold", threshold);
    a.positive("safe_limit", safe);
    if (!(threshold < safe)) throw ScenarioError(a.path("threshold"), "must be below safe_limit");
    Vec2 kf(r.afc[0].force_gain, r.afc[1].force_gain);
    Vec2 gamma(r.afc[0].adaptation_gain, r.afc[1].adaptation_gain);
    Vec2 alpha0(r.afc[0].alpha0, r.afc[1].alpha0);
    a.vec<2>("force_gain", kf);
    a.vec<2>("adaptation_gain", gamma);
    a.vec<2>("alpha0", alpha0);
    if (!(kf.array() > 0.0).all()) throw ScenarioError(a.path("force_gain"), "entries must be > 0");
    if (!(gamma.array() > 0.0).all()) throw ScenarioError(a.path("adaptation_gain"), "entries must be > 0");
    for (int i = 0; i < 2; ++i) r.afc[i] = AfcGains{threshold, safe, kf[i], gamma[i], alpha0[i]};
    a.finish();
  }
  o.non_negative_vec<6>("scaling", r.scaling.kappa);
  if (o.has("master_map")) r.master_map.rotation = rotation(o.at("master_map"), o.path("master_map"));
  o.non_negative_vec<6>("admittance", r.admittance);
  if (o.has("optimizer")) {
    Object op(o.at("optimizer"), o.path("optimizer"));
    op.non_negative("damping", r.optimizer.damping);
    op.non_negative_vec<6>("weights", r.optimizer.weights);
    if (op.has("max_iterations")) {
      const json& m = op.at("max_iterations");
      if (!m.is_number_integer() || m.get<int>() < 1)
        throw ScenarioError(op.path("max_iterations"), "expected a positive integer");
      r.optimizer.max_iterations = m.get<int>();
    }
    op.finish();
  }
  r.plant = VelocityPlant::for_limits(r.model.limits);
  if (o.has("plant")) {
    Object p(o.at("plant"), o.path("plant"));
    p.positive("time_constant", r.plant.time_constant);
    if (p.has("rate_limit")) {
      r.plant.rate_limit = vector<5>(p.at("rate_limit"), p.path("rate_limit"));
      if (!(r.plant.rate_limit.array() > 0.0).all()) throw ScenarioError(p.path("rate_limit"), "entries must be > 0");
    }
    p.finish();
  }

  const bool has_base = o.has("base");
  const bool has_mount = o.has("mount");
  if (has_base && has_mount) throw ScenarioError(o.path("mount"), "give either 'base' or 'mount', not both");
  if (has_base) {
    r.base = transform(o.at("base"), o.path("base"));
  } else {
    double depth = 0.006, roll_deg = 0.0;
    if (has_mount) {
      Object m(o.at("mount"), o.path("mount"));
      m.non_negative("insertion_depth", depth);
      m.number("roll_deg", roll_deg);
      m.finish();
    }
    r.base = mount_at_port(r.model, scene, r.port, r.shaft_length, depth, deg_to_rad(roll_deg));
  }
  o.finish();
}

}  // namespace detail

/// Parses and validates a scenario document.
inline Scenario parse_scenario(const json& root) {
  using detail::Object;
  Scenario s;
  Object o(root, "$");
  if (o.has("version")) {
    const json& v = o.at("version");
    if (!v.is_number_integer() || v.get<int>() != 1) throw ScenarioError(o.path("version"), "unsupported version");
  }
  if (o.has("mode")) {
    const json& m = o.at("mode");
    if (m == "BMAT") s.mode = ControlMode::bmat;
    else if (m == "BMAC") s.mode = ControlMode::bmac;
    else throw ScenarioError(o.path("mode"), "expected 'BMAT' or 'BMAC'");
  }
  if (o.has("posture")) {
    if (!o.at("posture").is_string()) throw ScenarioError(o.path("posture"), "expected a string");
    s.posture = o.at("posture").get<std::string>();
  }
  o.positive("dt", s.dt);
  if (o.has("seed")) {
    const json& seed = o.at("seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
      throw ScenarioError(o.path("seed"), "expected a non-negative integer");
    s.seed = seed.get<std::uint64_t>();
  }
  o.non_negative("max_duration", s.max_duration);

  if (o.has("scene")) {
    Object sc(o.at("scene"), o.path("scene"));
    sc.vec<3>("center", s.scene.center);
    sc.positive("radius", s.scene.radius);
    if (sc.has("orientation")) s.scene.orientation = detail::rotation(sc.at("orientation"), sc.path("orientation"));
    if (sc.has("ports")) {
      const json& ports = sc.at("ports");
      if (!ports.is_array() || ports.size() != kPortCount)
        throw ScenarioError(sc.path("ports"), "expected two port directions");
      for (int i = 0; i < kPortCount; ++i) {
        const auto p = detail::index_path(sc.path("ports"), i);
        const Vec3 d = detail::vector<3>(ports[i], p);
        if (std::abs(d.norm() - 1.0) > 1e-9) throw ScenarioError(p, "must be a unit vector");
        s.scene.ports[i] = d;  // kept as given so documents round-trip bit for bit
      }
    }
    sc.non_negative("rot_stiffness", s.scene.rot_stiffness);
    sc.positive("rot_damping", s.scene.rot_damping);
    sc.non_negative("sclera_stiffness", s.scene.sclera_stiffness);
    sc.non_negative("retina_stiffness", s.scene.retina_stiffness);
    sc.finish();
  }
  if (o.has("noise")) {
    Object n(o.at("noise"), o.path("noise"));
    n.non_negative("force_sigma", s.noise.force_sigma);
    n.non_negative("depth_sigma", s.noise.depth_sigma);
    n.finish();
  }
  s.task = VesselTask::standard(s.scene.radius);
  if (o.has("task")) {
    Object t(o.at("task"), o.path("task"));
    if (t.has("pins")) {
      const json& pins = t.at("pins");
      if (!pins.is_array() || pins.size() != kPinCount) throw ScenarioError(t.path("pins"), "expected four pins");
      for (int i = 0; i < kPinCount; ++i) s.task.pins[i] = detail::vector<3>(pins[i], detail::index_path(t.path("pins"), i));
    }
    if (t.has("names")) {
      const json& names = t.at("names");
      if (!names.is_array() || names.size() != kPinCount) throw ScenarioError(t.path("names"), "expected four names");
      for (int i = 0; i < kPinCount; ++i) {
        if (!names[i].is_string()) throw ScenarioError(detail::index_path(t.path("names"), i), "expected a string");
        s.task.names[i] = names[i].get<std::string>();
      }
    }
    t.vec<3>("start", s.task.start);
    t.positive("capture_radius", s.task.capture_radius);
    t.finish();
  }

  const json empty = json::object();
  const json* robots_json = &empty;
  std::string robots_path = o.path("robots");
  if (o.has("robots")) robots_json = &o.at("robots");
  detail::Object robots(*robots_json, robots_path);
  for (int i = 0; i < kRobotCount; ++i) {
    const std::string name(kRobotNames[i]);
    s.robots[i] = RobotConfig{};
    detail::robot(robots.has(name) ? robots.at(name) : empty, robots.path(name), s.robots[i], s.scene, i);
  }
  robots.finish();
  o.finish();

  try {
    s.validate();
  } catch (const ContractViolation& e) {
    throw ScenarioError("$", e.what());
  } catch (const InvalidAxisError& e) {
    throw ScenarioError("$", e.what());
  }
  return s;
}

inline Scenario parse_scenario_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError("$", std::string("invalid JSON: ") + e.what());
  }
  return parse_scenario(root);
}

inline Scenario load_scenario(const std::string& path) { return parse_scenario_text(read_file(path)); }

namespace detail {

template <class V>
ordered_json to_array(const V& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline ordered_json to_json(const Mat3& r) {
  ordered_json a = ordered_json::array();
  for (int row = 0; row < 3; ++row) a.push_back(to_array(Vec3(r.row(row).transpose())));
  return a;
}

inline ordered_json to_json(const RigidTransform& g) {
  return {{"rotation", to_json(g.rotation)}, {"translation", to_array(g.translation)}};
}

}  // namespace detail

/// Fully materialised scenario document; parse_scenario(scenario_to_json(s))
/// reproduces `s`.
inline ordered_json scenario_to_json(const Scenario& s) {
  using detail::to_array;
  using detail::to_json;
  ordered_json root;
  root["version"] = 1;
  root["mode"] = std::string(to_string(s.mode));
  root["posture"] = s.posture;
  root["dt"] = s.dt;
  root["seed"] = s.seed;
  root["max_duration"] = s.max_duration;
  ordered_json ports = ordered_json::array();
  for (const auto& p : s.scene.ports) ports.push_back(to_array(p));
  root["scene"] = {{"center", to_array(s.scene.center)},          {"radius", s.scene.radius},
                   {"orientation", to_json(s.scene.orientation)}, {"ports", ports},
                   {"rot_stiffness", s.scene.rot_stiffness},      {"rot_damping", s.scene.rot_damping},
                   {"sclera_stiffness", s.scene.sclera_stiffness}, {"retina_stiffness", s.scene.retina_stiffness}};
  root["noise"] = {{"force_sigma", s.noise.force_sigma}, {"depth_sigma", s.noise.depth_sigma}};
  ordered_json pins = ordered_json::array();
  for (const auto& p : s.task.pins) pins.push_back(to_array(p));
  root["task"] = {{"pins", pins},
                  {"names", s.task.names},
                  {"start", to_array(s.task.start)},
                  {"capture_radius", s.task.capture_radius}};
  ordered_json robots;
  for (int i = 0; i < kRobotCount; ++i) {
    const RobotConfig& r = s.robots[i];
    ordered_json axes = ordered_json::array();
    for (const auto& a : r.model.axes) {
      if (const auto* p = std::get_if<PrismaticAxis>(&a)) {
        axes.push_back({{"type", "prismatic"}, {"v", to_array(p->v)}});
      } else {
        const auto& rv = std::get<RevoluteAxis>(a);
        axes.push_back({{"type", "revolute"}, {"omega", to_array(rv.omega)}, {"q", to_array(rv.q)}});
      }
    }
    ordered_json rj;
    rj["geometry"] = {{"axes", axes}, {"home", to_json(r.model.home)}};
    rj["limits"] = {{"pos_min", to_array(r.model.limits.pos_min)},
                    {"pos_max", to_array(r.model.limits.pos_max)},
                    {"vel_max", to_array(r.model.limits.vel_max)}};
    rj["base"] = to_json(r.base);
    rj["tool"] = {{"shaft_length", r.shaft_length}};
    rj["port"] = r.port;
    rj["initial_theta"] = to_array(r.initial_theta);
    rj["afc"] = {{"threshold", r.afc[0].threshold},
                 {"safe_limit", r.afc[0].safe_limit},
                 {"force_gain", {r.afc[0].force_gain, r.afc[1].force_gain}},
                 {"adaptation_gain", {r.afc[0].adaptation_gain, r.afc[1].adaptation_gain}},
                 {"alpha0", {r.afc[0].alpha0, r.afc[1].alpha0}}};
    rj["scaling"] = to_array(r.scaling.kappa);
    rj["master_map"] = to_json(r.master_map.rotation);
    rj["admittance"] = to_array(r.admittance);
    rj["optimizer"] = {{"damping", r.optimizer.damping},
                       {"weights", to_array(r.optimizer.weights)},
                       {"max_iterations", r.optimizer.max_iterations}};
    rj["plant"] = {{"time_constant", r.plant.time_constant}, {"rate_limit", to_array(r.plant.rate_limit)}};
    robots[std::string(kRobotNames[i])] = rj;
  }
  root["robots"] = robots;
  return root;
}

}  // namespace shersim::io
