#pragma once

// JSON wire protocol between the live session and a teleoperation console.
// Layout is published as schema/teleop.schema.json; docs/formats.md has
// worked examples.

#include <cmath>
#include <optional>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "shersim/sim_engine.hpp"

namespace shersim::teleop {

inline constexpr int kProtocolVersion = 1;

struct InputMessage {
  int robot = kRight;
  double t_client = 0.0;  // logged only; the server stamps inputs with its tick clock
  HandInput hand;
};

struct HelloMessage {
  int version = kProtocolVersion;
  std::string client;
};

struct ByeMessage {};

using ClientMessage = std::variant<InputMessage, HelloMessage, ByeMessage>;

/// Rejection sent back as {"type":"error","error":code,"detail":...}.
struct ProtocolError {
  std::string code;
  std::string detail;
};

using ParseResult = std::variant<ClientMessage, ProtocolError>;

namespace detail {

inline std::optional<ProtocolError> unknown_fields(const nlohmann::json& j, std::initializer_list<const char*> keys) {
  for (const auto& [k, _] : j.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) return ProtocolError{"unknown-field", "unexpected field '" + k + "'"};
  }
  return std::nullopt;
}

/// Numbers arrive as JSON numbers; null is what JSON.stringify produces for
/// NaN and Infinity, so it is reported as a NaN field.
inline std::variant<double, ProtocolError> finite(const nlohmann::json& j, const std::string& field) {
  if (j.is_null()) return ProtocolError{"nan-field", field + " is not a finite number"};
  if (!j.is_number()) return ProtocolError{"bad-field", field + " must be a number"};
  const double v = j.get<double>();
  if (!std::isfinite(v)) return ProtocolError{"nan-field", field + " is not a finite number"};
  return v;
}

inline ParseResult parse_input(const nlohmann::json& j) {
  if (auto e = unknown_fields(j, {"type", "robot", "t_client", "v", "pedal", "clutch"})) return *e;
  for (const char* k : {"robot", "t_client", "v", "pedal", "clutch"})
    if (!j.contains(k)) return ProtocolError{"missing-field", std::string("input requires '") + k + "'"};

  InputMessage m;
  const auto& robot = j["robot"];
  if (!robot.is_string()) return ProtocolError{"bad-field", "robot must be \"right\" or \"left\""};
  if (robot == "right") m.robot = kRight;
  else if (robot == "left") m.robot = kLeft;
  else return ProtocolError{"unknown-robot", "robot must be \"right\" or \"left\""};

  auto t = finite(j["t_client"], "t_client");
  if (auto* e = std::get_if<ProtocolError>(&t)) return *e;
  m.t_client = std::get<double>(t);

  const auto& v = j["v"];
  if (!v.is_array() || v.size() != 6) return ProtocolError{"bad-field", "v must be an array of 6 numbers"};
  for (int i = 0; i < 6; ++i) {
    auto x = finite(v[i], "v[" + std::to_string(i) + "]");
    if (auto* e = std::get_if<ProtocolError>(&x)) return *e;
    m.hand.command[i] = std::get<double>(x);
  }

  auto pedal = finite(j["pedal"], "pedal");
  if (auto* e = std::get_if<ProtocolError>(&pedal)) return *e;
  m.hand.pedal = std::get<double>(pedal);
  if (m.hand.pedal < 0.0 || m.hand.pedal > 1.0) return ProtocolError{"bad-field", "pedal must be within [0, 1]"};

  const auto& clutch = j["clutch"];
  if (clutch.is_boolean()) {
    m.hand.clutch = clutch.get<bool>();
  } else if (clutch.is_number_integer() && (clutch.get<int>() == 0 || clutch.get<int>() == 1)) {
    m.hand.clutch = clutch.get<int>() == 1;
  } else {
    return ProtocolError{"bad-field", "clutch must be 0, 1, true or false"};
  }
  return ClientMessage{m};
}

}  // namespace detail

inline ParseResult parse_client_message(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    // Bare NaN / Infinity tokens are not JSON but are a common client bug.
    for (const char* token : {"NaN", "Infinity"})
      if (text.find(token) != std::string::npos) return ProtocolError{"nan-field", "non-finite number literal"};
    return ProtocolError{"bad-json", "message is not valid JSON"};
  }
  if (!j.is_object()) return ProtocolError{"bad-json", "message must be a JSON object"};
  if (!j.contains("type") || !j["type"].is_string()) return ProtocolError{"missing-field", "message requires 'type'"};
  const std::string type = j["type"];
  if (type == "input") return detail::parse_input(j);
  if (type == "hello") {
    if (auto e = detail::unknown_fields(j, {"type", "version", "client"})) return *e;
    HelloMessage h;
    if (j.contains("version")) {
      if (!j["version"].is_number_integer()) return ProtocolError{"bad-field", "version must be an integer"};
      h.version = j["version"].get<int>();
      if (h.version != kProtocolVersion)
        return ProtocolError{"unsupported-version", "server speaks version " + std::to_string(kProtocolVersion)};
    }
    if (j.contains("client")) {
      if (!j["client"].is_string()) return ProtocolError{"bad-field", "client must be a string"};
      h.client = j["client"].get<std::string>();
    }
    return ClientMessage{h};
  }
  if (type == "bye") {
    if (auto e = detail::unknown_fields(j, {"type", "reason"})) return *e;
    return ClientMessage{ByeMessage{}};
  }
  return ProtocolError{"unknown-type", "unknown message type '" + type + "'"};
}

// --- server -> client ------------------------------------------------------

inline nlohmann::ordered_json hello_message(const Scenario& s, int decimation) {
  return {{"type", "hello"},
          {"version", kProtocolVersion},
          {"server", "shersim"},
          {"mode", std::string(to_string(s.mode))},
          {"dt", s.dt},
          {"decimation", decimation},
          {"robots", {"right", "left"}},
          {"pins", s.task.names}};
}

inline nlohmann::ordered_json error_message(const ProtocolError& e) {
  return {{"type", "error"}, {"error", e.code}, {"detail", e.detail}};
}

inline nlohmann::ordered_json bye_message(const std::string& reason) { return {{"type", "bye"}, {"reason", reason}}; }

inline nlohmann::ordered_json state_message(const TickRecord& r) {
  nlohmann::ordered_json robots = nlohmann::ordered_json::array();
  for (int i = 0; i < kRobotCount; ++i) {
    const RobotTick& rt = r.robots[i];
    nlohmann::ordered_json theta = nlohmann::ordered_json::array();
    for (int k = 0; k < kJointCount; ++k) theta.push_back(rt.theta[k]);
    robots.push_back({{"name", std::string(kRobotNames[i])},
                      {"theta", theta},
                      {"tip", {rt.tip.x(), rt.tip.y(), rt.tip.z()}},
                      {"fsx", rt.reading.fsx},
                      {"fsy", rt.reading.fsy},
                      {"fs", rt.reading.norm},
                      {"ft", rt.reading.tip_force},
                      {"depth", rt.reading.insertion_depth},
                      {"delta", {rt.delta_x ? 1 : 0, rt.delta_y ? 1 : 0}},
                      {"pedal", rt.pedal}});
  }
  return {{"type", "state"}, {"tick", r.tick}, {"t", r.t}, {"robots", robots}, {"events", r.events}};
}

}  // namespace shersim::teleop
