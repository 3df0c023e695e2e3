#pragma once

// Input trace CSV: one header line, then one row per sample. Rows hold the
// right hand's six command channels, pedal and clutch, then the left hand's.
// Command channels are master velocities (BMAT) or handle wrenches (BMAC).
// Lines starting with '#' and blank lines are ignored.

#include <array>
#include <sstream>
#include <string>
#include <vector>

#include "shersim/io/text.hpp"
#include "shersim/sim_engine.hpp"

namespace shersim::io {

inline std::vector<std::string> trace_columns(ControlMode mode) {
  static const std::array<const char*, 6> velocity = {"vx", "vy", "vz", "wx", "wy", "wz"};
  static const std::array<const char*, 6> wrench = {"fx", "fy", "fz", "tx", "ty", "tz"};
  const auto& names = mode == ControlMode::bmat ? velocity : wrench;
  std::vector<std::string> cols = {"t"};
  for (const char* prefix : {"r_", "l_"}) {
    for (const char* n : names) cols.push_back(std::string(prefix) + n);
    cols.push_back(std::string(prefix) + "pedal");
    cols.push_back(std::string(prefix) + "clutch");
  }
  return cols;
}

inline std::string trace_header(ControlMode mode) {
  std::string h;
  for (const auto& c : trace_columns(mode)) h += (h.empty() ? "" : ",") + c;
  return h;
}

/// Parses trace text. Timestamps must be strictly increasing; NaN fields,
/// pedals outside [0, 1] and clutch values other than 0/1 are rejected.
inline std::vector<InputSample> parse_trace_text(const std::string& text, ControlMode mode) {
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  bool have_header = false;
  const std::string header = trace_header(mode);
  const std::size_t n_cols = trace_columns(mode).size();
  std::vector<InputSample> out;

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip_cr(raw);
    if (line.empty() || line.front() == '#') continue;
    if (!have_header) {
      if (line != header) {
        throw ParseError(line_no, "expected header '" + header + "' for " + std::string(to_string(mode)) + " mode");
      }
      have_header = true;
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() != n_cols) {
      throw ParseError(line_no, "expected " + std::to_string(n_cols) + " fields, got " + std::to_string(fields.size()));
    }
    std::array<double, 17> v{};
    for (std::size_t i = 0; i < n_cols; ++i) {
      const auto d = parse_double(fields[i]);
      if (!d) throw ParseError(line_no, "field " + std::to_string(i + 1) + " is not a number");
      if (std::isnan(*d)) throw ParseError(line_no, "NaN in field " + std::to_string(i + 1));
      if (!std::isfinite(*d)) throw ParseError(line_no, "non-finite value in field " + std::to_string(i + 1));
      v[i] = *d;
    }
    InputSample s;
    s.t = v[0];
    for (int h = 0; h < kRobotCount; ++h) {
      const std::size_t base = 1 + 8 * static_cast<std::size_t>(h);
      for (int k = 0; k < 6; ++k) s.hands[h].command[k] = v[base + k];
      s.hands[h].pedal = v[base + 6];
      if (s.hands[h].pedal < 0.0 || s.hands[h].pedal > 1.0) throw ParseError(line_no, "pedal must be within [0, 1]");
      const double clutch = v[base + 7];
      if (clutch != 0.0 && clutch != 1.0) throw ParseError(line_no, "clutch must be 0 or 1");
      s.hands[h].clutch = clutch == 1.0;
    }
    if (!out.empty() && !(s.t > out.back().t)) throw ParseError(line_no, "timestamps must be strictly increasing");
    out.push_back(s);
  }
  if (!have_header) throw ParseError(line_no, "missing header");
  return out;
}

inline std::vector<InputSample> parse_trace(const std::string& path, ControlMode mode) {
  const std::string text = read_file(path);
  try {
    return parse_trace_text(text, mode);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.message(), path);
  }
}

/// Shortest round-trip formatting, so parse(format(x)) == x exactly.
inline std::string format_trace(const std::vector<InputSample>& samples, ControlMode mode) {
  std::string out = trace_header(mode) + "\n";
  for (const auto& s : samples) {
    out += format_double(s.t);
    for (const auto& h : s.hands) {
      for (int k = 0; k < 6; ++k) out += "," + format_double(h.command[k]);
      out += "," + format_double(h.pedal);
      out += h.clutch ? ",1" : ",0";
    }
    out += "\n";
  }
  return out;
}

inline void write_trace(const std::vector<InputSample>& samples, ControlMode mode, const std::string& path) {
  write_file(path, format_trace(samples, mode));
}

}  // namespace shersim::io
