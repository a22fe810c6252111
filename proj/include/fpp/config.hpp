#pragma once

// Experiment configuration: flat key = value text with [section] headers.
//
//   kind = XI_SCAN
//   seed = 42
//   [distribution]
//   kind = DURRETT_LIGGETT
//   p = 0.8
//   [grid]
//   n = 128,256,512
//   thetas = uniform(0, 1.5707963267948966, 8)
//
// Lists are comma separated; uniform(a, b, k) expands to k evenly spaced
// values in [a, b]. Angles may be written cone_minus / cone_plus, resolved at
// run time from an oriented-percolation estimate of the cone.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fpp/shape.hpp"
#include "fpp/weights.hpp"

namespace fpp {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { XiScan, ChiScan, Shape, Curvature, AlphaCurve, BreakPoints, FlatSegment };

inline std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::XiScan: return "XI_SCAN";
    case ExperimentKind::ChiScan: return "CHI_SCAN";
    case ExperimentKind::Shape: return "SHAPE";
    case ExperimentKind::Curvature: return "CURVATURE";
    case ExperimentKind::AlphaCurve: return "ALPHA_CURVE";
    case ExperimentKind::BreakPoints: return "BREAKPOINTS";
    case ExperimentKind::FlatSegment: return "FLAT_SEGMENT";
  }
  return "?";
}

inline std::optional<ExperimentKind> parse_experiment_kind(std::string_view s) {
  for (auto k : {ExperimentKind::XiScan, ExperimentKind::ChiScan, ExperimentKind::Shape,
                 ExperimentKind::Curvature, ExperimentKind::AlphaCurve, ExperimentKind::BreakPoints,
                 ExperimentKind::FlatSegment}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

// A fixed angle or one of the estimated cone endpoints.
struct AngleRef {
  enum class Kind { Value, ConeMinus, ConePlus };
  Kind kind = Kind::Value;
  double value = std::numbers::pi / 4;

  friend bool operator==(const AngleRef&, const AngleRef&) = default;
  bool needs_cone() const { return kind != Kind::Value; }
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::XiScan;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = "out";

  DistributionSpec distribution = DistributionSpec::durrett_liggett(0.8);

  double direction_r = 1.0;
  AngleRef direction_theta{};

  std::vector<int> n_list{128, 256, 512};
  std::vector<double> thetas;  // SHAPE / FLAT_SEGMENT grid; CURVATURE with a fixed theta0
  int replicates = 10;

  // Oriented percolation. p defaults to the Durrett-Liggett atom mass.
  std::vector<double> p_list{0.8};  // ALPHA_CURVE
  int levels = 2000;
  int alpha_replicates = 50;
  int horizon = 100;
  int traces = 20;

  AngleRef theta0{AngleRef::Kind::ConeMinus, 0.0};
  Side side = Side::Plus;
  double outer_window = 0.2;  // CURVATURE auto grid: outer_angles in [theta0 - outer_window, theta0]
  int outer_angles = 12;
  double inner_window = 0.15;  // and inner_angles in (theta0, theta0 + inner_window]
  int inner_angles = 6;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

  double oriented_p() const { return distribution.p; }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T v{};
  const std::string t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("bad value for " + std::string(key) + ": '" + t + "'");
  }
  return v;
}

inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::vector<double> parse_real_list(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  if (t.rfind("uniform(", 0) == 0 && t.back() == ')') {
    const auto parts = split(std::string_view(t).substr(8, t.size() - 9), ',');
    if (parts.size() != 3) throw ConfigError(std::string(key) + ": uniform(a, b, k) takes 3 arguments");
    const double a = parse_number<double>(key, parts[0]);
    const double b = parse_number<double>(key, parts[1]);
    const int k = parse_number<int>(key, parts[2]);
    if (k < 2) throw ConfigError(std::string(key) + ": uniform needs k >= 2");
    std::vector<double> out;
    for (int i = 0; i < k; ++i) out.push_back(a + (b - a) * i / (k - 1));
    return out;
  }
  std::vector<double> out;
  if (t.empty()) return out;
  for (const auto& item : split(t, ',')) out.push_back(parse_number<double>(key, item));
  return out;
}

inline std::vector<int> parse_int_list(std::string_view key, std::string_view text) {
  std::vector<int> out;
  const std::string t = trim(text);
  if (t.empty()) return out;
  for (const auto& item : split(t, ',')) out.push_back(parse_number<int>(key, item));
  return out;
}

inline AngleRef parse_angle(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  if (t == "cone_minus") return {AngleRef::Kind::ConeMinus, 0.0};
  if (t == "cone_plus") return {AngleRef::Kind::ConePlus, 0.0};
  return {AngleRef::Kind::Value, parse_number<double>(key, t)};
}

inline std::string format_angle(const AngleRef& a) {
  switch (a.kind) {
    case AngleRef::Kind::ConeMinus: return "cone_minus";
    case AngleRef::Kind::ConePlus: return "cone_plus";
    case AngleRef::Kind::Value: break;
  }
  return format_number(a.value);
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_floating_point_v<T>) {
      out += format_number(v[i]);
    } else {
      out += std::to_string(v[i]);
    }
  }
  return out;
}

}  // namespace detail

// Structural checks that need no computation.
inline void validate(const ExperimentConfig& c) {
  if (auto why = validate(c.distribution)) throw ConfigError("distribution: " + *why);
  if (c.threads < 0) throw ConfigError("threads must be >= 0 (0 = all cores)");
  if (c.out_dir.empty()) throw ConfigError("out directory is empty");
  const bool lattice_kind = c.kind != ExperimentKind::AlphaCurve && c.kind != ExperimentKind::BreakPoints;
  const bool needs_cone = c.kind == ExperimentKind::FlatSegment ||
                          (c.kind == ExperimentKind::Curvature && c.theta0.needs_cone()) ||
                          ((c.kind == ExperimentKind::XiScan || c.kind == ExperimentKind::ChiScan) &&
                           c.direction_theta.needs_cone());
  if (lattice_kind) {
    if (c.n_list.empty()) throw ConfigError("grid.n is empty");
    for (std::size_t i = 0; i < c.n_list.size(); ++i) {
      if (c.n_list[i] < 1) throw ConfigError("grid.n values must be >= 1");
      if (i && c.n_list[i] <= c.n_list[i - 1]) throw ConfigError("grid.n must be strictly ascending");
    }
    if (c.replicates < 1) throw ConfigError("grid.replicates must be >= 1");
  }
  if (needs_cone && c.distribution.kind != DistributionKind::DurrettLiggett) {
    throw ConfigError("cone angles need a DURRETT_LIGGETT distribution");
  }
  switch (c.kind) {
    case ExperimentKind::XiScan:
    case ExperimentKind::ChiScan:
      if (!(c.direction_r > 0.0)) throw ConfigError("direction.r must be positive");
      if (!c.direction_theta.needs_cone() &&
          !(c.direction_theta.value >= 0.0 && c.direction_theta.value <= std::numbers::pi / 2)) {
        throw ConfigError("direction.theta must lie in [0, pi/2]");
      }
      if (c.kind == ExperimentKind::ChiScan && c.replicates < 30) {
        throw ConfigError("CHI_SCAN needs grid.replicates >= 30");
      }
      break;
    case ExperimentKind::Shape:
    case ExperimentKind::FlatSegment:
      if (c.thetas.size() < 8) throw ConfigError("grid.thetas needs at least 8 angles");
      if (c.n_list.size() < 3) throw ConfigError("grid.n needs at least 3 values");
      break;
    case ExperimentKind::Curvature:
      if (c.n_list.size() < 3) throw ConfigError("grid.n needs at least 3 values");
      if (!c.theta0.needs_cone() && c.thetas.size() < 8) {
        throw ConfigError("a fixed curvature.theta0 needs grid.thetas with at least 8 angles");
      }
      if (c.theta0.needs_cone() && (c.outer_angles < 2 || c.inner_angles < 1 || !(c.outer_window > 0.0) ||
                                    !(c.inner_window > 0.0) || c.outer_angles + c.inner_angles < 8)) {
        throw ConfigError("curvature window needs outer_angles >= 2, inner_angles >= 1, 8 angles in total");
      }
      break;
    case ExperimentKind::AlphaCurve:
      if (c.p_list.empty()) throw ConfigError("oriented.p_list is empty");
      for (double p : c.p_list) {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("oriented.p_list values must lie in [0,1]");
      }
      break;
    case ExperimentKind::BreakPoints:
      if (c.horizon < 1 || c.levels <= c.horizon) throw ConfigError("oriented.levels must exceed oriented.horizon");
      if (c.traces < 1) throw ConfigError("oriented.traces must be >= 1");
      break;
  }
  if (needs_cone || c.kind == ExperimentKind::AlphaCurve || c.kind == ExperimentKind::BreakPoints) {
    if (c.levels < 1) throw ConfigError("oriented.levels must be >= 1");
    if (c.alpha_replicates < 2) throw ConfigError("oriented.replicates must be >= 2");
  }
}

inline ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = detail::trim(raw);
    if (const auto hash = line.find('#'); hash != std::string::npos) line = detail::trim(line.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": unterminated section");
      section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    const std::string full = section.empty() ? key : section + "." + key;
    if (seen[full]++) throw ConfigError("duplicate key " + full);

    if (full == "kind") {
      auto k = parse_experiment_kind(value);
      if (!k) throw ConfigError("unknown experiment kind '" + value + "'");
      c.kind = *k;
    } else if (full == "seed") {
      c.seed = detail::parse_number<std::uint64_t>(full, value);
    } else if (full == "threads") {
      c.threads = detail::parse_number<int>(full, value);
    } else if (full == "out") {
      c.out_dir = value;
    } else if (full == "distribution.kind") {
      auto k = parse_distribution_kind(value);
      if (!k) throw ConfigError("unknown distribution kind '" + value + "'");
      c.distribution.kind = *k;
    } else if (full == "distribution.value") {
      c.distribution.value = detail::parse_number<double>(full, value);
    } else if (full == "distribution.p") {
      c.distribution.p = detail::parse_number<double>(full, value);
    } else if (full == "distribution.high") {
      c.distribution.high = detail::parse_number<double>(full, value);
    } else if (full == "distribution.rate") {
      c.distribution.rate = detail::parse_number<double>(full, value);
    } else if (full == "direction.r") {
      c.direction_r = detail::parse_number<double>(full, value);
    } else if (full == "direction.theta") {
      c.direction_theta = detail::parse_angle(full, value);
    } else if (full == "grid.n") {
      c.n_list = detail::parse_int_list(full, value);
    } else if (full == "grid.thetas") {
      c.thetas = detail::parse_real_list(full, value);
    } else if (full == "grid.replicates") {
      c.replicates = detail::parse_number<int>(full, value);
    } else if (full == "oriented.p_list") {
      c.p_list = detail::parse_real_list(full, value);
    } else if (full == "oriented.levels") {
      c.levels = detail::parse_number<int>(full, value);
    } else if (full == "oriented.replicates") {
      c.alpha_replicates = detail::parse_number<int>(full, value);
    } else if (full == "oriented.horizon") {
      c.horizon = detail::parse_number<int>(full, value);
    } else if (full == "oriented.traces") {
      c.traces = detail::parse_number<int>(full, value);
    } else if (full == "curvature.theta0") {
      c.theta0 = detail::parse_angle(full, value);
    } else if (full == "curvature.side") {
      if (value == "PLUS") {
        c.side = Side::Plus;
      } else if (value == "MINUS") {
        c.side = Side::Minus;
      } else {
        throw ConfigError("curvature.side must be PLUS or MINUS");
      }
    } else if (full == "curvature.outer_window") {
      c.outer_window = detail::parse_number<double>(full, value);
    } else if (full == "curvature.outer_angles") {
      c.outer_angles = detail::parse_number<int>(full, value);
    } else if (full == "curvature.inner_window") {
      c.inner_window = detail::parse_number<double>(full, value);
    } else if (full == "curvature.inner_angles") {
      c.inner_angles = detail::parse_number<int>(full, value);
    } else {
      throw ConfigError("unknown key " + full);
    }
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline std::string serialize(const ExperimentConfig& c) {
  using detail::format_number;
  std::ostringstream o;
  o << "kind = " << to_string(c.kind) << "\n"
    << "seed = " << c.seed << "\n"
    << "threads = " << c.threads << "\n"
    << "out = " << c.out_dir << "\n"
    << "\n[distribution]\n"
    << "kind = " << to_string(c.distribution.kind) << "\n"
    << "value = " << format_number(c.distribution.value) << "\n"
    << "p = " << format_number(c.distribution.p) << "\n"
    << "high = " << format_number(c.distribution.high) << "\n"
    << "rate = " << format_number(c.distribution.rate) << "\n"
    << "\n[direction]\n"
    << "r = " << format_number(c.direction_r) << "\n"
    << "theta = " << detail::format_angle(c.direction_theta) << "\n"
    << "\n[grid]\n"
    << "n = " << detail::join(c.n_list) << "\n"
    << "thetas = " << detail::join(c.thetas) << "\n"
    << "replicates = " << c.replicates << "\n"
    << "\n[oriented]\n"
    << "p_list = " << detail::join(c.p_list) << "\n"
    << "levels = " << c.levels << "\n"
    << "replicates = " << c.alpha_replicates << "\n"
    << "horizon = " << c.horizon << "\n"
    << "traces = " << c.traces << "\n"
    << "\n[curvature]\n"
    << "theta0 = " << detail::format_angle(c.theta0) << "\n"
    << "side = " << to_string(c.side) << "\n"
    << "outer_window = " << format_number(c.outer_window) << "\n"
    << "outer_angles = " << c.outer_angles << "\n"
    << "inner_window = " << format_number(c.inner_window) << "\n"
    << "inner_angles = " << c.inner_angles << "\n";
  return o.str();
}

}  // namespace fpp
