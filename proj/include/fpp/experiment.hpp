#pragma once

// Batch experiments: resolve a config, run the analysis, write CSV/JSON
// artifacts and a manifest with SHA-256 digests of every file written.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fpp/config.hpp"
#include "fpp/fluctuation.hpp"
#include "fpp/io.hpp"
#include "fpp/oriented.hpp"
#include "fpp/shape.hpp"

namespace fpp {

inline constexpr std::string_view kToolkitVersion = "0.1.0";

// A computation failed; `stage` names the step.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct OutputFile {
  std::string name;
  std::uint64_t bytes = 0;
  std::string sha256;
};

struct RunManifest {
  ExperimentConfig config;
  nlohmann::ordered_json resolved;  // values computed while running (cone angles, grids)
  std::string version{kToolkitVersion};
  double wall_seconds = 0.0;
  std::vector<std::pair<std::string, double>> stages;
  std::vector<OutputFile> outputs;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["toolkit"] = "fpp";
    j["version"] = version;
    j["kind"] = to_string(config.kind);
    j["config"] = serialize(config);
    j["resolved"] = resolved;
    j["wallSeconds"] = wall_seconds;
    auto& st = j["stages"] = nlohmann::ordered_json::array();
    for (const auto& [name, secs] : stages) st.push_back({{"name", name}, {"seconds", secs}});
    auto& out = j["outputs"] = nlohmann::ordered_json::array();
    for (const auto& f : outputs) out.push_back({{"file", f.name}, {"bytes", f.bytes}, {"sha256", f.sha256}});
    return j;
  }
};

namespace detail {

class RunContext {
 public:
  explicit RunContext(const ExperimentConfig& c) : dir_(c.out_dir) {
    manifest_.config = c;
    manifest_.resolved = nlohmann::ordered_json::object();
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_)) {
      throw ConfigError("cannot create output directory " + dir_.string());
    }
  }

  template <class Fn>
  auto stage(const std::string& name, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    auto record = [&] {
      manifest_.stages.emplace_back(
          name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    };
    try {
      if constexpr (std::is_void_v<std::invoke_result_t<Fn>>) {
        fn();
        record();
      } else {
        auto r = fn();
        record();
        return r;
      }
    } catch (const StageError&) {
      throw;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, e.what());
    }
  }

  void write(const std::string& name, const std::string& data) {
    write_file(dir_ / name, data);
    manifest_.outputs.push_back({name, data.size(), sha256_hex(data)});
  }
  void write_json(const std::string& name, const nlohmann::ordered_json& j) { write(name, j.dump(2) + "\n"); }

  RunManifest& manifest() { return manifest_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  RunManifest manifest_;
};

inline nlohmann::ordered_json alpha_json(const AlphaEstimate& a) {
  return {{"p", a.p},
          {"N", a.levels},
          {"replicates", a.replicates},
          {"alphaHat", a.alpha_hat},
          {"stderr", a.std_error},
          {"alphaDiagonal", diagonal_speed(a.alpha_hat)}};
}

inline nlohmann::ordered_json fit_json(const ExponentFit& f) {
  return {{"status", "ok"},          {"exponent", f.exponent}, {"stderr", f.std_error},
          {"intercept", f.intercept}, {"nMin", f.n_min},        {"nMax", f.n_max},
          {"pointsUsed", f.points_used}};
}

inline std::string boundary_csv(const ShapeBoundary& b) {
  CsvWriter w({"theta", "rB", "stderr"});
  for (const auto& s : b.samples) w.row(s.theta, s.r_b, s.std_error);
  return w.str();
}

// Estimates alpha_p and the cone; refuses when alpha is not resolved from 0.
inline std::pair<AlphaEstimate, ConeEndpoints> resolve_cone(RunContext& ctx, const ExperimentConfig& c) {
  const auto alpha = ctx.stage("alpha", [&] {
    return estimate_alpha(c.oriented_p(), c.levels, c.alpha_replicates, c.seed, c.threads);
  });
  ctx.write_json("alpha.json", alpha_json(alpha));
  if (!(alpha.alpha_hat > 2.0 * alpha.std_error)) {
    throw StageError("cone", "alphaHat = " + format_real(alpha.alpha_hat) + " is within 2 stderr of 0; " +
                                 "p may be at or below the oriented critical point, refusing cone analyses");
  }
  const auto cone = cone_from_lattice_speed(alpha.alpha_hat);
  ctx.manifest().resolved["alphaHat"] = alpha.alpha_hat;
  ctx.manifest().resolved["thetaMinus"] = cone.theta_minus;
  ctx.manifest().resolved["thetaPlus"] = cone.theta_plus;
  return {alpha, cone};
}

inline double resolve_angle(RunContext& ctx, const ExperimentConfig& c, const AngleRef& a) {
  if (!a.needs_cone()) return a.value;
  const auto cone = resolve_cone(ctx, c).second;
  return a.kind == AngleRef::Kind::ConeMinus ? cone.theta_minus : cone.theta_plus;
}

inline ExecOptions exec_of(const ExperimentConfig& c) { return {c.threads, {}}; }

inline void run_xi(RunContext& ctx, const ExperimentConfig& c) {
  const Direction dir{c.direction_r, resolve_angle(ctx, c, c.direction_theta)};
  ctx.manifest().resolved["theta"] = dir.theta;
  const auto samples = ctx.stage("sample_fluctuations", [&] {
    return sample_fluctuations(c.distribution, dir, c.n_list, c.replicates, c.seed, exec_of(c));
  });
  CsvWriter w({"n", "replicate", "seed", "hn"});
  for (const auto& s : samples) w.row(s.n, s.replicate, s.seed, s.hn);
  ctx.write("xi_samples.csv", w.str());
  nlohmann::ordered_json fit;
  try {
    fit = fit_json(estimate_xi(samples));
  } catch (const DegenerateFit& e) {
    fit = {{"status", "degenerate"}, {"reason", e.what()}};
  }
  fit["theta"] = dir.theta;
  ctx.write_json("xi_fit.json", fit);
}

inline void run_chi(RunContext& ctx, const ExperimentConfig& c) {
  const Direction dir{c.direction_r, resolve_angle(ctx, c, c.direction_theta)};
  ctx.manifest().resolved["theta"] = dir.theta;
  const auto scan = ctx.stage("variance_scan", [&] {
    return variance_scan(c.distribution, dir, c.n_list, c.replicates, c.seed, exec_of(c));
  });
  CsvWriter w({"n", "mean", "variance", "replicates"});
  for (const auto& v : scan) w.row(v.n, v.mean, v.variance, v.replicates);
  ctx.write("variance.csv", w.str());
  nlohmann::ordered_json fit;
  try {
    fit = fit_json(estimate_chi(scan));
  } catch (const DegenerateFit& e) {
    fit = {{"status", "degenerate"}, {"reason", e.what()}};
  }
  fit["theta"] = dir.theta;
  ctx.write_json("chi_fit.json", fit);
}

inline ShapeBoundary boundary_stage(RunContext& ctx, const ExperimentConfig& c, const std::vector<double>& grid) {
  auto b = ctx.stage("shape_boundary", [&] {
    return estimate_shape_boundary(c.distribution, grid, c.n_list, c.replicates, c.seed, exec_of(c));
  });
  ctx.write("boundary.csv", boundary_csv(b));
  return b;
}

// CURVATURE grid around an estimated cone endpoint: outer angles on the curved
// side, inner angles toward pi/4 on the flat side.
inline std::vector<double> cone_curvature_grid(double theta0, bool minus_end, const ExperimentConfig& c) {
  std::vector<double> g;
  const double sign = minus_end ? -1.0 : 1.0;
  for (int i = c.outer_angles - 1; i >= 0; --i) g.push_back(theta0 + sign * c.outer_window * i / (c.outer_angles - 1));
  for (int i = 1; i <= c.inner_angles; ++i) g.push_back(theta0 - sign * c.inner_window * i / c.inner_angles);
  for (double& t : g) t = std::clamp(t, 0.0, std::numbers::pi / 2);
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

inline void run_curvature(RunContext& ctx, const ExperimentConfig& c) {
  double theta0 = c.theta0.value;
  std::vector<double> grid = c.thetas;
  if (c.theta0.needs_cone()) {
    const auto cone = resolve_cone(ctx, c).second;
    const bool minus_end = c.theta0.kind == AngleRef::Kind::ConeMinus;
    theta0 = minus_end ? cone.theta_minus : cone.theta_plus;
    grid = cone_curvature_grid(theta0, minus_end, c);
  }
  ctx.manifest().resolved["theta0"] = theta0;
  ctx.manifest().resolved["thetas"] = grid;
  const auto b = boundary_stage(ctx, c, grid);
  const auto k = ctx.stage("curvature", [&] { return curvature_exponent(b, theta0, c.side); });
  ctx.write_json("curvature.json", {{"theta0", k.theta0},
                                    {"side", to_string(k.side)},
                                    {"kappa", k.kappa},
                                    {"stderr", k.fit_stderr},
                                    {"windowUsed", k.window_used},
                                    {"pointsUsed", k.points_used},
                                    {"flat", k.flat},
                                    {"lineInclination", k.line.inclination}});
}

inline void run_alpha_curve(RunContext& ctx, const ExperimentConfig& c) {
  std::vector<AlphaEstimate> est;
  ctx.stage("alpha", [&] {
    for (double p : c.p_list) est.push_back(estimate_alpha(p, c.levels, c.alpha_replicates, c.seed, c.threads));
  });
  CsvWriter w({"p", "N", "alphaHat", "stderr"});
  auto arr = nlohmann::ordered_json::array();
  for (const auto& a : est) {
    w.row(a.p, a.levels, a.alpha_hat, a.std_error);
    arr.push_back(alpha_json(a));
  }
  ctx.write("alpha.csv", w.str());
  ctx.write_json("alpha.json", arr);
}

inline void run_break_points(RunContext& ctx, const ExperimentConfig& c) {
  const double p = c.oriented_p();
  const auto alpha = ctx.stage("alpha", [&] {
    return estimate_alpha(p, c.levels, c.alpha_replicates, c.seed, c.threads);
  });
  ctx.write_json("alpha.json", alpha_json(alpha));
  std::vector<BreakPointSequence> runs(static_cast<std::size_t>(c.traces));
  ctx.stage("break_points", [&] {
    parallel_for(runs.size(), c.threads, [&](std::size_t t) {
      const OrientedField field(p, derive_seed(c.seed, "breakpoints", c.levels, static_cast<std::int64_t>(t)), t);
      runs[t] = break_points(field, c.levels, c.horizon);
    });
  });
  CsvWriter bp({"trace", "i", "T", "tau", "X"});
  CsvWriter tr({"trace", "n", "rPrime"});
  for (std::size_t t = 0; t < runs.size(); ++t) {
    for (std::size_t i = 0; i < runs[t].entries.size(); ++i) {
      const auto& e = runs[t].entries[i];
      bp.row(t, i + 1, e.level, e.tau, e.x);
    }
    const auto& v = runs[t].trace.values;
    for (std::size_t n = 0; n < v.size(); ++n) tr.row(t, n, v[n]);
  }
  ctx.write("breakpoints.csv", bp.str());
  ctx.write("traces.csv", tr.str());
  const auto s = ctx.stage("kuczek_summary", [&] { return summarize_break_points(runs, alpha); });
  auto attempts = nlohmann::ordered_json::array();
  for (const auto& r : runs) attempts.push_back(r.trace.attempts);
  ctx.write_json("breakpoints.json", {{"p", p},
                                      {"N", c.levels},
                                      {"horizon", c.horizon},
                                      {"traces", c.traces},
                                      {"entries", s.entries},
                                      {"allBounded", s.bounded},
                                      {"meanTau", s.mean_tau},
                                      {"meanX", s.mean_x},
                                      {"meanExcess", s.mean_excess},
                                      {"excessStderr", s.excess_stderr},
                                      {"lag1Autocorr", s.lag1_autocorr},
                                      {"lag1Stderr", s.lag1_stderr},
                                      {"attempts", attempts}});
}

inline void run_flat_segment(RunContext& ctx, const ExperimentConfig& c) {
  const auto [alpha, cone] = resolve_cone(ctx, c);
  const auto b = boundary_stage(ctx, c, c.thetas);
  const double a = diagonal_speed(alpha.alpha_hat);
  const auto f = ctx.stage("flat_segment", [&] { return flat_segment_detect(b, a); });
  ctx.write_json("endpoints.json", {{"alphaHat", alpha.alpha_hat},
                                    {"alphaDiagonal", a},
                                    {"thetaMinus", f.theta_minus},
                                    {"thetaPlus", f.theta_plus},
                                    {"endpointRadius", flat_endpoint_radius(a)},
                                    {"maxDeviation", f.max_deviation},
                                    {"anglesInside", f.angles_inside},
                                    {"clamped", f.clamped}});
}

}  // namespace detail

// Validates, runs and writes manifest.json into the output directory.
inline RunManifest run(const ExperimentConfig& config) {
  validate(config);
  const auto t0 = std::chrono::steady_clock::now();
  detail::RunContext ctx(config);
  switch (config.kind) {
    case ExperimentKind::XiScan: detail::run_xi(ctx, config); break;
    case ExperimentKind::ChiScan: detail::run_chi(ctx, config); break;
    case ExperimentKind::Shape: detail::boundary_stage(ctx, config, config.thetas); break;
    case ExperimentKind::Curvature: detail::run_curvature(ctx, config); break;
    case ExperimentKind::AlphaCurve: detail::run_alpha_curve(ctx, config); break;
    case ExperimentKind::BreakPoints: detail::run_break_points(ctx, config); break;
    case ExperimentKind::FlatSegment: detail::run_flat_segment(ctx, config); break;
  }
  auto& m = ctx.manifest();
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_file(ctx.dir() / "manifest.json", m.to_json().dump(2) + "\n");
  return m;
}

namespace detail {

inline double cell_real(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw std::runtime_error("not a number: '" + s + "'");
  return v;
}

inline bool header_is(const CsvTable& t, std::initializer_list<std::string_view> cols) {
  return std::equal(t.header.begin(), t.header.end(), cols.begin(), cols.end());
}

// Fitted power law evaluated on the data's own n grid.
inline void emit_fit(CsvWriter& out, const std::string& series, const std::vector<std::pair<int, double>>& pts) {
  try {
    const auto fit = power_law_fit(pts);
    for (const auto& pt : pts) {
      const double n = pt.first;
      out.row(series, n, std::exp(fit.intercept) * std::pow(n, fit.exponent), std::string{});
    }
  } catch (const DegenerateFit&) {
  }
}

}  // namespace detail

// Long-format (series, x, y, yerr) rows from known artifact files; the
// format is recognised from each file's header.
inline std::string emit_plot_data(const std::vector<std::filesystem::path>& files) {
  CsvWriter out({"series", "x", "y", "yerr"});
  for (const auto& path : files) {
    if (!std::filesystem::exists(path)) throw std::runtime_error("missing input " + path.string());
    const auto t = parse_csv(read_file(path));
    if (t.header.empty()) continue;
    using detail::cell_real;
    if (detail::header_is(t, {"theta", "rB", "stderr"})) {
      for (const auto& r : t.rows) out.row("rB", cell_real(r[0]), cell_real(r[1]), cell_real(r[2]));
    } else if (detail::header_is(t, {"n", "replicate", "seed", "hn"})) {
      std::map<int, std::vector<double>> by_n;
      for (const auto& r : t.rows) by_n[static_cast<int>(cell_real(r[0]))].push_back(cell_real(r[3]));
      std::vector<std::pair<int, double>> pts;
      for (auto& [n, v] : by_n) pts.emplace_back(n, detail::median(std::move(v)));
      for (const auto& [n, y] : pts) out.row("median_hn", static_cast<double>(n), y, std::string{});
      detail::emit_fit(out, "median_hn_fit", pts);
    } else if (detail::header_is(t, {"n", "mean", "variance", "replicates"})) {
      std::vector<std::pair<int, double>> pts;
      for (const auto& r : t.rows) {
        const double var = cell_real(r[2]), reps = cell_real(r[3]);
        out.row("variance", cell_real(r[0]), var, reps > 1 ? var * std::sqrt(2.0 / (reps - 1)) : 0.0);
        pts.emplace_back(static_cast<int>(cell_real(r[0])), var);
      }
      detail::emit_fit(out, "variance_fit", pts);
    } else if (detail::header_is(t, {"p", "N", "alphaHat", "stderr"})) {
      for (const auto& r : t.rows) out.row("alphaHat", cell_real(r[0]), cell_real(r[2]), cell_real(r[3]));
    } else if (detail::header_is(t, {"trace", "i", "T", "tau", "X"})) {
      for (const auto& r : t.rows) out.row("X_vs_tau", cell_real(r[3]), cell_real(r[4]), std::string{});
    } else if (detail::header_is(t, {"trace", "n", "rPrime"})) {
      for (const auto& r : t.rows) out.row("rPrime_" + r[0], cell_real(r[1]), cell_real(r[2]), std::string{});
    } else {
      throw std::runtime_error("unrecognised artifact format in " + path.string());
    }
  }
  return out.str();
}

}  // namespace fpp
