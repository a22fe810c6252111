#pragma once

// Time constants along rays, the limit-shape boundary r_B(theta), the flat
// segment on x + y = 1, support lines and curvature exponents.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fpp/fluctuation.hpp"
#include "fpp/oriented.hpp"
#include "fpp/regression.hpp"
#include "fpp/weights.hpp"

namespace fpp {

struct MuEstimate {
  Direction dir;
  double mu = 0.0;
  double std_error = 0.0;
  int n_used = 0;
};

namespace detail {

inline MuEstimate fit_mu(const Direction& dir, std::span<const int> n_list, std::span<const double> times,
                         std::size_t reps) {
  std::vector<double> x, mean, se;
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    const auto pt = summarize(n_list[i], times.subspan(i * reps, reps));
    x.push_back(static_cast<double>(n_list[i]));
    mean.push_back(pt.mean);
    se.push_back(reps > 1 ? std::sqrt(pt.variance / static_cast<double>(reps)) : 0.0);
  }
  const LinearFit f = fit_line(x, mean);
  // Lattice rounding of the endpoints scatters the means without showing up
  // in the replicate spread, so the residual error is a floor.
  const double se_mu = std::max(propagated_slope_stderr(x, se), f.slope_stderr);
  return {dir, f.slope / dir.r, se_mu / dir.r, static_cast<int>(n_list.size())};
}

}  // namespace detail

// mu(u) per unit length: slope of the affine fit of mean T(0, n u) against n,
// divided by |u|.
inline MuEstimate estimate_mu(const DistributionSpec& spec, const Direction& dir,
                              std::span<const int> n_list, int replicates, std::uint64_t seed,
                              const ExecOptions& exec = {}) {
  if (n_list.size() < 3) throw std::invalid_argument("estimate_mu needs at least 3 n values");
  const auto times = sample_passage_times(spec, dir, n_list, replicates, seed, "mu", exec);
  return detail::fit_mu(dir, n_list, times, static_cast<std::size_t>(replicates));
}

struct BoundarySample {
  double theta = 0.0;
  double r_b = 0.0;
  double std_error = 0.0;

  friend bool operator==(const BoundarySample&, const BoundarySample&) = default;
};

struct ShapeBoundary {
  std::vector<BoundarySample> samples;
  std::optional<double> p;  // Durrett-Liggett atom mass, when applicable

  Point point(std::size_t i) const {
    const auto& s = samples[i];
    return {s.r_b * std::cos(s.theta), s.r_b * std::sin(s.theta)};
  }
};

namespace detail {

inline void check_theta_grid(std::span<const double> grid, std::size_t min_size) {
  if (grid.size() < min_size) {
    throw std::invalid_argument("angle grid needs at least " + std::to_string(min_size) + " angles");
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= std::numbers::pi / 2)) {
      throw std::invalid_argument("angles must lie in [0, pi/2]");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) throw std::invalid_argument("angles must be strictly increasing");
  }
}

}  // namespace detail

// r_B(theta) = 1 / mu((1, theta)); se(r_B) = se(mu) / mu^2. All angles share
// the environment of a given (n, replicate).
inline ShapeBoundary estimate_shape_boundary(const DistributionSpec& spec, std::span<const double> theta_grid,
                                             std::span<const int> n_list, int replicates, std::uint64_t seed,
                                             const ExecOptions& exec = {}) {
  detail::check_theta_grid(theta_grid, 8);
  ShapeBoundary out;
  if (spec.kind == DistributionKind::DurrettLiggett) out.p = spec.p;
  for (const double theta : theta_grid) {
    const auto mu = estimate_mu(spec, Direction{1.0, theta}, n_list, replicates, seed, exec);
    if (!(mu.mu > 0.0)) throw std::runtime_error("nonpositive time constant at theta = " + std::to_string(theta));
    out.samples.push_back({theta, 1.0 / mu.mu, mu.std_error / (mu.mu * mu.mu)});
  }
  return out;
}

struct FlatSegment {
  double theta_minus = 0.0;
  double theta_plus = 0.0;
  double max_deviation = 0.0;  // max |r_B (cos + sin) - 1| over grid angles inside
  int angles_inside = 0;
  bool clamped = false;
};

// alpha is the diagonal speed (see diagonal_speed). alpha = 0 gives the
// degenerate segment at pi/4.
inline FlatSegment flat_segment_detect(const ShapeBoundary& boundary, double alpha) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("flat_segment_detect: alpha must be nonnegative");
  const auto ends = theta_endpoints(alpha);
  FlatSegment out{ends.theta_minus, ends.theta_plus, 0.0, 0, ends.clamped};
  for (const auto& s : boundary.samples) {
    if (!(s.theta > ends.theta_minus && s.theta < ends.theta_plus)) continue;
    out.max_deviation = std::max(out.max_deviation, std::abs(s.r_b * (std::cos(s.theta) + std::sin(s.theta)) - 1.0));
    ++out.angles_inside;
  }
  return out;
}

enum class Side { Plus, Minus };

inline std::string_view to_string(Side s) { return s == Side::Plus ? "PLUS" : "MINUS"; }

// Line through the anchor with direction (cos inclination, sin inclination).
struct SupportLine {
  double theta0 = 0.0;
  Side side = Side::Plus;
  double anchor_r = 0.0;
  double inclination = 0.0;  // radians

  Point anchor() const { return {anchor_r * std::cos(theta0), anchor_r * std::sin(theta0)}; }
  Point direction() const { return {std::cos(inclination), std::sin(inclination)}; }

  // Radius at which the ray at angle theta meets the line (inf if parallel or behind).
  double radius_at(double theta) const {
    const Point a = anchor(), d = direction();
    const double denom = std::cos(theta) * d.y - std::sin(theta) * d.x;
    const double num = a.x * d.y - a.y * d.x;
    if (std::abs(denom) < 1e-15) return std::numeric_limits<double>::infinity();
    const double rho = num / denom;
    return rho > 0.0 ? rho : std::numeric_limits<double>::infinity();
  }
};

// The anchor's noise leaves no line through it with every sample inside.
class AnchorNotOnHull : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SupportOptions {
  double slack_sigmas = 2.0;  // a sample counts as inside when within this many stderrs
};

namespace detail {

// Local frame at the anchor: t points toward increasing theta, e outward.
// A line through the anchor is q = m s.
struct AnchorFrame {
  double theta0 = 0.0;
  double r0 = 0.0;
  double r0_se = 0.0;
  Point t, e, a;

  std::pair<double, double> coords(Point p) const {
    const double dx = p.x - a.x, dy = p.y - a.y;
    return {dx * t.x + dy * t.y, dx * e.x + dy * e.y};
  }
  double inclination(double m) const {
    return std::atan2(t.y + m * e.y, t.x + m * e.x);
  }
};

inline AnchorFrame anchor_frame(const ShapeBoundary& b, double theta0) {
  const auto& s = b.samples;
  if (s.empty() || theta0 < s.front().theta - 1e-12 || theta0 > s.back().theta + 1e-12) {
    throw std::invalid_argument("theta0 outside the boundary grid");
  }
  AnchorFrame f;
  f.theta0 = theta0;
  std::size_t hi = 0;
  while (hi < s.size() && s[hi].theta < theta0 - 1e-12) ++hi;
  if (std::abs(s[hi].theta - theta0) <= 1e-12) {
    f.r0 = s[hi].r_b;
    f.r0_se = s[hi].std_error;
  } else {
    // Chord between the neighbouring samples.
    const auto& l = s[hi - 1];
    const auto& h = s[hi];
    const Point pl{l.r_b * std::cos(l.theta), l.r_b * std::sin(l.theta)};
    const Point ph{h.r_b * std::cos(h.theta), h.r_b * std::sin(h.theta)};
    const Point d{ph.x - pl.x, ph.y - pl.y};
    f.r0 = (pl.x * d.y - pl.y * d.x) / (std::cos(theta0) * d.y - std::sin(theta0) * d.x);
    const double w = (theta0 - l.theta) / (h.theta - l.theta);
    f.r0_se = (1.0 - w) * l.std_error + w * h.std_error;
  }
  f.e = {std::cos(theta0), std::sin(theta0)};
  f.t = {-std::sin(theta0), std::cos(theta0)};
  f.a = {f.r0 * f.e.x, f.r0 * f.e.y};
  return f;
}

struct SlopeRange {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

// Slopes m for which every sample lies on the origin side of q = m s, up to
// its slack. The anchor's own error enters every slack.
inline SlopeRange admissible_slopes(const ShapeBoundary& b, const AnchorFrame& f, double slack_sigmas) {
  SlopeRange r;
  for (std::size_t i = 0; i < b.samples.size(); ++i) {
    const auto [s, q] = f.coords(b.point(i));
    const double slack = slack_sigmas * std::hypot(b.samples[i].std_error, f.r0_se);
    if (std::abs(s) < 1e-12) continue;  // the anchor itself
    const double m = (q - slack) / s;
    if (s > 0.0) {
      r.lo = std::max(r.lo, m);
    } else {
      r.hi = std::min(r.hi, m);
    }
  }
  return r;
}

}  // namespace detail

// Extreme support lines through (r_B(theta0), theta0): PLUS has the largest
// inclination, MINUS the smallest. Between grid angles the anchor lies on the
// chord of its neighbours.
inline std::pair<SupportLine, SupportLine> support_lines(const ShapeBoundary& boundary, double theta0,
                                                         const SupportOptions& opt = {}) {
  const auto f = detail::anchor_frame(boundary, theta0);
  const auto range = detail::admissible_slopes(boundary, f, opt.slack_sigmas);
  if (range.lo > range.hi + 1e-12) {
    throw AnchorNotOnHull("no support line through theta0 = " + std::to_string(theta0) +
                          " keeps all samples inside; increase replicates");
  }
  if (!std::isfinite(range.lo) || !std::isfinite(range.hi)) {
    throw std::invalid_argument("support_lines needs samples on both sides of theta0");
  }
  const double lo = std::min(range.lo, range.hi);
  const SupportLine plus{theta0, Side::Plus, f.r0, f.inclination(lo)};
  const SupportLine minus{theta0, Side::Minus, f.r0, f.inclination(range.hi)};
  return {plus, minus};
}

struct CurvatureOptions {
  SupportOptions support{};
  double d_cap = 0.15;      // only samples with d_theta below this enter the fit
  int min_samples = 5;
};

struct CurvatureEstimate {
  double theta0 = 0.0;
  Side side = Side::Plus;
  double kappa = 0.0;
  double fit_stderr = 0.0;  // stderr of kappa
  bool flat = false;
  double window_used = 0.0;  // largest d_theta in the fit
  int points_used = 0;
  SupportLine line;
};

// Gap r_S(theta) - r_B(theta) to the side's extreme support line against the
// distance d_theta from the line's point to the anchor. PLUS uses S+ and the
// samples with theta < theta0, MINUS uses S- and theta > theta0. The fit
// window grows from the 3 nearest samples while the slope stderr does not get
// worse. kappa = 1 / slope, clamped to [0, 1].
inline CurvatureEstimate curvature_exponent(const ShapeBoundary& boundary, double theta0, Side side,
                                            const CurvatureOptions& opt = {}) {
  const auto [plus, minus] = support_lines(boundary, theta0, opt.support);
  const SupportLine line = side == Side::Plus ? plus : minus;
  const auto frame = detail::anchor_frame(boundary, theta0);
  const auto range = detail::admissible_slopes(boundary, frame, opt.support.slack_sigmas);

  struct Obs { double d, gap, s, q, slack; };
  std::vector<Obs> obs;
  const Point a = line.anchor();
  for (std::size_t i = 0; i < boundary.samples.size(); ++i) {
    const auto& smp = boundary.samples[i];
    const bool on_side = side == Side::Plus ? smp.theta < theta0 - 1e-12 : smp.theta > theta0 + 1e-12;
    if (!on_side) continue;
    const double rho = line.radius_at(smp.theta);
    if (!std::isfinite(rho)) continue;
    const double d = std::hypot(rho * std::cos(smp.theta) - a.x, rho * std::sin(smp.theta) - a.y);
    if (!(d < opt.d_cap)) continue;
    const auto [s, q] = frame.coords(boundary.point(i));
    obs.push_back({d, rho - smp.r_b, s, q, opt.support.slack_sigmas * smp.std_error});
  }
  if (static_cast<int>(obs.size()) < opt.min_samples) {
    throw std::invalid_argument("curvature_exponent needs at least " + std::to_string(opt.min_samples) +
                                " samples on the " + std::string(to_string(side)) + " side within d < " +
                                std::to_string(opt.d_cap));
  }
  std::sort(obs.begin(), obs.end(), [](const Obs& x, const Obs& y) { return x.d < y.d; });

  CurvatureEstimate out;
  out.theta0 = theta0;
  out.side = side;
  out.line = line;

  // Flat: one admissible line follows every sample on this side within slack.
  double lo = std::min(range.lo, range.hi), hi = range.hi;
  for (const auto& o : obs) {
    const double m1 = (o.q - o.slack) / o.s, m2 = (o.q + o.slack) / o.s;
    lo = std::max(lo, std::min(m1, m2));
    hi = std::min(hi, std::max(m1, m2));
  }
  if (lo <= hi + 1e-12) {
    out.flat = true;
    out.window_used = obs.back().d;
    out.points_used = static_cast<int>(obs.size());
    return out;
  }

  std::vector<double> lx, ly;
  for (const auto& o : obs) {
    if (o.gap > 0.0 && o.d > 0.0) {
      lx.push_back(std::log(o.d));
      ly.push_back(std::log(o.gap));
    }
  }
  if (lx.size() < 3) throw DegenerateFit("fewer than 3 positive gaps on the curved side");
  std::size_t k = 3;
  LinearFit best = fit_line(std::span(lx).first(k), std::span(ly).first(k));
  while (k < lx.size()) {
    const LinearFit next = fit_line(std::span(lx).first(k + 1), std::span(ly).first(k + 1));
    if (next.slope_stderr > best.slope_stderr) break;
    best = next;
    ++k;
  }
  out.points_used = static_cast<int>(k);
  out.window_used = std::exp(lx[k - 1]);
  const double slope = best.slope;
  out.kappa = slope > 0.0 ? std::clamp(1.0 / slope, 0.0, 1.0) : 1.0;
  out.fit_stderr = slope > 0.0 ? best.slope_stderr / (slope * slope) : 0.0;
  return out;
}

}  // namespace fpp
