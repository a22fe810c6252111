#pragma once

// Transversal fluctuations h_n(u), and growth exponents of h_n and of
// Var T(0, nu).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fpp/geodesic.hpp"
#include "fpp/parallel.hpp"
#include "fpp/regression.hpp"
#include "fpp/rng.hpp"
#include "fpp/weights.hpp"

namespace fpp {

// Polar vector u = (r, theta), theta in [0, pi/2]. Also names the line L_theta
// through the origin.
struct Direction {
  double r = 1.0;
  double theta = 0.0;

  friend bool operator==(const Direction&, const Direction&) = default;

  void check() const {
    if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("direction radius must be positive");
    if (!(theta >= 0.0 && theta <= std::numbers::pi / 2)) {
      throw std::invalid_argument("direction angle must lie in [0, pi/2]");
    }
  }

  Point scaled(double n) const { return {n * r * std::cos(theta), n * r * std::sin(theta)}; }
  // Lattice endpoint of n*u.
  Vertex target(int n) const { return continuum_lift(scaled(n)); }
};

// Euclidean distance from v to the infinite line through 0 at angle theta.
inline double distance_to_line(Vertex v, double theta) {
  return std::abs(-std::sin(theta) * v.x + std::cos(theta) * v.y);
}

// h_n(u) = max over M_n(u) of dist(v, L_theta).
inline double transversal_fluctuation(const OptimalVertexSet& mset, const Direction& dir) {
  if (mset.members.empty()) throw std::invalid_argument("transversal_fluctuation: empty vertex set");
  double h = 0.0;
  for (const Vertex v : mset.members) h = std::max(h, distance_to_line(v, dir.theta));
  return h;
}

struct FluctuationSample {
  int n = 0;
  double hn = 0.0;
  std::int64_t replicate = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const FluctuationSample&, const FluctuationSample&) = default;
};

struct ExponentFit {
  double exponent = 0.0;
  double intercept = 0.0;  // log-scale
  double std_error = 0.0;
  int n_min = 0;
  int n_max = 0;
  int points_used = 0;
};

// The scaling exponent is undefined for this data (e.g. every median is 0).
class DegenerateFit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExecOptions {
  int threads = 1;
  PlaneOptions plane{};
};

namespace detail {

inline void check_n_list(std::span<const int> n_list) {
  if (n_list.empty()) throw std::invalid_argument("n list is empty");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (n_list[i] < 1) throw std::invalid_argument("n values must be >= 1");
    if (i > 0 && n_list[i] <= n_list[i - 1]) throw std::invalid_argument("n list must be strictly ascending");
  }
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Log-log power-law fit over points with positive y.
inline ExponentFit power_law_fit(const std::vector<std::pair<int, double>>& points) {
  std::vector<double> lx, ly;
  int n_min = 0, n_max = 0;
  for (const auto& [n, y] : points) {
    if (!(y > 0.0)) continue;
    if (lx.empty()) n_min = n;
    n_max = n;
    lx.push_back(std::log(static_cast<double>(n)));
    ly.push_back(std::log(y));
  }
  if (lx.empty()) throw DegenerateFit("all values are zero: exponent undefined");
  if (lx.size() < 3) {
    throw DegenerateFit("only " + std::to_string(lx.size()) +
                        " n values with positive statistic; need at least 3");
  }
  const LinearFit f = fit_line(lx, ly);
  return {f.slope, f.intercept, f.slope_stderr, n_min, n_max, static_cast<int>(lx.size())};
}

}  // namespace detail

// Medians of h_n per n, in ascending n.
inline std::vector<std::pair<int, double>> median_by_n(std::span<const FluctuationSample> samples) {
  std::map<int, std::vector<double>> by_n;
  for (const auto& s : samples) by_n[s.n].push_back(s.hn);
  std::vector<std::pair<int, double>> out;
  for (auto& [n, v] : by_n) out.emplace_back(n, detail::median(std::move(v)));
  return out;
}

// One h_n sample per (n, replicate); the environment for each pair is keyed by
// derive_seed(seed, "xi", n, replicate).
inline std::vector<FluctuationSample> sample_fluctuations(const DistributionSpec& spec,
                                                          const Direction& dir,
                                                          std::span<const int> n_list,
                                                          int replicates, std::uint64_t seed,
                                                          const ExecOptions& exec = {}) {
  if (auto why = validate(spec)) throw std::invalid_argument("invalid distribution: " + *why);
  dir.check();
  detail::check_n_list(n_list);
  if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  const std::size_t reps = static_cast<std::size_t>(replicates);
  std::vector<FluctuationSample> out(n_list.size() * reps);
  parallel_for(out.size(), exec.threads, [&](std::size_t task) {
    const int n = n_list[task / reps];
    const auto rep = static_cast<std::int64_t>(task % reps);
    const std::uint64_t task_seed = derive_seed(seed, "xi", n, rep);
    const WeightField field(spec, task_seed, static_cast<std::uint64_t>(rep));
    const auto mset = plane_optimal_vertex_set(field, Vertex{0, 0}, dir.target(n), exec.plane);
    out[task] = {n, transversal_fluctuation(mset, dir), rep, task_seed};
  });
  return out;
}

// xi estimate: slope of log(median h_n) against log n.
inline ExponentFit estimate_xi(std::span<const FluctuationSample> samples) {
  return detail::power_law_fit(median_by_n(samples));
}

struct VariancePoint {
  int n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  int replicates = 0;

  friend bool operator==(const VariancePoint&, const VariancePoint&) = default;
};

// Raw passage times T(0, n u), laid out [n index][replicate].
inline std::vector<double> sample_passage_times(const DistributionSpec& spec, const Direction& dir,
                                                std::span<const int> n_list, int replicates,
                                                std::uint64_t seed, std::string_view stream,
                                                const ExecOptions& exec = {}) {
  if (auto why = validate(spec)) throw std::invalid_argument("invalid distribution: " + *why);
  dir.check();
  detail::check_n_list(n_list);
  if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  const std::size_t reps = static_cast<std::size_t>(replicates);
  std::vector<double> out(n_list.size() * reps);
  parallel_for(out.size(), exec.threads, [&](std::size_t task) {
    const int n = n_list[task / reps];
    const auto rep = static_cast<std::int64_t>(task % reps);
    const WeightField field(spec, derive_seed(seed, stream, n, rep), static_cast<std::uint64_t>(rep));
    out[task] = plane_passage_time(field, Vertex{0, 0}, dir.target(n), exec.plane);
  });
  return out;
}

inline VariancePoint summarize(int n, std::span<const double> values) {
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double var = values.size() > 1 ? ss / static_cast<double>(values.size() - 1) : 0.0;
  return {n, mean, var, static_cast<int>(values.size())};
}

inline std::vector<VariancePoint> variance_scan(const DistributionSpec& spec, const Direction& dir,
                                                std::span<const int> n_list, int replicates,
                                                std::uint64_t seed, const ExecOptions& exec = {}) {
  if (replicates < 30) throw std::invalid_argument("variance_scan needs at least 30 replicates");
  const auto times = sample_passage_times(spec, dir, n_list, replicates, seed, "chi", exec);
  std::vector<VariancePoint> out;
  const auto reps = static_cast<std::size_t>(replicates);
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    out.push_back(summarize(n_list[i], std::span(times).subspan(i * reps, reps)));
  }
  return out;
}

// chi estimate: half the slope of log Var T against log n.
inline ExponentFit estimate_chi(std::span<const VariancePoint> scan) {
  std::vector<std::pair<int, double>> pts;
  for (const auto& v : scan) pts.emplace_back(v.n, v.variance);
  ExponentFit f = detail::power_law_fit(pts);
  f.exponent /= 2.0;
  f.std_error /= 2.0;
  return f;
}

}  // namespace fpp
