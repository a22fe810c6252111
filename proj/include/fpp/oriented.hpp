#pragma once

// Oriented bond percolation on L = {(m, n) : m + n even, n >= 0}, edges
// (m, n) -> (m +- 1, n + 1). Right-edge process, percolation points and the
// break-point decomposition of the right edge into i.i.d. pieces.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpp/parallel.hpp"
#include "fpp/rng.hpp"

namespace fpp {

// Edge states of L: open ("passage time 1") iff its uniform is below p, so
// fields sharing (seed, replicate, attempt) are monotonically coupled in p.
class OrientedField {
 public:
  static constexpr std::uint64_t kDomain = 0x4F524945ULL;  // "ORIE"

  OrientedField(double p, std::uint64_t seed, std::uint64_t replicate, std::uint32_t attempt = 0)
      : p_(p), seed_(seed), replicate_(replicate), attempt_(attempt),
        rng_(stream_key(seed, replicate, kDomain)) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("oriented percolation p must lie in [0,1]");
  }

  double p() const { return p_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t replicate() const { return replicate_; }
  std::uint32_t attempt() const { return attempt_; }

  OrientedField with_attempt(std::uint32_t attempt) const {
    return OrientedField(p_, seed_, replicate_, attempt);
  }
  OrientedField with_p(double p) const { return OrientedField(p, seed_, replicate_, attempt_); }

  // step = +1 (to m+1) or -1 (to m-1).
  double uniform(int m, int n, int step) const {
    return rng_.uniform(static_cast<std::uint32_t>(m), static_cast<std::uint32_t>(n),
                        step > 0 ? 1U : 0U, attempt_);
  }
  bool open(int m, int n, int step) const { return uniform(m, n, step) < p_; }

 private:
  double p_;
  std::uint64_t seed_;
  std::uint64_t replicate_;
  std::uint32_t attempt_;
  CounterRng rng_;
};

enum class InitialSet { HalfLine, OriginConditioned };

namespace detail {

// Sites of level n+1 reachable through open edges from `sites` (sorted) at level n.
inline std::vector<int> advance_level(const OrientedField& f, const std::vector<int>& sites, int n) {
  std::vector<int> next;
  next.reserve(sites.size() + 1);
  for (const int m : sites) {
    if (f.open(m, n, -1) && (next.empty() || next.back() != m - 1)) next.push_back(m - 1);
    if (f.open(m, n, +1)) next.push_back(m + 1);
  }
  return next;
}

}  // namespace detail

// Right-edge values r_0 .. r_N.
//
// Origin start: the modified process, which restarts from the single site
// {n+1} whenever the level set empties.
//
// Half-line start: the sources are the even sites in [-W, 0] with W = 2N and
// no restart. A source left of -W reaches at most n - W - 2 by level n, so
// max(edge of the window, n - W - 2) bounds the true edge from above and
// equals it whenever the window's edge is at least n - W - 2. Later levels
// are flagged through censored_from; an empty window (p = 0, or a
// subcritical p) gives the bound itself.
struct RightEdgeTrace {
  double p = 0.0;
  int horizon = 0;
  InitialSet initial = InitialSet::HalfLine;
  std::vector<int> values;
  int fallbacks = 0;          // levels at which the restart rule fired
  int censored_from = -1;     // first half-line level whose value is only a bound
  int attempts = 1;           // environments drawn (conditioned runs)
  std::uint32_t attempt = 0;  // attempt index of the accepted environment
};

inline RightEdgeTrace run_right_edge(const OrientedField& field, int levels, InitialSet initial) {
  RightEdgeTrace trace;
  trace.p = field.p();
  trace.horizon = levels;
  trace.initial = initial;
  trace.attempt = field.attempt();
  const bool half_line = initial == InitialSet::HalfLine;
  const int window = 2 * levels;
  std::vector<int> sites;
  if (half_line) {
    for (int m = -window; m <= 0; m += 2) sites.push_back(m);
  } else {
    sites.push_back(0);
  }
  trace.values.reserve(static_cast<std::size_t>(levels) + 1);
  trace.values.push_back(0);
  for (int n = 0; n < levels; ++n) {
    if (!sites.empty()) sites = detail::advance_level(field, sites, n);
    if (half_line) {
      const int bound = n + 1 - window - 2;
      if (sites.empty() || sites.back() < bound) {
        if (trace.censored_from < 0) trace.censored_from = n + 1;
        trace.values.push_back(sites.empty() ? bound : std::max(sites.back(), bound));
      } else {
        trace.values.push_back(sites.back());
      }
      continue;
    }
    if (sites.empty()) {
      sites.push_back(n + 1);
      ++trace.fallbacks;
    }
    trace.values.push_back(sites.back());
  }
  return trace;
}

class RetryBudgetExhausted : public std::runtime_error {
 public:
  RetryBudgetExhausted(int attempts, double p)
      : std::runtime_error("origin cluster never survived after " + std::to_string(attempts) +
                           " environments at p = " + std::to_string(p)),
        attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

// ORIGIN_CONDITIONED draws fresh environments (attempt index 0, 1, ...) until
// the origin's open cluster reaches level N, i.e. samples the law of the edge
// conditioned on survival to the horizon.
inline RightEdgeTrace simulate_right_edge(const OrientedField& field, int levels, InitialSet initial,
                                          int max_attempts = 100000) {
  if (levels < 1) throw std::invalid_argument("simulate_right_edge: N must be >= 1");
  if (initial == InitialSet::HalfLine) return run_right_edge(field, levels, initial);
  for (int k = 0; k < max_attempts; ++k) {
    auto trace = run_right_edge(field.with_attempt(field.attempt() + static_cast<std::uint32_t>(k)),
                                levels, initial);
    if (trace.fallbacks == 0) {
      trace.attempts = k + 1;
      return trace;
    }
  }
  throw RetryBudgetExhausted(max_attempts, field.p());
}

// Does the open cluster of (m, n) survive `depth` more levels?
inline bool survives(const OrientedField& field, int m, int n, int depth) {
  std::vector<int> sites{m};
  for (int k = 0; k < depth; ++k) {
    sites = detail::advance_level(field, sites, n + k);
    if (sites.empty()) return false;
  }
  return true;
}

struct AlphaEstimate {
  double p = 0.0;
  int levels = 0;
  int replicates = 0;
  double alpha_hat = 0.0;  // lattice units: r_N / N
  double std_error = 0.0;
  int censored = 0;  // replicates whose r_N is only an upper bound
};

// Mean of r'_N / N over half-line replicates. Environments are keyed by
// (seed, replicate) only, so estimates at different p share uniforms.
inline AlphaEstimate estimate_alpha(double p, int levels, int replicates, std::uint64_t seed,
                                    int threads = 1) {
  if (replicates < 2) throw std::invalid_argument("estimate_alpha: need at least 2 replicates");
  if (levels < 1) throw std::invalid_argument("estimate_alpha: N must be >= 1");
  std::vector<double> speeds(static_cast<std::size_t>(replicates));
  std::vector<char> censored(speeds.size(), 0);
  parallel_for(speeds.size(), threads, [&](std::size_t rep) {
    const OrientedField field(p, derive_seed(seed, "alpha", 0, static_cast<std::int64_t>(rep)), rep);
    const auto trace = run_right_edge(field, levels, InitialSet::HalfLine);
    speeds[rep] = static_cast<double>(trace.values.back()) / levels;
    censored[rep] = trace.censored_from >= 0;
  });
  double mean = 0.0;
  for (double s : speeds) mean += s;
  mean /= replicates;
  double ss = 0.0;
  for (double s : speeds) ss += (s - mean) * (s - mean);
  const double sd = std::sqrt(ss / (replicates - 1));
  const int n_censored = static_cast<int>(std::count(censored.begin(), censored.end(), 1));
  return {p, levels, replicates, mean, sd / std::sqrt(static_cast<double>(replicates)), n_censored};
}

struct BreakPoint {
  int level = 0;  // T_i
  int tau = 0;    // T_i - T_{i-1}
  int x = 0;      // r'_{T_i} - r'_{T_{i-1}}
};

struct BreakPointSequence {
  std::vector<BreakPoint> entries;
  int horizon = 0;  // look-ahead H used as the survival surrogate
  RightEdgeTrace trace;
};

class NoBreakPoints : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A level n is a break point when (r'_n, n) is a percolation point; survival
// for H further levels stands in for survival forever. Only levels
// n <= N - H are examined.
inline BreakPointSequence break_points(const OrientedField& field, int levels, int horizon,
                                       int max_attempts = 100000) {
  if (horizon < 1) throw std::invalid_argument("break_points: horizon must be >= 1");
  if (levels <= horizon) throw std::invalid_argument("break_points: N must exceed the horizon");
  BreakPointSequence out;
  out.horizon = horizon;
  out.trace = simulate_right_edge(field, levels, InitialSet::OriginConditioned, max_attempts);
  const OrientedField accepted = field.with_attempt(out.trace.attempt);
  int last_level = 0;
  int last_x = 0;
  for (int n = 1; n <= levels - horizon; ++n) {
    const int r = out.trace.values[static_cast<std::size_t>(n)];
    if (!survives(accepted, r, n, horizon)) continue;
    out.entries.push_back({n, n - last_level, r - last_x});
    last_level = n;
    last_x = r;
  }
  if (out.entries.empty()) {
    throw NoBreakPoints("no break point before level " + std::to_string(levels - horizon) +
                        "; increase N");
  }
  return out;
}

struct KuczekSummary {
  int entries = 0;
  int pairs = 0;
  double mean_tau = 0.0;
  double mean_x = 0.0;
  double mean_excess = 0.0;  // mean of X_i - alpha tau_i
  double excess_stderr = 0.0;  // includes the uncertainty of alpha
  double lag1_autocorr = 0.0;  // of X_i, consecutive pieces of one trace
  double lag1_stderr = 0.0;
  bool bounded = true;  // |X_i| <= tau_i for every entry
};

// Pooled statistics over independent conditioned traces.
inline KuczekSummary summarize_break_points(std::span<const BreakPointSequence> runs, const AlphaEstimate& alpha) {
  KuczekSummary out;
  std::vector<double> excess;
  double sum_x = 0.0, sum_tau = 0.0;
  for (const auto& run : runs) {
    for (const auto& e : run.entries) {
      if (std::abs(e.x) > e.tau) out.bounded = false;
      excess.push_back(e.x - alpha.alpha_hat * e.tau);
      sum_x += e.x;
      sum_tau += e.tau;
    }
  }
  out.entries = static_cast<int>(excess.size());
  if (out.entries < 2) throw std::invalid_argument("summarize_break_points: need at least 2 entries");
  const double k = out.entries;
  out.mean_x = sum_x / k;
  out.mean_tau = sum_tau / k;
  double m = 0.0;
  for (double v : excess) m += v;
  m /= k;
  double ss = 0.0;
  for (double v : excess) ss += (v - m) * (v - m);
  out.mean_excess = m;
  const double se_sample = std::sqrt(ss / (k - 1) / k);
  const double se_alpha = out.mean_tau * alpha.std_error;
  out.excess_stderr = std::hypot(se_sample, se_alpha);

  double num = 0.0, den = 0.0;
  for (const auto& run : runs) {
    for (std::size_t i = 0; i < run.entries.size(); ++i) {
      const double d = run.entries[i].x - out.mean_x;
      den += d * d;
      if (i + 1 < run.entries.size()) {
        num += d * (run.entries[i + 1].x - out.mean_x);
        ++out.pairs;
      }
    }
  }
  out.lag1_autocorr = den > 0.0 ? num / den : 0.0;
  out.lag1_stderr = out.pairs > 0 ? 1.0 / std::sqrt(static_cast<double>(out.pairs)) : 0.0;
  return out;
}

// Speed measured along the diagonal of Z^2. L is Z^2 turned by 45 degrees with
// (x, y) -> (x - y, x + y), so a lattice-unit speed a puts the edge of the
// cone at (1/2 + a/2, 1/2 - a/2) on x + y = 1, at Euclidean distance a/sqrt(2)
// from (1/2, 1/2).
inline double diagonal_speed(double lattice_speed) { return lattice_speed / std::numbers::sqrt2; }

struct ConeEndpoints {
  double theta_minus = std::numbers::pi / 4;
  double theta_plus = std::numbers::pi / 4;
  bool clamped = false;  // alpha exceeded 1/sqrt(2)
};

// theta^-+ = arctan((1/2 -+ a/sqrt2) / (1/2 +- a/sqrt2)) for diagonal speed a.
inline ConeEndpoints theta_endpoints(double alpha) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("theta_endpoints: alpha must be nonnegative");
  ConeEndpoints out;
  constexpr double kMax = 1.0 / std::numbers::sqrt2;
  if (alpha > kMax) {
    alpha = kMax;
    out.clamped = true;
  }
  const double a = alpha / std::numbers::sqrt2;
  out.theta_minus = std::atan2(0.5 - a, 0.5 + a);
  out.theta_plus = std::numbers::pi / 2 - out.theta_minus;
  return out;
}

// Endpoints of the flat segment of the limit shape from a lattice-unit
// right-edge speed.
inline ConeEndpoints cone_from_lattice_speed(double lattice_speed) {
  return theta_endpoints(diagonal_speed(lattice_speed));
}

// Radius of both flat-segment endpoints: sqrt(1/2 + alpha^2).
inline double flat_endpoint_radius(double alpha) { return std::sqrt(0.5 + alpha * alpha); }

}  // namespace fpp
