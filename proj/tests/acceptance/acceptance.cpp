// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "../oracle.hpp"
#include "fpp/experiment.hpp"

using namespace fpp;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::uint64_t kSeed = 20240611;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  int threads = 1;
  fs::path workdir;
  std::optional<AlphaEstimate> alpha;  // p = 0.8, N = 2000, 50 replicates; shared by A3, A5, A7

  ExecOptions exec() const { return {threads, {}}; }

  const AlphaEstimate& alpha_08() {
    if (!alpha) alpha = estimate_alpha(0.8, 2000, 50, kSeed, threads);
    return *alpha;
  }
  ConeEndpoints cone() { return cone_from_lattice_speed(alpha_08().alpha_hat); }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const DistributionSpec kDL = DistributionSpec::durrett_liggett(0.8, 5.0);

// A1 -----------------------------------------------------------------------

template <class Field>
bool same_time(const Field& f, double a, double b) {
  if (f.quantization()) return a == b;
  return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b));
}

Outcome a1(Context&) {
  const Region box{0, 4, 0, 4};
  const std::vector<DistributionSpec> specs{
      DistributionSpec::constant(1.0),          DistributionSpec::constant(2.5),
      DistributionSpec::durrett_liggett(0.8, 5.0), DistributionSpec::durrett_liggett(0.5, 1.5),
      DistributionSpec::durrett_liggett(0.3, 2.0), DistributionSpec::bernoulli_zero(0.2, 1.0),
      DistributionSpec::bernoulli_zero(0.45, 3.0), DistributionSpec::exponential(1.0),
      DistributionSpec::exponential(2.0)};
  std::mt19937_64 rng(kSeed);
  std::uniform_int_distribution<int> coord(0, 4);
  const int instances = 225;
  int mismatches = 0;
  std::string first;
  auto miss = [&](const std::string& what) {
    if (mismatches++ == 0) first = what;
  };
  for (int i = 0; i < instances; ++i) {
    const auto& spec = specs[static_cast<std::size_t>(i) % specs.size()];
    const WeightField f(spec, rng(), i);
    const Vertex s{coord(rng), coord(rng)}, t{coord(rng), coord(rng)};
    const std::string tag = std::string(to_string(spec.kind)) + " #" + std::to_string(i);

    const auto expected = oracle::passage_times(f, box, s);
    const auto map = passage_times(f, box, s);
    for (std::size_t k = 0; k < box.size(); ++k) {
      if (!same_time(f, map.times[k], expected[k])) {
        miss(tag + " passage_times");
        break;
      }
    }
    const double want = expected[box.index(t)];
    const auto g = geodesic(f, box, s, t);
    if (!same_time(f, g.total_time, want) || !same_time(f, oracle::path_time(f, g.vertices), want)) {
      miss(tag + " geodesic");
    }
    const auto m = optimal_vertex_set(f, box, s, t);
    const auto members = std::set<Vertex>(m.members.begin(), m.members.end());
    const auto oracle_set = spec.kind == DistributionKind::BernoulliZero ? oracle::optimal_walk_vertices(f, box, s, t)
                                                                         : oracle::optimal_path_union(f, box, s, t);
    if (members != oracle_set) miss(tag + " optimal_vertex_set");
    for (int line = s.x; line <= 4; ++line) {
      if (!same_time(f, point_to_line_time(f, box, s, line), oracle::point_to_line(f, box, s, line))) {
        miss(tag + " point_to_line_time");
        break;
      }
    }
  }
  return {mismatches == 0, fmt("%d instances, %d kinds, %d mismatches%s", instances, 4, mismatches,
                               mismatches ? (" (first: " + first + ")").c_str() : "")};
}

// A2 -----------------------------------------------------------------------

Outcome a2(Context& ctx) {
  std::vector<double> grid;
  for (int i = 0; i < 8; ++i) grid.push_back((kPi / 2) * i / 7);
  const std::vector<int> ns{128, 256, 384, 512};
  const auto b = estimate_shape_boundary(DistributionSpec::constant(1.0), grid, ns, 10, kSeed, ctx.exec());
  double worst = 0.0;
  for (const auto& s : b.samples) {
    const double mu = 1.0 / s.r_b;
    worst = std::max(worst, std::abs(mu / (std::cos(s.theta) + std::sin(s.theta)) - 1.0));
  }
  return {worst <= 0.005, fmt("max relative error of mu over 8 angles = %.3e (tol 5e-3)", worst)};
}

// A3 -----------------------------------------------------------------------

Outcome a3(Context& ctx) {
  const auto& alpha = ctx.alpha_08();
  const auto cone = ctx.cone();
  const double lo = cone.theta_minus + 0.05, hi = cone.theta_plus - 0.05;
  const std::vector<int> ns{256, 512, 1024};
  double worst_lo = 1e9, worst_hi = -1e9;
  std::ostringstream vals;
  for (int i = 1; i <= 5; ++i) {
    const double theta = lo + (hi - lo) * i / 6.0;
    const auto mu = estimate_mu(kDL, {1.0, theta}, ns, 30, kSeed, ctx.exec());
    const double v = (std::cos(theta) + std::sin(theta)) / mu.mu;
    worst_lo = std::min(worst_lo, v);
    worst_hi = std::max(worst_hi, v);
    vals << (i > 1 ? " " : "") << fmt("%.4f", v);
  }
  const bool ok = worst_lo >= 0.97 && worst_hi <= 1.005;
  return {ok, fmt("alphaHat = %.4f +- %.4f, cone (%.4f, %.4f), rB(cos+sin) = [%s] in [0.97, 1.005]", alpha.alpha_hat,
                  alpha.std_error, cone.theta_minus, cone.theta_plus, vals.str().c_str())};
}

// A4, A5 -------------------------------------------------------------------

const std::vector<int> kXiSizes{128, 256, 512, 1024};

struct XiRun {
  ExponentFit fit;
  double ratio = 0.0;  // median h_n / n at the largest n
};

XiRun xi_run(Context& ctx, double theta) {
  const auto samples = sample_fluctuations(kDL, {1.0, theta}, kXiSizes, 40, kSeed, ctx.exec());
  const auto medians = median_by_n(samples);
  XiRun r;
  r.ratio = medians.back().second / medians.back().first;
  r.fit = estimate_xi(samples);
  return r;
}

Outcome a4(Context& ctx) {
  const auto r = xi_run(ctx, kPi / 4);
  return {r.fit.exponent >= 0.8 && r.ratio >= 0.01,
          fmt("xiHat = %.3f +- %.3f (>= 0.8), median h/n at n=1024 = %.4f (>= 0.01)", r.fit.exponent,
              r.fit.std_error, r.ratio)};
}

Outcome a5(Context& ctx) {
  const double theta = ctx.cone().theta_minus;
  XiRun r;
  try {
    r = xi_run(ctx, theta);
  } catch (const DegenerateFit& e) {
    return {false, std::string("degenerate fit: ") + e.what()};
  }
  return {r.fit.exponent >= 0.3 && r.fit.exponent <= 0.7 && r.ratio <= 0.005,
          fmt("theta = %.4f, xiHat = %.3f +- %.3f (in [0.3, 0.7]), median h/n at n=1024 = %.4f (<= 0.005)", theta,
              r.fit.exponent, r.fit.std_error, r.ratio)};
}

// A6 -----------------------------------------------------------------------

Outcome a6(Context& ctx) {
  const std::vector<int> ns{128, 256, 512};
  const auto scan = variance_scan(kDL, {1.0, kPi / 4}, ns, 100, kSeed, ctx.exec());
  const auto chi = estimate_chi(scan);
  std::string contrast;
  try {
    const auto exp_scan = variance_scan(DistributionSpec::exponential(1.0), {1.0, kPi / 4}, ns, 100, kSeed, ctx.exec());
    const auto c = estimate_chi(exp_scan);
    const bool rejects = c.exponent + 2.0 * c.std_error < 0.2;
    contrast = fmt("; EXPONENTIAL(1) contrast chiHat = %.3f +- %.3f, %s chi >= 0.2", c.exponent, c.std_error,
                   rejects ? "rejects" : "fails to reject");
  } catch (const DegenerateFit& e) {
    contrast = std::string("; EXPONENTIAL(1) contrast degenerate: ") + e.what();
  }
  return {chi.exponent <= 0.15,
          fmt("chiHat = %.3f +- %.3f (<= 0.15), variances %.3f %.3f %.3f", chi.exponent, chi.std_error,
              scan[0].variance, scan[1].variance, scan[2].variance) +
              contrast};
}

// A7 -----------------------------------------------------------------------

Outcome a7(Context& ctx) {
  const double theta0 = ctx.cone().theta_minus;
  ExperimentConfig c;  // only the default window settings are used
  const auto grid = detail::cone_curvature_grid(theta0, true, c);
  const std::vector<int> ns{256, 512, 768, 1024};
  const auto b = estimate_shape_boundary(kDL, grid, ns, 20, kSeed, ctx.exec());
  CurvatureEstimate plus, minus;
  try {
    plus = curvature_exponent(b, theta0, Side::Plus);
    minus = curvature_exponent(b, theta0, Side::Minus);
  } catch (const std::exception& e) {
    return {false, std::string("curvature fit failed: ") + e.what()};
  }
  return {plus.kappa >= 0.35 && !plus.flat && minus.flat,
          fmt("theta0 = %.4f, %zu angles; PLUS kappaHat = %.3f +- %.3f over %d points (>= 0.35)%s; MINUS %s",
              theta0, grid.size(), plus.kappa, plus.fit_stderr, plus.points_used, plus.flat ? " but FLAT" : "",
              minus.flat ? "FLAT" : fmt("not flat, kappaHat = %.3f", minus.kappa).c_str())};
}

// A8 -----------------------------------------------------------------------

Outcome a8(Context& ctx) {
  const double p = 0.8;
  const int N = 5000, H = 100, traces = 20;
  const auto alpha = estimate_alpha(p, N, 50, kSeed, ctx.threads);
  std::vector<BreakPointSequence> runs(traces);
  parallel_for(runs.size(), ctx.threads, [&](std::size_t i) {
    const auto rep = static_cast<std::int64_t>(i);
    runs[i] = break_points(OrientedField(p, derive_seed(kSeed, "breakpoints", N, rep), rep), N, H);
  });
  const auto k = summarize_break_points(runs, alpha);
  const bool excess_ok = std::abs(k.mean_excess) <= 3.0 * k.excess_stderr;
  const bool lag_ok = std::abs(k.lag1_autocorr) <= 3.0 * k.lag1_stderr;
  return {k.bounded && excess_ok && lag_ok,
          fmt("%d break points; |X|<=tau %s; mean(X - alphaHat tau) = %.4f (3 stderr = %.4f); lag-1 autocorr = "
              "%.4f (3 stderr = %.4f)",
              k.entries, k.bounded ? "holds" : "VIOLATED", k.mean_excess, 3.0 * k.excess_stderr, k.lag1_autocorr,
              3.0 * k.lag1_stderr)};
}

// A9 -----------------------------------------------------------------------

Outcome a9(Context&) {
  const std::vector<int> ns{16, 32, 64, 128, 256, 512, 1024, 2048, 4096};
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> noise(-0.1, 0.1);
  double worst_exact = 0.0, worst_noisy = 0.0;
  auto rel = [](double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1.0); };
  for (const double xi : {0.5, 2.0 / 3.0, 0.75, 1.0}) {
    for (const bool noisy : {false, true}) {
      std::vector<FluctuationSample> s;
      for (int n : ns) {
        for (int r = 0; r < 11; ++r) s.push_back({n, 1.7 * std::pow(n, xi) * (noisy ? 1.0 + noise(rng) : 1.0), r, 0});
      }
      const double got = estimate_xi(s).exponent;
      (noisy ? worst_noisy : worst_exact) = std::max(noisy ? worst_noisy : worst_exact,
                                                     noisy ? std::abs(got - xi) : rel(got, xi));
    }
  }
  for (const double chi : {0.0, 1.0 / 3.0, 0.5}) {
    for (const bool noisy : {false, true}) {
      std::vector<VariancePoint> scan;
      for (int n : ns) scan.push_back({n, 0.0, 2.3 * std::pow(n, 2.0 * chi) * (noisy ? 1.0 + noise(rng) : 1.0), 100});
      const double got = estimate_chi(scan).exponent;
      (noisy ? worst_noisy : worst_exact) = std::max(noisy ? worst_noisy : worst_exact,
                                                     noisy ? std::abs(got - chi) : rel(got, chi));
    }
  }
  return {worst_exact <= 1e-12 && worst_noisy <= 0.05,
          fmt("exact laws: max relative error %.2e (<= 1e-12); 10%% noise: max abs error %.4f (<= 0.05)", worst_exact,
              worst_noisy)};
}

// A10 ----------------------------------------------------------------------

Outcome a10(Context& ctx) {
  std::vector<ExperimentConfig> configs;
  ExperimentConfig shape;
  shape.kind = ExperimentKind::Shape;
  shape.distribution = kDL;
  for (int i = 0; i < 8; ++i) shape.thetas.push_back((kPi / 2) * i / 7);
  shape.n_list = {32, 64, 96};
  shape.replicates = 4;
  shape.seed = kSeed;
  configs.push_back(shape);
  ExperimentConfig xi = shape;
  xi.kind = ExperimentKind::XiScan;
  xi.direction_theta = {AngleRef::Kind::ConeMinus, 0.0};
  xi.levels = 400;
  xi.alpha_replicates = 8;
  configs.push_back(xi);
  ExperimentConfig bp = xi;
  bp.kind = ExperimentKind::BreakPoints;
  bp.levels = 600;
  bp.horizon = 50;
  bp.traces = 4;
  configs.push_back(bp);

  int compared = 0;
  for (const auto& base : configs) {
    std::vector<std::map<std::string, std::string>> digests;
    for (const int threads : {1, 1, 4}) {
      auto c = base;
      c.threads = threads;
      c.out_dir = (ctx.workdir / fmt("a10_%s_%zu", std::string(to_string(c.kind)).c_str(), digests.size())).string();
      fs::remove_all(c.out_dir);
      const auto m = run(c);
      std::map<std::string, std::string> d;
      for (const auto& f : m.outputs) d[f.name] = f.sha256;
      digests.push_back(std::move(d));
    }
    if (digests[0] != digests[1] || digests[0] != digests[2]) {
      return {false, std::string("digests differ for ") + std::string(to_string(base.kind))};
    }
    compared += static_cast<int>(digests[0].size());
  }
  return {true, fmt("%zu experiments, %d artifacts identical across rerun and 1 vs 4 threads", configs.size(),
                    compared)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks for the fpp toolkit"};
  int threads = 0;
  std::string workdir = "acceptance_runs";
  std::vector<std::string> only;
  app.add_option("--threads", threads, "worker threads (0 = all cores)");
  app.add_option("--workdir", workdir, "scratch directory for experiment runs");
  app.add_option("--only", only, "run only these criteria (e.g. A3 A7)");
  CLI11_PARSE(app, argc, argv);

  Context ctx;
  ctx.threads = resolve_threads(threads);
  ctx.workdir = workdir;
  fs::create_directories(ctx.workdir);

  const std::vector<std::pair<std::string, std::function<Outcome(Context&)>>> criteria{
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5},
      {"A6", a6}, {"A7", a7}, {"A8", a8}, {"A9", a9}, {"A10", a10}};
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::printf("%-4s %s  %s  [%.1f s]\n", name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
