#pragma once

// Random edge-weight environments on Z^2.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fpp/lattice.hpp"
#include "fpp/rng.hpp"

namespace fpp {

enum class Axis : std::uint8_t { East = 0, North = 1 };

// Undirected nearest-neighbour edge, keyed by its lexicographically smaller
// endpoint.
struct EdgeId {
  Vertex base;
  Axis axis = Axis::East;

  friend constexpr bool operator==(const EdgeId&, const EdgeId&) = default;

  constexpr Vertex head() const {
    return axis == Axis::East ? Vertex{base.x + 1, base.y} : Vertex{base.x, base.y + 1};
  }
};

inline EdgeId edge_between(Vertex a, Vertex b) {
  if (b < a) std::swap(a, b);
  if (a.y == b.y && b.x == a.x + 1) return {a, Axis::East};
  if (a.x == b.x && b.y == a.y + 1) return {a, Axis::North};
  throw std::invalid_argument("edge_between: " + to_string(a) + " and " + to_string(b) +
                              " are not adjacent");
}

enum class DistributionKind { Constant, DurrettLiggett, BernoulliZero, Exponential };

inline std::string_view to_string(DistributionKind k) {
  switch (k) {
    case DistributionKind::Constant: return "CONSTANT";
    case DistributionKind::DurrettLiggett: return "DURRETT_LIGGETT";
    case DistributionKind::BernoulliZero: return "BERNOULLI_ZERO";
    case DistributionKind::Exponential: return "EXPONENTIAL";
  }
  return "?";
}

inline std::optional<DistributionKind> parse_distribution_kind(std::string_view s) {
  for (auto k : {DistributionKind::Constant, DistributionKind::DurrettLiggett,
                 DistributionKind::BernoulliZero, DistributionKind::Exponential}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

// Edge-weight law F.
//   Constant       t = value (degenerate; only for oracle tests)
//   DurrettLiggett t = 1 w.p. p, t = high (> 1) otherwise
//   BernoulliZero  t = 0 w.p. p, t = high otherwise
//   Exponential    t ~ Exp(rate)
// Every supported law is bounded or has an exponential tail, so
// E exp(lambda t) < inf for some lambda > 0.
struct DistributionSpec {
  DistributionKind kind = DistributionKind::DurrettLiggett;
  double value = 1.0;
  double p = 0.8;
  double high = 5.0;
  double rate = 1.0;

  friend bool operator==(const DistributionSpec&, const DistributionSpec&) = default;

  static DistributionSpec constant(double value) {
    DistributionSpec s;
    s.kind = DistributionKind::Constant;
    s.value = value;
    return s;
  }
  static DistributionSpec durrett_liggett(double p, double high = 5.0) {
    DistributionSpec s;
    s.kind = DistributionKind::DurrettLiggett;
    s.p = p;
    s.high = high;
    return s;
  }
  static DistributionSpec bernoulli_zero(double p0, double high) {
    DistributionSpec s;
    s.kind = DistributionKind::BernoulliZero;
    s.p = p0;
    s.high = high;
    return s;
  }
  static DistributionSpec exponential(double rate) {
    DistributionSpec s;
    s.kind = DistributionKind::Exponential;
    s.rate = rate;
    return s;
  }

  bool atomic() const { return kind != DistributionKind::Exponential; }

  // (value, probability) pairs of an atomic law; atoms of mass zero dropped.
  std::vector<std::pair<double, double>> atoms() const {
    std::vector<std::pair<double, double>> out;
    auto add = [&out](double v, double w) {
      if (w > 0.0) out.emplace_back(v, w);
    };
    switch (kind) {
      case DistributionKind::Constant: add(value, 1.0); break;
      case DistributionKind::DurrettLiggett: add(1.0, p); add(high, 1.0 - p); break;
      case DistributionKind::BernoulliZero: add(0.0, p); add(high, 1.0 - p); break;
      case DistributionKind::Exponential: break;
    }
    return out;
  }

  // Infimum of the support.
  double min_weight() const {
    if (!atomic()) return 0.0;
    double m = std::numeric_limits<double>::infinity();
    for (const auto& [v, w] : atoms()) m = std::min(m, v);
    return m;
  }

  double cdf(double t) const {
    if (kind == DistributionKind::Exponential) return t <= 0.0 ? 0.0 : -std::expm1(-rate * t);
    double acc = 0.0;
    for (const auto& [v, w] : atoms()) {
      if (v <= t) acc += w;
    }
    return std::min(acc, 1.0);
  }

  // Draw from F given u uniform on [0,1).
  double quantile(double u) const {
    switch (kind) {
      case DistributionKind::Constant: return value;
      case DistributionKind::DurrettLiggett: return u < p ? 1.0 : high;
      case DistributionKind::BernoulliZero: return u < p ? 0.0 : high;
      case DistributionKind::Exponential: return -std::log1p(-u) / rate;
    }
    return 0.0;
  }
};

// Rejection reason, or nullopt when the spec is usable.
inline std::optional<std::string> validate(const DistributionSpec& s) {
  auto finite = [](double v) { return std::isfinite(v); };
  auto probability = [&](double v) { return finite(v) && v >= 0.0 && v <= 1.0; };
  switch (s.kind) {
    case DistributionKind::Constant:
      if (!finite(s.value) || s.value < 0.0) return "CONSTANT value must be a finite nonnegative number";
      return std::nullopt;
    case DistributionKind::DurrettLiggett:
      if (!probability(s.p)) return "DURRETT_LIGGETT p must lie in [0,1]";
      if (!finite(s.high) || !(s.high > 1.0))
        return "DURRETT_LIGGETT highValue must exceed the atom at 1";
      return std::nullopt;
    case DistributionKind::BernoulliZero:
      if (!probability(s.p)) return "BERNOULLI_ZERO p0 must lie in [0,1]";
      if (!(s.p < 0.5))
        return "BERNOULLI_ZERO p0 must stay below p_c = 1/2 (the time constant vanishes otherwise)";
      if (!finite(s.high) || !(s.high > 0.0)) return "BERNOULLI_ZERO highValue must be positive";
      return std::nullopt;
    case DistributionKind::Exponential:
      if (!finite(s.rate) || !(s.rate > 0.0)) return "EXPONENTIAL rate must be positive";
      return std::nullopt;
  }
  return "unknown distribution kind";
}

namespace detail {

// Best rational approximation with denominator <= max_den (continued fractions).
inline std::optional<std::pair<std::int64_t, std::int64_t>> rationalize(double v,
                                                                        std::int64_t max_den) {
  if (!std::isfinite(v) || v < 0.0) return std::nullopt;
  std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double x = v;
  for (int iter = 0; iter < 64; ++iter) {
    const double a = std::floor(x);
    if (a > 1e15) break;
    const auto ai = static_cast<std::int64_t>(a);
    const std::int64_t h2 = ai * h1 + h0;
    const std::int64_t k2 = ai * k1 + k0;
    if (k2 > max_den) break;
    h0 = h1; h1 = h2; k0 = k1; k1 = k2;
    const double err = std::abs(static_cast<double>(h1) / static_cast<double>(k1) - v);
    if (err <= 1e-12 * std::max(1.0, v)) return std::pair{h1, k1};
    const double frac = x - a;
    if (frac <= 0.0) break;
    x = 1.0 / frac;
  }
  return std::nullopt;
}

}  // namespace detail

// Exact integer representation of an atomic law: every atom is an integer
// number of ticks, tick = numerator / denominator time units. Passage times
// under such a law are integer tick counts, so equality tests are exact.
struct Quantization {
  std::int64_t tick_num = 1;
  std::int64_t tick_den = 1;
  std::vector<std::int64_t> atom_ticks;  // parallel to DistributionSpec::atoms()

  double to_time(std::int64_t ticks) const {
    return static_cast<double>(ticks) * static_cast<double>(tick_num) /
           static_cast<double>(tick_den);
  }
};

inline std::optional<Quantization> quantize(const DistributionSpec& spec) {
  constexpr std::int64_t kMaxDen = 1 << 20;
  constexpr std::int64_t kMaxTicks = 1 << 20;
  if (!spec.atomic()) return std::nullopt;
  const auto atoms = spec.atoms();
  std::vector<std::pair<std::int64_t, std::int64_t>> fracs;
  std::int64_t den = 1;
  for (const auto& [v, w] : atoms) {
    auto f = detail::rationalize(v, kMaxDen);
    if (!f) return std::nullopt;
    fracs.push_back(*f);
    den = std::lcm(den, f->second);
    if (den > kMaxDen) return std::nullopt;
  }
  Quantization q;
  std::int64_t g = 0;
  for (const auto& [num, d] : fracs) {
    const std::int64_t t = num * (den / d);
    q.atom_ticks.push_back(t);
    g = std::gcd(g, t);
  }
  if (g == 0) g = 1;
  for (auto& t : q.atom_ticks) {
    t /= g;
    if (t > kMaxTicks) return std::nullopt;
  }
  const std::int64_t r = std::gcd(g, den);
  q.tick_num = g / r;
  q.tick_den = den / r;
  return q;
}

// i.i.d. weights t(e), a pure function of (spec, seed, replicateId, e).
class WeightField {
 public:
  static constexpr std::uint64_t kDomain = 0x46505057ULL;  // "FPPW"

  WeightField(DistributionSpec spec, std::uint64_t seed, std::uint64_t replicate)
      : spec_(spec), seed_(seed), replicate_(replicate),
        rng_(stream_key(seed, replicate, kDomain)) {
    if (auto why = validate(spec_)) throw std::invalid_argument("invalid distribution: " + *why);
    quant_ = quantize(spec_);
    atoms_ = spec_.atoms();
  }

  const DistributionSpec& spec() const { return spec_; }
  double min_weight() const { return spec_.min_weight(); }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t replicate() const { return replicate_; }

  double uniform(EdgeId e) const {
    return rng_.uniform(static_cast<std::uint32_t>(e.base.x), static_cast<std::uint32_t>(e.base.y),
                        static_cast<std::uint32_t>(e.axis));
  }

  double weight(EdgeId e) const { return spec_.quantile(uniform(e)); }
  double weight(Vertex a, Vertex b) const { return weight(edge_between(a, b)); }

  // Exact tick representation; nullopt for continuous laws.
  const std::optional<Quantization>& quantization() const { return quant_; }

  std::int64_t ticks(EdgeId e) const {
    const double u = uniform(e);
    // Same atom selection as DistributionSpec::quantile.
    if (atoms_.size() == 1) return quant_->atom_ticks[0];
    return u < atoms_[0].second ? quant_->atom_ticks[0] : quant_->atom_ticks[1];
  }

 private:
  DistributionSpec spec_;
  std::uint64_t seed_;
  std::uint64_t replicate_;
  CounterRng rng_;
  std::optional<Quantization> quant_;
  std::vector<std::pair<double, double>> atoms_;
};

}  // namespace fpp
