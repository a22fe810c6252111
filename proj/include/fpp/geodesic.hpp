#pragma once

// Exact passage times, geodesics and optimal-vertex sets on lattice boxes.
//
// Atomic laws run in integer ticks through a bucket (Dial) queue, continuous
// laws in doubles through a binary heap. When the law has a positive minimum
// weight w, searches are goal-directed with the consistent lower bound
// w * (lattice distance to the goal), which confines them to the L1 ellipse
// the optimal paths must live in.

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "fpp/lattice.hpp"
#include "fpp/weights.hpp"

namespace fpp {

template <class F>
concept EdgeWeightSource = requires(const F& f, EdgeId e) {
  { f.weight(e) } -> std::convertible_to<double>;
  { f.ticks(e) } -> std::convertible_to<std::int64_t>;
  { f.quantization() } -> std::convertible_to<const std::optional<Quantization>&>;
  { f.min_weight() } -> std::convertible_to<double>;
};

// The answer may depend on the clip box: some optimal-path candidate reached
// the box boundary. Enlarge and retry.
class RegionTooSmall : public std::runtime_error {
 public:
  explicit RegionTooSmall(const Region& r)
      : std::runtime_error("region " + to_string(r) + " too small: search reached its boundary"),
        region_(r) {}
  const Region& region() const { return region_; }

 private:
  Region region_;
};

// Restrict: the box is the graph; answers are exact for paths inside it.
// Certify: the box is a window onto Z^2; throw RegionTooSmall unless the
// answer provably equals the unclipped one.
enum class Boundary { Restrict, Certify };

struct PassageTimeMap {
  Vertex source;
  Region region;
  std::vector<double> times;  // +inf where not computed

  double at(Vertex v) const {
    if (!region.contains(v)) throw std::out_of_range("vertex " + to_string(v) + " outside map");
    return times[region.index(v)];
  }
};

struct Geodesic {
  std::vector<Vertex> vertices;
  double total_time = 0.0;
};

// M_n: every vertex on some optimal source-target path, plus one canonical
// optimal path.
struct OptimalVertexSet {
  Vertex source;
  Vertex target;
  double time = 0.0;
  std::vector<Vertex> members;  // sorted
  Geodesic witness;

  bool contains(Vertex v) const { return std::binary_search(members.begin(), members.end(), v); }
};

namespace detail {

template <class Time>
inline constexpr Time kInf = std::numeric_limits<Time>::max() / 4;
template <>
inline constexpr double kInf<double> = std::numeric_limits<double>::infinity();

template <class Time, EdgeWeightSource Field>
Time edge_cost(const Field& f, EdgeId e) {
  if constexpr (std::is_same_v<Time, std::int64_t>) {
    return f.ticks(e);
  } else {
    return f.weight(e);
  }
}

// Monotone integer priority queue over a circular window of `span` keys.
class BucketQueue {
 public:
  BucketQueue(std::int64_t first_key, std::int64_t span)
      : buckets_(static_cast<std::size_t>(span)), heads_(static_cast<std::size_t>(span), 0),
        cursor_(first_key) {}

  void push(std::int64_t key, std::uint32_t idx) {
    buckets_[slot(key)].push_back(idx);
    ++size_;
  }
  bool empty() const { return size_ == 0; }
  std::int64_t min_key() {
    for (;;) {
      const auto s = slot(cursor_);
      if (heads_[s] < buckets_[s].size()) return cursor_;
      buckets_[s].clear();
      heads_[s] = 0;
      ++cursor_;
    }
  }
  std::uint32_t pop() {
    const auto s = slot(min_key());
    --size_;
    return buckets_[s][heads_[s]++];
  }

 private:
  std::size_t slot(std::int64_t key) const {
    return static_cast<std::size_t>(key % static_cast<std::int64_t>(buckets_.size()));
  }

  std::vector<std::vector<std::uint32_t>> buckets_;
  std::vector<std::size_t> heads_;
  std::int64_t cursor_;
  std::size_t size_ = 0;
};

class HeapQueue {
 public:
  void push(double key, std::uint32_t idx) { heap_.emplace(key, idx); }
  bool empty() const { return heap_.empty(); }
  double min_key() const { return heap_.top().first; }
  std::uint32_t pop() {
    const auto idx = heap_.top().second;
    heap_.pop();
    return idx;
  }

 private:
  using Entry = std::pair<double, std::uint32_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap_;
};

struct Goal {
  enum class Kind { None, Vertex, LineX };
  Kind kind = Kind::None;
  Vertex vertex{};
  int line_x = 0;

  static Goal none() { return {}; }
  static Goal to(Vertex v) { return {Kind::Vertex, v, 0}; }
  static Goal line(int x) { return {Kind::LineX, {}, x}; }
};

inline constexpr std::uint32_t kUnsettled = std::numeric_limits<std::uint32_t>::max();

// Best-first search from one source over a box. Vertices are settled in
// nondecreasing key = g + h, where g is the region-restricted passage time
// and h a consistent lower bound on the remaining time to the goal.
template <class Time, EdgeWeightSource Field>
class Search {
 public:
  using Queue = std::conditional_t<std::is_same_v<Time, std::int64_t>, BucketQueue, HeapQueue>;

  Search(const Field& field, const Region& region, Vertex source, Goal goal)
      : field_(field), region_(region), goal_(goal),
        g_(region.size(), kInf<Time>), order_(region.size(), kUnsettled),
        queue_(make_queue(field, region, source, goal)) {
    if (!region.contains(source)) {
      throw std::invalid_argument("source " + to_string(source) + " outside region " +
                                  to_string(region));
    }
    const auto s = region.index(source);
    g_[s] = Time{0};
    queue_.push(key(s, source), static_cast<std::uint32_t>(s));
  }

  // Settle vertices until one satisfies `stop` (returned) or the next key
  // exceeds `key_bound` / the queue runs dry (nullopt).
  template <class Stop>
  std::optional<std::size_t> advance(Stop&& stop, Time key_bound = kInf<Time>) {
    while (!queue_.empty()) {
      if (queue_.min_key() > key_bound) return std::nullopt;
      const Time k = static_cast<Time>(queue_.min_key());
      const std::size_t idx = queue_.pop();
      if (order_[idx] != kUnsettled) continue;
      const Vertex v = region_.vertex(idx);
      if (key(idx, v) != k) continue;  // stale entry
      order_[idx] = settled_++;
      if (counts_toward_boundary(v)) min_boundary_key_ = std::min(min_boundary_key_, k);
      relax(idx, v);
      if (stop(idx)) return idx;
    }
    return std::nullopt;
  }

  void settle_all(Time key_bound = kInf<Time>) {
    advance([](std::size_t) { return false; }, key_bound);
  }

  const Region& region() const { return region_; }
  Time g(std::size_t idx) const { return g_[idx]; }
  Time g(Vertex v) const { return g_[region_.index(v)]; }
  bool settled(std::size_t idx) const { return order_[idx] != kUnsettled; }
  std::uint32_t order(std::size_t idx) const { return order_[idx]; }
  const std::vector<Time>& distances() const { return g_; }
  // Smallest key at which a box-boundary vertex was settled.
  Time min_boundary_key() const { return min_boundary_key_; }
  const Field& field() const { return field_; }

 private:
  static Time heuristic_scale(const Field& field) {
    if constexpr (std::is_same_v<Time, std::int64_t>) {
      const auto& q = *field.quantization();
      return *std::min_element(q.atom_ticks.begin(), q.atom_ticks.end());
    } else {
      return static_cast<Time>(field.min_weight());
    }
  }

  static Queue make_queue(const Field& field, const Region& region, Vertex source, Goal goal) {
    if constexpr (std::is_same_v<Time, std::int64_t>) {
      const auto& q = *field.quantization();
      const std::int64_t max_w = *std::max_element(q.atom_ticks.begin(), q.atom_ticks.end());
      const std::int64_t scale = goal.kind == Goal::Kind::None ? 0 : heuristic_scale(field);
      (void)region;
      return BucketQueue(heuristic(goal, source, scale), max_w + scale + 1);
    } else {
      (void)field; (void)region; (void)source; (void)goal;
      return HeapQueue{};
    }
  }

  static Time heuristic(const Goal& goal, Vertex v, Time scale) {
    switch (goal.kind) {
      case Goal::Kind::None: return Time{0};
      case Goal::Kind::Vertex: return scale * static_cast<Time>(l1_distance(v, goal.vertex));
      case Goal::Kind::LineX:
        return scale * static_cast<Time>(std::abs(std::int64_t{goal.line_x} - v.x));
    }
    return Time{0};
  }

  Time key(std::size_t idx, Vertex v) const { return g_[idx] + heuristic(goal_, v, scale_); }

  bool counts_toward_boundary(Vertex v) const {
    if (!region_.on_boundary(v)) return false;
    // Anything beyond a target line is only reachable through the line.
    return goal_.kind != Goal::Kind::LineX || v.x < goal_.line_x;
  }

  void relax(std::size_t idx, Vertex v) {
    static constexpr Vertex kSteps[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    for (const Vertex step : kSteps) {
      const Vertex u = v + step;
      if (!region_.contains(u)) continue;
      const std::size_t ui = region_.index(u);
      if (order_[ui] != kUnsettled) continue;
      const Time cand = g_[idx] + edge_cost<Time>(field_, edge_between(v, u));
      if (cand < g_[ui]) {
        g_[ui] = cand;
        queue_.push(cand + heuristic(goal_, u, scale_), static_cast<std::uint32_t>(ui));
      }
    }
  }

  const Field& field_;
  Region region_;
  Goal goal_;
  Time scale_ = goal_.kind == Goal::Kind::None ? Time{0} : heuristic_scale(field_);
  std::vector<Time> g_;
  std::vector<std::uint32_t> order_;
  Queue queue_;
  std::uint32_t settled_ = 0;
  Time min_boundary_key_ = kInf<Time>;
};

template <class Time>
double to_time(const std::optional<Quantization>& q, Time t) {
  if constexpr (std::is_same_v<Time, std::int64_t>) {
    if (t >= kInf<Time>) return std::numeric_limits<double>::infinity();
    return q->to_time(t);
  } else {
    return t;
  }
}

template <class Time>
bool times_equal(Time a, Time b) {
  if constexpr (std::is_same_v<Time, std::int64_t>) {
    return a == b;
  } else {
    return std::abs(a - b) <= 1e-9 * std::max({std::abs(a), std::abs(b), 1e-300});
  }
}

// Key bound that keeps every vertex whose time might tie with `t`.
template <class Time>
Time tie_bound(Time t) {
  if constexpr (std::is_same_v<Time, std::int64_t>) {
    return t;
  } else {
    return t + 1e-9 * std::abs(t);
  }
}

// Canonical optimal path into `target`: walk back through settled
// predecessors that realise g, preferring the step that entered moving east,
// then north, west, south.
template <class Time, class Field>
Geodesic backtrack(const Search<Time, Field>& search, Vertex target) {
  const Region& r = search.region();
  static constexpr Vertex kBack[4] = {{-1, 0}, {0, -1}, {1, 0}, {0, 1}};
  std::vector<Vertex> path{target};
  std::size_t cur = r.index(target);
  while (search.order(cur) != 0) {
    const Vertex v = r.vertex(cur);
    bool found = false;
    for (const Vertex back : kBack) {
      const Vertex u = v + back;
      if (!r.contains(u)) continue;
      const auto ui = r.index(u);
      if (!search.settled(ui) || search.order(ui) >= search.order(cur)) continue;
      if (search.g(ui) + edge_cost<Time>(search.field(), edge_between(u, v)) == search.g(cur)) {
        path.push_back(u);
        cur = ui;
        found = true;
        break;
      }
    }
    if (!found) throw std::logic_error("geodesic backtrack found no predecessor");
  }
  std::reverse(path.begin(), path.end());
  return {std::move(path), to_time(search.field().quantization(), search.g(r.index(target)))};
}

inline void require_inside(const Region& r, Vertex v, const char* what) {
  if (!r.contains(v)) {
    throw std::invalid_argument(std::string(what) + " " + to_string(v) + " outside region " +
                                to_string(r));
  }
}

template <class Time, class Field>
PassageTimeMap passage_times_impl(const Field& f, const Region& r, Vertex source) {
  Search<Time, Field> s(f, r, source, Goal::none());
  s.settle_all();
  PassageTimeMap out{source, r, std::vector<double>(r.size())};
  for (std::size_t i = 0; i < r.size(); ++i) out.times[i] = to_time(f.quantization(), s.g(i));
  return out;
}

template <class Time, class Field>
double passage_time_impl(const Field& f, const Region& r, Vertex source, Vertex target,
                         Boundary b) {
  require_inside(r, target, "target");
  Search<Time, Field> s(f, r, source, Goal::to(target));
  const auto t_idx = r.index(target);
  s.advance([t_idx](std::size_t i) { return i == t_idx; });
  const Time t = s.g(t_idx);
  if (b == Boundary::Certify && s.min_boundary_key() < t) throw RegionTooSmall(r);
  return to_time(f.quantization(), t);
}

template <class Time, class Field>
Geodesic geodesic_impl(const Field& f, const Region& r, Vertex source, Vertex target,
                       Boundary b) {
  require_inside(r, target, "target");
  Search<Time, Field> s(f, r, source, Goal::to(target));
  const auto t_idx = r.index(target);
  s.advance([t_idx](std::size_t i) { return i == t_idx; });
  if (b == Boundary::Certify) {
    const Time t = s.g(t_idx);
    s.settle_all(tie_bound(t));
    if (s.min_boundary_key() <= tie_bound(t)) throw RegionTooSmall(r);
  }
  return backtrack(s, target);
}

template <class Time, class Field>
OptimalVertexSet optimal_vertex_set_impl(const Field& f, const Region& r, Vertex source,
                                         Vertex target, Boundary b) {
  require_inside(r, target, "target");
  Search<Time, Field> fwd(f, r, source, Goal::to(target));
  const auto t_idx = r.index(target);
  fwd.advance([t_idx](std::size_t i) { return i == t_idx; });
  const Time total = fwd.g(t_idx);
  const Time bound = tie_bound(total);
  fwd.settle_all(bound);
  Search<Time, Field> bwd(f, r, target, Goal::to(source));
  bwd.settle_all(bound);
  if (b == Boundary::Certify &&
      (fwd.min_boundary_key() <= bound || bwd.min_boundary_key() <= bound)) {
    throw RegionTooSmall(r);
  }
  OptimalVertexSet out;
  out.source = source;
  out.target = target;
  out.time = to_time(f.quantization(), total);
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (fwd.settled(i) && bwd.settled(i) && times_equal(fwd.g(i) + bwd.g(i), total)) {
      out.members.push_back(r.vertex(i));
    }
  }
  std::sort(out.members.begin(), out.members.end());
  out.witness = backtrack(fwd, target);
  return out;
}

template <class Time, class Field>
double point_to_line_time_impl(const Field& f, const Region& r, Vertex source, int line_x,
                               Boundary b) {
  if (source.x > line_x) throw std::invalid_argument("point_to_line_time: source lies right of the line");
  if (line_x > r.xmax) throw RegionTooSmall(r);
  Search<Time, Field> s(f, r, source, Goal::line(line_x));
  const auto hit = s.advance([&](std::size_t i) { return r.vertex(i).x == line_x; });
  const Time t = s.g(*hit);
  if (b == Boundary::Certify && s.min_boundary_key() < t) throw RegionTooSmall(r);
  return to_time(f.quantization(), t);
}

}  // namespace detail

// Dispatch on the law: exact ticks for atomic laws, doubles otherwise.
#define FPP_DISPATCH(field, call)                                                   \
  ((field).quantization() ? detail::call<std::int64_t, Field> : detail::call<double, Field>)

// T(source, .) over the whole box (paths restricted to the box).
template <EdgeWeightSource Field>
PassageTimeMap passage_times(const Field& field, const Region& region, Vertex source) {
  return FPP_DISPATCH(field, passage_times_impl)(field, region, source);
}

// T(source, target) for a single pair.
template <EdgeWeightSource Field>
double passage_time(const Field& field, const Region& region, Vertex source, Vertex target,
                    Boundary boundary = Boundary::Restrict) {
  return FPP_DISPATCH(field, passage_time_impl)(field, region, source, target, boundary);
}

template <EdgeWeightSource Field>
Geodesic geodesic(const Field& field, const Region& region, Vertex source, Vertex target,
                  Boundary boundary = Boundary::Restrict) {
  return FPP_DISPATCH(field, geodesic_impl)(field, region, source, target, boundary);
}

// Members via T(s,v) + T(v,t) = T(s,t) from a forward and a backward search.
template <EdgeWeightSource Field>
OptimalVertexSet optimal_vertex_set(const Field& field, const Region& region, Vertex source,
                                    Vertex target, Boundary boundary = Boundary::Restrict) {
  return FPP_DISPATCH(field, optimal_vertex_set_impl)(field, region, source, target, boundary);
}

// min over v on {x = lineX} of T(source, v).
template <EdgeWeightSource Field>
double point_to_line_time(const Field& field, const Region& region, Vertex source, int line_x,
                          Boundary boundary = Boundary::Restrict) {
  return FPP_DISPATCH(field, point_to_line_time_impl)(field, region, source, line_x, boundary);
}

#undef FPP_DISPATCH

// Queries on the unclipped lattice: start from a box around the endpoints and
// double its margin until the clip certificate holds.
struct PlaneOptions {
  double margin_fraction = 0.25;  // initial margin, relative to the endpoint separation
  int min_margin = 8;
  int max_doublings = 20;
};

namespace detail {

template <class Result, class Query>
Result with_growing_box(Vertex a, Vertex b, const PlaneOptions& opt, Query&& query) {
  const std::int64_t sep = std::max(std::abs(std::int64_t{a.x} - b.x), std::abs(std::int64_t{a.y} - b.y));
  auto margin = std::max<std::int64_t>(opt.min_margin,
                                       static_cast<std::int64_t>(std::ceil(opt.margin_fraction * sep)));
  for (int attempt = 0;; ++attempt) {
    const Region box = Region::bounding(a, b, static_cast<int>(margin));
    try {
      return query(box);
    } catch (const RegionTooSmall&) {
      if (attempt >= opt.max_doublings) throw;
      margin *= 2;
    }
  }
}

}  // namespace detail

template <EdgeWeightSource Field>
double plane_passage_time(const Field& field, Vertex source, Vertex target,
                          const PlaneOptions& opt = {}) {
  return detail::with_growing_box<double>(source, target, opt, [&](const Region& box) {
    return passage_time(field, box, source, target, Boundary::Certify);
  });
}

template <EdgeWeightSource Field>
Geodesic plane_geodesic(const Field& field, Vertex source, Vertex target,
                        const PlaneOptions& opt = {}) {
  return detail::with_growing_box<Geodesic>(source, target, opt, [&](const Region& box) {
    return geodesic(field, box, source, target, Boundary::Certify);
  });
}

template <EdgeWeightSource Field>
OptimalVertexSet plane_optimal_vertex_set(const Field& field, Vertex source, Vertex target,
                                          const PlaneOptions& opt = {}) {
  return detail::with_growing_box<OptimalVertexSet>(source, target, opt, [&](const Region& box) {
    return optimal_vertex_set(field, box, source, target, Boundary::Certify);
  });
}

template <EdgeWeightSource Field>
double plane_point_to_line_time(const Field& field, Vertex source, int line_x,
                                const PlaneOptions& opt = {}) {
  const Vertex foot{line_x, source.y};
  return detail::with_growing_box<double>(source, foot, opt, [&](const Region& box) {
    return point_to_line_time(field, box, source, line_x, Boundary::Certify);
  });
}

}  // namespace fpp
