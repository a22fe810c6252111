#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace fpp {

struct Vertex {
  int x = 0;
  int y = 0;

  friend constexpr auto operator<=>(const Vertex&, const Vertex&) = default;
};

inline constexpr Vertex operator+(Vertex a, Vertex b) { return {a.x + b.x, a.y + b.y}; }
inline constexpr Vertex operator-(Vertex a, Vertex b) { return {a.x - b.x, a.y - b.y}; }

inline std::int64_t l1_distance(Vertex a, Vertex b) {
  return std::abs(std::int64_t{a.x} - b.x) + std::abs(std::int64_t{a.y} - b.y);
}

inline std::string to_string(Vertex v) {
  return "(" + std::to_string(v.x) + "," + std::to_string(v.y) + ")";
}

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Axis-aligned lattice box, bounds inclusive.
struct Region {
  int xmin = 0;
  int xmax = 0;
  int ymin = 0;
  int ymax = 0;

  friend constexpr bool operator==(const Region&, const Region&) = default;

  constexpr bool empty() const { return xmax < xmin || ymax < ymin; }
  constexpr int width() const { return xmax - xmin + 1; }
  constexpr int height() const { return ymax - ymin + 1; }
  constexpr std::size_t size() const {
    return empty() ? 0 : static_cast<std::size_t>(width()) * static_cast<std::size_t>(height());
  }
  constexpr bool contains(Vertex v) const {
    return v.x >= xmin && v.x <= xmax && v.y >= ymin && v.y <= ymax;
  }
  constexpr bool on_boundary(Vertex v) const {
    return v.x == xmin || v.x == xmax || v.y == ymin || v.y == ymax;
  }
  constexpr std::size_t index(Vertex v) const {
    return static_cast<std::size_t>(v.y - ymin) * static_cast<std::size_t>(width()) +
           static_cast<std::size_t>(v.x - xmin);
  }
  constexpr Vertex vertex(std::size_t idx) const {
    const auto w = static_cast<std::size_t>(width());
    return {xmin + static_cast<int>(idx % w), ymin + static_cast<int>(idx / w)};
  }

  static constexpr Region bounding(Vertex a, Vertex b, int margin = 0) {
    return {std::min(a.x, b.x) - margin, std::max(a.x, b.x) + margin,
            std::min(a.y, b.y) - margin, std::max(a.y, b.y) + margin};
  }
};

inline std::string to_string(const Region& r) {
  return "[" + std::to_string(r.xmin) + "," + std::to_string(r.xmax) + "]x[" +
         std::to_string(r.ymin) + "," + std::to_string(r.ymax) + "]";
}

// Nearest lattice vertex. An exact half breaks toward the smaller coordinate,
// which makes the choice the lexicographically smallest of the tied vertices.
inline Vertex continuum_lift(Point p) {
  auto lift = [](double c) {
    const double f = std::floor(c);
    return static_cast<int>(c - f > 0.5 ? f + 1.0 : f);
  };
  return {lift(p.x), lift(p.y)};
}

// Box [-marginFactor*n, marginFactor*n]^2.
inline Region clip_region(int n, double margin_factor) {
  if (n < 1) throw std::invalid_argument("clip_region: n must be >= 1");
  if (!(margin_factor >= 1.0)) throw std::invalid_argument("clip_region: marginFactor must be >= 1");
  const int half = static_cast<int>(std::ceil(margin_factor * n));
  return {-half, half, -half, half};
}

}  // namespace fpp
