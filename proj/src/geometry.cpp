#include "safetycube/geometry.h"

#include <algorithm>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace safetycube {

double signed_area(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s += cross(poly[i], poly[(i + 1) % n]);
  }
  return 0.5 * s;
}

double area(std::span<const Vec2> poly) { return std::abs(signed_area(poly)); }

Vec2 centroid(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  const double a = signed_area(poly);
  if (n == 0) return {};
  if (std::abs(a) < 1e-15) {
    Vec2 m;
    for (const auto& p : poly) m = m + p;
    return m * (1.0 / static_cast<double>(n));
  }
  double cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 p = poly[i];
    const Vec2 q = poly[(i + 1) % n];
    const double c = cross(p, q);
    cx += (p.x + q.x) * c;
    cy += (p.y + q.y) * c;
  }
  return {cx / (6.0 * a), cy / (6.0 * a)};
}

SegmentProjection project_on_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  const Vec2 q = a + ab * t;
  return {q, t, distance(p, q)};
}

double distance_to_boundary(Vec2 p, std::span<const Vec2> poly) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    best = std::min(best, project_on_segment(p, poly[i], poly[(i + 1) % n]).dist);
  }
  return best;
}

bool contains(std::span<const Vec2> poly, Vec2 p) {
  const std::size_t n = poly.size();
  if (n < 3) return n > 0 && distance_to_boundary(p, poly) < kBoundaryTolerance;
  if (distance_to_boundary(p, poly) < kBoundaryTolerance) return true;
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

double distance_to_polygon(Vec2 p, std::span<const Vec2> poly) {
  if (contains(poly, p)) return 0.0;
  return distance_to_boundary(p, poly);
}

namespace {

int orientation(Vec2 a, Vec2 b, Vec2 c) {
  const double v = cross(b - a, c - a);
  const double scale = std::max({1.0, norm(b - a), norm(c - a)});
  if (std::abs(v) <= 1e-12 * scale * scale) return 0;
  return v > 0 ? 1 : -1;
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) - 1e-12 <= p.x && p.x <= std::max(a.x, b.x) + 1e-12 &&
         std::min(a.y, b.y) - 1e-12 <= p.y && p.y <= std::max(a.y, b.y) + 1e-12;
}

}  // namespace

bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

std::optional<SegmentHit> segment_intersection(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const Vec2 r = p2 - p1;
  const Vec2 s = q2 - q1;
  const double denom = cross(r, s);
  if (std::abs(denom) < 1e-15) return std::nullopt;
  const double t = cross(q1 - p1, s) / denom;
  const double u = cross(q1 - p1, r) / denom;
  constexpr double eps = 1e-12;
  if (t < -eps || t > 1.0 + eps || u < -eps || u > 1.0 + eps) return std::nullopt;
  return SegmentHit{p1 + r * t, std::clamp(t, 0.0, 1.0), std::clamp(u, 0.0, 1.0)};
}

bool is_simple(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (const auto& p : poly) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (poly[i] == poly[(i + 1) % n]) return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a1 = poly[i];
    const Vec2 a2 = poly[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      const Vec2 b1 = poly[j];
      const Vec2 b2 = poly[(j + 1) % n];
      if (adjacent) {
        // Adjacent edges may only share their common vertex; a fold-back overlap is a violation.
        const Vec2 shared = (j == i + 1) ? a2 : a1;
        const Vec2 other_a = (j == i + 1) ? a1 : a2;
        const Vec2 other_b = (j == i + 1) ? b2 : b1;
        if (orientation(shared, other_a, other_b) == 0 &&
            dot(other_a - shared, other_b - shared) > 0.0) {
          return false;
        }
        continue;
      }
      if (segments_intersect(a1, a2, b1, b2)) return false;
    }
  }
  return true;
}

bool polygons_intersect(std::span<const Vec2> a, std::span<const Vec2> b) {
  if (!is_simple(a) || !is_simple(b)) {
    throw std::invalid_argument("polygons_intersect: input polygon is not simple");
  }
  const BoundingBox ba = bounding_box(a);
  const BoundingBox bb = bounding_box(b);
  if (ba.hi.x < bb.lo.x || bb.hi.x < ba.lo.x || ba.hi.y < bb.lo.y || bb.hi.y < ba.lo.y) {
    return false;
  }
  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  for (std::size_t i = 0; i < na; ++i) {
    const Vec2 a1 = a[i];
    const Vec2 a2 = a[(i + 1) % na];
    for (std::size_t j = 0; j < nb; ++j) {
      if (segments_intersect(a1, a2, b[j], b[(j + 1) % nb])) return true;
    }
  }
  return contains(a, b[0]) || contains(b, a[0]);
}

BoundingBox bounding_box(std::span<const Vec2> pts) {
  BoundingBox box{{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()},
                  {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()}};
  for (const auto& p : pts) {
    box.lo.x = std::min(box.lo.x, p.x);
    box.lo.y = std::min(box.lo.y, p.y);
    box.hi.x = std::max(box.hi.x, p.x);
    box.hi.y = std::max(box.hi.y, p.y);
  }
  return box;
}

Polygon regular_polygon(Vec2 center, double radius, int sides) {
  Polygon out;
  out.reserve(static_cast<std::size_t>(sides));
  for (int i = 0; i < sides; ++i) {
    const double a = 2.0 * std::numbers::pi * i / sides;
    out.push_back({center.x + radius * std::cos(a), center.y + radius * std::sin(a)});
  }
  return out;
}

}  // namespace safetycube
