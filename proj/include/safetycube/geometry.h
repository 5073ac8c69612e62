#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace safetycube {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Vec2&) const = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

// Vertices in order, implicitly closed (last vertex connects back to first).
using Polygon = std::vector<Vec2>;

struct Segment {
  Vec2 a;
  Vec2 b;
};

// Points whose distance to an edge is below this count as inside.
inline constexpr double kBoundaryTolerance = 1e-9;

double signed_area(std::span<const Vec2> poly);
double area(std::span<const Vec2> poly);
Vec2 centroid(std::span<const Vec2> poly);

/// Closest point on segment [a, b] to p, plus its parameter in [0, 1].
struct SegmentProjection {
  Vec2 point;
  double param = 0.0;
  double dist = 0.0;
};
SegmentProjection project_on_segment(Vec2 p, Vec2 a, Vec2 b);

double distance_to_boundary(Vec2 p, std::span<const Vec2> poly);

/// Ray-casting containment; points within kBoundaryTolerance of an edge are inside.
bool contains(std::span<const Vec2> poly, Vec2 p);

/// Euclidean distance from p to the polygon region: 0 inside, else distance to the nearest edge.
double distance_to_polygon(Vec2 p, std::span<const Vec2> poly);

/// Closed-segment intersection test, including collinear overlap and touching endpoints.
bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2);

/// Proper or touching intersection point of two segments; nullopt when disjoint or collinear.
struct SegmentHit {
  Vec2 point;
  double t = 0.0;  // parameter along the first segment
  double u = 0.0;  // parameter along the second segment
};
std::optional<SegmentHit> segment_intersection(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2);

/// True when no two non-adjacent edges intersect, vertices are finite and there are at least 3 of them.
bool is_simple(std::span<const Vec2> poly);

/// Region intersection of two simple polygons (boundaries cross, or one holds a vertex of the other).
/// Throws std::invalid_argument on a non-simple input.
bool polygons_intersect(std::span<const Vec2> a, std::span<const Vec2> b);

struct BoundingBox {
  Vec2 lo;
  Vec2 hi;
  bool contains(Vec2 p) const { return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y; }
};
BoundingBox bounding_box(std::span<const Vec2> pts);

/// Regular polygon with `sides` vertices approximating a circle.
Polygon regular_polygon(Vec2 center, double radius, int sides);

}  // namespace safetycube
