#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/linestring.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>

#include "safetycube/pcr.h"

namespace safetycube {

namespace bg = boost::geometry;

namespace {

using BPoint = bg::model::d2::point_xy<double>;
using BPolygon = bg::model::polygon<BPoint, false>;  // counter-clockwise
using BMulti = bg::model::multi_polygon<BPolygon>;
using BLine = bg::model::linestring<BPoint>;

// Used when the inputs would otherwise collapse to a zero-area polygon.
constexpr double kMinFootprint = 1e-3;
constexpr double kTiny = 1e-9;

Polygon to_polygon(const BPolygon& poly) {
  Polygon out;
  const auto& ring = poly.outer();
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const Vec2 p{ring[i].x(), ring[i].y()};
    if (!out.empty() && distance(out.back(), p) < 1e-9) continue;
    out.push_back(p);
  }
  while (out.size() > 1 && distance(out.front(), out.back()) < 1e-9) out.pop_back();
  if (signed_area(out) < 0.0) std::reverse(out.begin(), out.end());
  return out;
}

template <typename Geometry>
Polygon buffered(const Geometry& geom, double radius, int segments) {
  bg::strategy::buffer::distance_symmetric<double> dist(radius);
  bg::strategy::buffer::join_round join(segments);
  bg::strategy::buffer::end_round end(segments);
  bg::strategy::buffer::point_circle circle(segments);
  bg::strategy::buffer::side_straight side;
  BMulti result;
  bg::buffer(geom, result, dist, side, join, end, circle);
  if (result.empty()) return {};
  const auto largest = std::max_element(result.begin(), result.end(), [](const BPolygon& a, const BPolygon& b) {
    return bg::area(a) < bg::area(b);
  });
  return to_polygon(*largest);
}

Polygon disk(Vec2 c, double r, int segments) {
  // Same discretisation as the buffer strategies so disk and buffered areas stay comparable.
  BPoint p(c.x, c.y);
  return buffered(p, r, segments);
}

Vec2 polar(Vec2 c, double r, double a) { return {c.x + r * std::cos(a), c.y + r * std::sin(a)}; }

}  // namespace

Pcra build_pcra(const KinematicState& state, const IntervalEstimate& ivl, double h, double inflation, int arc_points,
                int circle_segments) {
  arc_points = std::max(arc_points, 2);
  const Vec2 c = state.position;
  const double r_lo = std::max(0.0, h * ivl.v_lo);
  const double r_hi = std::max(r_lo, h * ivl.v_hi);
  const double span = std::min(std::max(ivl.theta_hi - ivl.theta_lo, 0.0), 2.0 * std::numbers::pi);

  if (r_hi < inflation) return {h, disk(c, inflation, circle_segments)};

  const double grow = inflation > 0.0 ? inflation : kMinFootprint;
  const bool full_turn = span >= 2.0 * std::numbers::pi - 1e-9;
  const bool thin_radial = r_hi - r_lo <= kTiny;
  const bool thin_angular = span * r_hi <= kTiny;

  if (r_hi <= kTiny) return {h, disk(c, grow, circle_segments)};
  if (full_turn) {
    // A full heading turn closes the annulus; its hole is filled.
    const int sides = std::max(circle_segments, 2 * arc_points);
    if (inflation <= 0.0) return {h, regular_polygon(c, r_hi, sides)};
    BPoint p(c.x, c.y);
    return {h, buffered(p, r_hi + inflation, sides)};
  }
  if (thin_angular && thin_radial) {
    BPoint p(polar(c, r_hi, ivl.theta_lo).x, polar(c, r_hi, ivl.theta_lo).y);
    return {h, buffered(p, grow, circle_segments)};
  }
  if (thin_angular) {
    BLine line;
    const Vec2 a = polar(c, r_lo, ivl.theta_lo);
    const Vec2 b = polar(c, r_hi, ivl.theta_lo);
    line.push_back({a.x, a.y});
    line.push_back({b.x, b.y});
    return {h, buffered(line, grow, circle_segments)};
  }

  const int n = arc_points;
  if (thin_radial) {
    BLine arc;
    for (int i = 0; i < n; ++i) {
      const Vec2 p = polar(c, r_hi, ivl.theta_lo + span * i / (n - 1));
      arc.push_back({p.x, p.y});
    }
    return {h, buffered(arc, grow, circle_segments)};
  }

  // Outer arc counter-clockwise, then inner arc back (or the apex when the sector reaches the center).
  Polygon sector;
  for (int i = 0; i < n; ++i) sector.push_back(polar(c, r_hi, ivl.theta_lo + span * i / (n - 1)));
  if (r_lo <= kTiny) {
    sector.push_back(c);
  } else {
    for (int i = n - 1; i >= 0; --i) sector.push_back(polar(c, r_lo, ivl.theta_lo + span * i / (n - 1)));
  }
  if (inflation <= 0.0) return {h, sector};

  BPolygon bp;
  for (const auto& p : sector) bp.outer().push_back({p.x, p.y});
  bp.outer().push_back({sector.front().x, sector.front().y});
  bg::correct(bp);
  return {h, buffered(bp, inflation, circle_segments)};
}

}  // namespace safetycube
