#include "safetycube/scene.h"

#include <cmath>
#include <set>
#include <stdexcept>

namespace safetycube {

std::string_view to_string(ObjectType t) { return t == ObjectType::vehicle ? "vehicle" : "pedestrian"; }

ObjectType parse_object_type(std::string_view s) {
  if (s == "vehicle") return ObjectType::vehicle;
  if (s == "pedestrian") return ObjectType::pedestrian;
  throw std::invalid_argument("unknown object_type: " + std::string(s));
}

std::string_view to_string(PedestrianZone z) {
  switch (z) {
    case PedestrianZone::sidewalk: return "sidewalk";
    case PedestrianZone::crosswalk: return "crosswalk";
    case PedestrianZone::cia: return "cia";
    case PedestrianZone::other: return "other";
  }
  return "other";
}

std::string_view to_string(VehicleZone z) {
  switch (z) {
    case VehicleZone::before_crosswalk: return "before_crosswalk";
    case VehicleZone::on_crosswalk: return "on_crosswalk";
    case VehicleZone::after_crosswalk: return "after_crosswalk";
  }
  return "before_crosswalk";
}

PedestrianZone classify_pedestrian_zone(Vec2 p, const SiteGeometry& g) {
  if (contains(g.crosswalk, p)) return PedestrianZone::crosswalk;
  if (contains(g.cia, p)) return PedestrianZone::cia;
  for (const auto& sw : g.sidewalks) {
    if (contains(sw, p)) return PedestrianZone::sidewalk;
  }
  return PedestrianZone::other;
}

VehicleZone classify_vehicle_zone(Vec2 p, const SiteGeometry& g) {
  if (contains(g.crosswalk, p)) return VehicleZone::on_crosswalk;
  const double proj = dot(p - centroid(g.crosswalk), g.approach_axis);
  return proj < 0.0 ? VehicleZone::before_crosswalk : VehicleZone::after_crosswalk;
}

namespace {

bool strictly_inside(std::span<const Vec2> poly, Vec2 p) {
  return contains(poly, p) && distance_to_boundary(p, poly) >= kBoundaryTolerance;
}

bool proper_crossing(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const double d1 = cross(p2 - p1, q1 - p1);
  const double d2 = cross(p2 - p1, q2 - p1);
  const double d3 = cross(q2 - q1, p1 - q1);
  const double d4 = cross(q2 - q1, p2 - q1);
  return ((d1 > 1e-12 && d2 < -1e-12) || (d1 < -1e-12 && d2 > 1e-12)) &&
         ((d3 > 1e-12 && d4 < -1e-12) || (d3 < -1e-12 && d4 > 1e-12));
}

bool interiors_overlap(std::span<const Vec2> a, std::span<const Vec2> b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (proper_crossing(a[i], a[(i + 1) % a.size()], b[j], b[(j + 1) % b.size()])) return true;
    }
  }
  for (const auto& p : a) {
    if (strictly_inside(b, p)) return true;
  }
  for (const auto& p : b) {
    if (strictly_inside(a, p)) return true;
  }
  return strictly_inside(b, centroid(a)) || strictly_inside(a, centroid(b));
}

}  // namespace

std::vector<std::string> validate_geometry(const SiteGeometry& g) {
  std::vector<std::string> out;
  if (!is_simple(g.crosswalk)) out.emplace_back("crosswalk polygon is not simple");
  if (!is_simple(g.cia)) out.emplace_back("cia polygon is not simple");
  for (std::size_t i = 0; i < g.sidewalks.size(); ++i) {
    if (!is_simple(g.sidewalks[i])) out.push_back("sidewalk " + std::to_string(i) + " polygon is not simple");
  }
  if (out.empty() && interiors_overlap(g.crosswalk, g.cia)) {
    out.emplace_back("cia and crosswalk interiors overlap");
  }
  if (!(std::abs(norm(g.approach_axis) - 1.0) <= 1e-9)) out.emplace_back("approach_axis is not a unit vector");
  return out;
}

std::vector<std::string> validate_scene(const Scene& s, const SiteGeometry& g, const ValidationOptions& opts) {
  std::vector<std::string> out;
  if (s.scene_code.empty()) out.emplace_back("scene_code is empty");
  if (!(std::isfinite(s.fps) && s.fps > 0.0)) out.emplace_back("fps must be positive");
  if (s.tracks.empty()) out.emplace_back("scene has no tracks");

  std::vector<Vec2> geo_pts(g.crosswalk.begin(), g.crosswalk.end());
  geo_pts.insert(geo_pts.end(), g.cia.begin(), g.cia.end());
  for (const auto& sw : g.sidewalks) geo_pts.insert(geo_pts.end(), sw.begin(), sw.end());
  BoundingBox box = bounding_box(geo_pts);
  if (geo_pts.empty()) box = {{0.0, 0.0}, {0.0, 0.0}};
  box.lo = box.lo - Vec2{opts.bbox_margin_m, opts.bbox_margin_m};
  box.hi = box.hi + Vec2{opts.bbox_margin_m, opts.bbox_margin_m};

  std::set<std::string> ids;
  for (std::size_t ti = 0; ti < s.tracks.size(); ++ti) {
    const auto& tr = s.tracks[ti];
    const std::string prefix = "track " + std::to_string(ti) + ": ";
    if (tr.object_id.empty()) out.push_back(prefix + "object_id is empty");
    if (!ids.insert(tr.object_id).second) out.push_back(prefix + "duplicate object_id " + tr.object_id);
    if (tr.points.size() < 2) {
      out.push_back(prefix + "fewer than 2 points");
    }
    for (std::size_t i = 0; i < tr.points.size(); ++i) {
      const auto& p = tr.points[i];
      const std::string at = " at index " + std::to_string(i);
      if (!std::isfinite(p.t) || p.t < 0.0) out.push_back(prefix + "time negative or non-finite" + at);
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        out.push_back(prefix + "non-finite coordinate" + at);
      } else if (!box.contains(p.pos())) {
        out.push_back(prefix + "point outside site bounding box" + at);
      }
      if (i == 0) continue;
      const double dt = p.t - tr.points[i - 1].t;
      if (!(dt > 0.0)) {
        out.push_back(prefix + "time not strictly increasing" + at);
      } else if (s.fps > 0.0 && std::abs(dt - 1.0 / s.fps) > opts.dt_tolerance_s) {
        out.push_back(prefix + "time step differs from 1/fps" + at);
      }
    }
  }
  return out;
}

}  // namespace safetycube
