#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "safetycube/geometry.h"
#include "safetycube/timestamp.h"

namespace safetycube {

enum class ObjectType { vehicle, pedestrian };

std::string_view to_string(ObjectType t);
ObjectType parse_object_type(std::string_view s);

/// One sample of a top-view trajectory. `t` is seconds since scene start, x/y in site meters.
struct TrackPoint {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;

  Vec2 pos() const { return {x, y}; }
  bool operator==(const TrackPoint&) const = default;
};

struct ObjectTrack {
  std::string object_id;
  ObjectType object_type = ObjectType::vehicle;
  std::vector<TrackPoint> points;
};

struct Scene {
  std::string scene_code;
  std::string spot_id;
  Timestamp start_time;
  double fps = 30.0;
  std::vector<ObjectTrack> tracks;
};

/// Frame index of a sample on the scene's fixed-rate grid.
inline long frame_index(double t, double fps) { return std::lround(t * fps); }

struct SiteGeometry {
  Polygon crosswalk;
  Polygon cia;  // crosswalk influenced area
  std::vector<Polygon> sidewalks;
  Vec2 approach_axis{1.0, 0.0};  // unit vector of vehicle travel
  Segment stop_line;
};

struct SiteMetadata {
  std::string spot_id;
  std::string name;
  double crosswalk_length_m = 0.0;
  bool school_zone = false;
  bool speed_camera = false;
  bool fence = false;
  bool red_urethane = false;
  int num_lanes = 1;
  bool signalized = false;
  double speed_limit_kmh = 30.0;
  std::string neighborhood;
  std::string district;
  std::string city;
  std::string province;
};

struct Site {
  SiteMetadata meta;
  SiteGeometry geometry;
};

enum class PedestrianZone { sidewalk, crosswalk, cia, other };
enum class VehicleZone { before_crosswalk, on_crosswalk, after_crosswalk };

std::string_view to_string(PedestrianZone z);
std::string_view to_string(VehicleZone z);

/// First containing region in the order crosswalk, cia, sidewalk; `other` when none contains p.
PedestrianZone classify_pedestrian_zone(Vec2 p, const SiteGeometry& g);
inline PedestrianZone classify_pedestrian_zone(const TrackPoint& p, const SiteGeometry& g) {
  return classify_pedestrian_zone(p.pos(), g);
}

/// on_crosswalk when inside; otherwise the sign of the projection of (p - crosswalk centroid)
/// on the approach axis picks before (negative) or after (non-negative).
VehicleZone classify_vehicle_zone(Vec2 p, const SiteGeometry& g);
inline VehicleZone classify_vehicle_zone(const TrackPoint& p, const SiteGeometry& g) {
  return classify_vehicle_zone(p.pos(), g);
}

/// Geometry invariant violations (empty when valid).
std::vector<std::string> validate_geometry(const SiteGeometry& g);

struct ValidationOptions {
  double bbox_margin_m = 200.0;
  double dt_tolerance_s = 1e-6;
};

/// Scene, track and point invariant violations; coordinates must also lie within the
/// geometry's bounding box grown by `bbox_margin_m`.
std::vector<std::string> validate_scene(const Scene& s, const SiteGeometry& g, const ValidationOptions& opts = {});

}  // namespace safetycube
