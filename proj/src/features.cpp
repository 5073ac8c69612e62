#include "safetycube/features.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "safetycube/kinematics.h"

namespace safetycube {

std::string_view to_string(SceneType t) {
  switch (t) {
    case SceneType::car_only: return "car_only";
    case SceneType::pedestrian_only: return "pedestrian_only";
    case SceneType::interactive: return "interactive";
  }
  return "car_only";
}

std::string_view to_string(Acceleration a) {
  switch (a) {
    case Acceleration::acceleration: return "acceleration";
    case Acceleration::deceleration: return "deceleration";
    case Acceleration::no_change: return "no_change";
  }
  return "no_change";
}

std::string_view to_string(StopBehavior s) { return s == StopBehavior::stop ? "stop" : "no_stop"; }
std::string_view to_string(RelativePosition r) { return r == RelativePosition::front ? "front" : "behind"; }

SceneType parse_scene_type(std::string_view s) {
  if (s == "car_only") return SceneType::car_only;
  if (s == "pedestrian_only") return SceneType::pedestrian_only;
  if (s == "interactive") return SceneType::interactive;
  throw std::invalid_argument("unknown scene type: " + std::string(s));
}

StopBehavior parse_stop_behavior(std::string_view s) {
  if (s == "stop") return StopBehavior::stop;
  if (s == "no_stop" || s == "no stop") return StopBehavior::no_stop;
  throw std::invalid_argument("unknown stop behavior: " + std::string(s));
}

const VehicleFeatures* FeatureRecord::primary_vehicle() const {
  if (interaction) {
    for (const auto& v : vehicles) {
      if (v.object_id == interaction->vehicle_id) return &v;
    }
  }
  return vehicles.empty() ? nullptr : &vehicles.front();
}

std::optional<double> FeatureRecord::average_car_speed_kmh() const {
  const auto* v = primary_vehicle();
  if (!v) return std::nullopt;
  return v->average_speed_kmh;
}

std::optional<StopBehavior> FeatureRecord::stop_behavior() const {
  const auto* v = primary_vehicle();
  if (!v) return std::nullopt;
  return v->stop;
}

std::vector<std::pair<std::size_t, std::size_t>> overlapping_frames(const ObjectTrack& a, const ObjectTrack& b,
                                                                    double fps) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t i = 0, j = 0;
  while (i < a.points.size() && j < b.points.size()) {
    const long fa = frame_index(a.points[i].t, fps);
    const long fb = frame_index(b.points[j].t, fps);
    if (fa == fb) {
      out.emplace_back(i++, j++);
    } else if (fa < fb) {
      ++i;
    } else {
      ++j;
    }
  }
  return out;
}

SceneTypeResult classify_scene_type(const Scene& s) {
  if (s.tracks.empty()) throw std::invalid_argument("scene " + s.scene_code + " has no tracks");
  bool has_vehicle = false, has_pedestrian = false;
  for (const auto& t : s.tracks) {
    (t.object_type == ObjectType::vehicle ? has_vehicle : has_pedestrian) = true;
  }
  if (!has_pedestrian) return {SceneType::car_only, false};
  if (!has_vehicle) return {SceneType::pedestrian_only, false};
  for (const auto& v : s.tracks) {
    if (v.object_type != ObjectType::vehicle) continue;
    for (const auto& p : s.tracks) {
      if (p.object_type == ObjectType::pedestrian && !overlapping_frames(v, p, s.fps).empty()) {
        return {SceneType::interactive, false};
      }
    }
  }
  const auto first = std::min_element(s.tracks.begin(), s.tracks.end(), [](const ObjectTrack& a, const ObjectTrack& b) {
    return a.points.front().t < b.points.front().t;
  });
  return {first->object_type == ObjectType::vehicle ? SceneType::car_only : SceneType::pedestrian_only, true};
}

std::vector<double> speed_series(const ObjectTrack& track, int window) {
  if (track.points.size() < 2) throw std::invalid_argument("speed_series needs at least 2 samples");
  const auto pos = smooth_positions(track.points, window);
  const auto vel = finite_difference_velocity(track.points, pos);
  std::vector<double> out(vel.size());
  std::transform(vel.begin(), vel.end(), out.begin(), [](Vec2 v) { return norm(v) * 3.6; });
  return out;
}

std::vector<Acceleration> acceleration_series(std::span<const double> speeds_kmh, double fps, double threshold) {
  std::vector<Acceleration> out;
  for (std::size_t i = 1; i < speeds_kmh.size(); ++i) {
    const double a = (speeds_kmh[i] - speeds_kmh[i - 1]) / 3.6 * fps;
    out.push_back(a > threshold ? Acceleration::acceleration
                                : (a < -threshold ? Acceleration::deceleration : Acceleration::no_change));
  }
  return out;
}

std::vector<double> crosswalk_distance_series(const ObjectTrack& track, const SiteGeometry& g) {
  std::vector<double> out;
  out.reserve(track.points.size());
  for (const auto& p : track.points) out.push_back(distance_to_polygon(p.pos(), g.crosswalk));
  return out;
}

std::optional<StopBehavior> stop_behavior(const ObjectTrack& vehicle, const SiteGeometry& g, double v_stop_kmh,
                                          double min_dur_s, int smoothing_window) {
  const auto& pts = vehicle.points;
  if (pts.size() < 2) return std::nullopt;
  std::size_t reach = pts.size();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (classify_vehicle_zone(pts[i], g) != VehicleZone::before_crosswalk) {
      reach = i;
      break;
    }
  }
  if (reach == pts.size()) return std::nullopt;
  const auto speeds = speed_series(vehicle, smoothing_window);
  const double dt = pts[1].t - pts[0].t;
  std::size_t run = 0;
  for (std::size_t i = 0; i < reach; ++i) {
    run = speeds[i] < v_stop_kmh ? run + 1 : 0;
    if (static_cast<double>(run) * dt >= min_dur_s - 1e-9) return StopBehavior::stop;
  }
  return StopBehavior::no_stop;
}

namespace {

// Heading of the vehicle at each sample; motionless samples reuse the last defined heading,
// falling back to the site approach axis.
std::vector<Vec2> vehicle_headings(const ObjectTrack& vehicle, const SiteGeometry& g, int smoothing_window) {
  const auto pos = smooth_positions(vehicle.points, smoothing_window);
  const auto vel = finite_difference_velocity(vehicle.points, pos);
  std::vector<Vec2> out(vel.size(), g.approach_axis);
  std::optional<Vec2> last;
  for (std::size_t i = 0; i < vel.size(); ++i) {
    const double n = norm(vel[i]);
    if (n > 1e-6) last = vel[i] * (1.0 / n);
    if (last) out[i] = *last;
  }
  return out;
}

}  // namespace

std::vector<RelativePosition> relative_position_series(const ObjectTrack& vehicle, const ObjectTrack& pedestrian,
                                                       const SiteGeometry& g, double fps, int smoothing_window) {
  const auto pairs = overlapping_frames(vehicle, pedestrian, fps);
  if (pairs.empty()) throw std::invalid_argument("relative_position_series: tracks do not overlap in time");
  const auto heading = vehicle_headings(vehicle, g, smoothing_window);
  std::vector<RelativePosition> out;
  out.reserve(pairs.size());
  for (const auto& [iv, ip] : pairs) {
    const double proj = dot(pedestrian.points[ip].pos() - vehicle.points[iv].pos(), heading[iv]);
    out.push_back(proj > 0.0 ? RelativePosition::front : RelativePosition::behind);
  }
  return out;
}

std::vector<double> vp_distance_series(const ObjectTrack& vehicle, const ObjectTrack& pedestrian, double fps) {
  const auto pairs = overlapping_frames(vehicle, pedestrian, fps);
  if (pairs.empty()) throw std::invalid_argument("vp_distance_series: tracks do not overlap in time");
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& [iv, ip] : pairs) out.push_back(distance(vehicle.points[iv].pos(), pedestrian.points[ip].pos()));
  return out;
}

std::optional<Vec2> conflict_point(std::span<const TrackPoint> veh, std::span<const TrackPoint> ped,
                                   double d_conflict_m) {
  if (veh.size() < 2 || ped.size() < 2) return std::nullopt;
  for (std::size_t i = 0; i + 1 < ped.size(); ++i) {
    const Vec2 p1 = ped[i].pos(), p2 = ped[i + 1].pos();
    std::optional<SegmentHit> best;
    for (std::size_t j = 0; j + 1 < veh.size(); ++j) {
      const auto hit = segment_intersection(p1, p2, veh[j].pos(), veh[j + 1].pos());
      if (hit && (!best || hit->t < best->t)) best = hit;
    }
    if (best) return best->point;
  }
  // No crossing: nearest pedestrian-path point to the vehicle path.
  double best_d = std::numeric_limits<double>::infinity();
  Vec2 best_p;
  for (std::size_t i = 0; i + 1 < ped.size(); ++i) {
    for (std::size_t j = 0; j + 1 < veh.size(); ++j) {
      const Vec2 a1 = ped[i].pos(), a2 = ped[i + 1].pos(), b1 = veh[j].pos(), b2 = veh[j + 1].pos();
      for (const Vec2 q : {b1, b2}) {
        const auto pr = project_on_segment(q, a1, a2);
        if (pr.dist < best_d) best_d = pr.dist, best_p = pr.point;
      }
      for (const Vec2 q : {a1, a2}) {
        const auto pr = project_on_segment(q, b1, b2);
        if (pr.dist < best_d) best_d = pr.dist, best_p = q;
      }
    }
  }
  if (best_d < d_conflict_m) return best_p;
  return std::nullopt;
}

std::optional<Vec2> crosswalk_entry_point(std::span<const TrackPoint> veh, const SiteGeometry& g) {
  const auto& cw = g.crosswalk;
  for (std::size_t i = 0; i + 1 < veh.size(); ++i) {
    std::optional<SegmentHit> best;
    for (std::size_t j = 0; j < cw.size(); ++j) {
      const auto hit = segment_intersection(veh[i].pos(), veh[i + 1].pos(), cw[j], cw[(j + 1) % cw.size()]);
      if (hit && (!best || hit->t < best->t)) best = hit;
    }
    if (best) return best->point;
  }
  return std::nullopt;
}

ClosestApproach closest_approach(std::span<const TrackPoint> track, Vec2 p) {
  if (track.empty()) throw std::invalid_argument("closest_approach on empty track");
  ClosestApproach best{track.front().t, distance(track.front().pos(), p)};
  for (std::size_t i = 0; i + 1 < track.size(); ++i) {
    const auto pr = project_on_segment(p, track[i].pos(), track[i + 1].pos());
    if (pr.dist < best.dist) {
      best.dist = pr.dist;
      best.t = track[i].t + pr.param * (track[i + 1].t - track[i].t);
    }
  }
  return best;
}

std::optional<PsmResult> compute_psm(std::span<const TrackPoint> veh, std::span<const TrackPoint> ped, Vec2 cp,
                                     double d_conflict_m) {
  const auto t1 = closest_approach(ped, cp);
  const auto t2 = closest_approach(veh, cp);
  if (t1.dist > d_conflict_m || t2.dist > d_conflict_m) return std::nullopt;
  return PsmResult{t1.t, t2.t};
}

std::optional<RiskLevel> scene_pcr_level(const ObjectTrack& vehicle, const ObjectTrack& pedestrian, double fps,
                                         const Predictor& predictor, const FeatureConfig& cfg) {
  const auto pairs = overlapping_frames(vehicle, pedestrian, fps);
  const std::size_t need = predictor.required_history(fps);
  const std::size_t keep = need + static_cast<std::size_t>(std::max(cfg.pcr.smoothing_window, 1)) + 2;
  const std::size_t stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.pcr_eval_step_s * fps)));
  std::optional<RiskLevel> worst;
  const std::span<const TrackPoint> vp(vehicle.points), pp(pedestrian.points);
  std::size_t since_last = stride;
  for (const auto& [iv, ip] : pairs) {
    if (iv + 1 < need || ip + 1 < need) continue;
    if (++since_last < stride) continue;
    since_last = 0;
    const std::size_t nv = std::min(keep, iv + 1), np = std::min(keep, ip + 1);
    const RiskLevel level =
        classify_pcr_level(vp.subspan(iv + 1 - nv, nv), pp.subspan(ip + 1 - np, np), predictor, cfg.pcr);
    if (!worst || numeric(level) > numeric(*worst)) worst = level;
    if (level == RiskLevel::danger) break;
  }
  return worst;
}

namespace {

VehicleFeatures vehicle_features(const ObjectTrack& t, const SiteGeometry& g, double fps, const FeatureConfig& cfg) {
  VehicleFeatures f;
  f.object_id = t.object_id;
  f.speed_kmh = speed_series(t, cfg.smoothing_window);
  f.average_speed_kmh = std::accumulate(f.speed_kmh.begin(), f.speed_kmh.end(), 0.0) / static_cast<double>(f.speed_kmh.size());
  f.acceleration = acceleration_series(f.speed_kmh, fps, cfg.accel_threshold_mps2);
  for (const auto& p : t.points) f.position.push_back(classify_vehicle_zone(p, g));
  f.crosswalk_distance_m = crosswalk_distance_series(t, g);
  f.stop = stop_behavior(t, g, cfg.v_stop_kmh, cfg.stop_min_dur_s, cfg.smoothing_window);
  return f;
}

PedestrianFeatures pedestrian_features(const ObjectTrack& t, const SiteGeometry& g, const FeatureConfig& cfg) {
  PedestrianFeatures f;
  f.object_id = t.object_id;
  f.speed_kmh = speed_series(t, cfg.smoothing_window);
  f.average_speed_kmh = std::accumulate(f.speed_kmh.begin(), f.speed_kmh.end(), 0.0) / static_cast<double>(f.speed_kmh.size());
  for (const auto& p : t.points) f.position.push_back(classify_pedestrian_zone(p, g));
  return f;
}

}  // namespace

FeatureRecord extract_features(const Scene& s, const SiteGeometry& g, const FeatureConfig& cfg,
                               const Predictor& predictor) {
  const auto violations = validate_scene(s, g);
  if (!violations.empty()) {
    std::string msg = "validation failed:";
    for (const auto& v : violations) msg += " [" + v + "]";
    throw FeatureError(s.scene_code, msg);
  }
  try {
    FeatureRecord r;
    r.scene_code = s.scene_code;
    r.spot_id = s.spot_id;
    r.start_time = s.start_time;
    const auto type = classify_scene_type(s);
    r.scene_type = type.type;
    r.non_overlapping_mix = type.non_overlapping_mix;

    const ObjectTrack* best_v = nullptr;
    const ObjectTrack* best_p = nullptr;
    double best_gap = std::numeric_limits<double>::infinity();
    for (const auto& t : s.tracks) {
      if (t.object_type == ObjectType::vehicle) {
        r.vehicles.push_back(vehicle_features(t, g, s.fps, cfg));
      } else {
        r.pedestrians.push_back(pedestrian_features(t, g, cfg));
      }
    }
    if (r.scene_type != SceneType::interactive) return r;

    for (const auto& v : s.tracks) {
      if (v.object_type != ObjectType::vehicle) continue;
      for (const auto& p : s.tracks) {
        if (p.object_type != ObjectType::pedestrian || overlapping_frames(v, p, s.fps).empty()) continue;
        const auto d = vp_distance_series(v, p, s.fps);
        const double gap = *std::min_element(d.begin(), d.end());
        if (gap < best_gap) best_gap = gap, best_v = &v, best_p = &p;
      }
    }

    InteractionFeatures ix;
    ix.vehicle_id = best_v->object_id;
    ix.pedestrian_id = best_p->object_id;
    ix.relative_position = relative_position_series(*best_v, *best_p, g, s.fps, cfg.smoothing_window);
    ix.vp_distance_m = vp_distance_series(*best_v, *best_p, s.fps);

    const auto sv = smooth_track(best_v->points, cfg.psm_smoothing_window);
    const auto sp = smooth_track(best_p->points, cfg.psm_smoothing_window);
    ix.conflict_point = cfg.conflict_mode == ConflictPointMode::trajectory_intersection
                            ? conflict_point(sv, sp, cfg.d_conflict_m)
                            : crosswalk_entry_point(sv, g);
    if (ix.conflict_point) {
      if (const auto psm = compute_psm(sv, sp, *ix.conflict_point, cfg.d_conflict_m)) ix.psm_s = psm->psm_s();
    }
    ix.pcr_level = scene_pcr_level(*best_v, *best_p, s.fps, predictor, cfg);
    r.interaction = std::move(ix);
    return r;
  } catch (const FeatureError&) {
    throw;
  } catch (const std::exception& e) {
    throw FeatureError(s.scene_code, e.what());
  }
}

}  // namespace safetycube
