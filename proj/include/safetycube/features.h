#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "safetycube/pcr.h"
#include "safetycube/scene.h"

namespace safetycube {

enum class SceneType { car_only, pedestrian_only, interactive };
enum class Acceleration { acceleration, deceleration, no_change };
enum class StopBehavior { stop, no_stop };
enum class RelativePosition { front, behind };
enum class ConflictPointMode { trajectory_intersection, crosswalk_entry };

std::string_view to_string(SceneType t);
std::string_view to_string(Acceleration a);
std::string_view to_string(StopBehavior s);
std::string_view to_string(RelativePosition r);
SceneType parse_scene_type(std::string_view s);
StopBehavior parse_stop_behavior(std::string_view s);

struct FeatureConfig {
  int smoothing_window = 5;
  double accel_threshold_mps2 = 0.2;
  double v_stop_kmh = 1.0;
  double stop_min_dur_s = 0.5;
  double d_conflict_m = 1.0;
  int psm_smoothing_window = 31;
  ConflictPointMode conflict_mode = ConflictPointMode::trajectory_intersection;
  double pcr_eval_step_s = 0.2;  // spacing of PCR evaluations along the overlap
  PcrConfig pcr;
};

/// Error raised while extracting one scene; the message carries the scene code.
class FeatureError : public std::runtime_error {
 public:
  FeatureError(const std::string& scene_code, const std::string& what)
      : std::runtime_error("scene " + scene_code + ": " + what), scene_code_(scene_code) {}
  const std::string& scene_code() const { return scene_code_; }

 private:
  std::string scene_code_;
};

struct VehicleFeatures {
  std::string object_id;
  std::vector<double> speed_kmh;
  double average_speed_kmh = 0.0;
  std::vector<Acceleration> acceleration;  // one label per consecutive speed pair
  std::vector<VehicleZone> position;
  std::vector<double> crosswalk_distance_m;
  std::optional<StopBehavior> stop;  // unset if the vehicle never reaches the crosswalk
};

struct PedestrianFeatures {
  std::string object_id;
  std::vector<double> speed_kmh;
  double average_speed_kmh = 0.0;
  std::vector<PedestrianZone> position;
};

struct InteractionFeatures {
  std::string vehicle_id;
  std::string pedestrian_id;
  std::vector<RelativePosition> relative_position;  // one per overlapping frame
  std::vector<double> vp_distance_m;
  std::optional<Vec2> conflict_point;
  std::optional<double> psm_s;
  std::optional<RiskLevel> pcr_level;
};

struct FeatureRecord {
  std::string scene_code;
  std::string spot_id;
  Timestamp start_time;
  SceneType scene_type = SceneType::car_only;
  bool non_overlapping_mix = false;  // both types present but never concurrent
  std::vector<VehicleFeatures> vehicles;
  std::vector<PedestrianFeatures> pedestrians;
  std::optional<InteractionFeatures> interaction;

  /// Interaction vehicle when present, otherwise the first vehicle.
  const VehicleFeatures* primary_vehicle() const;
  std::optional<double> average_car_speed_kmh() const;
  std::optional<double> psm() const { return interaction ? interaction->psm_s : std::nullopt; }
  std::optional<RiskLevel> pcr_level() const { return interaction ? interaction->pcr_level : std::nullopt; }
  std::optional<StopBehavior> stop_behavior() const;
};

struct SceneTypeResult {
  SceneType type = SceneType::car_only;
  bool non_overlapping_mix = false;
};

/// Interactive iff some vehicle and pedestrian track share at least one frame. A scene holding both
/// types without overlap takes the type of the track that appears first and sets the warning flag.
SceneTypeResult classify_scene_type(const Scene& s);

/// Speed magnitude in km/h from central differences of moving-average-smoothed positions.
std::vector<double> speed_series(const ObjectTrack& track, int window);

std::vector<Acceleration> acceleration_series(std::span<const double> speeds_kmh, double fps, double threshold_mps2);

std::vector<double> crosswalk_distance_series(const ObjectTrack& track, const SiteGeometry& g);

/// `stop` iff smoothed speed stays below v_stop for at least min_dur seconds while the vehicle is
/// before the crosswalk and before it first leaves that zone. nullopt if it never leaves it.
std::optional<StopBehavior> stop_behavior(const ObjectTrack& vehicle, const SiteGeometry& g, double v_stop_kmh,
                                          double min_dur_s, int smoothing_window = 5);

/// Index pairs (vehicle sample, pedestrian sample) sharing a frame.
std::vector<std::pair<std::size_t, std::size_t>> overlapping_frames(const ObjectTrack& a, const ObjectTrack& b,
                                                                    double fps);

/// `front` iff the pedestrian projects positively on the vehicle's instantaneous heading.
/// Throws std::invalid_argument without temporal overlap.
std::vector<RelativePosition> relative_position_series(const ObjectTrack& vehicle, const ObjectTrack& pedestrian,
                                                       const SiteGeometry& g, double fps, int smoothing_window = 5);

template <typename T>
std::vector<T> run_length_compress(std::span<const T> xs) {
  std::vector<T> out;
  for (const auto& x : xs) {
    if (out.empty() || !(out.back() == x)) out.push_back(x);
  }
  return out;
}

std::vector<double> vp_distance_series(const ObjectTrack& vehicle, const ObjectTrack& pedestrian, double fps);

/// First crossing of the two polylines in pedestrian-path order; otherwise the pedestrian-path point
/// closest to the vehicle path when that gap is below d_conflict.
std::optional<Vec2> conflict_point(std::span<const TrackPoint> vehicle, std::span<const TrackPoint> pedestrian,
                                   double d_conflict_m);

/// Where the vehicle path first meets the crosswalk boundary.
std::optional<Vec2> crosswalk_entry_point(std::span<const TrackPoint> vehicle, const SiteGeometry& g);

/// Linearly interpolated time of the track's closest approach to `p`, with that distance.
struct ClosestApproach {
  double t = 0.0;
  double dist = 0.0;
};
ClosestApproach closest_approach(std::span<const TrackPoint> track, Vec2 p);

struct PsmResult {
  double pedestrian_time_s = 0.0;  // T1
  double vehicle_time_s = 0.0;     // T2
  double psm_s() const { return vehicle_time_s - pedestrian_time_s; }
};

/// T2 - T1 at the conflict point; nullopt when either track stays farther than d_conflict from it.
std::optional<PsmResult> compute_psm(std::span<const TrackPoint> vehicle, std::span<const TrackPoint> pedestrian,
                                     Vec2 cp, double d_conflict_m);

/// Worst PCR level over the vehicle/pedestrian overlap, evaluated every `pcr_eval_step_s`.
std::optional<RiskLevel> scene_pcr_level(const ObjectTrack& vehicle, const ObjectTrack& pedestrian, double fps,
                                         const Predictor& predictor, const FeatureConfig& cfg);

/// Full feature record; validates the scene first. Errors are FeatureError carrying the scene code.
FeatureRecord extract_features(const Scene& s, const SiteGeometry& g, const FeatureConfig& cfg,
                               const Predictor& predictor);

}  // namespace safetycube
