#pragma once

#include <array>
#include <memory>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "safetycube/geometry.h"
#include "safetycube/lstm.h"
#include "safetycube/scene.h"

namespace safetycube {

struct KinematicState {
  Vec2 position;
  double v = 0.0;      // m/s, >= 0
  double theta = 0.0;  // radians, (-pi, pi]
};

struct IntervalEstimate {
  double v_lo = 0.0;
  double v_hi = 0.0;
  double theta_lo = 0.0;
  double theta_hi = 0.0;

  double span() const { return theta_hi - theta_lo; }
};

/// Predicted occupancy polygon for one horizon.
struct Pcra {
  double horizon_s = 0.0;
  Polygon polygon;
};

enum class RiskLevel { normal = 1, relatively_safe = 2, warning = 3, danger = 4 };

inline int numeric(RiskLevel r) { return static_cast<int>(r); }
std::string_view to_string(RiskLevel r);
RiskLevel parse_risk_level(std::string_view s);
RiskLevel risk_level_from_numeric(int n);

class InsufficientHistory : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Least-squares velocity over the last `window` samples; position is the last sample.
/// A motionless window keeps the most recent heading seen earlier in the history (0 if none).
KinematicState estimate_state(std::span<const TrackPoint> history, int window);

enum class PredictorKind { constant_velocity, lstm };
std::string_view to_string(PredictorKind k);
PredictorKind parse_predictor_kind(std::string_view s);

/// Sequence model settings for the recurrent predictor. Histories are resampled to `step_s`.
struct LstmSettings {
  int hidden = 32;
  int sequence_length = 20;
  double step_s = 0.1;
  int smoothing_window = 5;
  double speed_scale = 10.0;  // m/s per unit input
  double turn_scale = 1.0;    // rad/s per unit input
};

/// Short-horizon trajectory predictor. Immutable once built; copies share parameters.
class Predictor {
 public:
  static Predictor constant_velocity(int window_frames = 10);
  static Predictor lstm(LstmNetwork net, LstmSettings settings, int window_frames = 10);

  PredictorKind kind() const { return kind_; }
  int window_frames() const { return window_frames_; }
  const LstmSettings& lstm_settings() const { return settings_; }
  const LstmNetwork* network() const { return net_.get(); }

  /// Minimum number of samples a history needs at the given frame rate.
  std::size_t required_history(double fps) const;

  /// Central predicted state `horizon_s` ahead of the last sample. Throws InsufficientHistory.
  KinematicState predict(std::span<const TrackPoint> history, double horizon_s) const;

  nlohmann::json to_json() const;
  static Predictor from_json(const nlohmann::json& j);

 private:
  PredictorKind kind_ = PredictorKind::constant_velocity;
  int window_frames_ = 10;
  LstmSettings settings_;
  std::shared_ptr<const LstmNetwork> net_;
};

KinematicState predict(const Predictor& p, std::span<const TrackPoint> history, double horizon_s);

struct IntervalOptions {
  double z = 1.96;
  int smoothing_window = 5;
  double stationary_speed_eps = 0.1;  // m/s upper bound for a motionless history
};

/// Pure interval arithmetic: center +- z * sd, speed clamped at 0, heading span capped at 2*pi.
IntervalEstimate interval_from_moments(double v_center, double theta_center, double sd_v, double sd_theta, double z);

/// Sample standard deviations of per-frame speed and heading over the predictor's window.
struct MotionSpread {
  double sd_v = 0.0;
  double sd_theta = 0.0;
  bool motionless = false;
};
MotionSpread motion_spread(std::span<const TrackPoint> history, int window, int smoothing_window);

/// Confidence intervals around the predictor's chord speed/heading to the horizon.
IntervalEstimate confidence_intervals(std::span<const TrackPoint> history, const Predictor& predictor,
                                      double horizon_s, const IntervalOptions& opts = {});

/// Annular sector around state.position with radii [h v_lo, h v_hi] over [theta_lo, theta_hi],
/// buffered outward by `inflation`. When h v_hi < inflation the result is a disk of radius `inflation`.
Pcra build_pcra(const KinematicState& state, const IntervalEstimate& ivl, double horizon_s, double inflation,
                int arc_points = 16, int circle_segments = 32);

struct PcrConfig {
  std::array<double, 3> horizons_s{1.0, 2.0, 3.0};  // danger, warning, relatively_safe
  double ci_z = 1.96;
  double inflation_vehicle_m = 0.9;
  double inflation_pedestrian_m = 0.3;
  int smoothing_window = 5;
  double stationary_speed_eps = 0.1;
  int arc_points = 16;
  int circle_segments = 32;

  void validate() const;
};

struct HorizonAssessment {
  double horizon_s = 0.0;
  Pcra vehicle;
  Pcra pedestrian;
  bool overlap = false;
};

struct PcrAssessment {
  RiskLevel level = RiskLevel::normal;
  std::vector<HorizonAssessment> horizons;  // all configured horizons, ascending
};

/// Level of the smallest horizon whose PCRAs overlap (danger first), normal if none.
RiskLevel classify_pcr_level(std::span<const TrackPoint> vehicle_history, std::span<const TrackPoint> pedestrian_history,
                             const Predictor& predictor, const PcrConfig& cfg = {});

/// Same decision, keeping every horizon's polygons (used for playback).
PcrAssessment assess_pcr(std::span<const TrackPoint> vehicle_history, std::span<const TrackPoint> pedestrian_history,
                         const Predictor& predictor, const PcrConfig& cfg = {});

struct TrainingSample {
  std::vector<TrackPoint> history;
  std::vector<TrackPoint> future;
};

struct TrainingOptions {
  PredictorKind kind = PredictorKind::lstm;
  LstmSettings lstm;
  int epochs = 200;
  int batch_size = 32;
  double learning_rate = 0.005;
  int windows_per_sample = 1;  // training windows drawn from each trajectory per epoch
  int window_frames = 10;
};

struct TrainingResult {
  Predictor predictor;
  std::vector<double> loss_history;  // [0] before training, then one entry per epoch
};

/// Fits the recurrent predictor on next-step (speed, turn rate) targets. Deterministic per seed.
/// Throws std::invalid_argument on an empty dataset and std::runtime_error on a non-finite loss.
TrainingResult train_predictor(std::span<const TrainingSample> dataset, const TrainingOptions& opts,
                               std::uint64_t seed);

}  // namespace safetycube
