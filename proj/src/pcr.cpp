#include "safetycube/pcr.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "safetycube/kinematics.h"

namespace safetycube {

std::string_view to_string(RiskLevel r) {
  switch (r) {
    case RiskLevel::normal: return "normal";
    case RiskLevel::relatively_safe: return "relatively_safe";
    case RiskLevel::warning: return "warning";
    case RiskLevel::danger: return "danger";
  }
  return "normal";
}

RiskLevel parse_risk_level(std::string_view s) {
  if (s == "normal") return RiskLevel::normal;
  if (s == "relatively_safe" || s == "relatively safe") return RiskLevel::relatively_safe;
  if (s == "warning") return RiskLevel::warning;
  if (s == "danger") return RiskLevel::danger;
  throw std::invalid_argument("unknown risk level: " + std::string(s));
}

RiskLevel risk_level_from_numeric(int n) {
  if (n < 1 || n > 4) throw std::invalid_argument("risk level numeric value out of range: " + std::to_string(n));
  return static_cast<RiskLevel>(n);
}

KinematicState estimate_state(std::span<const TrackPoint> history, int window) {
  if (history.size() < 2) throw InsufficientHistory("state estimation needs at least 2 samples");
  const std::size_t w = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(window, 2)), 2, history.size());
  const auto tail = history.last(w);

  double t_mean = 0.0;
  Vec2 p_mean;
  for (const auto& p : tail) {
    t_mean += p.t;
    p_mean = p_mean + p.pos();
  }
  t_mean /= static_cast<double>(w);
  p_mean = p_mean * (1.0 / static_cast<double>(w));
  double stt = 0.0;
  Vec2 stp;
  for (const auto& p : tail) {
    const double dt = p.t - t_mean;
    stt += dt * dt;
    stp = stp + (p.pos() - p_mean) * dt;
  }
  const Vec2 vel = stp * (1.0 / stt);

  KinematicState s;
  s.position = history.back().pos();
  s.v = norm(vel);
  if (s.v > 1e-9) {
    s.theta = wrap_angle(std::atan2(vel.y, vel.x));
    return s;
  }
  s.v = 0.0;
  s.theta = 0.0;
  for (std::size_t i = history.size() - 1; i > 0; --i) {
    const Vec2 d = history[i].pos() - history[i - 1].pos();
    if (norm(d) > 1e-9) {
      s.theta = wrap_angle(std::atan2(d.y, d.x));
      break;
    }
  }
  return s;
}

KinematicState predict(const Predictor& p, std::span<const TrackPoint> history, double horizon_s) {
  return p.predict(history, horizon_s);
}

IntervalEstimate interval_from_moments(double v_center, double theta_center, double sd_v, double sd_theta, double z) {
  IntervalEstimate ivl;
  ivl.v_lo = std::max(0.0, v_center - z * sd_v);
  ivl.v_hi = std::max(ivl.v_lo, v_center + z * sd_v);
  const double half = std::min(z * sd_theta, std::numbers::pi);
  ivl.theta_lo = theta_center - half;
  ivl.theta_hi = theta_center + half;
  return ivl;
}

namespace {

double sample_sd(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

MotionSpread motion_spread(std::span<const TrackPoint> history, int window, int smoothing_window) {
  if (history.size() < 2) throw InsufficientHistory("motion spread needs at least 2 samples");
  const auto smoothed = smooth_track(history, smoothing_window);
  const std::size_t w = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(window, 2)), 2, smoothed.size());
  const std::span<const TrackPoint> tail = std::span<const TrackPoint>(smoothed).last(w);

  std::vector<double> speeds;
  std::vector<double> headings;
  double prev_heading = 0.0;
  for (std::size_t i = 1; i < tail.size(); ++i) {
    const Vec2 d = tail[i].pos() - tail[i - 1].pos();
    const double dist = norm(d);
    speeds.push_back(dist / (tail[i].t - tail[i - 1].t));
    if (dist > 1e-9) {
      const double h = std::atan2(d.y, d.x);
      // Unwrap against the previous heading so the spread is not inflated at the +-pi seam.
      headings.push_back(headings.empty() ? h : prev_heading + wrap_angle(h - prev_heading));
      prev_heading = headings.back();
    }
  }
  MotionSpread out;
  out.motionless = headings.empty();
  out.sd_v = sample_sd(speeds);
  out.sd_theta = sample_sd(headings);
  return out;
}

IntervalEstimate confidence_intervals(std::span<const TrackPoint> history, const Predictor& predictor,
                                      double horizon_s, const IntervalOptions& opts) {
  const KinematicState predicted = predictor.predict(history, horizon_s);
  const Vec2 now = history.back().pos();
  const Vec2 disp = predicted.position - now;
  double v_hat = predicted.v;
  double theta_hat = predicted.theta;
  if (horizon_s > 0.0 && norm(disp) > 1e-9) {
    v_hat = norm(disp) / horizon_s;
    theta_hat = wrap_angle(std::atan2(disp.y, disp.x));
  }
  const MotionSpread spread = motion_spread(history, predictor.window_frames(), opts.smoothing_window);
  if (spread.motionless) {
    return {0.0, opts.stationary_speed_eps, theta_hat - std::numbers::pi, theta_hat + std::numbers::pi};
  }
  return interval_from_moments(v_hat, theta_hat, spread.sd_v, spread.sd_theta, opts.z);
}

void PcrConfig::validate() const {
  for (std::size_t i = 0; i < horizons_s.size(); ++i) {
    if (!(horizons_s[i] > 0.0)) throw std::invalid_argument("pcr horizons must be positive");
    if (i > 0 && !(horizons_s[i] > horizons_s[i - 1])) {
      throw std::invalid_argument("pcr horizons must be strictly ascending");
    }
  }
  if (!(ci_z >= 0.0)) throw std::invalid_argument("ci_z must be non-negative");
  if (inflation_vehicle_m < 0.0 || inflation_pedestrian_m < 0.0) {
    throw std::invalid_argument("inflation must be non-negative");
  }
  if (arc_points < 2) throw std::invalid_argument("arc_points must be >= 2");
  if (circle_segments < 8) throw std::invalid_argument("circle_segments must be >= 8");
}

namespace {

constexpr std::array<RiskLevel, 3> kLevelByHorizon{RiskLevel::danger, RiskLevel::warning, RiskLevel::relatively_safe};

void check_concurrent(std::span<const TrackPoint> a, std::span<const TrackPoint> b) {
  if (a.empty() || b.empty()) throw InsufficientHistory("pcr classification needs non-empty histories");
  if (std::abs(a.back().t - b.back().t) > 1e-6) {
    throw std::invalid_argument("vehicle and pedestrian histories must end at the same time");
  }
}

HorizonAssessment assess_horizon(std::span<const TrackPoint> veh, std::span<const TrackPoint> ped,
                                 const Predictor& predictor, const PcrConfig& cfg, double h) {
  const IntervalOptions opts{cfg.ci_z, cfg.smoothing_window, cfg.stationary_speed_eps};
  const IntervalEstimate vi = confidence_intervals(veh, predictor, h, opts);
  const IntervalEstimate pi = confidence_intervals(ped, predictor, h, opts);
  const KinematicState vs{veh.back().pos(), 0.5 * (vi.v_lo + vi.v_hi), 0.5 * (vi.theta_lo + vi.theta_hi)};
  const KinematicState ps{ped.back().pos(), 0.5 * (pi.v_lo + pi.v_hi), 0.5 * (pi.theta_lo + pi.theta_hi)};
  HorizonAssessment out;
  out.horizon_s = h;
  out.vehicle = build_pcra(vs, vi, h, cfg.inflation_vehicle_m, cfg.arc_points, cfg.circle_segments);
  out.pedestrian = build_pcra(ps, pi, h, cfg.inflation_pedestrian_m, cfg.arc_points, cfg.circle_segments);
  out.overlap = polygons_intersect(out.vehicle.polygon, out.pedestrian.polygon);
  return out;
}

// Every PCRA vertex lies within h * v_hi + inflation of the object's position, so two far-apart
// reach disks cannot overlap and the polygons need not be built.
bool horizon_overlap(std::span<const TrackPoint> veh, std::span<const TrackPoint> ped, const Predictor& predictor,
                     const PcrConfig& cfg, double h) {
  const IntervalOptions opts{cfg.ci_z, cfg.smoothing_window, cfg.stationary_speed_eps};
  const IntervalEstimate vi = confidence_intervals(veh, predictor, h, opts);
  const IntervalEstimate pi = confidence_intervals(ped, predictor, h, opts);
  const double reach = std::max(h * vi.v_hi, 0.0) + cfg.inflation_vehicle_m + std::max(h * pi.v_hi, 0.0) +
                       cfg.inflation_pedestrian_m + 1e-2;
  if (distance(veh.back().pos(), ped.back().pos()) > reach) return false;
  return assess_horizon(veh, ped, predictor, cfg, h).overlap;
}

}  // namespace

RiskLevel classify_pcr_level(std::span<const TrackPoint> veh, std::span<const TrackPoint> ped,
                             const Predictor& predictor, const PcrConfig& cfg) {
  cfg.validate();
  check_concurrent(veh, ped);
  for (std::size_t i = 0; i < cfg.horizons_s.size(); ++i) {
    if (horizon_overlap(veh, ped, predictor, cfg, cfg.horizons_s[i])) return kLevelByHorizon[i];
  }
  return RiskLevel::normal;
}

PcrAssessment assess_pcr(std::span<const TrackPoint> veh, std::span<const TrackPoint> ped, const Predictor& predictor,
                         const PcrConfig& cfg) {
  cfg.validate();
  check_concurrent(veh, ped);
  PcrAssessment out;
  for (std::size_t i = 0; i < cfg.horizons_s.size(); ++i) {
    out.horizons.push_back(assess_horizon(veh, ped, predictor, cfg, cfg.horizons_s[i]));
    if (out.horizons.back().overlap && out.level == RiskLevel::normal) out.level = kLevelByHorizon[i];
  }
  return out;
}

}  // namespace safetycube
