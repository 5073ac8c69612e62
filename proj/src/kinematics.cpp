#include "safetycube/kinematics.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace safetycube {

std::vector<Vec2> smooth_positions(std::span<const TrackPoint> pts, int window) {
  if (window < 1 || window % 2 == 0) throw std::invalid_argument("smoothing window must be odd and >= 1");
  const long n = static_cast<long>(pts.size());
  const long half = window / 2;
  std::vector<Vec2> out(pts.size());
  for (long i = 0; i < n; ++i) {
    const long k = std::min({half, i, n - 1 - i});
    Vec2 sum;
    for (long j = i - k; j <= i + k; ++j) sum = sum + pts[static_cast<std::size_t>(j)].pos();
    out[static_cast<std::size_t>(i)] = sum * (1.0 / static_cast<double>(2 * k + 1));
  }
  return out;
}

std::vector<TrackPoint> smooth_track(std::span<const TrackPoint> pts, int window) {
  const auto pos = smooth_positions(pts, window);
  std::vector<TrackPoint> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) out[i] = {pts[i].t, pos[i].x, pos[i].y};
  return out;
}

std::vector<Vec2> finite_difference_velocity(std::span<const TrackPoint> pts, std::span<const Vec2> pos) {
  const std::size_t n = pts.size();
  if (n < 2) throw std::invalid_argument("velocity needs at least 2 samples");
  std::vector<Vec2> vel(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
    const double dt = pts[hi].t - pts[lo].t;
    vel[i] = (pos[hi] - pos[lo]) * (1.0 / dt);
  }
  return vel;
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

Vec2 interpolate_position(std::span<const TrackPoint> pts, double t) {
  if (pts.empty()) throw std::invalid_argument("interpolate_position on empty track");
  if (t <= pts.front().t) return pts.front().pos();
  if (t >= pts.back().t) return pts.back().pos();
  const auto it = std::upper_bound(pts.begin(), pts.end(), t, [](double v, const TrackPoint& p) { return v < p.t; });
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double s = (t - a.t) / (b.t - a.t);
  return a.pos() + (b.pos() - a.pos()) * s;
}

}  // namespace safetycube
