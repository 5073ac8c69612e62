#pragma once

#include <span>
#include <vector>

#include "safetycube/geometry.h"
#include "safetycube/scene.h"

namespace safetycube {

/// Centered moving average of positions. The window shrinks symmetrically near the ends,
/// so straight constant-velocity motion is reproduced exactly. `window` must be odd and >= 1.
std::vector<Vec2> smooth_positions(std::span<const TrackPoint> pts, int window);

/// Same as smooth_positions, keeping the original timestamps.
std::vector<TrackPoint> smooth_track(std::span<const TrackPoint> pts, int window);

/// Velocity per sample: central differences inside, one-sided at the ends (m/s vectors).
std::vector<Vec2> finite_difference_velocity(std::span<const TrackPoint> pts, std::span<const Vec2> pos);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

/// Position at time t by linear interpolation (clamped to the track's ends).
Vec2 interpolate_position(std::span<const TrackPoint> pts, double t);

}  // namespace safetycube
