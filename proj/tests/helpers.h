#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <unistd.h>

#include "safetycube/geometry.h"
#include "safetycube/scene.h"
#include "safetycube/warehouse.h"

namespace testing {

using namespace safetycube;

/// Samples `pos(t)` at fps from t0 to t1 inclusive.
inline std::vector<TrackPoint> sampled(double t0, double t1, double fps, const std::function<Vec2(double)>& pos) {
  std::vector<TrackPoint> pts;
  const long k0 = std::lround(t0 * fps), k1 = std::lround(t1 * fps);
  for (long k = k0; k <= k1; ++k) {
    const double t = static_cast<double>(k) / fps;
    const Vec2 p = pos(t);
    pts.push_back({t, p.x, p.y});
  }
  return pts;
}

inline std::vector<TrackPoint> straight(double t0, double t1, double fps, Vec2 start, Vec2 vel) {
  return sampled(t0, t1, fps, [&](double t) { return start + vel * (t - t0); });
}

inline ObjectTrack track(const std::string& id, ObjectType type, std::vector<TrackPoint> pts) {
  return {id, type, std::move(pts)};
}

inline SiteGeometry test_geometry() { return crosswalk_geometry(8.0); }

inline Site test_site(const std::string& id = "A") { return osan_sites().at(id); }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "sc") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
