#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "safetycube/features.h"
#include "safetycube/scene.h"
#include "safetycube/warehouse.h"

namespace safetycube {

struct EncounterSpec {
  std::uint64_t seed = 0;
  std::string scene_code = "GEN-0";
  std::string spot_id = "A";
  Timestamp start_time;
  double fps = 30.0;
  double vehicle_speed_kmh = 30.0;
  double pedestrian_speed_kmh = 4.5;
  bool yielding = true;  // must agree with the sign of offset_s
  bool stop = false;     // yielding vehicle halts before the crosswalk
  double offset_s = 2.0;  // T2 - T1 at the conflict point
  double noise_std_m = 0.0;
  bool with_vehicle = true;
  bool with_pedestrian = true;
  int pedestrian_direction = 1;  // +1 crosses toward the left of the vehicle
  double pre_roll_s = 6.0;      // vehicle travel before the conflict point (constant speed)
  double post_roll_s = 3.0;
  double decel_mps2 = 2.5;
  double dwell_s = 1.5;
  double stop_gap_m = 2.0;  // stop position before the crosswalk edge
};

struct GroundTruth {
  bool interactive = true;
  Vec2 conflict_point;
  double pedestrian_time_s = 0.0;  // T1
  double vehicle_time_s = 0.0;     // T2
  double min_separation_m = 0.0;   // noiseless, over the common time span
  bool yielding = true;
  bool stop = false;
  double vehicle_speed_kmh = 0.0;
  double pedestrian_speed_kmh = 0.0;

  double psm_s() const { return vehicle_time_s - pedestrian_time_s; }
};

struct GeneratedScene {
  Scene scene;
  GroundTruth truth;
  std::size_t component = 0;
};

/// Vehicle along the approach axis in the first lane, pedestrian crossing perpendicular through
/// the crosswalk center. Throws std::invalid_argument on an invalid spec.
GeneratedScene generate_scene(const EncounterSpec& spec, const Site& site);

struct CorpusComponent {
  std::string label;
  double weight = 1.0;
  std::string spot_id;
  std::string period = "day";  // day: 08-10h, night: 18-20h
  SceneType scene_type = SceneType::interactive;
  std::array<double, 2> vehicle_speed_kmh{20.0, 30.0};
  std::array<double, 2> pedestrian_speed_kmh{3.6, 5.4};
  std::array<double, 2> psm_abs_s{1.0, 4.0};
  double non_yield_prob = 0.5;
  double stop_prob = 0.0;  // among yielding scenes
};

struct CorpusSpec {
  std::string name;
  std::vector<CorpusComponent> components;
  double noise_std_m = 0.0;
  double fps = 30.0;
  std::string first_day = "2021-01-11";
  int weekdays = 14;
  std::string code_prefix = "S";
  /// Exact per-component allocation of counts, yield and stop flags instead of independent draws.
  bool stratified = false;
};

CorpusSpec corpus_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CorpusSpec& s);
CorpusSpec load_corpus_spec(const std::filesystem::path& path);

/// n scenes drawn from the mixture; scene i depends only on (seed, i) and the allocation.
std::vector<GeneratedScene> generate_corpus(const CorpusSpec& spec, int n, std::uint64_t seed, const SiteMap& sites);

}  // namespace safetycube
