#include <doctest.h>

#include "helpers.h"
#include "oracles.h"
#include "safetycube/features.h"
#include "safetycube/generator.h"

using namespace safetycube;
using namespace testing;

namespace {

/// Vehicle along +x in the lane at y = -1 with piecewise speed: cruise, stop for `dwell` s at x_stop, resume.
ObjectTrack stopping_vehicle(double dwell, double x_stop = -6.0) {
  const double v = 5.0;
  const double t_arrive = (x_stop + 30.0) / v;
  return track("1", ObjectType::vehicle, sampled(0, t_arrive + dwell + 6.0, 30, [&](double t) {
    double x;
    if (t < t_arrive) {
      x = -30.0 + v * t;
    } else if (t < t_arrive + dwell) {
      x = x_stop;
    } else {
      x = x_stop + v * (t - t_arrive - dwell);
    }
    return Vec2{x, -1.0};
  }));
}

}  // namespace

TEST_CASE("speed series") {
  const auto t = track("1", ObjectType::vehicle, straight(0, 3, 30, {-20, -1}, {4, 0}));
  for (double s : speed_series(t, 5)) CHECK(s == doctest::Approx(14.4).epsilon(1e-9));
  for (double s : speed_series(t, 1)) CHECK(s == doctest::Approx(14.4).epsilon(1e-9));
  const auto still = track("2", ObjectType::pedestrian, straight(0, 2, 30, {0, 0}, {0, 0}));
  for (double s : speed_series(still, 5)) CHECK(s == 0.0);
}

TEST_CASE("acceleration labels") {
  const std::vector<double> flat(20, 30.0);
  for (auto a : acceleration_series(flat, 30, 0.2)) CHECK(a == Acceleration::no_change);
  std::vector<double> ramp;
  for (int i = 0; i < 20; ++i) ramp.push_back(40.0 - i * 1.0);  // -8.3 m/s^2 at 30 fps
  for (auto a : acceleration_series(ramp, 30, 0.2)) CHECK(a == Acceleration::deceleration);
  const std::vector<double> mixed{10, 12, 12, 10};
  const auto labels = acceleration_series(mixed, 30, 0.2);
  CHECK(run_length_compress<Acceleration>(labels) ==
        std::vector<Acceleration>{Acceleration::acceleration, Acceleration::no_change, Acceleration::deceleration});
}

TEST_CASE("crosswalk distance") {
  const SiteGeometry g = test_geometry();
  const auto t = track("1", ObjectType::vehicle, {{0, -6.1, -1}, {0.1, 0, -1}, {0.2, 6.1, -1}});
  const auto d = crosswalk_distance_series(t, g);
  CHECK(d[0] == doctest::Approx(4.1));
  CHECK(d[1] == 0.0);
  CHECK(d[2] == doctest::Approx(d[0]));
}

TEST_CASE("stop behavior") {
  const SiteGeometry g = test_geometry();
  CHECK(stop_behavior(stopping_vehicle(1.0), g, 1.0, 0.5) == StopBehavior::stop);
  CHECK(stop_behavior(stopping_vehicle(0.2), g, 1.0, 0.5) == StopBehavior::no_stop);
  const auto steady = track("1", ObjectType::vehicle, straight(0, 6, 30, {-30, -1}, {20 / 3.6, 0}));
  CHECK(stop_behavior(steady, g, 1.0, 0.5) == StopBehavior::no_stop);
  const auto parked = track("1", ObjectType::vehicle, straight(0, 3, 30, {-20, -1}, {0, 0}));
  CHECK_FALSE(stop_behavior(parked, g, 1.0, 0.5));
}

TEST_CASE("relative position") {
  const SiteGeometry g = test_geometry();
  const auto veh = track("1", ObjectType::vehicle, straight(0, 3, 30, {-20, -1}, {5, 0}));
  const auto ahead = track("2", ObjectType::pedestrian, straight(0, 3, 30, {0, -3}, {0, 0.5}));
  const auto rel = relative_position_series(veh, ahead, g, 30);
  CHECK(run_length_compress<RelativePosition>(rel) == std::vector<RelativePosition>{RelativePosition::front});

  const auto passed = track("2", ObjectType::pedestrian, straight(0, 3, 30, {-12, -3}, {0, 0.5}));
  CHECK(run_length_compress<RelativePosition>(relative_position_series(veh, passed, g, 30)) ==
        std::vector<RelativePosition>{RelativePosition::front, RelativePosition::behind});

  const auto abeam = track("2", ObjectType::pedestrian, straight(0, 3, 30, {-20, 2}, {5, 0}));
  for (auto r : relative_position_series(veh, abeam, g, 30)) CHECK(r == RelativePosition::behind);

  const auto later = track("2", ObjectType::pedestrian, straight(5, 6, 30, {0, -3}, {0, 0.5}));
  CHECK_THROWS_AS(relative_position_series(veh, later, g, 30), std::invalid_argument);
}

TEST_CASE("vehicle-pedestrian distance") {
  const auto a = track("1", ObjectType::vehicle, {{0, 0, 0}, {1.0 / 30, 1, 1}});
  const auto b = track("2", ObjectType::pedestrian, {{0, 3, 4}, {1.0 / 30, 1, 1}});
  const auto d = vp_distance_series(a, b, 30);
  REQUIRE(d.size() == 2);
  CHECK(d[0] == doctest::Approx(5.0));
  CHECK(d[1] == 0.0);
}

TEST_CASE("conflict point") {
  const auto v = straight(0, 4, 30, {-10, -1}, {5, 0});
  const auto p = straight(0, 4, 30, {0.5, -6}, {0, 2});
  const auto cp = conflict_point(v, p, 1.0);
  REQUIRE(cp);
  CHECK(cp->x == doctest::Approx(0.5));
  CHECK(cp->y == doctest::Approx(-1.0));

  const auto parallel = straight(0, 4, 30, {-10, 9}, {5, 0});
  CHECK_FALSE(conflict_point(v, parallel, 1.0));

  // Pedestrian stops 0.5 m short of the vehicle path.
  const auto shy = straight(0, 1, 30, {0.5, -6}, {0, 4.5});
  const auto near = conflict_point(v, shy, 1.0);
  REQUIRE(near);
  const auto oracle = brute_conflict_point(v, shy, 1.0);
  REQUIRE(oracle);
  CHECK(near->x == doctest::Approx(oracle->x));
  CHECK(near->y == doctest::Approx(oracle->y));
  CHECK(near->y == doctest::Approx(-1.5));
}

TEST_CASE("conflict point matches the brute-force oracle on random polylines") {
  CounterRng rng(11, 3);
  for (int k = 0; k < 200; ++k) {
    std::vector<TrackPoint> v, p;
    Vec2 a{rng.uniform(-10, -5), rng.uniform(-3, 3)}, b{rng.uniform(-3, 3), rng.uniform(-8, -4)};
    for (int i = 0; i < 12; ++i) {
      v.push_back({i / 30.0, a.x, a.y});
      p.push_back({i / 30.0, b.x, b.y});
      a = a + Vec2{rng.uniform(0.5, 2.0), rng.uniform(-0.5, 0.5)};
      b = b + Vec2{rng.uniform(-0.5, 0.5), rng.uniform(0.3, 1.5)};
    }
    const auto got = conflict_point(v, p, 1.0);
    const auto want = brute_conflict_point(v, p, 1.0);
    REQUIRE(got.has_value() == want.has_value());
    if (got) {
      CHECK(got->x == doctest::Approx(want->x).epsilon(1e-9));
      CHECK(got->y == doctest::Approx(want->y).epsilon(1e-9));
    }
  }
}

TEST_CASE("pedestrian safety margin") {
  const Vec2 cp{0.0, -1.0};
  // Pedestrian reaches cp at 10.0 s, vehicle at 13.2 s.
  const auto ped = straight(7, 14, 30, {0, -1 - 1.2 * 3.0}, {0, 1.2});
  const auto veh = straight(9, 16, 30, {-8.0 * 4.2, -1}, {8, 0});
  const auto r = compute_psm(veh, ped, cp, 1.0);
  REQUIRE(r);
  CHECK(r->pedestrian_time_s == doctest::Approx(10.0));
  CHECK(r->vehicle_time_s == doctest::Approx(13.2));
  CHECK(r->psm_s() == doctest::Approx(3.2).epsilon(1e-12));

  // Vehicle at cp at 8.5 s, pedestrian at 10.0 s.
  const auto veh2 = straight(5, 12, 30, {-8.0 * 3.5, -1}, {8, 0});
  const auto r2 = compute_psm(veh2, ped, cp, 1.0);
  REQUIRE(r2);
  CHECK(r2->psm_s() == doctest::Approx(-1.5).epsilon(1e-12));

  const auto veh3 = straight(5, 12, 30, {-8.0 * 5.0, -1}, {8, 0});
  CHECK(compute_psm(veh3, ped, cp, 1.0)->psm_s() == doctest::Approx(0.0));

  const auto elsewhere = straight(5, 12, 30, {-40, 20}, {8, 0});
  CHECK_FALSE(compute_psm(elsewhere, ped, cp, 1.0));
}

TEST_CASE("scene type") {
  const auto veh = track("1", ObjectType::vehicle, straight(0, 3, 30, {-20, -1}, {5, 0}));
  const auto ped = track("2", ObjectType::pedestrian, straight(1, 4, 30, {0, -6}, {0, 1.2}));
  const auto late = track("3", ObjectType::pedestrian, straight(5, 8, 30, {0, -6}, {0, 1.2}));
  CHECK(classify_scene_type(Scene{"S", "A", {}, 30, {veh}}).type == SceneType::car_only);
  CHECK(classify_scene_type(Scene{"S", "A", {}, 30, {ped}}).type == SceneType::pedestrian_only);
  CHECK(classify_scene_type(Scene{"S", "A", {}, 30, {veh, ped}}).type == SceneType::interactive);
  const auto mix = classify_scene_type(Scene{"S", "A", {}, 30, {veh, late}});
  CHECK(mix.type == SceneType::car_only);
  CHECK(mix.non_overlapping_mix);
}

TEST_CASE("feature extraction") {
  const Site site = test_site("E");
  const FeatureConfig cfg;
  const Predictor cv = Predictor::constant_velocity();

  SUBCASE("car-only scene leaves interaction fields empty") {
    Scene s{"C1", "E", parse_rfc3339("2021-01-11T08:30:00+09:00"), 30,
            {track("1", ObjectType::vehicle, straight(0, 6, 30, {-25, -1.75}, {25 / 3.6, 0}))}};
    const FeatureRecord r = extract_features(s, site.geometry, cfg, cv);
    CHECK(r.scene_type == SceneType::car_only);
    CHECK_FALSE(r.interaction);
    CHECK_FALSE(r.psm());
    CHECK(r.average_car_speed_kmh().value() == doctest::Approx(25.0));
    CHECK(r.stop_behavior() == StopBehavior::no_stop);
  }

  SUBCASE("generated encounter") {
    EncounterSpec spec;
    spec.spot_id = "E";
    spec.offset_s = 3.2;
    spec.vehicle_speed_kmh = 30;
    const GeneratedScene g = generate_scene(spec, site);
    const FeatureRecord r = extract_features(g.scene, site.geometry, cfg, cv);
    CHECK(r.scene_type == SceneType::interactive);
    REQUIRE(r.psm());
    CHECK(*r.psm() == doctest::Approx(3.2).epsilon(1e-6));
    REQUIRE(r.pcr_level());
    CHECK(r.interaction->conflict_point->x == doctest::Approx(g.truth.conflict_point.x).epsilon(1e-6));
  }

  SUBCASE("invalid scene") {
    Scene s{"BAD", "E", {}, 30, {track("1", ObjectType::vehicle, {{0, 0, 0}})}};
    try {
      extract_features(s, site.geometry, cfg, cv);
      FAIL("expected FeatureError");
    } catch (const FeatureError& e) {
      CHECK(e.scene_code() == "BAD");
      CHECK(std::string(e.what()).find("fewer than 2 points") != std::string::npos);
    }
  }
}
