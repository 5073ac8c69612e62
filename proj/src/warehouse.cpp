#include "safetycube/warehouse.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace safetycube {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json polygon_to_json(const Polygon& p) {
  json a = json::array();
  for (const auto& v : p) a.push_back({v.x, v.y});
  return a;
}

Polygon polygon_from_json(const json& j) {
  Polygon p;
  for (const auto& v : j) p.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
  return p;
}

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

std::string fmt_number(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) return std::to_string(static_cast<long long>(v));
  return json(v).dump();
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << text;
    if (!out) throw DataError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SiteGeometry crosswalk_geometry(double L) {
  const double h = L / 2.0;
  SiteGeometry g;
  g.crosswalk = {{-2.0, -h}, {2.0, -h}, {2.0, h}, {-2.0, h}};
  g.cia = {{-5.0, -h}, {-2.0, -h}, {-2.0, h}, {-5.0, h}};
  g.sidewalks = {{{-30.0, h}, {30.0, h}, {30.0, h + 3.0}, {-30.0, h + 3.0}},
                 {{-30.0, -h - 3.0}, {30.0, -h - 3.0}, {30.0, -h}, {-30.0, -h}}};
  g.approach_axis = {1.0, 0.0};
  g.stop_line = {{-3.0, -h}, {-3.0, h}};
  return g;
}

SiteMap osan_sites() {
  struct Row {
    const char* id;
    double length;
    bool school_zone, speed_camera, fence, red_urethane;
    int lanes;
    bool signalized;
    const char* neighborhood;
    const char* district;
  };
  // Neighborhood and district names place the spots in Osan; they are illustrative.
  static const Row rows[] = {
      {"A", 8, true, false, false, false, 2, true, "Jungang-dong", "Osan East"},
      {"B", 11, true, false, false, false, 3, true, "Daewon-dong", "Osan East"},
      {"C", 20, true, false, false, false, 4, true, "Namchon-dong", "Osan West"},
      {"D", 23, true, true, false, false, 4, true, "Sinjang-dong", "Osan East"},
      {"E", 7, true, false, true, false, 2, false, "Sema-dong", "Osan West"},
      {"F", 8, true, false, true, false, 2, false, "Chohyeon-dong", "Osan West"},
      {"G", 8, false, false, false, false, 2, false, "Jungang-dong", "Osan East"},
      {"H", 8, true, false, true, true, 2, false, "Daewon-dong", "Osan East"},
      {"I", 7, true, false, false, false, 2, false, "Sinjang-dong", "Osan East"},
  };
  SiteMap out;
  for (const auto& r : rows) {
    Site s;
    s.meta.spot_id = r.id;
    s.meta.name = std::string("Spot ") + r.id;
    s.meta.crosswalk_length_m = r.length;
    s.meta.school_zone = r.school_zone;
    s.meta.speed_camera = r.speed_camera;
    s.meta.fence = r.fence;
    s.meta.red_urethane = r.red_urethane;
    s.meta.num_lanes = r.lanes;
    s.meta.signalized = r.signalized;
    s.meta.speed_limit_kmh = 30.0;
    s.meta.neighborhood = r.neighborhood;
    s.meta.district = r.district;
    s.meta.city = "Osan-si";
    s.meta.province = "Gyeonggi-do";
    s.geometry = crosswalk_geometry(r.length);
    out.emplace(r.id, std::move(s));
  }
  return out;
}

json sites_to_json(const SiteMap& sites) {
  json spots = json::array();
  for (const auto& [id, s] : sites) {
    const auto& m = s.meta;
    const auto& g = s.geometry;
    json sw = json::array();
    for (const auto& p : g.sidewalks) sw.push_back(polygon_to_json(p));
    spots.push_back({{"spot_id", m.spot_id},
                     {"name", m.name},
                     {"crosswalk_length_m", m.crosswalk_length_m},
                     {"school_zone", m.school_zone},
                     {"speed_camera", m.speed_camera},
                     {"fence", m.fence},
                     {"red_urethane", m.red_urethane},
                     {"num_lanes", m.num_lanes},
                     {"signalized", m.signalized},
                     {"speed_limit_kmh", m.speed_limit_kmh},
                     {"neighborhood", m.neighborhood},
                     {"district", m.district},
                     {"city", m.city},
                     {"province", m.province},
                     {"geometry",
                      {{"crosswalk", polygon_to_json(g.crosswalk)},
                       {"cia", polygon_to_json(g.cia)},
                       {"sidewalks", sw},
                       {"approach_axis", {g.approach_axis.x, g.approach_axis.y}},
                       {"stop_line", {{g.stop_line.a.x, g.stop_line.a.y}, {g.stop_line.b.x, g.stop_line.b.y}}}}}});
  }
  return {{"spots", spots}};
}

SiteMap sites_from_json(const json& j) {
  SiteMap out;
  if (!j.contains("spots") || !j.at("spots").is_array()) throw DataError("sites document lacks a 'spots' array");
  for (const auto& e : j.at("spots")) {
    const std::string id = e.value("spot_id", "");
    try {
      if (id.empty()) throw DataError("spot entry without spot_id");
      Site s;
      auto& m = s.meta;
      m.spot_id = id;
      m.name = e.value("name", "Spot " + id);
      m.crosswalk_length_m = e.at("crosswalk_length_m").get<double>();
      m.school_zone = e.at("school_zone").get<bool>();
      m.speed_camera = e.at("speed_camera").get<bool>();
      m.fence = e.value("fence", false);
      m.red_urethane = e.value("red_urethane", false);
      m.num_lanes = e.at("num_lanes").get<int>();
      m.signalized = e.at("signalized").get<bool>();
      m.speed_limit_kmh = e.at("speed_limit_kmh").get<double>();
      m.neighborhood = e.at("neighborhood").get<std::string>();
      m.district = e.at("district").get<std::string>();
      m.city = e.at("city").get<std::string>();
      m.province = e.at("province").get<std::string>();
      if (!e.contains("geometry")) throw DataError("missing geometry");
      const auto& jg = e.at("geometry");
      auto& g = s.geometry;
      g.crosswalk = polygon_from_json(jg.at("crosswalk"));
      g.cia = polygon_from_json(jg.at("cia"));
      for (const auto& p : jg.at("sidewalks")) g.sidewalks.push_back(polygon_from_json(p));
      g.approach_axis = {jg.at("approach_axis").at(0).get<double>(), jg.at("approach_axis").at(1).get<double>()};
      const auto& sl = jg.at("stop_line");
      g.stop_line = {{sl.at(0).at(0).get<double>(), sl.at(0).at(1).get<double>()},
                     {sl.at(1).at(0).get<double>(), sl.at(1).at(1).get<double>()}};
      const auto problems = validate_geometry(g);
      if (!problems.empty()) throw DataError(problems.front());
      if (!out.emplace(id, std::move(s)).second) throw DataError("duplicate spot");
    } catch (const json::exception& ex) {
      throw DataError("spot " + id + ": " + ex.what());
    } catch (const DataError& ex) {
      throw DataError("spot " + id + ": " + ex.what());
    }
  }
  return out;
}

SiteMap load_site_metadata(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return sites_from_json(j);
}

json scene_to_json(const Scene& s) {
  json tracks = json::array();
  for (const auto& t : s.tracks) {
    json pts = json::array();
    for (const auto& p : t.points) pts.push_back({p.t, p.x, p.y});
    tracks.push_back({{"object_id", t.object_id}, {"object_type", std::string(to_string(t.object_type))}, {"points", pts}});
  }
  return {{"scene_code", s.scene_code},
          {"spot_id", s.spot_id},
          {"start_time", format_rfc3339(s.start_time)},
          {"fps", s.fps},
          {"tracks", tracks}};
}

Scene scene_from_json(const json& j) {
  if (!j.is_object()) throw DataError("scene must be a JSON object");
  for (const char* key : {"scene_code", "spot_id", "start_time", "fps", "tracks"}) {
    if (!j.contains(key)) throw DataError(std::string("missing field '") + key + "'");
  }
  Scene s;
  try {
    s.scene_code = j.at("scene_code").get<std::string>();
    s.spot_id = j.at("spot_id").get<std::string>();
    s.start_time = parse_rfc3339(j.at("start_time").get<std::string>());
    s.fps = j.at("fps").get<double>();
    if (!(s.fps > 0.0)) throw DataError("fps must be positive");
    for (const auto& jt : j.at("tracks")) {
      ObjectTrack t;
      t.object_id = jt.at("object_id").is_string() ? jt.at("object_id").get<std::string>()
                                                   : jt.at("object_id").dump();
      t.object_type = parse_object_type(jt.at("object_type").get<std::string>());
      for (const auto& p : jt.at("points")) {
        if (!p.is_array() || p.size() != 3) throw DataError("track point must be [t, x, y]");
        t.points.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
      }
      s.tracks.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("schema violation: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  return s;
}

std::vector<Scene> parse_scene_stream(std::istream& in, const std::string& source) {
  std::vector<Scene> out;
  std::set<std::string> codes;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      Scene s = scene_from_json(json::parse(line));
      if (!codes.insert(s.scene_code).second) throw DataError("duplicate scene_code " + s.scene_code);
      out.push_back(std::move(s));
    } catch (const json::parse_error& e) {
      throw DataError(source + ":" + std::to_string(n) + ": malformed JSON: " + e.what(), n);
    } catch (const DataError& e) {
      throw DataError(source + ":" + std::to_string(n) + ": " + e.what(), n);
    }
  }
  return out;
}

std::vector<Scene> load_scene_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  return parse_scene_stream(in, path.string());
}

void write_scene_file(const fs::path& path, const std::vector<Scene>& scenes) {
  std::string text;
  for (const auto& s : scenes) text += scene_to_json(s).dump() + "\n";
  write_file_atomic(path, text);
}

json config_to_json(const WarehouseConfig& c) {
  const auto& f = c.features;
  return {{"day_start_hour", c.day_start_hour},
          {"day_end_hour", c.day_end_hour},
          {"speed_bin_kmh", c.speed_bin_kmh},
          {"smoothing_window", f.smoothing_window},
          {"accel_threshold_mps2", f.accel_threshold_mps2},
          {"v_stop_kmh", f.v_stop_kmh},
          {"stop_min_dur_s", f.stop_min_dur_s},
          {"d_conflict_m", f.d_conflict_m},
          {"psm_smoothing_window", f.psm_smoothing_window},
          {"conflict_point_mode",
           f.conflict_mode == ConflictPointMode::crosswalk_entry ? "crosswalk_entry" : "trajectory_intersection"},
          {"pcr_eval_step_s", f.pcr_eval_step_s},
          {"pcr_horizons_s", f.pcr.horizons_s},
          {"ci_z", f.pcr.ci_z},
          {"inflation_vehicle_m", f.pcr.inflation_vehicle_m},
          {"inflation_pedestrian_m", f.pcr.inflation_pedestrian_m},
          {"stationary_speed_eps", f.pcr.stationary_speed_eps},
          {"predictor_kind", std::string(to_string(c.predictor_kind))},
          {"predictor_path", c.predictor_path}};
}

WarehouseConfig config_from_json(const json& j) {
  WarehouseConfig c;
  const json defaults = config_to_json(c);
  for (const auto& [k, v] : j.items()) {
    if (!defaults.contains(k)) throw DataError("unknown config key: " + k);
  }
  try {
    auto& f = c.features;
    c.day_start_hour = j.value("day_start_hour", c.day_start_hour);
    c.day_end_hour = j.value("day_end_hour", c.day_end_hour);
    c.speed_bin_kmh = j.value("speed_bin_kmh", c.speed_bin_kmh);
    f.smoothing_window = j.value("smoothing_window", f.smoothing_window);
    f.accel_threshold_mps2 = j.value("accel_threshold_mps2", f.accel_threshold_mps2);
    f.v_stop_kmh = j.value("v_stop_kmh", f.v_stop_kmh);
    f.stop_min_dur_s = j.value("stop_min_dur_s", f.stop_min_dur_s);
    f.d_conflict_m = j.value("d_conflict_m", f.d_conflict_m);
    f.psm_smoothing_window = j.value("psm_smoothing_window", f.psm_smoothing_window);
    const std::string mode = j.value("conflict_point_mode", "trajectory_intersection");
    if (mode == "crosswalk_entry") {
      f.conflict_mode = ConflictPointMode::crosswalk_entry;
    } else if (mode != "trajectory_intersection") {
      throw DataError("unknown conflict_point_mode: " + mode);
    }
    f.pcr_eval_step_s = j.value("pcr_eval_step_s", f.pcr_eval_step_s);
    if (j.contains("pcr_horizons_s")) f.pcr.horizons_s = j.at("pcr_horizons_s").get<std::array<double, 3>>();
    f.pcr.ci_z = j.value("ci_z", f.pcr.ci_z);
    f.pcr.inflation_vehicle_m = j.value("inflation_vehicle_m", f.pcr.inflation_vehicle_m);
    f.pcr.inflation_pedestrian_m = j.value("inflation_pedestrian_m", f.pcr.inflation_pedestrian_m);
    f.pcr.stationary_speed_eps = j.value("stationary_speed_eps", f.pcr.stationary_speed_eps);
    c.predictor_kind = parse_predictor_kind(j.value("predictor_kind", "constant_velocity"));
    c.predictor_path = j.value("predictor_path", "");
  } catch (const json::exception& e) {
    throw DataError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  if (c.day_start_hour < 0 || c.day_end_hour > 24 || c.day_start_hour >= c.day_end_hour) {
    throw DataError("config: daytime window must satisfy 0 <= day_start_hour < day_end_hour <= 24");
  }
  if (!(c.speed_bin_kmh > 0.0)) throw DataError("config: speed_bin_kmh must be positive");
  try {
    c.features.pcr.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  return c;
}

WarehouseConfig load_config(const fs::path& path) {
  try {
    return config_from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

FactRow fact_row(const FeatureRecord& r) {
  FactRow f;
  f.scene_code = r.scene_code;
  f.spot_id = r.spot_id;
  f.start_time = r.start_time;
  f.scene_type = r.scene_type;
  f.avg_car_speed_kmh = r.average_car_speed_kmh();
  f.stop = r.stop_behavior();
  f.psm = r.psm();
  f.pcr_level = r.pcr_level();
  return f;
}

json to_json(const FactRow& f) {
  return {{"scene_code", f.scene_code},
          {"spot_id", f.spot_id},
          {"start_time", format_rfc3339(f.start_time)},
          {"scene_type", std::string(to_string(f.scene_type))},
          {"avg_car_speed_kmh", optional_json(f.avg_car_speed_kmh)},
          {"stop", f.stop ? json(std::string(to_string(*f.stop))) : json(nullptr)},
          {"psm", optional_json(f.psm)},
          {"pcr_level", f.pcr_level ? json(std::string(to_string(*f.pcr_level))) : json(nullptr)}};
}

FactRow fact_row_from_json(const json& j) {
  FactRow f;
  try {
    f.scene_code = j.at("scene_code").get<std::string>();
    f.spot_id = j.at("spot_id").get<std::string>();
    f.start_time = parse_rfc3339(j.at("start_time").get<std::string>());
    f.scene_type = parse_scene_type(j.at("scene_type").get<std::string>());
    f.avg_car_speed_kmh = optional_from<double>(j, "avg_car_speed_kmh");
    if (const auto s = optional_from<std::string>(j, "stop")) f.stop = parse_stop_behavior(*s);
    f.psm = optional_from<double>(j, "psm");
    if (const auto s = optional_from<std::string>(j, "pcr_level")) f.pcr_level = parse_risk_level(*s);
  } catch (const json::exception& e) {
    throw DataError(std::string("fact row: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("fact row: ") + e.what());
  }
  return f;
}

json to_json(const FeatureRecord& r) {
  json j = to_json(fact_row(r));
  j["non_overlapping_mix"] = r.non_overlapping_mix;
  j["vehicles"] = json::array();
  for (const auto& v : r.vehicles) {
    json acc = json::array(), pos = json::array();
    for (auto a : v.acceleration) acc.push_back(std::string(to_string(a)));
    for (auto p : v.position) pos.push_back(std::string(to_string(p)));
    j["vehicles"].push_back({{"object_id", v.object_id},
                             {"speed_kmh", v.speed_kmh},
                             {"average_speed_kmh", v.average_speed_kmh},
                             {"acceleration", acc},
                             {"position", pos},
                             {"crosswalk_distance_m", v.crosswalk_distance_m},
                             {"stop", v.stop ? json(std::string(to_string(*v.stop))) : json(nullptr)}});
  }
  j["pedestrians"] = json::array();
  for (const auto& p : r.pedestrians) {
    json pos = json::array();
    for (auto z : p.position) pos.push_back(std::string(to_string(z)));
    j["pedestrians"].push_back({{"object_id", p.object_id},
                                {"speed_kmh", p.speed_kmh},
                                {"average_speed_kmh", p.average_speed_kmh},
                                {"position", pos}});
  }
  if (r.interaction) {
    const auto& ix = *r.interaction;
    json rel = json::array();
    for (auto x : ix.relative_position) rel.push_back(std::string(to_string(x)));
    j["interaction"] = {{"vehicle_id", ix.vehicle_id},
                        {"pedestrian_id", ix.pedestrian_id},
                        {"relative_position", rel},
                        {"vp_distance_m", ix.vp_distance_m},
                        {"conflict_point", ix.conflict_point ? json({ix.conflict_point->x, ix.conflict_point->y})
                                                             : json(nullptr)}};
  } else {
    j["interaction"] = nullptr;
  }
  return j;
}

std::string day_night_label(const Timestamp& ts, const WarehouseConfig& cfg) {
  return ts.hour >= cfg.day_start_hour && ts.hour < cfg.day_end_hour ? "daytime" : "nighttime";
}

std::string speed_bin_label(std::optional<double> kmh, double width) {
  if (!kmh) return "none";
  const double lo = std::floor(std::max(0.0, *kmh) / width) * width;
  return fmt_number(lo) + "-" + fmt_number(lo + width);
}

std::string road_sub_feature_label(const SiteMetadata& m) {
  std::string flags;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!flags.empty()) flags += "+";
    flags += name;
  };
  add(m.school_zone, "school_zone");
  add(m.fence, "fence");
  add(m.speed_camera, "speed_camera");
  add(m.red_urethane, "red_urethane");
  return std::string(m.signalized ? "signalized" : "unsignalized") + ":" + (flags.empty() ? "plain" : flags);
}

namespace {

std::string object_type_label(SceneType t) {
  switch (t) {
    case SceneType::car_only: return "vehicle";
    case SceneType::pedestrian_only: return "pedestrian";
    case SceneType::interactive: return "vehicle_pedestrian";
  }
  return "vehicle";
}

std::string pcr_label(const FactRow& f) { return f.pcr_level ? std::string(to_string(*f.pcr_level)) : "none"; }
std::string stop_label(const FactRow& f) { return f.stop ? std::string(to_string(*f.stop)) : "none"; }
std::string psm_sign_label(const FactRow& f) {
  if (!f.psm) return "none";
  return *f.psm < 0.0 ? "negative" : "positive";
}

std::string time_key(const Timestamp& ts) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "T%02d", ts.hour);
  return date_label(ts) + buf;
}

std::string hour_label(const Timestamp& ts) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d", ts.hour);
  return buf;
}

const char* bool_label(bool b) { return b ? "true" : "false"; }

const Site& site_for(const FactRow& f, const SiteMap& sites) {
  const auto it = sites.find(f.spot_id);
  if (it == sites.end()) throw DataError("scene " + f.scene_code + " has unknown spot_id '" + f.spot_id + "'");
  return it->second;
}

}  // namespace

std::string behavioral_feature_label(const FactRow& f, const WarehouseConfig& cfg) {
  return std::string(to_string(f.scene_type)) + "|" + speed_bin_label(f.avg_car_speed_kmh, cfg.speed_bin_kmh) + "|" +
         pcr_label(f) + "|" + stop_label(f) + "|" + psm_sign_label(f);
}

std::vector<DimensionTable> build_dimension_tables(const std::vector<FactRow>& facts, const SiteMap& sites,
                                                   const WarehouseConfig& cfg) {
  DimensionTable location{"location", {"spot", "neighborhood", "district", "city", "province", "all"}, {}, {}};
  DimensionTable time{"time", {"hour", "day_night", "day", "week", "all"}, {}, {}};
  DimensionTable road{"road",
                      {"road_sub_feature", "road_feature", "segment", "all"},
                      {"school_zone", "fence", "speed_camera", "red_urethane"},
                      {}};
  DimensionTable behavior{"behavior",
                          {"behavioral_feature", "object_type", "situation_sub_type", "situation_type", "all"},
                          {"avg_car_speed", "pcr_level", "stop_behavior", "psm_sign"},
                          {}};

  std::set<std::string> road_keys;
  for (const auto& [id, s] : sites) {
    const auto& m = s.meta;
    location.members.push_back({id, {m.name, m.neighborhood, m.district, m.city, m.province}, {}});
    const std::string rk = road_sub_feature_label(m);
    if (road_keys.insert(rk).second) {
      road.members.push_back({rk,
                              {rk, m.signalized ? "signalized" : "unsignalized", "crosswalk"},
                              {{"school_zone", bool_label(m.school_zone)},
                               {"fence", bool_label(m.fence)},
                               {"speed_camera", bool_label(m.speed_camera)},
                               {"red_urethane", bool_label(m.red_urethane)}}});
    }
  }

  std::map<std::string, DimensionMember> time_members, behavior_members;
  for (const auto& f : facts) {
    site_for(f, sites);
    const auto& ts = f.start_time;
    const std::string tk = time_key(ts);
    if (!time_members.count(tk)) {
      time_members.emplace(tk, DimensionMember{tk, {hour_label(ts), day_night_label(ts, cfg), date_label(ts), iso_week_label(ts)}, {}});
    }
    const std::string bk = behavioral_feature_label(f, cfg);
    if (!behavior_members.count(bk)) {
      behavior_members.emplace(
          bk, DimensionMember{bk,
                              {bk, object_type_label(f.scene_type), std::string(to_string(f.scene_type)),
                               f.scene_type == SceneType::interactive ? "interactive" : "single_object"},
                              {{"avg_car_speed", speed_bin_label(f.avg_car_speed_kmh, cfg.speed_bin_kmh)},
                               {"pcr_level", pcr_label(f)},
                               {"stop_behavior", stop_label(f)},
                               {"psm_sign", psm_sign_label(f)}}});
    }
  }
  for (auto& [k, m] : time_members) time.members.push_back(std::move(m));
  for (auto& [k, m] : behavior_members) behavior.members.push_back(std::move(m));
  return {location, time, road, behavior};
}

FactRecord to_fact_record(const FactRow& f, const SiteMap& sites, const WarehouseConfig& cfg) {
  const Site& site = site_for(f, sites);
  FactRecord r;
  r.scene_code = f.scene_code;
  r.keys = {f.spot_id, time_key(f.start_time), road_sub_feature_label(site.meta), behavioral_feature_label(f, cfg)};
  r.psm = f.psm;
  if (f.pcr_level) r.pcr_level = numeric(*f.pcr_level);
  return r;
}

Cube build_cube(const std::vector<FactRow>& facts, const SiteMap& sites, const WarehouseConfig& cfg,
                CubeOptions options) {
  std::vector<FactRecord> records;
  records.reserve(facts.size());
  for (const auto& f : facts) records.push_back(to_fact_record(f, sites, cfg));
  return Cube::build(build_dimension_tables(facts, sites, cfg), std::move(records), std::move(options));
}

ExportFormat parse_export_format(std::string_view s) {
  if (s == "csv") return ExportFormat::csv;
  if (s == "json") return ExportFormat::json;
  throw std::invalid_argument("unknown format: " + std::string(s));
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string export_result(const ResultGrid& g, ExportFormat format) {
  if (format == ExportFormat::json) return to_json(g).dump(2) + "\n";
  std::vector<std::string> header;
  for (const auto& a : g.axes) header.push_back(a.dimension + "." + a.level.str());
  for (auto m : g.measures) header.emplace_back(to_string(m));
  std::string out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += csv_field(row[i]);
    }
    out += "\r\n";
  };
  emit(header);
  for (std::size_t i = 0; i < g.cells.size(); ++i) {
    std::vector<std::string> row = g.cell_labels(i);
    const Cell& c = g.cells[i];
    for (auto m : g.measures) {
      if (m == Measure::scene_count) {
        row.push_back(std::to_string(c.count));
      } else {
        const auto v = m == Measure::psm_mean ? c.psm_mean() : c.pcr_level_mean();
        row.push_back(v ? fmt_number(*v) : "");
      }
    }
    emit(row);
  }
  return out;
}

namespace {

const char* kManifest = "manifest.json";
const char* kSites = "sites.json";
const char* kConfig = "config.json";
const char* kFacts = "facts.jsonl";
const char* kFeatures = "features.jsonl";
const char* kDimensions = "dimensions.json";

std::size_t count_lines(const fs::path& p) {
  if (!fs::exists(p)) return 0;
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) n += line.find_first_not_of(" \t\r") != std::string::npos;
  return n;
}

}  // namespace

json to_json(const DimensionTable& t) {
  json members = json::array();
  for (const auto& m : t.members) members.push_back({{"key", m.key}, {"values", m.values}, {"attributes", m.attributes}});
  return {{"name", t.name}, {"levels", t.levels}, {"attribute_names", t.attribute_names}, {"members", members}};
}

Warehouse Warehouse::init(const fs::path& root, const SiteMap& sites, const WarehouseConfig& cfg) {
  fs::create_directories(root / "scenes");
  fs::create_directories(root / "predictors");
  if (!fs::exists(root / kSites)) write_file_atomic(root / kSites, sites_to_json(sites).dump(2) + "\n");
  if (!fs::exists(root / kConfig)) write_file_atomic(root / kConfig, config_to_json(cfg).dump(2) + "\n");
  Warehouse w;
  w.root_ = root;
  w.sites_ = load_site_metadata(root / kSites);
  w.config_ = load_config(root / kConfig);
  w.save_manifest(0);
  return w;
}

Warehouse Warehouse::open(const fs::path& root) {
  const fs::path mp = root / kManifest;
  if (!fs::exists(mp)) throw DataError("not a warehouse (no manifest.json): " + root.string());
  json m;
  try {
    m = json::parse(read_file(mp));
  } catch (const json::parse_error& e) {
    throw DataError(mp.string() + ": " + e.what());
  }
  if (m.value("format_version", 0) != kFormatVersion) {
    throw DataError("unsupported warehouse format_version in " + mp.string());
  }
  Warehouse w;
  w.root_ = root;
  w.sites_ = load_site_metadata(root / kSites);
  w.config_ = fs::exists(root / kConfig) ? load_config(root / kConfig) : WarehouseConfig{};
  return w;
}

json Warehouse::manifest() const { return json::parse(read_file(root_ / kManifest)); }

void Warehouse::save_manifest(std::uint64_t bump) const {
  std::uint64_t generation = 0;
  if (fs::exists(root_ / kManifest)) {
    try {
      generation = json::parse(read_file(root_ / kManifest)).value("generation", std::uint64_t{0});
    } catch (const json::exception&) {
    }
  }
  std::size_t scenes = 0;
  if (fs::exists(root_ / "scenes")) {
    for (const auto& e : fs::directory_iterator(root_ / "scenes")) {
      if (e.path().extension() == ".jsonl") scenes += count_lines(e.path());
    }
  }
  const json m{{"format", "safetycube-warehouse"},
               {"format_version", kFormatVersion},
               {"generation", generation + bump},
               {"scene_count", scenes},
               {"fact_count", count_lines(root_ / kFacts)}};
  write_file_atomic(root_ / kManifest, m.dump(2) + "\n");
}

std::size_t Warehouse::ingest(const std::vector<Scene>& scenes) {
  std::map<std::string, std::vector<const Scene*>> by_spot;
  std::set<std::string> codes;
  for (const auto& s : scenes) {
    const auto it = sites_.find(s.spot_id);
    if (it == sites_.end()) throw DataError("scene " + s.scene_code + " has unknown spot_id '" + s.spot_id + "'");
    if (!codes.insert(s.scene_code).second) throw DataError("duplicate scene_code " + s.scene_code);
    const auto problems = validate_scene(s, it->second.geometry);
    if (!problems.empty()) throw DataError("scene " + s.scene_code + ": " + problems.front());
    by_spot[s.spot_id].push_back(&s);
  }
  for (const auto& [spot, list] : by_spot) {
    const fs::path p = root_ / "scenes" / (spot + ".jsonl");
    std::vector<Scene> existing = fs::exists(p) ? load_scene_file(p) : std::vector<Scene>{};
    for (const Scene* s : list) {
      const auto it = std::find_if(existing.begin(), existing.end(),
                                   [&](const Scene& e) { return e.scene_code == s->scene_code; });
      if (it != existing.end()) {
        *it = *s;
      } else {
        existing.push_back(*s);
      }
    }
    write_scene_file(p, existing);
  }
  save_manifest(1);
  return scenes.size();
}

std::vector<Scene> Warehouse::load_scenes() const {
  std::vector<fs::path> files;
  if (fs::exists(root_ / "scenes")) {
    for (const auto& e : fs::directory_iterator(root_ / "scenes")) {
      if (e.path().extension() == ".jsonl") files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Scene> out;
  std::set<std::string> codes;
  for (const auto& f : files) {
    for (auto& s : load_scene_file(f)) {
      if (!codes.insert(s.scene_code).second) throw DataError("duplicate scene_code " + s.scene_code + " in " + f.string());
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::optional<Scene> Warehouse::find_scene(const std::string& scene_code) const {
  for (auto& s : load_scenes()) {
    if (s.scene_code == scene_code) return std::move(s);
  }
  return std::nullopt;
}

void Warehouse::write_facts(const std::vector<FeatureRecord>& records) {
  std::vector<FactRow> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(fact_row(r));
  write_fact_rows(rows);
}

void Warehouse::write_fact_rows(const std::vector<FactRow>& rows) {
  std::map<std::string, FactRow> merged;
  for (auto& f : load_facts()) merged.emplace(f.scene_code, std::move(f));
  for (const auto& f : rows) {
    site_for(f, sites_);
    merged.insert_or_assign(f.scene_code, f);
  }
  std::vector<FactRow> all;
  std::string text;
  for (auto& [code, f] : merged) {
    text += to_json(f).dump() + "\n";
    all.push_back(f);
  }
  const auto tables = build_dimension_tables(all, sites_, config_);
  json dims = json::array();
  for (const auto& t : tables) dims.push_back(to_json(t));
  write_file_atomic(root_ / kFacts, text);
  write_file_atomic(root_ / kDimensions, json{{"dimensions", dims}}.dump(2) + "\n");
  save_manifest(1);
}

std::vector<FactRow> Warehouse::load_facts() const {
  const fs::path p = root_ / kFacts;
  std::vector<FactRow> out;
  if (!fs::exists(p)) return out;
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(fact_row_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw DataError(p.string() + ":" + std::to_string(n) + ": " + e.what(), n);
    } catch (const DataError& e) {
      throw DataError(p.string() + ":" + std::to_string(n) + ": " + e.what(), n);
    }
  }
  return out;
}

void Warehouse::write_features(const std::vector<FeatureRecord>& records) {
  std::map<std::string, std::string> merged;
  const fs::path p = root_ / kFeatures;
  if (fs::exists(p)) {
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      merged[json::parse(line).at("scene_code").get<std::string>()] = line;
    }
  }
  for (const auto& r : records) merged[r.scene_code] = to_json(r).dump();
  std::string text;
  for (const auto& [code, line] : merged) text += line + "\n";
  write_file_atomic(p, text);
}

Predictor Warehouse::load_predictor() const {
  if (config_.predictor_kind == PredictorKind::constant_velocity && config_.predictor_path.empty()) {
    return Predictor::constant_velocity();
  }
  const fs::path p = root_ / config_.predictor_path;
  try {
    return Predictor::from_json(json::parse(read_file(p)));
  } catch (const json::exception& e) {
    throw DataError(p.string() + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw DataError(p.string() + ": " + e.what());
  }
}

void Warehouse::save_predictor(const Predictor& p, const std::string& name) {
  const std::string rel = "predictors/" + name + ".json";
  write_file_atomic(root_ / rel, p.to_json().dump() + "\n");
  config_.predictor_kind = p.kind();
  config_.predictor_path = rel;
  write_file_atomic(root_ / kConfig, config_to_json(config_).dump(2) + "\n");
  save_manifest(1);
}

Cube Warehouse::cube(CubeOptions options) const { return build_cube(load_facts(), sites_, config_, std::move(options)); }

}  // namespace safetycube
