#include "safetycube/api.h"

#include <algorithm>
#include <span>

#include <httplib.h>

#include "safetycube/features.h"
#include "safetycube/olap_script.h"

namespace safetycube {

using nlohmann::json;

namespace {

ApiResponse reply(int status, const json& j) { return {status, j.dump(2) + "\n"}; }

ApiResponse error(int status, const std::string& kind, const std::string& detail) {
  return reply(status, {{"error", kind}, {"detail", detail}});
}

json polygon_json(const Polygon& p) {
  json out = json::array();
  for (const auto& v : p) out.push_back({v.x, v.y});
  return out;
}

std::shared_ptr<const ApiService::Snapshot> load_snapshot(const std::filesystem::path& root) {
  Warehouse w = Warehouse::open(root);
  Cube c = w.cube();
  Predictor p = w.load_predictor();
  return std::make_shared<const ApiService::Snapshot>(ApiService::Snapshot{std::move(w), std::move(c), std::move(p)});
}

}  // namespace

json scene_playback(const Scene& scene, const Site& site, const FeatureConfig& cfg, const Predictor& predictor,
                    int stride) {
  json out = scene_to_json(scene);
  out["frames"] = json::array();
  const FeatureRecord rec = extract_features(scene, site.geometry, cfg, predictor);
  out["scene_type"] = std::string(to_string(rec.scene_type));
  out["psm"] = rec.psm() ? json(*rec.psm()) : json(nullptr);
  out["pcr_level"] = rec.pcr_level() ? json(std::string(to_string(*rec.pcr_level()))) : json(nullptr);
  if (!rec.interaction) return out;
  const auto find = [&](const std::string& id) {
    return std::find_if(scene.tracks.begin(), scene.tracks.end(), [&](const ObjectTrack& t) { return t.object_id == id; });
  };
  const ObjectTrack& v = *find(rec.interaction->vehicle_id);
  const ObjectTrack& p = *find(rec.interaction->pedestrian_id);
  out["vehicle_id"] = v.object_id;
  out["pedestrian_id"] = p.object_id;
  const std::size_t need = predictor.required_history(scene.fps);
  const std::size_t keep = need + static_cast<std::size_t>(std::max(cfg.pcr.smoothing_window, 1)) + 2;
  const std::span<const TrackPoint> vp(v.points), pp(p.points);
  int n = 0;
  for (const auto& [iv, ip] : overlapping_frames(v, p, scene.fps)) {
    if (iv + 1 < need || ip + 1 < need) continue;
    if (n++ % std::max(stride, 1) != 0) continue;
    const std::size_t nv = std::min(keep, iv + 1), np = std::min(keep, ip + 1);
    const PcrAssessment a = assess_pcr(vp.subspan(iv + 1 - nv, nv), pp.subspan(ip + 1 - np, np), predictor, cfg.pcr);
    json horizons = json::array();
    for (const auto& h : a.horizons) {
      horizons.push_back({{"horizon_s", h.horizon_s},
                          {"overlap", h.overlap},
                          {"vehicle", polygon_json(h.vehicle.polygon)},
                          {"pedestrian", polygon_json(h.pedestrian.polygon)}});
    }
    out["frames"].push_back({{"t", vp[iv].t},
                             {"frame", frame_index(vp[iv].t, scene.fps)},
                             {"level", std::string(to_string(a.level))},
                             {"horizons", horizons}});
  }
  return out;
}

ApiService::ApiService(std::filesystem::path warehouse_root)
    : root_(std::move(warehouse_root)), snapshot_(load_snapshot(root_)) {}

void ApiService::reload() {
  auto fresh = load_snapshot(root_);
  std::lock_guard lock(mu_);
  snapshot_ = std::move(fresh);
}

std::shared_ptr<const ApiService::Snapshot> ApiService::snapshot() const {
  std::lock_guard lock(mu_);
  return snapshot_;
}

ApiResponse ApiService::handle(const ApiRequest& req) {
  const auto snap = snapshot();
  const Cube& cube = snap->cube;
  try {
    if (req.method == "GET" && req.path == "/dimensions") {
      json dims = json::array();
      for (const auto& t : cube.dimensions()) {
        json d = to_json(t);
        json labels = json::object();
        for (const auto& lv : t.levels) {
          if (lv != kAllLevel) labels[lv] = cube.level_labels(t.name, LevelRef{lv, std::nullopt});
        }
        d["labels"] = labels;
        dims.push_back(std::move(d));
      }
      return reply(200, {{"dimensions", dims}, {"fact_count", cube.facts().size()}});
    }
    if (req.method == "POST" && req.path == "/cube/query") {
      const json body = json::parse(req.body);
      ResultGrid g;
      if (body.is_object() && body.contains("script")) {
        g = run_script(cube, parse_script(body.at("script").get<std::string>()));
      } else {
        g = cube.aggregate(query_from_json(body));
      }
      return {200, export_result(g, ExportFormat::json)};
    }
    if (req.method == "POST" && req.path == "/cube/drill-through") {
      const json body = json::parse(req.body);
      const CubeQuery q = query_from_json(body.at("query"));
      const auto codes = cube.drill_through(q, body.at("labels").get<std::vector<std::string>>());
      return reply(200, {{"scene_codes", codes}});
    }
    if (req.method == "GET" && req.path.rfind("/scenes/", 0) == 0) {
      const std::string code = req.path.substr(8);
      const auto scene = snap->warehouse.find_scene(code);
      if (!scene) return error(404, "not_found", "no scene with code '" + code + "'");
      const auto site = snap->warehouse.sites().find(scene->spot_id);
      if (site == snap->warehouse.sites().end()) return error(404, "not_found", "unknown spot " + scene->spot_id);
      int stride = 1;
      if (const auto it = req.params.find("stride"); it != req.params.end()) stride = std::stoi(it->second);
      return reply(200, scene_playback(*scene, site->second, snap->warehouse.config().features, snap->predictor, stride));
    }
    if (req.method == "GET" && req.path == "/severity-map") {
      const auto it = req.params.find("level");
      if (it == req.params.end()) return error(400, "bad_request", "missing 'level' parameter");
      const LevelRef level = LevelRef::parse(it->second);
      if (level.level == kAllLevel) return error(400, "bad_request", "level 'all' has a single member");
      CubeQuery q;
      q.group_by["location"] = level;
      q.measures = {Measure::scene_count, Measure::pcr_level_mean};
      const ResultGrid g = cube.aggregate(q);
      json members = json::array();
      for (std::size_t i = 0; i < g.cells.size(); ++i) {
        const Cell& c = g.cells[i];
        if (c.count == 0) continue;
        const auto m = c.pcr_level_mean();
        members.push_back({{"member", g.axes[0].labels[i]},
                           {"scene_count", c.count},
                           {"pcr_level_mean", m ? json(*m) : json(nullptr)}});
      }
      return reply(200, {{"level", level.str()}, {"members", members}});
    }
    if (req.method == "POST" && req.path == "/reload") {
      reload();
      const auto fresh = snapshot();
      return reply(200, {{"reloaded", true}, {"fact_count", fresh->cube.facts().size()}});
    }
    return error(404, "not_found", req.method + " " + req.path);
  } catch (const json::exception& e) {
    return error(400, "bad_request", e.what());
  } catch (const CubeError& e) {
    return error(400, "bad_request", e.what());
  } catch (const StaleCellError& e) {
    return error(400, "bad_request", e.what());
  } catch (const std::invalid_argument& e) {
    return error(400, "bad_request", e.what());
  } catch (const std::exception& e) {
    return error(500, "internal", e.what());
  }
}

void serve_http(ApiService& api, const std::string& host, int port) {
  httplib::Server server;
  auto bridge = [&api](const httplib::Request& req, httplib::Response& res) {
    ApiRequest r{req.method, req.path, {}, req.body};
    for (const auto& [k, v] : req.params) r.params.emplace(k, v);
    const ApiResponse out = api.handle(r);
    res.status = out.status;
    res.set_content(out.body, "application/json");
  };
  server.Get(".*", bridge);
  server.Post(".*", bridge);
  if (!server.listen(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace safetycube
