#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <json.hpp>

#include "safetycube/cube.h"
#include "safetycube/pcr.h"
#include "safetycube/warehouse.h"

namespace safetycube {

struct ApiRequest {
  std::string method;  // GET, POST
  std::string path;
  std::map<std::string, std::string> params;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string body;  // JSON
};

/// Read-only JSON API over one warehouse. Requests see a single immutable snapshot; reload()
/// swaps in a new one atomically.
class ApiService {
 public:
  explicit ApiService(std::filesystem::path warehouse_root);

  ApiResponse handle(const ApiRequest& req);
  void reload();

  struct Snapshot {
    Warehouse warehouse;
    Cube cube;
    Predictor predictor;
  };
  std::shared_ptr<const Snapshot> snapshot() const;

 private:
  std::filesystem::path root_;
  mutable std::mutex mu_;
  std::shared_ptr<const Snapshot> snapshot_;
};

/// Per-frame PCRAs for the scene's interacting pair; `stride` keeps every stride-th frame.
nlohmann::json scene_playback(const Scene& scene, const Site& site, const FeatureConfig& cfg,
                              const Predictor& predictor, int stride = 1);

/// Blocks serving `api` over HTTP until the process ends.
void serve_http(ApiService& api, const std::string& host, int port);

}  // namespace safetycube
