#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "safetycube/cube.h"
#include "safetycube/features.h"
#include "safetycube/scene.h"

namespace safetycube {

/// Malformed input data. `line` is 1-based when the error comes from a JSONL file.
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& what, std::size_t line = 0) : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

using SiteMap = std::map<std::string, Site>;

/// The nine Osan test spots A-I with their road features and an illustrative geometry.
SiteMap osan_sites();
/// Geometry shared by all fixture spots: road along +x, crosswalk across it at x in [-2, 2].
SiteGeometry crosswalk_geometry(double crosswalk_length_m);

nlohmann::json sites_to_json(const SiteMap& sites);
SiteMap sites_from_json(const nlohmann::json& j);
SiteMap load_site_metadata(const std::filesystem::path& path);

nlohmann::json scene_to_json(const Scene& s);
Scene scene_from_json(const nlohmann::json& j);
/// One scene per non-blank line. Errors carry the line number; duplicate scene codes are rejected.
std::vector<Scene> parse_scene_stream(std::istream& in, const std::string& source);
std::vector<Scene> load_scene_file(const std::filesystem::path& path);
void write_scene_file(const std::filesystem::path& path, const std::vector<Scene>& scenes);

struct WarehouseConfig {
  int day_start_hour = 6;  // daytime is [day_start_hour, day_end_hour)
  int day_end_hour = 18;
  double speed_bin_kmh = 10.0;
  FeatureConfig features;
  PredictorKind predictor_kind = PredictorKind::constant_velocity;
  std::string predictor_path;  // relative to the warehouse root; empty for constant velocity
};

nlohmann::json config_to_json(const WarehouseConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
WarehouseConfig config_from_json(const nlohmann::json& j);
WarehouseConfig load_config(const std::filesystem::path& path);

/// The compact per-scene row stored in the fact table.
struct FactRow {
  std::string scene_code;
  std::string spot_id;
  Timestamp start_time;
  SceneType scene_type = SceneType::car_only;
  std::optional<double> avg_car_speed_kmh;
  std::optional<StopBehavior> stop;
  std::optional<double> psm;
  std::optional<RiskLevel> pcr_level;

  bool operator==(const FactRow&) const = default;
};

FactRow fact_row(const FeatureRecord& r);
nlohmann::json to_json(const FactRow& f);
FactRow fact_row_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FeatureRecord& r);

inline const std::vector<std::string>& dimension_names() {
  static const std::vector<std::string> names{"location", "time", "road", "behavior"};
  return names;
}

std::string day_night_label(const Timestamp& ts, const WarehouseConfig& cfg);
std::string speed_bin_label(std::optional<double> kmh, double width);
std::string road_sub_feature_label(const SiteMetadata& m);
std::string behavioral_feature_label(const FactRow& f, const WarehouseConfig& cfg);

/// Dimension tables (location, time, road, behavior) covering every site and every fact.
/// Throws DataError on a fact whose spot is unknown.
std::vector<DimensionTable> build_dimension_tables(const std::vector<FactRow>& facts, const SiteMap& sites,
                                                   const WarehouseConfig& cfg);
nlohmann::json to_json(const DimensionTable& t);
FactRecord to_fact_record(const FactRow& f, const SiteMap& sites, const WarehouseConfig& cfg);
Cube build_cube(const std::vector<FactRow>& facts, const SiteMap& sites, const WarehouseConfig& cfg,
                CubeOptions options = {});

enum class ExportFormat { csv, json };
ExportFormat parse_export_format(std::string_view s);
std::string export_result(const ResultGrid& g, ExportFormat format);

/// Directory-backed store: manifest.json, sites.json, config.json, scenes/<spot>.jsonl,
/// features.jsonl, facts.jsonl, dimensions.json and predictors/.
class Warehouse {
 public:
  static constexpr int kFormatVersion = 1;

  /// Creates the layout (keeping existing files) with the given sites and config.
  static Warehouse init(const std::filesystem::path& root, const SiteMap& sites, const WarehouseConfig& cfg = {});
  /// Opens an existing warehouse; throws DataError when the manifest is missing or unsupported.
  static Warehouse open(const std::filesystem::path& root);

  const std::filesystem::path& root() const { return root_; }
  const SiteMap& sites() const { return sites_; }
  const WarehouseConfig& config() const { return config_; }
  nlohmann::json manifest() const;

  /// Adds scenes to their spot files, replacing scenes with the same code. Returns the number written.
  std::size_t ingest(const std::vector<Scene>& scenes);
  std::vector<Scene> load_scenes() const;
  std::optional<Scene> find_scene(const std::string& scene_code) const;

  /// Upserts fact rows by scene_code and regenerates dimensions.json.
  void write_facts(const std::vector<FeatureRecord>& records);
  void write_fact_rows(const std::vector<FactRow>& rows);
  std::vector<FactRow> load_facts() const;
  void write_features(const std::vector<FeatureRecord>& records);

  Predictor load_predictor() const;
  void save_predictor(const Predictor& p, const std::string& name);

  Cube cube(CubeOptions options = {}) const;

 private:
  void save_manifest(std::uint64_t bump) const;

  std::filesystem::path root_;
  SiteMap sites_;
  WarehouseConfig config_;
};

/// Writes `text` to `path` through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_file(const std::filesystem::path& path);

}  // namespace safetycube
