#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace safetycube {

/// Invalid cube input or query (unknown dimension, level, member; dangling key; duplicate code).
class CubeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A drill-through on a grid computed from an older cube snapshot.
class StaleCellError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kAllLevel = "all";

/// A hierarchy level, optionally narrowed to a leaf attribute ("road_sub_feature.fence").
struct LevelRef {
  std::string level;
  std::optional<std::string> attribute;

  static LevelRef parse(std::string_view s);
  std::string str() const;
  bool operator==(const LevelRef&) const = default;
};

struct DimensionMember {
  std::string key;                               // leaf identifier referenced by facts
  std::vector<std::string> values;               // one label per level below "all"
  std::map<std::string, std::string> attributes;  // leaf attributes
};

struct DimensionTable {
  std::string name;
  std::vector<std::string> levels;  // leaf first, "all" last
  std::vector<std::string> attribute_names;
  std::vector<DimensionMember> members;

  std::size_t level_index(std::string_view level) const;  // throws CubeError
  /// Label of member `m` at `ref`; "all" at the top level.
  const std::string& label(const DimensionMember& m, const LevelRef& ref) const;
  void validate_ref(const LevelRef& ref) const;
};

struct FactRecord {
  std::string scene_code;
  std::vector<std::string> keys;  // one leaf key per dimension, in schema order
  std::optional<double> psm;
  std::optional<int> pcr_level;
};

enum class Measure { scene_count, psm_mean, pcr_level_mean };
std::string_view to_string(Measure m);
Measure parse_measure(std::string_view s);

enum class CompareOp { eq, ne, in, lt, le, gt, ge };
std::string_view to_string(CompareOp op);
CompareOp parse_compare_op(std::string_view s);

/// Predicate on member labels. Numeric operators compare the label's leading number
/// ("10-20" reads as 10); labels without one never match them.
struct MemberFilter {
  std::string dimension;
  LevelRef level;
  CompareOp op = CompareOp::eq;
  std::vector<std::string> values;  // eq/ne/in
  double number = 0.0;              // lt/le/gt/ge

  bool matches(const std::string& label) const;
  bool operator==(const MemberFilter&) const = default;
};

enum class FactField { psm, pcr_level };

/// Predicate on a raw measure; facts with a null value never pass.
struct FactFilter {
  FactField field = FactField::psm;
  CompareOp op = CompareOp::lt;
  double value = 0.0;

  bool matches(const FactRecord& f) const;
  bool operator==(const FactFilter&) const = default;
};

using GroupBy = std::map<std::string, LevelRef>;

struct CubeQuery {
  GroupBy group_by;  // dimensions at "all" are absent
  std::vector<MemberFilter> filters;
  std::vector<FactFilter> fact_filters;
  std::vector<Measure> measures{Measure::scene_count, Measure::psm_mean, Measure::pcr_level_mean};

  bool operator==(const CubeQuery&) const = default;
};

nlohmann::json to_json(const CubeQuery& q);
CubeQuery query_from_json(const nlohmann::json& j);

struct Axis {
  std::string dimension;
  LevelRef level;
  std::vector<std::string> labels;
  bool operator==(const Axis&) const = default;
};

struct Cell {
  std::int64_t count = 0;
  std::int64_t psm_n = 0;
  double psm_sum = 0.0;
  std::int64_t pcr_n = 0;
  double pcr_sum = 0.0;

  std::optional<double> psm_mean() const;
  std::optional<double> pcr_level_mean() const;
  bool operator==(const Cell&) const = default;
};

struct ResultGrid {
  std::vector<Axis> axes;
  std::vector<Measure> measures;
  std::vector<Cell> cells;  // row-major over axes, last axis fastest
  // Contributing fact indices per cell; not serialized.
  std::vector<std::vector<std::uint32_t>> provenance;
  std::uint64_t snapshot = 0;

  std::size_t cell_index(const std::vector<std::string>& labels) const;  // throws CubeError
  std::vector<std::string> cell_labels(std::size_t index) const;
  std::int64_t total_count() const;
  /// Same axes, measures and cell values (provenance and snapshot ignored).
  bool same_values(const ResultGrid& o) const;
};

nlohmann::json to_json(const ResultGrid& g);
ResultGrid grid_from_json(const nlohmann::json& j);

struct CubeOptions {
  /// Group-bys whose unfiltered grids are computed at build time.
  std::vector<GroupBy> materialize;
};

/// Immutable star-schema cube. Copies share the same snapshot.
class Cube {
 public:
  Cube();
  static Cube build(std::vector<DimensionTable> dimensions, std::vector<FactRecord> facts, CubeOptions options = {});

  const std::vector<DimensionTable>& dimensions() const;
  const DimensionTable& dimension(std::string_view name) const;
  std::size_t dimension_index(std::string_view name) const;
  const std::vector<FactRecord>& facts() const;
  std::uint64_t snapshot() const;
  std::size_t materialized_count() const;

  /// Distinct labels at a level, in natural order.
  std::vector<std::string> level_labels(std::string_view dimension, const LevelRef& ref) const;

  void validate(const CubeQuery& q) const;
  ResultGrid aggregate(const CubeQuery& q) const;
  /// Like aggregate, but never consults materialized cuboids.
  ResultGrid aggregate_scan(const CubeQuery& q) const;

  std::vector<std::string> drill_through(const ResultGrid& grid, std::size_t cell) const;
  std::vector<std::string> drill_through(const CubeQuery& q, const std::vector<std::string>& labels) const;

 private:
  struct Data;
  std::shared_ptr<const Data> data_;
};

CubeQuery roll_up(const Cube& cube, CubeQuery q, std::string_view dimension);
CubeQuery drill_down(const Cube& cube, CubeQuery q, std::string_view dimension);
/// Fixes one member: adds an equality filter and removes the dimension's axis.
CubeQuery slice(const Cube& cube, CubeQuery q, std::string_view dimension, const LevelRef& level,
                const std::string& member);
/// Restricts one dimension to a member set; the axis stays.
CubeQuery slice(const Cube& cube, CubeQuery q, std::string_view dimension, const LevelRef& level,
                const std::vector<std::string>& members);
CubeQuery slice(CubeQuery q, const FactFilter& predicate);
/// Conjunction of predicates over at least two distinct dimensions; axes unchanged.
CubeQuery dice(const Cube& cube, CubeQuery q, const std::vector<MemberFilter>& predicates);
ResultGrid pivot(const ResultGrid& g, const std::vector<std::size_t>& order);
ResultGrid pivot(const ResultGrid& g, const std::vector<std::string>& dimension_order);

/// Orders labels by leading number when both have one, otherwise lexicographically.
bool natural_less(const std::string& a, const std::string& b);

}  // namespace safetycube
