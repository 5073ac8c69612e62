#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "safetycube/cube.h"

namespace safetycube {

/// Parse or type-check failure in an OLAP script; `line` is 1-based.
class ScriptError : public CubeError {
 public:
  ScriptError(std::size_t line, const std::string& what)
      : CubeError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

enum class StepKind { drill_down, roll_up, slice, dice, pivot };

/// One dice predicate as written. With no level the value decides it: the highest level holding
/// the label, or a leaf attribute of that name meaning "true". Values starting with "all" do not filter.
struct DiceClause {
  std::string dimension;
  std::optional<LevelRef> level;
  CompareOp op = CompareOp::eq;
  std::vector<std::string> values;
  double number = 0.0;
};

struct OlapStep {
  StepKind kind = StepKind::drill_down;
  std::size_t line = 0;
  std::string dimension;  // lower case; "scene" for measure slices
  std::optional<LevelRef> from;
  std::optional<LevelRef> to;
  // slice
  std::optional<LevelRef> level;
  std::vector<std::string> members;
  std::optional<FactFilter> fact;
  // dice
  std::vector<DiceClause> clauses;
  std::vector<Measure> measures;
  // pivot; empty reverses the current axis order
  std::vector<std::string> order;
};

/// Statements, one per line, in the listing style:
///   Drill-down on Time (from "all" to "day_night")
///   Roll-up on Location (to "district")
///   Slice on Location (spot = ["Spot E" | "Spot G"])
///   Slice on Scene ("psm" < 0)
///   Dice for (Measure = "scene_count") and (Time = ["daytime" | "nighttime"] in day_night) and (Behavior = "interactive")
///   Pivot (Location, Time)
/// Blank lines and '#' comments are ignored.
struct QueryScript {
  std::vector<OlapStep> steps;
};

QueryScript parse_script(std::string_view text);
QueryScript load_script(const std::filesystem::path& path);

struct ScriptPlan {
  CubeQuery query;
  std::vector<std::string> axis_order;  // dimensions in output order
};

/// Applies every step to `start` against the cube's hierarchies without aggregating.
ScriptPlan plan_script(const Cube& cube, const QueryScript& script, CubeQuery start = {});
ResultGrid run_script(const Cube& cube, const QueryScript& script, CubeQuery start = {});

}  // namespace safetycube
