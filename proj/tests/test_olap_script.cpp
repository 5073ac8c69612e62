#include <doctest.h>

#include "helpers.h"
#include "safetycube/olap_script.h"
#include "safetycube/reports.h"

using namespace safetycube;
using namespace testing;

namespace {

Cube fixture_cube() {
  std::vector<FactRow> rows;
  int n = 0;
  for (const char* spot : {"A", "E", "G", "I"}) {
    for (const char* when : {"2021-01-11T08:30:00+09:00", "2021-01-12T19:10:00+09:00"}) {
      for (double psm : {-1.5, 2.0, 3.2}) {
        rows.push_back({"R" + std::to_string(n++), spot, parse_rfc3339(when), SceneType::interactive, 10.0 * n / 3,
                        StopBehavior::no_stop, psm, psm < 0 ? RiskLevel::warning : RiskLevel::normal});
      }
      rows.push_back({"R" + std::to_string(n++), spot, parse_rfc3339(when), SceneType::car_only, 25.0, StopBehavior::no_stop,
                      std::nullopt, std::nullopt});
    }
  }
  return build_cube(rows, osan_sites(), WarehouseConfig{});
}

std::string trimmed(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

}  // namespace

TEST_CASE("parse statements") {
  const QueryScript s = parse_script(
      "# opening\n"
      "Drill-down on Time (from \"all\" to \"day_night\")\n"
      "\n"
      "Roll-up on Location (to \"district\")\n"
      "Slice on Location (spot = [\"Spot E\" | \"Spot G\"])\n"
      "Slice on Scene (\"psm\" < 0)\n"
      "Dice for (Measure = \"psm\") and (Time = [\"daytime\" | \"nighttime\"] in day_night) and (Behavior = \"interactive\")\n"
      "Pivot (Location, Time)\n"
      "Pivot\n");
  REQUIRE(s.steps.size() == 7);
  CHECK(s.steps[0].kind == StepKind::drill_down);
  CHECK(s.steps[0].line == 2);
  CHECK(s.steps[0].dimension == "time");
  CHECK(s.steps[0].from->level == "all");
  CHECK(s.steps[0].to->level == "day_night");
  CHECK(s.steps[1].kind == StepKind::roll_up);
  CHECK_FALSE(s.steps[1].from);
  CHECK(s.steps[2].members == std::vector<std::string>{"Spot E", "Spot G"});
  CHECK(s.steps[2].level->level == "spot");
  CHECK(s.steps[3].dimension == "scene");
  CHECK(s.steps[3].fact == FactFilter{FactField::psm, CompareOp::lt, 0.0});
  CHECK(s.steps[4].kind == StepKind::dice);
  CHECK(s.steps[4].measures == std::vector<Measure>{Measure::psm_mean});
  REQUIRE(s.steps[4].clauses.size() == 2);
  CHECK(s.steps[4].clauses[0].values == std::vector<std::string>{"daytime", "nighttime"});
  CHECK(s.steps[4].clauses[0].level->level == "day_night");
  CHECK(s.steps[5].order == std::vector<std::string>{"location", "time"});
  CHECK(s.steps[6].order.empty());

  const QueryScript curly = parse_script("Slice on Location (spot = \xE2\x80\x9CSpot I\xE2\x80\x9D)");
  CHECK(curly.steps[0].members == std::vector<std::string>{"Spot I"});
}

TEST_CASE("script errors carry line numbers") {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse_script(text);
    } catch (const ScriptError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("Drill-down on Time (to \"day\")\nExplode on Time\n") == 2);
  CHECK(line_of("\n\nSlice on Location (spot = \"Spot A)\n") == 3);
  CHECK(line_of("Dice for (Time = \"daytime\"\n") == 1);
  CHECK(line_of("Slice on Scene (\"psm\" < zero)\n") == 1);

  const Cube c = fixture_cube();
  auto plan_line = [&](const std::string& text) -> std::size_t {
    try {
      plan_script(c, parse_script(text));
    } catch (const ScriptError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(plan_line("Drill-down on Time (from \"day\" to \"hour\")\n") == 1);
  CHECK(plan_line("Drill-down on Time (to \"day\")\nRoll-up on Location (to \"city\")\n") == 2);
  CHECK(plan_line("Dice for (Time = \"daytime\")\n") == 1);
  CHECK(plan_line("Slice on Location (spot = \"Spot Z\")\n") == 1);
  CHECK(plan_line("Drill-down on Weather (to \"rain\")\n") == 1);
  CHECK(plan_line("Drill-down on Time (to \"day\")\nPivot (Location)\n") == 2);
  CHECK_THROWS_AS(load_script("/nonexistent/script.olap"), std::exception);
}

TEST_CASE("plans match the cube operations") {
  const Cube c = fixture_cube();
  const ScriptPlan p = plan_script(c, parse_script(scenario1_share_script()));
  CHECK(p.query.group_by.at("time") == LevelRef{"day_night", {}});
  CHECK(p.query.group_by.at("location") == LevelRef{"spot", {}});
  CHECK(p.query.measures == std::vector<Measure>{Measure::scene_count});
  CHECK(p.query.fact_filters == std::vector<FactFilter>{{FactField::psm, CompareOp::lt, 0.0}});

  CubeQuery q;
  q.group_by["time"] = LevelRef{"day_night", {}};
  q.group_by["location"] = LevelRef{"spot", {}};
  q = dice(c, q,
           {{"time", LevelRef{"day_night", {}}, CompareOp::in, {"daytime", "nighttime"}, 0.0},
            {"road", LevelRef{"road_feature", {}}, CompareOp::eq, {"unsignalized"}, 0.0},
            {"behavior", LevelRef{"situation_type", {}}, CompareOp::eq, {"interactive"}, 0.0}});
  q = slice(q, FactFilter{FactField::psm, CompareOp::lt, 0.0});
  q.measures = {Measure::scene_count};
  CHECK(run_script(c, parse_script(scenario1_share_script())).same_values(c.aggregate(q)));

  const ResultGrid g = run_script(c, parse_script(scenario1_share_script()));
  // Spot A is signalized and drops out of the unsignalized dice
  CHECK(g.total_count() == 6);
  for (std::size_t i = 0; i < g.cells.size(); ++i) {
    const auto labels = g.cell_labels(i);
    const bool seeded = std::find_if(labels.begin(), labels.end(), [](const std::string& l) {
                          return l == "Spot E" || l == "Spot G" || l == "Spot I";
                        }) != labels.end();
    CHECK(g.cells[i].count == (seeded ? 1 : 0));
  }

  const ResultGrid fenced = run_script(c, parse_script(scenario1_fence_script()));
  for (std::size_t i = 0; i < fenced.cells.size(); ++i) {
    if (fenced.cells[i].count == 0) continue;
    const auto labels = fenced.cell_labels(i);
    CHECK(std::find(labels.begin(), labels.end(), "Spot G") == labels.end());
  }

  const ResultGrid pivoted = run_script(c, parse_script(scenario1_share_script() + "\nPivot\n"));
  CHECK(pivoted.axes[0].dimension == g.axes[1].dimension);
  CHECK(pivoted.total_count() == g.total_count());
}

TEST_CASE("dice level inference") {
  const Cube c = fixture_cube();
  const ScriptPlan p = plan_script(
      c, parse_script("Dice for (Location = \"Spot E\") and (Road = \"school_zone\") and (Time = \"all\")\n"));
  REQUIRE(p.query.filters.size() == 2);
  CHECK(p.query.filters[0].level == LevelRef{"spot", {}});
  CHECK(p.query.filters[1].level == LevelRef{"road_sub_feature", "school_zone"});
  CHECK(p.query.filters[1].values == std::vector<std::string>{"true"});
  const ScriptPlan city = plan_script(c, parse_script("Dice for (Location = \"Osan-si\") and (Behavior = \"interactive\")\n"));
  CHECK(city.query.filters[0].level == LevelRef{"city", {}});
}

TEST_CASE("shipped scripts match the report scripts") {
  const std::string dir = SC_SOURCE_DIR "/data/scripts/";
  CHECK(trimmed(read_file(dir + "scenario1_non_yielding.olap")) == trimmed(scenario1_share_script()));
  CHECK(trimmed(read_file(dir + "scenario1_fence.olap")) == trimmed(scenario1_fence_script()));
  CHECK(trimmed(read_file(dir + "scenario1_negative_psm.olap")) == trimmed(scenario1_negative_psm_script()));
  CHECK(trimmed(read_file(dir + "scenario1_speed_spot_i.olap")) == trimmed(scenario1_speed_script("Spot I")));
  CHECK(trimmed(read_file(dir + "scenario1_speed_spot_f.olap")) == trimmed(scenario1_speed_script("Spot F")));
  CHECK(trimmed(read_file(dir + "scenario2_speed.olap")) == trimmed(scenario2_script(Scenario2View::speed, "Spot E", "Spot G")));
  CHECK(trimmed(read_file(dir + "scenario2_pcr_level.olap")) ==
        trimmed(scenario2_script(Scenario2View::pcr_level, "Spot E", "Spot G")));
  CHECK(trimmed(read_file(dir + "scenario2_speed_within_level.olap")) ==
        trimmed(scenario2_script(Scenario2View::behavioral_feature, "Spot E", "Spot G")));
  const Cube c = fixture_cube();
  for (const char* f : {"scenario1_non_yielding.olap", "scenario2_speed.olap", "scenario2_pcr_level.olap"}) {
    CHECK_NOTHROW(run_script(c, load_script(dir + f)));
  }
}
