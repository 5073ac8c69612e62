#include "safetycube/reports.h"

#include <algorithm>
#include <map>
#include <optional>
#include <set>

#include "safetycube/olap_script.h"

namespace safetycube {

using nlohmann::json;

namespace {

using Key = std::vector<std::string>;

struct Bucket {
  Cell cell;
  std::vector<std::uint32_t> facts;
};

/// Sums grid cells over every axis not in `dims`.
std::map<Key, Bucket> marginal(const ResultGrid& g, const std::vector<std::string>& dims) {
  std::vector<std::size_t> pick;
  for (const auto& d : dims) {
    const auto it = std::find_if(g.axes.begin(), g.axes.end(), [&](const Axis& a) { return a.dimension == d; });
    if (it == g.axes.end()) throw ReportError("grid has no " + d + " axis");
    pick.push_back(static_cast<std::size_t>(it - g.axes.begin()));
  }
  std::map<Key, Bucket> out;
  for (std::size_t i = 0; i < g.cells.size(); ++i) {
    const auto labels = g.cell_labels(i);
    Key k;
    for (auto p : pick) k.push_back(labels[p]);
    Bucket& b = out[k];
    const Cell& c = g.cells[i];
    b.cell.count += c.count;
    b.cell.psm_n += c.psm_n;
    b.cell.psm_sum += c.psm_sum;
    b.cell.pcr_n += c.pcr_n;
    b.cell.pcr_sum += c.pcr_sum;
    if (i < g.provenance.size()) b.facts.insert(b.facts.end(), g.provenance[i].begin(), g.provenance[i].end());
  }
  return out;
}

json ratio(std::int64_t num, std::int64_t den) {
  if (den == 0) return nullptr;
  return static_cast<double>(num) / static_cast<double>(den);
}

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

json psm_series(const Cube& cube, const std::vector<std::uint32_t>& facts) {
  std::vector<double> v;
  for (auto i : facts) {
    if (cube.facts()[i].psm) v.push_back(*cube.facts()[i].psm);
  }
  std::sort(v.begin(), v.end());
  json s{{"n", v.size()}, {"values", v}};
  if (v.empty()) {
    for (const char* k : {"min", "q1", "median", "q3", "max", "mean"}) s[k] = nullptr;
    return s;
  }
  double sum = 0.0;
  for (double x : v) sum += x;
  s["min"] = v.front();
  s["q1"] = quantile(v, 0.25);
  s["median"] = quantile(v, 0.5);
  s["q3"] = quantile(v, 0.75);
  s["max"] = v.back();
  s["mean"] = sum / static_cast<double>(v.size());
  return s;
}

ResultGrid run_text(const Cube& cube, const std::string& text, std::size_t drop_last = 0) {
  QueryScript s = parse_script(text);
  s.steps.resize(s.steps.size() - drop_last);
  return run_script(cube, s);
}

void require_member(const Cube& cube, const std::string& dim, const std::string& level, const std::string& member,
                    const std::string& what) {
  const auto labels = cube.level_labels(dim, LevelRef{level, std::nullopt});
  if (std::find(labels.begin(), labels.end(), member) == labels.end()) throw ReportError(what);
}

/// Base grid and psm < 0 grid from a script whose last step is the psm slice.
json share_section(const Cube& cube, const std::string& text) {
  const ResultGrid all = run_text(cube, text, 1);
  const ResultGrid neg = run_text(cube, text);
  json by_period = json::object(), by_spot = json::object();
  const auto base_p = marginal(all, {"time"}), neg_p = marginal(neg, {"time"});
  for (const auto& [k, b] : base_p) {
    const std::int64_t n = neg_p.count(k) ? neg_p.at(k).cell.count : 0;
    by_period[k[0]] = {{"scenes", b.cell.psm_n}, {"non_yielding", n}, {"share", ratio(n, b.cell.psm_n)}};
  }
  const auto base_s = marginal(all, {"location", "time"}), neg_s = marginal(neg, {"location", "time"});
  for (const auto& [k, b] : base_s) {
    const std::int64_t n = neg_s.count(k) ? neg_s.at(k).cell.count : 0;
    by_spot[k[0]][k[1]] = {{"scenes", b.cell.psm_n}, {"non_yielding", n}, {"share", ratio(n, b.cell.psm_n)}};
  }
  return {{"script", text},
          {"grid", to_json(neg)},
          {"base_grid", to_json(all)},
          {"by_period", by_period},
          {"by_spot", by_spot},
          {"total", {{"scenes", all.total_count()}, {"non_yielding", neg.total_count()}}}};
}

}  // namespace

std::string scenario1_share_script() {
  return "Drill-down on Time (from \"all\" to \"day_night\")\n"
         "Drill-down on Location (from \"all\" to \"spot\")\n"
         "Dice for (Measure = \"scene_count\") and (Time = [\"daytime\" | \"nighttime\"] in day_night) and "
         "(Location = \"all spots\") and (Road = \"unsignalized\" in road_feature) and (Behavior = \"interactive\")\n"
         "Slice on Scene (\"psm\" < 0)\n";
}

std::string scenario1_fence_script() {
  return "Drill-down on Time (from \"all\" to \"day_night\")\n"
         "Drill-down on Location (from \"all\" to \"spot\")\n"
         "Drill-down on Road (from \"all\" to \"road_sub_feature\")\n"
         "Drill-down on Behavior (from \"all\" to \"situation_sub_type\")\n"
         "Dice for (Measure = \"scene_count\") and (Time = [\"daytime\" | \"nighttime\"] in day_night) and "
         "(Location = \"all spots\") and (Road = \"unsignalized\" in road_feature) and "
         "(Road = \"fence\" in road_sub_feature) and (Behavior = \"interactive\")\n"
         "Slice on Scene (\"psm\" < 0)\n";
}

std::string scenario1_negative_psm_script() {
  return "Drill-down on Time (from \"all\" to \"day_night\")\n"
         "Drill-down on Location (from \"all\" to \"spot\")\n"
         "Dice for (Measure = \"psm\") and (Time = [\"daytime\" | \"nighttime\"] in day_night) and "
         "(Location = \"all spots\") and (Road = \"unsignalized\" in road_feature) and (Behavior = \"interactive\")\n"
         "Slice on Scene (\"psm\" < 0)\n";
}

std::string scenario1_speed_script(const std::string& spot) {
  return "Drill-down on Time (from \"all\" to \"day_night\")\n"
         "Drill-down on Behavior (from \"all\" to \"behavioral_feature.avg_car_speed\")\n"
         "Dice for (Measure = \"psm\") and (Time = [\"daytime\" | \"nighttime\"] in day_night) and "
         "(Location = \"all spots\") and (Road = \"unsignalized\" in road_feature) and (Behavior = \"interactive\")\n"
         "Slice on Location (spot = \"" + spot + "\")\n"
         "Slice on Scene (\"psm\" < 0)\n";
}

std::string scenario2_script(Scenario2View view, const std::string& school_spot, const std::string& other_spot) {
  const char* target = view == Scenario2View::speed       ? "behavioral_feature.avg_car_speed"
                       : view == Scenario2View::pcr_level ? "behavioral_feature.pcr_level"
                                                          : "behavioral_feature";
  return "Drill-down on Location (from \"all\" to \"spot\")\n"
         "Drill-down on Road (from \"all\" to \"road_feature\")\n"
         "Drill-down on Behavior (from \"all\" to \"" + std::string(target) + "\")\n"
         "Dice for (Measure = \"scene_count\") and (Time = \"all\") and (Location = \"all spots\") and "
         "(Road = \"unsignalized\" in road_feature) and (Behavior = \"interactive\")\n"
         "Slice on Location (spot = [\"" + school_spot + "\" | \"" + other_spot + "\"])\n";
}

json report_scenario1(const Cube& cube, const Scenario1Options& options) {
  require_member(cube, "behavior", "situation_type", "interactive", "no interactive scenes in the warehouse");
  require_member(cube, "road", "road_feature", "unsignalized", "no unsignalized crosswalks in the warehouse");
  json out{{"report", "scenario1"}};
  try {
    out["non_yielding"] = share_section(cube, scenario1_share_script());
    if (out["non_yielding"]["total"]["scenes"].get<std::int64_t>() == 0) {
      throw ReportError("no interactive scenes at unsignalized crosswalks");
    }
    out["fence"] = share_section(cube, scenario1_fence_script());

    const std::string neg_text = scenario1_negative_psm_script();
    const ResultGrid neg = run_text(cube, neg_text);
    json series = json::array();
    for (const auto& [k, b] : marginal(neg, {"location", "time"})) {
      json s = psm_series(cube, b.facts);
      s["spot"] = k[0];
      s["period"] = k[1];
      series.push_back(std::move(s));
    }
    out["negative_psm"] = {{"script", neg_text}, {"grid", to_json(neg)}, {"series", series}};

    json speed = json::array();
    for (const auto& spot : options.speed_spots) {
      const std::string text = scenario1_speed_script(spot);
      const ResultGrid g = run_text(cube, text);
      json bins = json::array();
      for (const auto& [k, b] : marginal(g, {"time", "behavior"})) {
        json s = psm_series(cube, b.facts);
        s["period"] = k[0];
        s["speed_bin"] = k[1];
        bins.push_back(std::move(s));
      }
      speed.push_back({{"spot", spot}, {"script", text}, {"grid", to_json(g)}, {"series", bins}});
    }
    out["psm_by_speed"] = speed;
  } catch (const CubeError& e) {
    throw ReportError(std::string("scenario 1: ") + e.what());
  }
  return out;
}

json report_scenario2(const Cube& cube, const Scenario2Options& options) {
  require_member(cube, "behavior", "situation_type", "interactive", "no interactive scenes in the warehouse");
  const std::string& a = options.school_spot;
  const std::string& b = options.other_spot;
  if (a == b) throw ReportError("the spot pair needs two different spots");
  for (const auto& s : {a, b}) require_member(cube, "location", "spot", s, "missing spot pair: no spot named " + s);

  json out{{"report", "scenario2"}, {"spots", {{"school_zone", a}, {"other", b}}}};
  try {
    const std::string speed_text = scenario2_script(Scenario2View::speed, a, b);
    const ResultGrid speed = run_text(cube, speed_text);
    const auto totals = marginal(speed, {"location"});
    for (const auto& s : {a, b}) {
      const auto it = totals.find({s});
      if (it == totals.end() || it->second.cell.count == 0) {
        throw ReportError("missing spot pair: no interactive scenes at unsignalized " + s);
      }
    }

    auto ratios = [&](const ResultGrid& g) {
      json r = json::object();
      for (const auto& [k, bk] : marginal(g, {"location", "behavior"})) {
        const std::int64_t total = totals.at({k[0]}).cell.count;
        r[k[0]][k[1]] = {{"scenes", bk.cell.count}, {"ratio", ratio(bk.cell.count, total)}};
      }
      return r;
    };
    out["speed_ratios"] = {{"script", speed_text}, {"grid", to_json(speed)}, {"ratios", ratios(speed)}};

    const std::string level_text = scenario2_script(Scenario2View::pcr_level, a, b);
    const ResultGrid level = run_text(cube, level_text);
    out["pcr_level_ratios"] = {{"script", level_text}, {"grid", to_json(level)}, {"ratios", ratios(level)}};

    const std::string detail_text = scenario2_script(Scenario2View::behavioral_feature, a, b);
    const ResultGrid detail = run_text(cube, detail_text);
    const DimensionTable& beh = cube.dimension("behavior");
    std::map<std::string, const DimensionMember*> by_key;
    for (const auto& m : beh.members) by_key.emplace(m.key, &m);
    // spot -> level -> speed bin -> count
    std::map<std::string, std::map<std::string, std::map<std::string, std::int64_t>>> counts;
    std::set<std::string> bins;
    for (const auto& [k, bk] : marginal(detail, {"location", "behavior"})) {
      const DimensionMember& m = *by_key.at(k[1]);
      const std::string& lv = m.attributes.at("pcr_level");
      const std::string& sb = m.attributes.at("avg_car_speed");
      counts[k[0]][lv][sb] += bk.cell.count;
      if (sb != "none") bins.insert(sb);
    }
    json within = json::object();
    for (const auto& [spot, levels] : counts) {
      for (const auto& [lv, sbs] : levels) {
        std::int64_t total = 0;
        for (const auto& [sb, n] : sbs) total += n;
        for (const auto& [sb, n] : sbs) {
          within[spot][lv][sb] = {{"scenes", n}, {"ratio", ratio(n, total)}};
        }
      }
    }
    out["speed_within_level"] = {{"script", detail_text}, {"grid", to_json(detail)}, {"ratios", within}};

    std::vector<std::string> sorted_bins(bins.begin(), bins.end());
    std::sort(sorted_bins.begin(), sorted_bins.end(), natural_less);
    json low{{"speed_bin", sorted_bins.empty() ? json(nullptr) : json(sorted_bins.front())}};
    std::optional<double> ra, rb;
    for (const auto& [spot, dst] : {std::pair{a, &ra}, std::pair{b, &rb}}) {
      std::int64_t total = 0, slow = 0;
      if (counts.count(spot) && counts[spot].count("danger")) {
        for (const auto& [sb, n] : counts[spot]["danger"]) {
          total += n;
          if (!sorted_bins.empty() && sb == sorted_bins.front()) slow += n;
        }
      }
      const json r = ratio(slow, total);
      low[spot] = r;
      if (!r.is_null()) *dst = r.get<double>();
    }
    low["difference"] = ra && rb ? json(*ra - *rb) : json(nullptr);
    out["low_speed_danger"] = low;
  } catch (const CubeError& e) {
    throw ReportError(std::string("scenario 2: ") + e.what());
  }
  return out;
}

}  // namespace safetycube
