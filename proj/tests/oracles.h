#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "safetycube/cube.h"
#include "safetycube/geometry.h"
#include "safetycube/pcr.h"
#include "safetycube/random.h"

namespace testing {

using namespace safetycube;

/// Region overlap by sampling a square lattice of the given spacing over the shared bounding box.
inline bool grid_overlap(std::span<const Vec2> a, std::span<const Vec2> b, double spacing = 0.1) {
  const auto ba = bounding_box(a), bb = bounding_box(b);
  const Vec2 lo{std::max(ba.lo.x, bb.lo.x), std::max(ba.lo.y, bb.lo.y)};
  const Vec2 hi{std::min(ba.hi.x, bb.hi.x), std::min(ba.hi.y, bb.hi.y)};
  if (lo.x > hi.x || lo.y > hi.y) return false;
  for (double x = std::floor(lo.x / spacing) * spacing; x <= hi.x; x += spacing) {
    for (double y = std::floor(lo.y / spacing) * spacing; y <= hi.y; y += spacing) {
      if (contains(a, {x, y}) && contains(b, {x, y})) return true;
    }
  }
  return false;
}

/// Coarse lattice first, then a 0.01 m lattice for thin slivers the coarse one steps over.
inline bool sampled_overlap(std::span<const Vec2> a, std::span<const Vec2> b) {
  return grid_overlap(a, b, 0.1) || grid_overlap(a, b, 0.01);
}

/// Smallest distance between the boundaries of two polygons.
inline double boundary_gap(std::span<const Vec2> a, std::span<const Vec2> b) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const Vec2 a0 = a[i], a1 = a[(i + 1) % a.size()], b0 = b[j], b1 = b[(j + 1) % b.size()];
      if (segments_intersect(a0, a1, b0, b1)) return 0.0;
      best = std::min({best, project_on_segment(a0, b0, b1).dist, project_on_segment(b0, a0, a1).dist});
    }
  }
  return best;
}

/// A random PCRA: position in a 12 m square, speed, heading spread and horizon drawn at random.
inline Pcra random_pcra(CounterRng& rng) {
  KinematicState s;
  s.position = {rng.uniform(-6.0, 6.0), rng.uniform(-6.0, 6.0)};
  s.v = rng.uniform(0.0, 4.0);
  s.theta = rng.uniform(-3.1, 3.1);
  IntervalEstimate ivl;
  const double dv = rng.uniform(0.0, 1.5);
  ivl.v_lo = std::max(0.0, s.v - dv);
  ivl.v_hi = s.v + dv;
  const double dth = rng.uniform(0.0, 1.2);
  ivl.theta_lo = s.theta - dth;
  ivl.theta_hi = s.theta + dth;
  const double h = 1.0 + static_cast<double>(rng.below(3));
  return build_pcra(s, ivl, h, rng.uniform(0.0, 1.0));
}

/// Brute-force conflict point: first crossing of the polylines in pedestrian order, otherwise the
/// closest pedestrian-path point to the vehicle path when nearer than d.
inline std::optional<Vec2> brute_conflict_point(std::span<const TrackPoint> v, std::span<const TrackPoint> p, double d) {
  for (std::size_t j = 0; j + 1 < p.size(); ++j) {
    std::optional<std::pair<double, Vec2>> first;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
      const auto hit = segment_intersection(p[j].pos(), p[j + 1].pos(), v[i].pos(), v[i + 1].pos());
      if (hit && (!first || hit->t < first->first)) first = {{hit->t, hit->point}};
    }
    if (first) return first->second;
  }
  double best = std::numeric_limits<double>::infinity();
  Vec2 at;
  for (std::size_t j = 0; j + 1 < p.size(); ++j) {
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
      for (const auto& [q, a, b, on_ped] :
           {std::tuple{v[i].pos(), p[j].pos(), p[j + 1].pos(), true}, std::tuple{v[i + 1].pos(), p[j].pos(), p[j + 1].pos(), true},
            std::tuple{p[j].pos(), v[i].pos(), v[i + 1].pos(), false}, std::tuple{p[j + 1].pos(), v[i].pos(), v[i + 1].pos(), false}}) {
        const auto pr = project_on_segment(q, a, b);
        if (pr.dist < best) {
          best = pr.dist;
          at = on_ped ? pr.point : q;
        }
      }
    }
  }
  if (best < d) return at;
  return std::nullopt;
}

struct OracleCell {
  std::int64_t count = 0;
  std::int64_t psm_n = 0;
  double psm_sum = 0.0;
  std::int64_t pcr_n = 0;
  double pcr_sum = 0.0;
};

/// Group-by by direct scan over facts: label tuple -> sums. Only labels with facts appear.
inline std::map<std::vector<std::string>, OracleCell> naive_aggregate(const Cube& cube, const CubeQuery& q) {
  const auto& dims = cube.dimensions();
  std::vector<std::map<std::string, const DimensionMember*>> by_key(dims.size());
  for (std::size_t k = 0; k < dims.size(); ++k) {
    for (const auto& m : dims[k].members) by_key[k][m.key] = &m;
  }
  std::map<std::vector<std::string>, OracleCell> out;
  for (const auto& f : cube.facts()) {
    bool pass = true;
    for (const auto& flt : q.filters) {
      const std::size_t k = cube.dimension_index(flt.dimension);
      if (!flt.matches(dims[k].label(*by_key[k].at(f.keys[k]), flt.level))) pass = false;
    }
    for (const auto& ff : q.fact_filters) pass = pass && ff.matches(f);
    if (!pass) continue;
    std::vector<std::string> labels;
    for (std::size_t k = 0; k < dims.size(); ++k) {
      const auto it = q.group_by.find(dims[k].name);
      if (it != q.group_by.end()) labels.push_back(dims[k].label(*by_key[k].at(f.keys[k]), it->second));
    }
    OracleCell& c = out[labels];
    ++c.count;
    if (f.psm) {
      ++c.psm_n;
      c.psm_sum += *f.psm;
    }
    if (f.pcr_level) {
      ++c.pcr_n;
      c.pcr_sum += *f.pcr_level;
    }
  }
  return out;
}

/// Random hierarchies (2-4 levels below all, 2-4 attribute-free branches), random facts.
inline Cube random_cube(std::uint64_t seed, int n_facts, int n_dims = 3) {
  CounterRng rng(seed, 0xC0BE);
  std::vector<DimensionTable> dims;
  for (int d = 0; d < n_dims; ++d) {
    DimensionTable t;
    t.name = "d" + std::to_string(d);
    const int depth = 2 + static_cast<int>(rng.below(3));
    for (int l = 0; l < depth; ++l) t.levels.push_back("l" + std::to_string(l));
    t.levels.push_back("all");
    t.attribute_names = {"color"};
    const int leaves = 6 + static_cast<int>(rng.below(10));
    for (int m = 0; m < leaves; ++m) {
      DimensionMember mem;
      mem.key = t.name + "k" + std::to_string(m);
      // Parent labels are prefixes of the child path so every level is a function of the leaf.
      std::vector<std::string> path;
      int id = m;
      for (int l = 0; l < depth; ++l) {
        path.push_back(std::to_string(id));
        id /= 2 + static_cast<int>(rng.below(2));
      }
      std::string label;
      std::vector<std::string> values(depth);
      for (int l = depth - 1; l >= 0; --l) {
        label += (label.empty() ? "" : "/") + path[l];
        values[l] = label;
      }
      mem.values = values;
      mem.attributes["color"] = rng.bernoulli(0.5) ? "red" : "blue";
      t.members.push_back(mem);
    }
    dims.push_back(t);
  }
  std::vector<FactRecord> facts;
  for (int i = 0; i < n_facts; ++i) {
    FactRecord f;
    f.scene_code = "F" + std::to_string(i);
    for (const auto& t : dims) f.keys.push_back(t.members[rng.below(t.members.size())].key);
    if (rng.bernoulli(0.85)) f.psm = std::round(rng.uniform(-5.0, 5.0) * 100.0) / 100.0;
    if (rng.bernoulli(0.85)) f.pcr_level = 1 + static_cast<int>(rng.below(4));
    facts.push_back(f);
  }
  return Cube::build(dims, facts);
}


/// Random grouping, member filters and fact filters over a random cube.
inline CubeQuery random_query(const Cube& cube, CounterRng& rng) {
  CubeQuery q;
  for (const auto& t : cube.dimensions()) {
    const std::size_t li = rng.below(t.levels.size() + 1);
    if (li == t.levels.size()) {
      q.group_by[t.name] = LevelRef{t.levels[0], "color"};
    } else if (t.levels[li] != kAllLevel) {
      q.group_by[t.name] = LevelRef{t.levels[li], std::nullopt};
    }
    if (rng.bernoulli(0.35)) {
      const std::size_t fl = rng.below(t.levels.size() - 1);
      MemberFilter f{t.name, LevelRef{t.levels[fl], std::nullopt}, CompareOp::eq, {}, 0.0};
      const int kind = static_cast<int>(rng.below(3));
      f.op = kind == 0 ? CompareOp::eq : kind == 1 ? CompareOp::in : CompareOp::ne;
      const int n = f.op == CompareOp::in ? 2 : 1;
      for (int i = 0; i < n; ++i) f.values.push_back(t.members[rng.below(t.members.size())].values[fl]);
      q.filters.push_back(f);
    }
    if (rng.bernoulli(0.15)) {
      q.filters.push_back({t.name, LevelRef{t.levels[0], "color"}, CompareOp::eq, {"red"}, 0.0});
    }
  }
  if (rng.bernoulli(0.3)) q.fact_filters.push_back({FactField::psm, CompareOp::lt, rng.uniform(-3.0, 3.0)});
  if (rng.bernoulli(0.2)) q.fact_filters.push_back({FactField::pcr_level, CompareOp::ge, double(1 + rng.below(4))});
  return q;
}

inline bool close_rel(double a, double b, double rel = 1e-9) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

/// Empty string when the grid agrees with the oracle, otherwise a description of the first mismatch.
inline std::string compare_with_oracle(const ResultGrid& g, const std::map<std::vector<std::string>, OracleCell>& want) {
  std::int64_t grid_total = 0, want_total = 0;
  for (const auto& c : g.cells) grid_total += c.count;
  for (const auto& [labels, o] : want) {
    want_total += o.count;
    std::size_t idx = 0;
    try {
      idx = g.cell_index(labels);
    } catch (const CubeError& e) {
      return e.what();
    }
    const Cell& c = g.cells[idx];
    if (c.count != o.count || c.psm_n != o.psm_n || c.pcr_n != o.pcr_n) return "count mismatch";
    const auto pm = c.psm_mean();
    if (o.psm_n > 0 && (!pm || !close_rel(*pm, o.psm_sum / o.psm_n))) return "psm mean mismatch";
    if (o.psm_n == 0 && pm) return "psm mean should be null";
    const auto lm = c.pcr_level_mean();
    if (o.pcr_n > 0 && (!lm || !close_rel(*lm, o.pcr_sum / o.pcr_n))) return "pcr mean mismatch";
    if (o.pcr_n == 0 && lm) return "pcr mean should be null";
  }
  if (grid_total != want_total) return "grid holds facts the oracle does not";
  return {};
}

}  // namespace testing

namespace testing {

/// Two constant-velocity histories whose inflated PCRAs first touch at horizon index `target`
/// (0, 1, 2 for the 1/2/3 s horizons; 3 for never). The pedestrian walks at 1.4 m/s or stands still.
struct PcrCase {
  std::vector<TrackPoint> vehicle;
  std::vector<TrackPoint> pedestrian;
  RiskLevel expected = RiskLevel::normal;
};

inline PcrCase pcr_case(CounterRng& rng, int target, double fps = 30.0) {
  const double ped_speed = rng.bernoulli(0.5) ? 1.4 : 0.0;
  const double ped_dir = rng.uniform(-3.1, 3.1);
  const double veh_dir = rng.uniform(-3.1, 3.1);
  Vec2 vv, pv{ped_speed * std::cos(ped_dir), ped_speed * std::sin(ped_dir)};
  Vec2 w;
  do {
    const double s = rng.uniform(3.0, 12.0);
    vv = {s * std::cos(veh_dir), s * std::sin(veh_dir)};
    w = vv - pv;
  } while (norm(w) < 2.5);
  const double hit = target < 3 ? 1.0 + target : 4.5;  // miss by a full horizon step when "never"
  const Vec2 perp = Vec2{-w.y, w.x} * (1.0 / norm(w));
  const Vec2 e = perp * rng.uniform(-0.5, 0.5);
  // Relative offset at the last history sample: vehicle - pedestrian = -w * hit + e.
  const Vec2 p_end{rng.uniform(-5, 5), rng.uniform(-5, 5)};
  const Vec2 v_end = p_end + w * (-hit) + e;
  const double t_end = 2.0;
  PcrCase c;
  for (int k = 0; k <= static_cast<int>(std::lround(t_end * fps)); ++k) {
    const double t = k / fps;
    const Vec2 pv_t = v_end + vv * (t - t_end), pp_t = p_end + pv * (t - t_end);
    c.vehicle.push_back({t, pv_t.x, pv_t.y});
    c.pedestrian.push_back({t, pp_t.x, pp_t.y});
  }
  static constexpr RiskLevel levels[] = {RiskLevel::danger, RiskLevel::warning, RiskLevel::relatively_safe,
                                         RiskLevel::normal};
  c.expected = levels[target];
  return c;
}

/// Constant-speed, constant-turn-rate arc sampled at fps.
inline std::vector<TrackPoint> arc_track(Vec2 start, double heading, double speed, double turn_rate, double duration,
                                         double fps = 30.0) {
  std::vector<TrackPoint> pts;
  for (int k = 0; k <= static_cast<int>(std::lround(duration * fps)); ++k) {
    const double t = k / fps;
    Vec2 p;
    if (std::abs(turn_rate) < 1e-12) {
      p = start + Vec2{std::cos(heading), std::sin(heading)} * (speed * t);
    } else {
      const double r = speed / turn_rate;
      p = start + Vec2{r * (std::sin(heading + turn_rate * t) - std::sin(heading)),
                       -r * (std::cos(heading + turn_rate * t) - std::cos(heading))};
    }
    pts.push_back({t, p.x, p.y});
  }
  return pts;
}

}  // namespace testing
