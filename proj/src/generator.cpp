#include "safetycube/generator.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "safetycube/random.h"

namespace safetycube {

using nlohmann::json;

namespace {

/// Piecewise constant-acceleration motion along a line.
struct Phase {
  double t0;
  double s0;
  double v0;
  double a;
};

struct Profile {
  std::vector<Phase> phases;

  double at(double t) const {
    const Phase* p = &phases.front();
    for (const auto& ph : phases) {
      if (ph.t0 <= t) p = &ph;
    }
    const double dt = t - p->t0;
    return p->s0 + p->v0 * dt + 0.5 * p->a * dt * dt;
  }

  void push(double t0, double v0, double a) {
    if (phases.empty()) {
      phases.push_back({t0, 0.0, v0, a});
      return;
    }
    const Phase& prev = phases.back();
    const double dt = t0 - prev.t0;
    phases.push_back({t0, prev.s0 + prev.v0 * dt + 0.5 * prev.a * dt * dt, v0, a});
  }
};

std::vector<TrackPoint> sample(double t0, double t1, double fps, const auto& position, double noise, CounterRng& rng) {
  std::vector<TrackPoint> pts;
  const long k0 = static_cast<long>(std::ceil(t0 * fps - 1e-9));
  const long k1 = static_cast<long>(std::floor(t1 * fps + 1e-9));
  for (long k = k0; k <= k1; ++k) {
    const double t = static_cast<double>(k) / fps;
    Vec2 p = position(t);
    if (noise > 0.0) {
      p.x += noise * rng.normal();
      p.y += noise * rng.normal();
    }
    pts.push_back({t, p.x, p.y});
  }
  return pts;
}

}  // namespace

GeneratedScene generate_scene(const EncounterSpec& spec, const Site& site) {
  if (!spec.with_vehicle && !spec.with_pedestrian) throw std::invalid_argument("spec has no objects");
  if (spec.with_vehicle && !(spec.vehicle_speed_kmh > 0.0)) throw std::invalid_argument("vehicle speed must be positive");
  if (spec.with_pedestrian && !(spec.pedestrian_speed_kmh > 0.0)) {
    throw std::invalid_argument("pedestrian speed must be positive");
  }
  if (!(spec.noise_std_m >= 0.0)) throw std::invalid_argument("noise std must be non-negative");
  if (!(spec.fps > 0.0)) throw std::invalid_argument("fps must be positive");
  const bool interactive = spec.with_vehicle && spec.with_pedestrian;
  if (interactive && spec.yielding != (spec.offset_s > 0.0)) {
    throw std::invalid_argument("yielding must match a positive offset (vehicle passes after the pedestrian)");
  }
  if (spec.stop && !spec.yielding) throw std::invalid_argument("a stopping vehicle must be yielding");

  const SiteGeometry& g = site.geometry;
  const Vec2 a = g.approach_axis;
  const Vec2 n{-a.y, a.x};
  const Vec2 c = centroid(g.crosswalk);
  double n_lo = std::numeric_limits<double>::infinity(), n_hi = -n_lo, a_lo = n_lo;
  for (const auto& v : g.crosswalk) {
    n_lo = std::min(n_lo, dot(v - c, n));
    n_hi = std::max(n_hi, dot(v - c, n));
    a_lo = std::min(a_lo, dot(v - c, a));
  }
  const double lane_w = (n_hi - n_lo) / std::max(site.meta.num_lanes, 1);
  const double lane_off = n_lo + lane_w / 2.0;
  const Vec2 cp = c + n * lane_off;

  const double v = spec.vehicle_speed_kmh / 3.6;
  const double u = spec.pedestrian_speed_kmh / 3.6;

  // Vehicle timing relative to its own start: time to reach cp and the path profile.
  Profile prof;
  double v_pre = spec.pre_roll_s;
  double s_cp = v * spec.pre_roll_s;
  if (spec.stop) {
    const double b = spec.decel_mps2;
    const double gap = -a_lo + spec.stop_gap_m;  // stop point to cp
    const double cruise = 3.0;
    const double td = v / b;
    const double dv = v * v / (2.0 * b);
    const double ta = gap <= dv ? std::sqrt(2.0 * gap / b) : v / b + (gap - dv) / v;
    v_pre = cruise + td + spec.dwell_s + ta;
    s_cp = v * cruise + dv + gap;
    prof.push(0.0, v, 0.0);
    prof.push(cruise, v, -b);
    prof.push(cruise + td, 0.0, 0.0);
    prof.push(cruise + td + spec.dwell_s, 0.0, b);
    prof.push(cruise + td + spec.dwell_s + v / b, v, 0.0);
  } else {
    prof.push(0.0, v, 0.0);
  }

  const double ped_from = spec.pedestrian_direction >= 0 ? n_lo - 1.5 : n_hi + 1.5;
  const double ped_to = spec.pedestrian_direction >= 0 ? n_hi + 1.5 : n_lo - 1.5;
  const double ped_dir = ped_to > ped_from ? 1.0 : -1.0;
  const double d_p = std::abs(lane_off - ped_from);

  double T1 = 0.0, T2 = 0.0;
  if (interactive) {
    T1 = std::max(d_p / u, v_pre - spec.offset_s);
    T2 = T1 + spec.offset_s;
  } else if (spec.with_vehicle) {
    T2 = v_pre;
  } else {
    T1 = d_p / u;
  }
  const double tv0 = T2 - v_pre;
  const double tp0 = T1 - d_p / u;
  const double tv1 = (interactive ? std::max(T1, T2) : T2) + spec.post_roll_s;
  const double tp1 = tp0 + std::abs(ped_to - ped_from) / u;

  const Vec2 veh_origin = cp - a * s_cp;
  auto vehicle_at = [&](double t) { return veh_origin + a * prof.at(t - tv0); };
  const Vec2 ped_origin = c + n * ped_from;
  auto pedestrian_at = [&](double t) { return ped_origin + n * (ped_dir * u * (t - tp0)); };

  GeneratedScene out;
  Scene& s = out.scene;
  s.scene_code = spec.scene_code;
  s.spot_id = spec.spot_id;
  s.start_time = spec.start_time;
  s.fps = spec.fps;
  if (spec.with_vehicle) {
    CounterRng rng(spec.seed, 1);
    s.tracks.push_back({"1", ObjectType::vehicle, sample(tv0, tv1, spec.fps, vehicle_at, spec.noise_std_m, rng)});
  }
  if (spec.with_pedestrian) {
    CounterRng rng(spec.seed, 2);
    s.tracks.push_back({"2", ObjectType::pedestrian, sample(tp0, tp1, spec.fps, pedestrian_at, spec.noise_std_m, rng)});
  }

  GroundTruth& gt = out.truth;
  gt.interactive = interactive;
  gt.conflict_point = cp;
  gt.pedestrian_time_s = T1;
  gt.vehicle_time_s = T2;
  gt.yielding = spec.yielding;
  gt.stop = spec.stop;
  gt.vehicle_speed_kmh = spec.with_vehicle ? spec.vehicle_speed_kmh : 0.0;
  gt.pedestrian_speed_kmh = spec.with_pedestrian ? spec.pedestrian_speed_kmh : 0.0;
  gt.min_separation_m = std::numeric_limits<double>::infinity();
  if (interactive) {
    const double lo = std::max(tv0, tp0), hi = std::min(tv1, tp1);
    for (double t = lo; t <= hi; t += 1e-3) {
      gt.min_separation_m = std::min(gt.min_separation_m, distance(vehicle_at(t), pedestrian_at(t)));
    }
  }
  return out;
}

namespace {

std::array<double, 2> range_from(const json& j, const char* key, std::array<double, 2> def) {
  if (!j.contains(key)) return def;
  const auto r = j.at(key).get<std::array<double, 2>>();
  if (r[0] > r[1]) throw std::invalid_argument(std::string("corpus: empty range for ") + key);
  return r;
}

}  // namespace

CorpusSpec corpus_spec_from_json(const json& j) {
  CorpusSpec s;
  try {
    s.name = j.value("name", "");
    s.noise_std_m = j.value("noise_std_m", 0.0);
    s.fps = j.value("fps", 30.0);
    s.first_day = j.value("first_day", s.first_day);
    s.weekdays = j.value("weekdays", s.weekdays);
    s.code_prefix = j.value("code_prefix", s.code_prefix);
    s.stratified = j.value("sampling", "random") == "stratified";
    for (const auto& jc : j.at("components")) {
      CorpusComponent c;
      c.label = jc.value("label", "");
      c.weight = jc.at("weight").get<double>();
      c.spot_id = jc.at("spot").get<std::string>();
      c.period = jc.value("period", "day");
      if (c.period != "day" && c.period != "night") throw std::invalid_argument("corpus: period must be day or night");
      c.scene_type = parse_scene_type(jc.value("scene_type", "interactive"));
      c.vehicle_speed_kmh = range_from(jc, "vehicle_speed_kmh", c.vehicle_speed_kmh);
      c.pedestrian_speed_kmh = range_from(jc, "pedestrian_speed_kmh", c.pedestrian_speed_kmh);
      c.psm_abs_s = range_from(jc, "psm_abs_s", c.psm_abs_s);
      c.non_yield_prob = jc.value("non_yield_prob", c.non_yield_prob);
      c.stop_prob = jc.value("stop_prob", c.stop_prob);
      if (c.weight < 0.0 || c.non_yield_prob < 0.0 || c.non_yield_prob > 1.0 || c.stop_prob < 0.0 || c.stop_prob > 1.0) {
        throw std::invalid_argument("corpus: weights and probabilities must lie in [0, 1]");
      }
      s.components.push_back(c);
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("corpus spec: ") + e.what());
  }
  if (s.components.empty()) throw std::invalid_argument("corpus spec has no components");
  return s;
}

json to_json(const CorpusSpec& s) {
  json comps = json::array();
  for (const auto& c : s.components) {
    comps.push_back({{"label", c.label},
                     {"weight", c.weight},
                     {"spot", c.spot_id},
                     {"period", c.period},
                     {"scene_type", std::string(to_string(c.scene_type))},
                     {"vehicle_speed_kmh", c.vehicle_speed_kmh},
                     {"pedestrian_speed_kmh", c.pedestrian_speed_kmh},
                     {"psm_abs_s", c.psm_abs_s},
                     {"non_yield_prob", c.non_yield_prob},
                     {"stop_prob", c.stop_prob}});
  }
  return {{"name", s.name},
          {"noise_std_m", s.noise_std_m},
          {"fps", s.fps},
          {"first_day", s.first_day},
          {"weekdays", s.weekdays},
          {"code_prefix", s.code_prefix},
          {"sampling", s.stratified ? "stratified" : "random"},
          {"components", comps}};
}

CorpusSpec load_corpus_spec(const std::filesystem::path& path) {
  try {
    return corpus_spec_from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

namespace {

/// Largest-remainder rounding of shares * n to integers summing to n.
std::vector<int> apportion(const std::vector<double>& shares, int n) {
  std::vector<int> out(shares.size());
  std::vector<std::pair<double, std::size_t>> rem;
  int used = 0;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    const double exact = shares[i] * n;
    out[i] = static_cast<int>(std::floor(exact));
    used += out[i];
    rem.push_back({exact - out[i], i});
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  for (int k = 0; used < n; ++k, ++used) ++out[rem[static_cast<std::size_t>(k) % rem.size()].second];
  return out;
}

struct Draw {
  std::size_t component;
  bool non_yield;
  bool stop;
};

template <typename T>
void shuffle(std::vector<T>& xs, CounterRng& rng) {
  for (std::size_t i = xs.size(); i > 1; --i) std::swap(xs[i - 1], xs[rng.below(i)]);
}

}  // namespace

std::vector<GeneratedScene> generate_corpus(const CorpusSpec& spec, int n, std::uint64_t seed, const SiteMap& sites) {
  if (n <= 0) throw std::invalid_argument("corpus size must be positive");
  double total = 0.0;
  for (const auto& c : spec.components) total += c.weight;
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("corpus component weights must sum to 1");
  for (const auto& c : spec.components) {
    if (!sites.count(c.spot_id)) throw std::invalid_argument("corpus references unknown spot " + c.spot_id);
  }
  const Timestamp first = parse_rfc3339(spec.first_day + "T00:00:00+09:00");
  std::vector<Timestamp> days;
  for (int k = 0; static_cast<int>(days.size()) < std::max(spec.weekdays, 1); ++k) {
    const Timestamp d = add_days(first, k);
    if (weekday_index(d) <= 5) days.push_back(d);
  }

  std::vector<Draw> draws;
  if (spec.stratified) {
    std::vector<double> w;
    for (const auto& c : spec.components) w.push_back(c.weight);
    const auto counts = apportion(w, n);
    for (std::size_t k = 0; k < counts.size(); ++k) {
      const auto& c = spec.components[k];
      const bool interactive = c.scene_type == SceneType::interactive;
      const int non_yield = interactive ? static_cast<int>(std::lround(c.non_yield_prob * counts[k])) : 0;
      const int stops = interactive ? static_cast<int>(std::lround(c.stop_prob * (counts[k] - non_yield))) : 0;
      for (int i = 0; i < counts[k]; ++i) draws.push_back({k, i < non_yield, i >= non_yield && i < non_yield + stops});
    }
    CounterRng rng(seed, 0x5A11);
    shuffle(draws, rng);
  } else {
    for (int i = 0; i < n; ++i) {
      CounterRng rng(seed, 0x100000000ULL + static_cast<std::uint64_t>(i));
      const double r = rng.uniform();
      std::size_t k = 0;
      double acc = spec.components[0].weight;
      while (r >= acc && k + 1 < spec.components.size()) acc += spec.components[++k].weight;
      const auto& c = spec.components[k];
      const bool interactive = c.scene_type == SceneType::interactive;
      const bool non_yield = interactive && rng.bernoulli(c.non_yield_prob);
      const bool stop = interactive && !non_yield && rng.bernoulli(c.stop_prob);
      draws.push_back({k, non_yield, stop});
    }
  }

  std::vector<GeneratedScene> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Draw& d = draws[static_cast<std::size_t>(i)];
    const auto& c = spec.components[d.component];
    CounterRng rng(seed, static_cast<std::uint64_t>(i));
    EncounterSpec e;
    e.seed = rng.next_u64();
    char code[32];
    std::snprintf(code, sizeof code, "%06d", i + 1);
    e.scene_code = spec.code_prefix + code;
    e.spot_id = c.spot_id;
    Timestamp t = days[rng.below(days.size())];
    t.hour = (c.period == "day" ? 8 : 18) + static_cast<int>(rng.below(2));
    t.minute = static_cast<int>(rng.below(60));
    t.second = static_cast<double>(rng.below(60));
    e.start_time = t;
    e.fps = spec.fps;
    e.noise_std_m = spec.noise_std_m;
    e.vehicle_speed_kmh = rng.uniform(c.vehicle_speed_kmh[0], c.vehicle_speed_kmh[1]);
    e.pedestrian_speed_kmh = rng.uniform(c.pedestrian_speed_kmh[0], c.pedestrian_speed_kmh[1]);
    const double mag = rng.uniform(c.psm_abs_s[0], c.psm_abs_s[1]);
    e.offset_s = d.non_yield ? -mag : mag;
    e.yielding = !d.non_yield;
    e.stop = d.stop;
    e.pedestrian_direction = rng.bernoulli(0.5) ? 1 : -1;
    e.with_vehicle = c.scene_type != SceneType::pedestrian_only;
    e.with_pedestrian = c.scene_type != SceneType::car_only;
    GeneratedScene g = generate_scene(e, sites.at(c.spot_id));
    g.component = d.component;
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace safetycube
