#include "safetycube/cube.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <numeric>
#include <set>
#include <unordered_map>

namespace safetycube {

namespace {

std::atomic<std::uint64_t> g_next_snapshot{1};

std::optional<double> leading_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  const bool digit_start = (s[0] >= '0' && s[0] <= '9') || (s.size() > 1 && s[0] == '-' && s[1] >= '0' && s[1] <= '9');
  if (!digit_start) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc()) return std::nullopt;
  return v;
}

bool compare(double lhs, CompareOp op, double rhs) {
  switch (op) {
    case CompareOp::eq: return lhs == rhs;
    case CompareOp::ne: return lhs != rhs;
    case CompareOp::lt: return lhs < rhs;
    case CompareOp::le: return lhs <= rhs;
    case CompareOp::gt: return lhs > rhs;
    case CompareOp::ge: return lhs >= rhs;
    case CompareOp::in: break;
  }
  throw CubeError("operator 'in' is not valid on a measure");
}

bool is_numeric_op(CompareOp op) {
  return op == CompareOp::lt || op == CompareOp::le || op == CompareOp::gt || op == CompareOp::ge;
}

const std::string& all_label() {
  static const std::string s{kAllLevel};
  return s;
}

}  // namespace

bool natural_less(const std::string& a, const std::string& b) {
  const auto na = leading_number(a);
  const auto nb = leading_number(b);
  if (na && nb && *na != *nb) return *na < *nb;
  return a < b;
}

LevelRef LevelRef::parse(std::string_view s) {
  LevelRef r;
  const auto dot = s.find('.');
  if (dot == std::string_view::npos) {
    r.level = std::string(s);
  } else {
    r.level = std::string(s.substr(0, dot));
    r.attribute = std::string(s.substr(dot + 1));
  }
  if (r.level.empty() || (r.attribute && r.attribute->empty())) throw CubeError("malformed level: " + std::string(s));
  return r;
}

std::string LevelRef::str() const { return attribute ? level + "." + *attribute : level; }

std::size_t DimensionTable::level_index(std::string_view level) const {
  const auto it = std::find(levels.begin(), levels.end(), level);
  if (it == levels.end()) throw CubeError("dimension " + name + " has no level '" + std::string(level) + "'");
  return static_cast<std::size_t>(it - levels.begin());
}

void DimensionTable::validate_ref(const LevelRef& ref) const {
  const std::size_t li = level_index(ref.level);
  if (ref.attribute) {
    if (li != 0) throw CubeError("attributes exist only on the leaf level of " + name);
    if (std::find(attribute_names.begin(), attribute_names.end(), *ref.attribute) == attribute_names.end()) {
      throw CubeError("dimension " + name + " has no attribute '" + *ref.attribute + "'");
    }
  }
}

const std::string& DimensionTable::label(const DimensionMember& m, const LevelRef& ref) const {
  if (ref.attribute) return m.attributes.at(*ref.attribute);
  const std::size_t li = level_index(ref.level);
  if (li + 1 == levels.size()) return all_label();
  return m.values[li];
}

std::string_view to_string(Measure m) {
  switch (m) {
    case Measure::scene_count: return "scene_count";
    case Measure::psm_mean: return "psm_mean";
    case Measure::pcr_level_mean: return "pcr_level_mean";
  }
  return "scene_count";
}

Measure parse_measure(std::string_view s) {
  if (s == "scene_count") return Measure::scene_count;
  if (s == "psm_mean" || s == "psm") return Measure::psm_mean;
  if (s == "pcr_level_mean" || s == "pcr_level") return Measure::pcr_level_mean;
  throw CubeError("unknown measure: " + std::string(s));
}

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::eq: return "eq";
    case CompareOp::ne: return "ne";
    case CompareOp::in: return "in";
    case CompareOp::lt: return "lt";
    case CompareOp::le: return "le";
    case CompareOp::gt: return "gt";
    case CompareOp::ge: return "ge";
  }
  return "eq";
}

CompareOp parse_compare_op(std::string_view s) {
  if (s == "eq" || s == "=" || s == "==") return CompareOp::eq;
  if (s == "ne" || s == "!=") return CompareOp::ne;
  if (s == "in") return CompareOp::in;
  if (s == "lt" || s == "<") return CompareOp::lt;
  if (s == "le" || s == "<=") return CompareOp::le;
  if (s == "gt" || s == ">") return CompareOp::gt;
  if (s == "ge" || s == ">=") return CompareOp::ge;
  throw CubeError("unknown operator: " + std::string(s));
}

bool MemberFilter::matches(const std::string& label) const {
  switch (op) {
    case CompareOp::eq: return !values.empty() && label == values.front();
    case CompareOp::ne: return values.empty() || label != values.front();
    case CompareOp::in: return std::find(values.begin(), values.end(), label) != values.end();
    default: break;
  }
  const auto n = leading_number(label);
  return n && compare(*n, op, number);
}

bool FactFilter::matches(const FactRecord& f) const {
  if (field == FactField::psm) return f.psm && compare(*f.psm, op, value);
  return f.pcr_level && compare(static_cast<double>(*f.pcr_level), op, value);
}

std::optional<double> Cell::psm_mean() const {
  if (psm_n == 0) return std::nullopt;
  return psm_sum / static_cast<double>(psm_n);
}

std::optional<double> Cell::pcr_level_mean() const {
  if (pcr_n == 0) return std::nullopt;
  return pcr_sum / static_cast<double>(pcr_n);
}

std::size_t ResultGrid::cell_index(const std::vector<std::string>& labels) const {
  if (labels.size() != axes.size()) {
    throw CubeError("cell needs " + std::to_string(axes.size()) + " labels, got " + std::to_string(labels.size()));
  }
  std::size_t idx = 0;
  for (std::size_t a = 0; a < axes.size(); ++a) {
    const auto& ls = axes[a].labels;
    const auto it = std::find(ls.begin(), ls.end(), labels[a]);
    if (it == ls.end()) throw CubeError("axis " + axes[a].dimension + " has no label '" + labels[a] + "'");
    idx = idx * ls.size() + static_cast<std::size_t>(it - ls.begin());
  }
  return idx;
}

std::vector<std::string> ResultGrid::cell_labels(std::size_t index) const {
  std::vector<std::string> out(axes.size());
  for (std::size_t a = axes.size(); a-- > 0;) {
    const std::size_t n = axes[a].labels.size();
    out[a] = axes[a].labels[index % n];
    index /= n;
  }
  return out;
}

std::int64_t ResultGrid::total_count() const {
  return std::accumulate(cells.begin(), cells.end(), std::int64_t{0},
                         [](std::int64_t s, const Cell& c) { return s + c.count; });
}

bool ResultGrid::same_values(const ResultGrid& o) const {
  return axes == o.axes && measures == o.measures && cells == o.cells;
}

nlohmann::json to_json(const CubeQuery& q) {
  nlohmann::json j;
  j["group_by"] = nlohmann::json::object();
  for (const auto& [dim, ref] : q.group_by) j["group_by"][dim] = ref.str();
  j["filters"] = nlohmann::json::array();
  for (const auto& f : q.filters) {
    nlohmann::json jf{{"dimension", f.dimension}, {"level", f.level.str()}, {"op", std::string(to_string(f.op))}};
    if (is_numeric_op(f.op)) {
      jf["value"] = f.number;
    } else {
      jf["values"] = f.values;
    }
    j["filters"].push_back(jf);
  }
  j["fact_filters"] = nlohmann::json::array();
  for (const auto& f : q.fact_filters) {
    j["fact_filters"].push_back({{"measure", f.field == FactField::psm ? "psm" : "pcr_level"},
                                 {"op", std::string(to_string(f.op))},
                                 {"value", f.value}});
  }
  j["measures"] = nlohmann::json::array();
  for (auto m : q.measures) j["measures"].push_back(std::string(to_string(m)));
  return j;
}

CubeQuery query_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw CubeError("query must be a JSON object");
  CubeQuery q;
  try {
    if (j.contains("group_by")) {
      for (const auto& [dim, lv] : j.at("group_by").items()) {
        const auto ref = LevelRef::parse(lv.get<std::string>());
        if (ref.level != kAllLevel) q.group_by[dim] = ref;
      }
    }
    if (j.contains("filters")) {
      for (const auto& jf : j.at("filters")) {
        MemberFilter f;
        f.dimension = jf.at("dimension").get<std::string>();
        f.level = LevelRef::parse(jf.at("level").get<std::string>());
        f.op = parse_compare_op(jf.value("op", "eq"));
        if (is_numeric_op(f.op)) {
          f.number = jf.at("value").get<double>();
        } else if (jf.contains("values")) {
          f.values = jf.at("values").get<std::vector<std::string>>();
        } else {
          f.values = {jf.at("value").get<std::string>()};
        }
        q.filters.push_back(std::move(f));
      }
    }
    if (j.contains("fact_filters")) {
      for (const auto& jf : j.at("fact_filters")) {
        FactFilter f;
        const auto field = jf.at("measure").get<std::string>();
        if (field == "psm") {
          f.field = FactField::psm;
        } else if (field == "pcr_level") {
          f.field = FactField::pcr_level;
        } else {
          throw CubeError("fact filter on unknown measure: " + field);
        }
        f.op = parse_compare_op(jf.at("op").get<std::string>());
        f.value = jf.at("value").get<double>();
        q.fact_filters.push_back(f);
      }
    }
    if (j.contains("measures")) {
      q.measures.clear();
      for (const auto& m : j.at("measures")) q.measures.push_back(parse_measure(m.get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CubeError(std::string("malformed query: ") + e.what());
  }
  return q;
}

nlohmann::json to_json(const ResultGrid& g) {
  nlohmann::json j;
  j["axes"] = nlohmann::json::array();
  for (const auto& a : g.axes) j["axes"].push_back({{"dimension", a.dimension}, {"level", a.level.str()}, {"labels", a.labels}});
  j["measures"] = nlohmann::json::array();
  for (auto m : g.measures) j["measures"].push_back(std::string(to_string(m)));
  j["cells"] = nlohmann::json::array();
  for (std::size_t i = 0; i < g.cells.size(); ++i) {
    const Cell& c = g.cells[i];
    const auto psm = c.psm_mean();
    const auto pcr = c.pcr_level_mean();
    j["cells"].push_back({{"labels", g.cell_labels(i)},
                          {"scene_count", c.count},
                          {"psm_mean", psm ? nlohmann::json(*psm) : nlohmann::json(nullptr)},
                          {"pcr_level_mean", pcr ? nlohmann::json(*pcr) : nlohmann::json(nullptr)},
                          {"psm_n", c.psm_n},
                          {"psm_sum", c.psm_sum},
                          {"pcr_n", c.pcr_n},
                          {"pcr_sum", c.pcr_sum}});
  }
  return j;
}

ResultGrid grid_from_json(const nlohmann::json& j) {
  ResultGrid g;
  try {
    for (const auto& ja : j.at("axes")) {
      g.axes.push_back({ja.at("dimension").get<std::string>(), LevelRef::parse(ja.at("level").get<std::string>()),
                        ja.at("labels").get<std::vector<std::string>>()});
    }
    for (const auto& m : j.at("measures")) g.measures.push_back(parse_measure(m.get<std::string>()));
    for (const auto& jc : j.at("cells")) {
      Cell c;
      c.count = jc.at("scene_count").get<std::int64_t>();
      c.psm_n = jc.at("psm_n").get<std::int64_t>();
      c.psm_sum = jc.at("psm_sum").get<double>();
      c.pcr_n = jc.at("pcr_n").get<std::int64_t>();
      c.pcr_sum = jc.at("pcr_sum").get<double>();
      g.cells.push_back(c);
    }
  } catch (const nlohmann::json::exception& e) {
    throw CubeError(std::string("malformed grid: ") + e.what());
  }
  std::size_t expected = 1;
  for (const auto& a : g.axes) expected *= a.labels.size();
  if (expected != g.cells.size()) throw CubeError("grid cell count does not match its axes");
  return g;
}

struct Cube::Data {
  std::vector<DimensionTable> dims;
  std::vector<FactRecord> facts;
  std::vector<std::vector<std::uint32_t>> member_of;  // [fact][dim] -> member index
  std::vector<std::pair<GroupBy, ResultGrid>> materialized;
  std::uint64_t snapshot = 0;
};

Cube::Cube() {
  auto d = std::make_shared<Data>();
  d->snapshot = g_next_snapshot.fetch_add(1);
  data_ = std::move(d);
}

Cube Cube::build(std::vector<DimensionTable> dimensions, std::vector<FactRecord> facts, CubeOptions options) {
  auto d = std::make_shared<Data>();
  std::set<std::string> names;
  for (const auto& t : dimensions) {
    if (!names.insert(t.name).second) throw CubeError("duplicate dimension " + t.name);
    if (t.levels.empty() || t.levels.back() != kAllLevel) throw CubeError("hierarchy of " + t.name + " must end at 'all'");
    std::set<std::string> lv(t.levels.begin(), t.levels.end());
    if (lv.size() != t.levels.size()) throw CubeError("repeated level in " + t.name);
    std::set<std::string> keys;
    for (const auto& m : t.members) {
      if (!keys.insert(m.key).second) throw CubeError("duplicate member key '" + m.key + "' in " + t.name);
      if (m.values.size() + 1 != t.levels.size()) {
        throw CubeError("member '" + m.key + "' of " + t.name + " lacks a value for every level");
      }
      for (const auto& a : t.attribute_names) {
        if (!m.attributes.count(a)) throw CubeError("member '" + m.key + "' of " + t.name + " lacks attribute " + a);
      }
    }
  }
  std::vector<std::unordered_map<std::string, std::uint32_t>> lookup(dimensions.size());
  for (std::size_t k = 0; k < dimensions.size(); ++k) {
    for (std::size_t m = 0; m < dimensions[k].members.size(); ++m) {
      lookup[k].emplace(dimensions[k].members[m].key, static_cast<std::uint32_t>(m));
    }
  }
  // Canonical fact order keeps floating-point sums independent of the order facts arrive in.
  std::stable_sort(facts.begin(), facts.end(),
                   [](const FactRecord& a, const FactRecord& b) { return a.scene_code < b.scene_code; });
  std::set<std::string> codes;
  d->member_of.reserve(facts.size());
  for (const auto& f : facts) {
    if (!codes.insert(f.scene_code).second) throw CubeError("duplicate scene_code " + f.scene_code);
    if (f.keys.size() != dimensions.size()) {
      throw CubeError("fact " + f.scene_code + " has " + std::to_string(f.keys.size()) + " keys, expected " +
                      std::to_string(dimensions.size()));
    }
    if (f.pcr_level && (*f.pcr_level < 1 || *f.pcr_level > 4)) {
      throw CubeError("fact " + f.scene_code + " has pcr_level outside 1-4");
    }
    std::vector<std::uint32_t> row(dimensions.size());
    for (std::size_t k = 0; k < dimensions.size(); ++k) {
      const auto it = lookup[k].find(f.keys[k]);
      if (it == lookup[k].end()) {
        throw CubeError("fact " + f.scene_code + " references unknown " + dimensions[k].name + " key '" + f.keys[k] + "'");
      }
      row[k] = it->second;
    }
    d->member_of.push_back(std::move(row));
  }
  d->dims = std::move(dimensions);
  d->facts = std::move(facts);
  d->snapshot = g_next_snapshot.fetch_add(1);

  Cube cube;
  cube.data_ = d;
  for (const auto& gb : options.materialize) {
    CubeQuery q;
    q.group_by = gb;
    d->materialized.emplace_back(gb, cube.aggregate_scan(q));
  }
  return cube;
}

const std::vector<DimensionTable>& Cube::dimensions() const { return data_->dims; }
const std::vector<FactRecord>& Cube::facts() const { return data_->facts; }
std::uint64_t Cube::snapshot() const { return data_->snapshot; }
std::size_t Cube::materialized_count() const { return data_->materialized.size(); }

std::size_t Cube::dimension_index(std::string_view name) const {
  for (std::size_t k = 0; k < data_->dims.size(); ++k) {
    if (data_->dims[k].name == name) return k;
  }
  throw CubeError("unknown dimension: " + std::string(name));
}

const DimensionTable& Cube::dimension(std::string_view name) const { return data_->dims[dimension_index(name)]; }

std::vector<std::string> Cube::level_labels(std::string_view dimension_name, const LevelRef& ref) const {
  const auto& t = dimension(dimension_name);
  t.validate_ref(ref);
  std::set<std::string> seen;
  for (const auto& m : t.members) seen.insert(t.label(m, ref));
  if (t.members.empty() && ref.level == kAllLevel) seen.insert(all_label());
  std::vector<std::string> out(seen.begin(), seen.end());
  std::sort(out.begin(), out.end(), natural_less);
  return out;
}

void Cube::validate(const CubeQuery& q) const {
  for (const auto& [dim, ref] : q.group_by) dimension(dim).validate_ref(ref);
  for (const auto& f : q.filters) {
    dimension(f.dimension).validate_ref(f.level);
    if (!is_numeric_op(f.op) && f.op != CompareOp::ne && f.values.empty()) {
      throw CubeError("filter on " + f.dimension + " has no values");
    }
  }
  for (const auto& f : q.fact_filters) {
    if (f.op == CompareOp::in) throw CubeError("operator 'in' is not valid on a measure");
  }
  if (q.measures.empty()) throw CubeError("query selects no measure");
}

ResultGrid Cube::aggregate(const CubeQuery& q) const {
  validate(q);
  if (q.filters.empty() && q.fact_filters.empty()) {
    for (const auto& [gb, grid] : data_->materialized) {
      if (gb == q.group_by) {
        ResultGrid out = grid;
        out.measures = q.measures;
        return out;
      }
    }
  }
  return aggregate_scan(q);
}

ResultGrid Cube::aggregate_scan(const CubeQuery& q) const {
  validate(q);
  const auto& dims = data_->dims;
  const std::size_t D = dims.size();

  // Per dimension: which members pass every filter on it.
  std::vector<std::vector<char>> pass(D);
  for (std::size_t k = 0; k < D; ++k) {
    pass[k].assign(dims[k].members.size(), 1);
    for (const auto& f : q.filters) {
      if (f.dimension != dims[k].name) continue;
      for (std::size_t m = 0; m < dims[k].members.size(); ++m) {
        if (pass[k][m] && !f.matches(dims[k].label(dims[k].members[m], f.level))) pass[k][m] = 0;
      }
    }
  }

  ResultGrid g;
  g.measures = q.measures;
  g.snapshot = data_->snapshot;
  std::vector<std::size_t> axis_dim;
  std::vector<std::vector<std::size_t>> position;  // [axis][member] -> label position
  for (std::size_t k = 0; k < D; ++k) {
    const auto it = q.group_by.find(dims[k].name);
    if (it == q.group_by.end()) continue;
    Axis axis{dims[k].name, it->second, {}};
    std::set<std::string> seen;
    for (std::size_t m = 0; m < dims[k].members.size(); ++m) {
      if (pass[k][m]) seen.insert(dims[k].label(dims[k].members[m], it->second));
    }
    axis.labels.assign(seen.begin(), seen.end());
    std::sort(axis.labels.begin(), axis.labels.end(), natural_less);
    std::unordered_map<std::string, std::size_t> at;
    for (std::size_t i = 0; i < axis.labels.size(); ++i) at.emplace(axis.labels[i], i);
    std::vector<std::size_t> pos(dims[k].members.size(), 0);
    for (std::size_t m = 0; m < dims[k].members.size(); ++m) {
      if (pass[k][m]) pos[m] = at.at(dims[k].label(dims[k].members[m], it->second));
    }
    axis_dim.push_back(k);
    position.push_back(std::move(pos));
    g.axes.push_back(std::move(axis));
  }
  std::size_t n_cells = 1;
  for (const auto& a : g.axes) n_cells *= a.labels.size();
  g.cells.assign(n_cells, Cell{});
  g.provenance.assign(n_cells, {});

  for (std::size_t i = 0; i < data_->facts.size(); ++i) {
    const auto& row = data_->member_of[i];
    bool ok = true;
    for (std::size_t k = 0; k < D && ok; ++k) ok = pass[k][row[k]] != 0;
    if (!ok) continue;
    const FactRecord& f = data_->facts[i];
    if (!std::all_of(q.fact_filters.begin(), q.fact_filters.end(), [&](const FactFilter& ff) { return ff.matches(f); })) {
      continue;
    }
    std::size_t idx = 0;
    for (std::size_t a = 0; a < axis_dim.size(); ++a) idx = idx * g.axes[a].labels.size() + position[a][row[axis_dim[a]]];
    Cell& c = g.cells[idx];
    ++c.count;
    if (f.psm) {
      ++c.psm_n;
      c.psm_sum += *f.psm;
    }
    if (f.pcr_level) {
      ++c.pcr_n;
      c.pcr_sum += *f.pcr_level;
    }
    g.provenance[idx].push_back(static_cast<std::uint32_t>(i));
  }
  return g;
}

std::vector<std::string> Cube::drill_through(const ResultGrid& grid, std::size_t cell) const {
  if (grid.snapshot != data_->snapshot) throw StaleCellError("cell belongs to a grid from an earlier cube snapshot");
  if (cell >= grid.provenance.size()) throw CubeError("cell index out of range");
  std::vector<std::string> out;
  for (auto i : grid.provenance[cell]) out.push_back(data_->facts[i].scene_code);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> Cube::drill_through(const CubeQuery& q, const std::vector<std::string>& labels) const {
  const ResultGrid g = aggregate_scan(q);
  return drill_through(g, g.cell_index(labels));
}

namespace {

void require_member(const Cube& cube, std::string_view dimension, const LevelRef& level, const std::string& member) {
  const auto labels = cube.level_labels(dimension, level);
  if (std::find(labels.begin(), labels.end(), member) == labels.end()) {
    throw CubeError("no member '" + member + "' at " + std::string(dimension) + "." + level.str());
  }
}

}  // namespace

CubeQuery roll_up(const Cube& cube, CubeQuery q, std::string_view dimension) {
  const auto& t = cube.dimension(dimension);
  const auto it = q.group_by.find(std::string(dimension));
  if (it == q.group_by.end()) throw CubeError("cannot roll up " + t.name + ": already at 'all'");
  const std::size_t li = t.level_index(it->second.level);
  if (li + 2 >= t.levels.size()) {
    q.group_by.erase(it);
  } else {
    it->second = LevelRef{t.levels[li + 1], std::nullopt};
  }
  return q;
}

CubeQuery drill_down(const Cube& cube, CubeQuery q, std::string_view dimension) {
  const auto& t = cube.dimension(dimension);
  const auto it = q.group_by.find(std::string(dimension));
  if (it == q.group_by.end()) {
    if (t.levels.size() < 2) throw CubeError("cannot drill down " + t.name + ": no level below 'all'");
    q.group_by[t.name] = LevelRef{t.levels[t.levels.size() - 2], std::nullopt};
    return q;
  }
  const std::size_t li = t.level_index(it->second.level);
  if (li == 0) throw CubeError("cannot drill down " + t.name + ": already at leaf level " + t.levels[0]);
  it->second = LevelRef{t.levels[li - 1], std::nullopt};
  return q;
}

CubeQuery slice(const Cube& cube, CubeQuery q, std::string_view dimension, const LevelRef& level,
                const std::string& member) {
  require_member(cube, dimension, level, member);
  q.filters.push_back({std::string(dimension), level, CompareOp::eq, {member}, 0.0});
  q.group_by.erase(std::string(dimension));
  return q;
}

CubeQuery slice(const Cube& cube, CubeQuery q, std::string_view dimension, const LevelRef& level,
                const std::vector<std::string>& members) {
  if (members.empty()) throw CubeError("slice needs at least one member");
  if (members.size() == 1) return slice(cube, std::move(q), dimension, level, members.front());
  for (const auto& m : members) require_member(cube, dimension, level, m);
  q.filters.push_back({std::string(dimension), level, CompareOp::in, members, 0.0});
  return q;
}

CubeQuery slice(CubeQuery q, const FactFilter& predicate) {
  if (predicate.op == CompareOp::in) throw CubeError("operator 'in' is not valid on a measure");
  q.fact_filters.push_back(predicate);
  return q;
}

CubeQuery dice(const Cube& cube, CubeQuery q, const std::vector<MemberFilter>& predicates) {
  std::set<std::string> dims;
  for (const auto& p : predicates) dims.insert(p.dimension);
  if (dims.size() < 2) throw CubeError("dice needs predicates over at least two dimensions; use slice for one");
  for (const auto& p : predicates) {
    cube.dimension(p.dimension).validate_ref(p.level);
    if (p.op == CompareOp::eq || p.op == CompareOp::in) {
      for (const auto& v : p.values) require_member(cube, p.dimension, p.level, v);
    }
    q.filters.push_back(p);
  }
  return q;
}

ResultGrid pivot(const ResultGrid& g, const std::vector<std::size_t>& order) {
  const std::size_t A = g.axes.size();
  std::vector<std::size_t> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> identity(A);
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  if (sorted != identity) throw CubeError("pivot order is not a permutation of the grid axes");

  ResultGrid out;
  out.measures = g.measures;
  out.snapshot = g.snapshot;
  for (auto a : order) out.axes.push_back(g.axes[a]);
  out.cells.resize(g.cells.size());
  out.provenance.resize(g.provenance.size());
  std::vector<std::size_t> old_stride(A, 1);
  for (std::size_t a = A; a-- > 1;) old_stride[a - 1] = old_stride[a] * g.axes[a].labels.size();
  std::vector<std::size_t> coord(A, 0);
  for (std::size_t i = 0; i < out.cells.size(); ++i) {
    std::size_t rem = i;
    for (std::size_t a = A; a-- > 0;) {
      const std::size_t n = out.axes[a].labels.size();
      coord[a] = rem % n;
      rem /= n;
    }
    std::size_t src = 0;
    for (std::size_t a = 0; a < A; ++a) src += coord[a] * old_stride[order[a]];
    out.cells[i] = g.cells[src];
    if (src < g.provenance.size()) out.provenance[i] = g.provenance[src];
  }
  if (g.provenance.empty()) out.provenance.clear();
  return out;
}

ResultGrid pivot(const ResultGrid& g, const std::vector<std::string>& dimension_order) {
  std::vector<std::size_t> order;
  for (const auto& name : dimension_order) {
    const auto it = std::find_if(g.axes.begin(), g.axes.end(), [&](const Axis& a) { return a.dimension == name; });
    if (it == g.axes.end()) throw CubeError("grid has no axis for dimension " + name);
    order.push_back(static_cast<std::size_t>(it - g.axes.begin()));
  }
  return pivot(g, order);
}

}  // namespace safetycube
