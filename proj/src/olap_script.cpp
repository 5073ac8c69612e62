#include "safetycube/olap_script.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace safetycube {

namespace {

enum class Tok { word, string, symbol, op, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
};

constexpr std::string_view kOpenQuote = "\xE2\x80\x9C";
constexpr std::string_view kCloseQuote = "\xE2\x80\x9D";

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::optional<double> number_of(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) return std::nullopt;
  return v;
}

std::vector<Token> tokenize(std::string_view s, std::size_t line) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto starts = [&](std::string_view p) { return s.substr(i, p.size()) == p; };
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '"' || starts(kOpenQuote) || starts(kCloseQuote)) {
      i += c == '"' ? 1 : 3;
      std::string text;
      while (true) {
        if (i >= s.size()) throw ScriptError(line, "unterminated string");
        if (s[i] == '"') {
          ++i;
          break;
        }
        if (starts(kCloseQuote) || starts(kOpenQuote)) {
          i += 3;
          break;
        }
        text += s[i++];
      }
      out.push_back({Tok::string, text});
    } else if (c == '(' || c == ')' || c == '[' || c == ']' || c == '|' || c == ',') {
      out.push_back({Tok::symbol, std::string(1, c)});
      ++i;
    } else if (c == '=' || c == '<' || c == '>' || c == '!') {
      std::string op(1, c);
      ++i;
      if (i < s.size() && s[i] == '=') {
        op += '=';
        ++i;
      }
      if (op == "!") throw ScriptError(line, "unexpected '!'");
      out.push_back({Tok::op, op});
    } else {
      std::string text;
      while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])) &&
             std::string_view("()[]|,=<>!\"").find(s[i]) == std::string_view::npos && !starts(kOpenQuote) &&
             !starts(kCloseQuote)) {
        text += s[i++];
      }
      out.push_back({Tok::word, text});
    }
  }
  out.push_back({Tok::end, ""});
  return out;
}

class Parser {
 public:
  Parser(std::vector<Token> toks, std::size_t line) : toks_(std::move(toks)), line_(line) {}

  OlapStep statement() {
    OlapStep st;
    st.line = line_;
    const std::string head = lower(expect_word("a statement"));
    if (head == "drill-down" || head == "drill_down" || head == "drilldown" || head == "roll-up" ||
        head == "roll_up" || head == "rollup") {
      st.kind = head.rfind("drill", 0) == 0 ? StepKind::drill_down : StepKind::roll_up;
      keyword("on");
      st.dimension = lower(expect_word("a dimension"));
      if (accept_symbol("(")) {
        if (accept_keyword("from")) st.from = level_ref(expect_text("a level"));
        keyword("to");
        st.to = level_ref(expect_text("a level"));
        symbol(")");
      }
    } else if (head == "slice") {
      st.kind = StepKind::slice;
      keyword("on");
      st.dimension = lower(expect_word("a dimension"));
      symbol("(");
      const std::string term = expect_text("a level or measure");
      const std::string op = expect_op();
      if (st.dimension == "scene") {
        FactFilter f;
        const std::string field = lower(term);
        if (field == "psm") {
          f.field = FactField::psm;
        } else if (field == "pcr_level" || field == "pcr level") {
          f.field = FactField::pcr_level;
        } else {
          fail("scene slices take psm or pcr_level, not '" + term + "'");
        }
        f.op = parse_compare_op(op);
        const std::string v = expect_text("a number");
        const auto n = number_of(v);
        if (!n) fail("expected a number, got '" + v + "'");
        f.value = *n;
        st.fact = f;
      } else {
        if (op != "=") fail("member slices use '='");
        st.level = level_ref(term);
        st.members = values();
      }
      symbol(")");
    } else if (head == "dice") {
      st.kind = StepKind::dice;
      keyword("for");
      do {
        clause(st);
      } while (accept_keyword("and"));
    } else if (head == "pivot") {
      st.kind = StepKind::pivot;
      if (accept_symbol("(")) {
        do {
          st.order.push_back(lower(expect_text("a dimension")));
        } while (accept_symbol(","));
        symbol(")");
      }
    } else {
      fail("unknown operation '" + head + "'");
    }
    if (peek().kind != Tok::end) fail("unexpected '" + peek().text + "'");
    return st;
  }

 private:
  void clause(OlapStep& st) {
    symbol("(");
    const std::string lhs = expect_text("a dimension");
    const std::string op = expect_op();
    const auto dot = lhs.find('.');
    const std::string dim = lower(lhs.substr(0, dot));
    if (dim == "measure") {
      if (op != "=") fail("measures are chosen with '='");
      for (const auto& m : values()) st.measures.push_back(parse_measure(m == "psm" ? "psm_mean" : m));
      symbol(")");
      return;
    }
    DiceClause c;
    c.dimension = dim;
    if (dot != std::string::npos) c.level = level_ref(lhs.substr(dot + 1));
    c.op = parse_compare_op(op);
    if (c.op == CompareOp::lt || c.op == CompareOp::le || c.op == CompareOp::gt || c.op == CompareOp::ge) {
      const std::string v = expect_text("a number");
      const auto n = number_of(v);
      if (!n) fail("expected a number, got '" + v + "'");
      c.number = *n;
    } else {
      c.values = values();
      if (c.values.size() > 1) {
        if (c.op == CompareOp::ne) fail("'!=' takes a single value");
        c.op = CompareOp::in;
      }
    }
    if (accept_keyword("in")) {
      if (c.level) fail("level given twice");
      c.level = level_ref(expect_text("a level"));
    }
    symbol(")");
    st.clauses.push_back(std::move(c));
  }

  std::vector<std::string> values() {
    std::vector<std::string> out;
    if (accept_symbol("[")) {
      do {
        out.push_back(expect_text("a value"));
      } while (accept_symbol("|") || accept_symbol(","));
      symbol("]");
    } else {
      out.push_back(expect_text("a value"));
    }
    return out;
  }

  LevelRef level_ref(const std::string& s) {
    try {
      return LevelRef::parse(s);
    } catch (const CubeError& e) {
      fail(e.what());
    }
  }

  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  [[noreturn]] void fail(const std::string& what) const { throw ScriptError(line_, what); }

  std::string expect_word(const char* what) {
    if (peek().kind != Tok::word) fail(std::string("expected ") + what);
    return next().text;
  }
  std::string expect_text(const char* what) {
    if (peek().kind != Tok::word && peek().kind != Tok::string) fail(std::string("expected ") + what);
    return next().text;
  }
  std::string expect_op() {
    if (peek().kind != Tok::op) fail("expected a comparison operator");
    return next().text;
  }
  bool accept_keyword(std::string_view kw) {
    if (peek().kind == Tok::word && lower(peek().text) == kw) {
      next();
      return true;
    }
    return false;
  }
  void keyword(std::string_view kw) {
    if (!accept_keyword(kw)) fail("expected '" + std::string(kw) + "'");
  }
  bool accept_symbol(std::string_view s) {
    if (peek().kind == Tok::symbol && peek().text == s) {
      next();
      return true;
    }
    return false;
  }
  void symbol(std::string_view s) {
    if (!accept_symbol(s)) fail("expected '" + std::string(s) + "'");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::size_t line_;
};

std::vector<std::string> current_axes(const Cube& cube, const CubeQuery& q, const std::vector<std::string>& order) {
  std::vector<std::string> out;
  for (const auto& d : order) {
    if (q.group_by.count(d)) out.push_back(d);
  }
  for (const auto& t : cube.dimensions()) {
    if (q.group_by.count(t.name) && std::find(out.begin(), out.end(), t.name) == out.end()) out.push_back(t.name);
  }
  return out;
}

LevelRef current_level(const CubeQuery& q, const std::string& dim) {
  const auto it = q.group_by.find(dim);
  return it == q.group_by.end() ? LevelRef{std::string(kAllLevel), std::nullopt} : it->second;
}

void move_level(const Cube& cube, CubeQuery& q, const OlapStep& st) {
  const DimensionTable& t = cube.dimension(st.dimension);
  const bool down = st.kind == StepKind::drill_down;
  const char* verb = down ? "drill down" : "roll up";
  const LevelRef cur = current_level(q, t.name);
  if (st.from && !(*st.from == cur)) {
    throw CubeError(t.name + " is at '" + cur.str() + "', not '" + st.from->str() + "'");
  }
  if (!st.to) {
    if (down) {
      q = drill_down(cube, q, t.name);
    } else if (cur.attribute) {
      q.group_by[t.name].attribute.reset();
    } else {
      q = roll_up(cube, q, t.name);
    }
    return;
  }
  t.validate_ref(*st.to);
  const std::size_t ci = t.level_index(cur.level), ti = t.level_index(st.to->level);
  const bool ok = down ? (ti < ci || (ti == ci && st.to->attribute && !cur.attribute))
                       : (ti > ci || (ti == ci && cur.attribute && !st.to->attribute));
  if (!ok) throw CubeError("cannot " + std::string(verb) + " " + t.name + " from '" + cur.str() + "' to '" + st.to->str() + "'");
  if (down) {
    while (t.level_index(current_level(q, t.name).level) > ti) q = drill_down(cube, q, t.name);
    if (st.to->attribute) q.group_by[t.name].attribute = st.to->attribute;
  } else {
    if (cur.attribute) q.group_by[t.name].attribute.reset();
    while (t.level_index(current_level(q, t.name).level) < ti) q = roll_up(cube, q, t.name);
  }
}

bool is_all_value(const std::vector<std::string>& values) {
  return values.size() == 1 && lower(values.front()).rfind("all", 0) == 0;
}

void resolve_clause(const Cube& cube, const DiceClause& c, std::vector<MemberFilter>& out) {
  const DimensionTable& t = cube.dimension(c.dimension);
  const bool numeric = c.op == CompareOp::lt || c.op == CompareOp::le || c.op == CompareOp::gt || c.op == CompareOp::ge;
  if (numeric) {
    if (!c.level) throw CubeError("a numeric comparison on " + t.name + " needs a level");
    t.validate_ref(*c.level);
    out.push_back({t.name, *c.level, c.op, {}, c.number});
    return;
  }
  if (is_all_value(c.values)) return;
  auto is_attribute = [&](const std::string& v) {
    return std::find(t.attribute_names.begin(), t.attribute_names.end(), v) != t.attribute_names.end();
  };
  auto as_attributes = [&]() {
    for (const auto& v : c.values) {
      out.push_back({t.name, LevelRef{t.levels.front(), v}, c.op == CompareOp::ne ? CompareOp::ne : CompareOp::eq,
                     {"true"}, 0.0});
    }
  };
  const bool all_attributes = std::all_of(c.values.begin(), c.values.end(), is_attribute);
  if (c.level) {
    t.validate_ref(*c.level);
    if (!c.level->attribute && t.level_index(c.level->level) == 0 && all_attributes) {
      as_attributes();
    } else {
      out.push_back({t.name, *c.level, c.op, c.values, 0.0});
    }
    return;
  }
  for (std::size_t li = t.levels.size() - 1; li-- > 0;) {
    const LevelRef ref{t.levels[li], std::nullopt};
    const auto labels = cube.level_labels(t.name, ref);
    const bool has_all = std::all_of(c.values.begin(), c.values.end(), [&](const std::string& v) {
      return std::find(labels.begin(), labels.end(), v) != labels.end();
    });
    if (has_all) {
      out.push_back({t.name, ref, c.op, c.values, 0.0});
      return;
    }
  }
  if (all_attributes) {
    as_attributes();
    return;
  }
  throw CubeError("no level of " + t.name + " has member '" + c.values.front() + "'");
}

}  // namespace

QueryScript parse_script(std::string_view text) {
  QueryScript script;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    ++line_no;
    start = end + 1;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    if (std::all_of(line.begin(), line.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); })) {
      continue;
    }
    try {
      script.steps.push_back(Parser(tokenize(line, line_no), line_no).statement());
    } catch (const ScriptError&) {
      throw;
    } catch (const CubeError& e) {
      throw ScriptError(line_no, e.what());
    }
  }
  if (script.steps.empty()) throw ScriptError(line_no, "script has no operations");
  return script;
}

QueryScript load_script(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CubeError("cannot read script " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_script(ss.str());
}

ScriptPlan plan_script(const Cube& cube, const QueryScript& script, CubeQuery start) {
  ScriptPlan plan;
  plan.query = std::move(start);
  cube.validate(plan.query);
  CubeQuery& q = plan.query;
  std::vector<std::string> order;
  for (const auto& st : script.steps) {
    try {
      if (st.kind != StepKind::dice && st.kind != StepKind::pivot && st.dimension != "scene") {
        cube.dimension(st.dimension);
      }
      switch (st.kind) {
        case StepKind::drill_down:
        case StepKind::roll_up:
          move_level(cube, q, st);
          break;
        case StepKind::slice:
          if (st.fact) {
            q = slice(q, *st.fact);
          } else {
            cube.dimension(st.dimension).validate_ref(*st.level);
            q = slice(cube, q, st.dimension, *st.level, st.members);
          }
          break;
        case StepKind::dice: {
          std::vector<MemberFilter> preds;
          for (const auto& c : st.clauses) resolve_clause(cube, c, preds);
          if (!st.measures.empty()) q.measures = st.measures;
          if (!preds.empty()) q = dice(cube, q, preds);
          break;
        }
        case StepKind::pivot: {
          const auto axes = current_axes(cube, q, order);
          if (st.order.empty()) {
            order.assign(axes.rbegin(), axes.rend());
            break;
          }
          auto want = st.order;
          auto have = axes;
          std::sort(want.begin(), want.end());
          std::sort(have.begin(), have.end());
          if (want != have) throw CubeError("pivot must list exactly the grouped dimensions");
          order = st.order;
          break;
        }
      }
      cube.validate(q);
    } catch (const CubeError& e) {
      throw ScriptError(st.line, e.what());
    }
  }
  plan.axis_order = current_axes(cube, q, order);
  return plan;
}

ResultGrid run_script(const Cube& cube, const QueryScript& script, CubeQuery start) {
  const ScriptPlan plan = plan_script(cube, script, std::move(start));
  ResultGrid g = cube.aggregate(plan.query);
  std::vector<std::string> natural;
  for (const auto& a : g.axes) natural.push_back(a.dimension);
  if (natural != plan.axis_order) g = pivot(g, plan.axis_order);
  return g;
}

}  // namespace safetycube
