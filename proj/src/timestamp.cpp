#include "safetycube/timestamp.h"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace safetycube {

namespace {

int parse_int(std::string_view s, std::size_t pos, std::size_t len, std::string_view whole) {
  if (pos + len > s.size()) throw std::invalid_argument("truncated timestamp: " + std::string(whole));
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, v);
  if (ec != std::errc() || ptr != s.data() + pos + len) {
    throw std::invalid_argument("malformed timestamp: " + std::string(whole));
  }
  return v;
}

void expect(std::string_view s, std::size_t pos, char c, std::string_view whole) {
  if (pos >= s.size() || s[pos] != c) throw std::invalid_argument("malformed timestamp: " + std::string(whole));
}

std::chrono::sys_days to_days(const Timestamp& ts) {
  using namespace std::chrono;
  return sys_days{year{ts.year} / month{static_cast<unsigned>(ts.month)} / day{static_cast<unsigned>(ts.day)}};
}

}  // namespace

Timestamp parse_rfc3339(std::string_view s) {
  Timestamp ts;
  ts.year = parse_int(s, 0, 4, s);
  expect(s, 4, '-', s);
  ts.month = parse_int(s, 5, 2, s);
  expect(s, 7, '-', s);
  ts.day = parse_int(s, 8, 2, s);
  if (s.size() < 11 || (s[10] != 'T' && s[10] != 't' && s[10] != ' ')) {
    throw std::invalid_argument("malformed timestamp: " + std::string(s));
  }
  ts.hour = parse_int(s, 11, 2, s);
  expect(s, 13, ':', s);
  ts.minute = parse_int(s, 14, 2, s);
  expect(s, 16, ':', s);
  int sec = parse_int(s, 17, 2, s);
  std::size_t pos = 19;
  double frac = 0.0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    double scale = 0.1;
    const std::size_t start = pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      frac += (s[pos] - '0') * scale;
      scale *= 0.1;
      ++pos;
    }
    if (pos == start) throw std::invalid_argument("malformed fractional seconds: " + std::string(s));
  }
  ts.second = sec + frac;
  if (pos >= s.size()) throw std::invalid_argument("timestamp lacks UTC offset: " + std::string(s));
  if (s[pos] == 'Z' || s[pos] == 'z') {
    ts.utc_offset_minutes = 0;
    ++pos;
  } else if (s[pos] == '+' || s[pos] == '-') {
    const int sign = s[pos] == '-' ? -1 : 1;
    const int oh = parse_int(s, pos + 1, 2, s);
    expect(s, pos + 3, ':', s);
    const int om = parse_int(s, pos + 4, 2, s);
    ts.utc_offset_minutes = sign * (oh * 60 + om);
    pos += 6;
  } else {
    throw std::invalid_argument("malformed UTC offset: " + std::string(s));
  }
  if (pos != s.size()) throw std::invalid_argument("trailing characters in timestamp: " + std::string(s));

  using namespace std::chrono;
  const year_month_day ymd{year{ts.year}, month{static_cast<unsigned>(ts.month)}, day{static_cast<unsigned>(ts.day)}};
  if (!ymd.ok() || ts.hour > 23 || ts.minute > 59 || ts.second >= 61.0) {
    throw std::invalid_argument("timestamp out of range: " + std::string(s));
  }
  return ts;
}

std::string format_rfc3339(const Timestamp& ts) {
  char buf[64];
  const int whole = static_cast<int>(std::floor(ts.second));
  const int millis = static_cast<int>(std::lround((ts.second - whole) * 1000.0));
  int n = std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d", ts.year, ts.month, ts.day, ts.hour,
                        ts.minute, whole);
  std::string out(buf, static_cast<std::size_t>(n));
  if (millis != 0) {
    std::snprintf(buf, sizeof buf, ".%03d", millis);
    out += buf;
  }
  if (ts.utc_offset_minutes == 0) {
    out += 'Z';
  } else {
    const int m = std::abs(ts.utc_offset_minutes);
    std::snprintf(buf, sizeof buf, "%c%02d:%02d", ts.utc_offset_minutes < 0 ? '-' : '+', m / 60, m % 60);
    out += buf;
  }
  return out;
}

std::string date_label(const Timestamp& ts) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", ts.year, ts.month, ts.day);
  return buf;
}

int weekday_index(const Timestamp& ts) {
  return static_cast<int>(std::chrono::weekday{to_days(ts)}.iso_encoding());
}

std::string iso_week_label(const Timestamp& ts) {
  using namespace std::chrono;
  const sys_days d = to_days(ts);
  // The ISO week-year is the year of the Thursday in the same week.
  const sys_days thursday = d + days{4 - weekday_index(ts)};
  const year_month_day ty{thursday};
  const sys_days jan1 = sys_days{ty.year() / January / 1};
  const int week = static_cast<int>((thursday - jan1).count() / 7) + 1;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-W%02d", static_cast<int>(ty.year()), week);
  return buf;
}

Timestamp add_days(const Timestamp& ts, int n) {
  using namespace std::chrono;
  const year_month_day ymd{to_days(ts) + days{n}};
  Timestamp out = ts;
  out.year = static_cast<int>(ymd.year());
  out.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
  out.day = static_cast<int>(static_cast<unsigned>(ymd.day()));
  return out;
}

}  // namespace safetycube
