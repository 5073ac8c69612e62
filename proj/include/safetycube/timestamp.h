#pragma once

#include <string>
#include <string_view>

namespace safetycube {

/// Wall-clock timestamp with its UTC offset, as written in RFC 3339.
/// Fields are local time; day/night and hour classification use them directly.
struct Timestamp {
  int year = 1970;
  int month = 1;
  int day = 1;
  int hour = 0;
  int minute = 0;
  double second = 0.0;
  int utc_offset_minutes = 0;

  bool operator==(const Timestamp&) const = default;
};

/// Throws std::invalid_argument on malformed input. Requires an explicit offset ("Z" or "+hh:mm").
Timestamp parse_rfc3339(std::string_view text);
std::string format_rfc3339(const Timestamp& ts);

std::string date_label(const Timestamp& ts);  // "2021-01-11"
std::string iso_week_label(const Timestamp& ts);  // "2021-W02"
int weekday_index(const Timestamp& ts);  // ISO: Monday = 1 ... Sunday = 7

/// Adds whole days to the local date (offset preserved).
Timestamp add_days(const Timestamp& ts, int days);

}  // namespace safetycube
