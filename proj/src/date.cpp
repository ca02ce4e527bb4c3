#include "flowcast/date.hpp"

#include <cstdio>
#include <stdexcept>

namespace flowcast {

// Civil-from-days / days-from-civil use the standard era decomposition
// (400-year cycles), exact over the full int64 range we care about.
std::int64_t days_from_civil(const CivilDate& d) {
  std::int64_t y = d.year;
  const std::int64_t m = d.month;
  const std::int64_t dd = d.day;
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const std::int64_t yoe = y - era * 400;                                  // [0, 399]
  const std::int64_t doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + dd - 1;  // [0, 365]
  const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;          // [0, 146096]
  return era * 146097 + doe - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const std::int64_t doe = z - era * 146097;
  const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = yoe + era * 400;
  const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const std::int64_t mp = (5 * doy + 2) / 153;
  const std::int64_t dd = doy - (153 * mp + 2) / 5 + 1;
  const std::int64_t m = mp + (mp < 10 ? 3 : -9);
  return CivilDate{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(dd)};
}

CivilDate parse_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-')
    throw std::runtime_error("malformed date (expected YYYY-MM-DD): '" + s + "'");
  for (int i : {0, 1, 2, 3, 5, 6, 8, 9})
    if (s[i] < '0' || s[i] > '9')
      throw std::runtime_error("malformed date (expected YYYY-MM-DD): '" + s + "'");
  CivilDate d;
  d.year = std::stoi(s.substr(0, 4));
  d.month = std::stoi(s.substr(5, 2));
  d.day = std::stoi(s.substr(8, 2));
  if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31)
    throw std::runtime_error("date out of range: '" + s + "'");
  // Reject dates that do not survive a round trip (e.g. Feb 30).
  if (days_from_civil(civil_from_days(days_from_civil(d))) != days_from_civil(d) ||
      civil_from_days(days_from_civil(d)).day != d.day)
    throw std::runtime_error("date out of range: '" + s + "'");
  return d;
}

std::string format_iso_date(const CivilDate& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
  return std::string(buf);
}

}  // namespace flowcast
