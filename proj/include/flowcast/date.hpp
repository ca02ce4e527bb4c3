#pragma once

#include <cstdint>
#include <string>

namespace flowcast {

/// Proleptic Gregorian calendar date.
struct CivilDate {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31
};

/// Days since 1970-01-01 (negative before the epoch).
std::int64_t days_from_civil(const CivilDate& d);

CivilDate civil_from_days(std::int64_t days);

/// Strict ISO-8601 "YYYY-MM-DD". Throws std::runtime_error on malformed input.
CivilDate parse_iso_date(const std::string& s);

std::string format_iso_date(const CivilDate& d);

}  // namespace flowcast
