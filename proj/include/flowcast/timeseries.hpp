#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flowcast/date.hpp"

namespace flowcast {

enum class SeriesKind : int { rain_mm = 0, temp_celsius, flow_m3s };

const char* series_kind_name(SeriesKind kind);

/// A dated daily scalar sequence with explicit missing-value flags.
/// Day index i corresponds to calendar day start_day + i.
struct TimeSeries {
  std::int64_t start_day = 0;  // days since 1970-01-01
  SeriesKind kind = SeriesKind::rain_mm;
  std::vector<double> values;
  std::vector<std::uint8_t> missing;  // 1 = missing; parallel to values
  std::optional<double> norm_max;     // recorded divisor once normalized

  int size() const { return static_cast<int>(values.size()); }
  bool is_missing(int i) const { return missing[static_cast<size_t>(i)] != 0; }
  bool has_missing() const;
  int count_measured() const;
};

/// Parses `date,value` CSV. Dates must be ISO-8601, strictly increasing,
/// daily; absent calendar days and empty value fields become missing entries.
TimeSeries parse_series(const std::filesystem::path& file, SeriesKind kind);

void save_series_csv(const TimeSeries& series, const std::filesystem::path& file);

/// Fills interior gaps by linear interpolation between the nearest measured
/// endpoints; leading/trailing gaps extend the nearest measured value.
/// Refuses flow series: supervision must stay on real measurements.
TimeSeries interpolate_gaps(const TimeSeries& series);

/// Adds `shift` to every non-missing value (temperature sign handling).
TimeSeries shift_series(const TimeSeries& series, double shift);

/// Divides non-missing values by max_value and records it as norm_max.
TimeSeries normalize_series(const TimeSeries& series, double max_value);

/// Values at day indices t-T .. t-1 inclusive, oldest first. The slice must
/// be fully measured/interpolated.
std::vector<double> slice_history(const TimeSeries& series, int t, int T);

/// Re-bases a series onto [new_start, new_start + n_days); days outside the
/// original range become missing.
TimeSeries reindex_series(const TimeSeries& series, std::int64_t new_start, int n_days);

/// One measurement site: a pixel on the location's shared grid plus its
/// daily flow series.
struct Gauge {
  std::string site_id;
  int row = 0;
  int col = 0;
  TimeSeries flow;
};

}  // namespace flowcast
