#include "flowcast/timeseries.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace flowcast {

namespace {

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

const char* series_kind_name(SeriesKind kind) {
  switch (kind) {
    case SeriesKind::rain_mm: return "rain_mm";
    case SeriesKind::temp_celsius: return "temp_celsius";
    case SeriesKind::flow_m3s: return "flow_m3s";
  }
  return "?";
}

bool TimeSeries::has_missing() const {
  for (auto m : missing)
    if (m) return true;
  return false;
}

int TimeSeries::count_measured() const {
  int n = 0;
  for (auto m : missing) n += (m == 0);
  return n;
}

TimeSeries parse_series(const std::filesystem::path& file, SeriesKind kind) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());

  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != "date,value")
    throw std::runtime_error("expected 'date,value' header in " + file.string());

  std::vector<std::pair<std::int64_t, std::optional<double>>> rows;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error(file.string() + ":" + std::to_string(lineno) + ": missing comma");
    const std::int64_t day = days_from_civil(parse_iso_date(line.substr(0, comma)));
    const std::string value_str = line.substr(comma + 1);
    std::optional<double> value;
    if (!value_str.empty()) {
      size_t consumed = 0;
      double v = 0;
      try {
        v = std::stod(value_str, &consumed);
      } catch (const std::exception&) {
        throw std::runtime_error(file.string() + ":" + std::to_string(lineno) +
                                 ": non-numeric value '" + value_str + "'");
      }
      if (consumed != value_str.size() || !std::isfinite(v))
        throw std::runtime_error(file.string() + ":" + std::to_string(lineno) +
                                 ": non-numeric value '" + value_str + "'");
      value = v;
    }
    if (!rows.empty() && day <= rows.back().first)
      throw std::runtime_error(file.string() + ":" + std::to_string(lineno) +
                               ": dates must be strictly increasing");
    rows.emplace_back(day, value);
  }
  if (rows.empty()) throw std::runtime_error("no data rows in " + file.string());

  TimeSeries series;
  series.kind = kind;
  series.start_day = rows.front().first;
  const std::int64_t n_days = rows.back().first - rows.front().first + 1;
  series.values.assign(static_cast<size_t>(n_days), 0.0);
  series.missing.assign(static_cast<size_t>(n_days), 1);
  for (const auto& [day, value] : rows) {
    const auto idx = static_cast<size_t>(day - series.start_day);
    if (value) {
      series.values[idx] = *value;
      series.missing[idx] = 0;
    }
  }
  return series;
}

void save_series_csv(const TimeSeries& series, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "date,value\n";
  char buf[64];
  for (int i = 0; i < series.size(); ++i) {
    out << format_iso_date(civil_from_days(series.start_day + i)) << ",";
    if (!series.is_missing(i)) {
      std::snprintf(buf, sizeof(buf), "%.17g", series.values[static_cast<size_t>(i)]);
      out << buf;
    }
    out << "\n";
  }
}

TimeSeries interpolate_gaps(const TimeSeries& series) {
  if (series.kind == SeriesKind::flow_m3s)
    throw std::runtime_error("interpolate_gaps must not be called on flow series");
  if (series.count_measured() == 0)
    throw std::runtime_error("interpolate_gaps: all values missing");

  TimeSeries out = series;
  const int n = out.size();
  int prev = -1;  // last measured index
  for (int i = 0; i < n; ++i) {
    if (!out.is_missing(i)) {
      if (prev < 0 && i > 0) {
        // leading gap: extend first measured value backwards
        for (int j = 0; j < i; ++j) out.values[static_cast<size_t>(j)] = out.values[static_cast<size_t>(i)];
      } else if (prev >= 0 && i > prev + 1) {
        const double lo = out.values[static_cast<size_t>(prev)];
        const double hi = out.values[static_cast<size_t>(i)];
        for (int j = prev + 1; j < i; ++j) {
          const double f = static_cast<double>(j - prev) / static_cast<double>(i - prev);
          out.values[static_cast<size_t>(j)] = lo + f * (hi - lo);
        }
      }
      prev = i;
    }
  }
  if (prev < n - 1)  // trailing gap: extend last measured value forwards
    for (int j = prev + 1; j < n; ++j) out.values[static_cast<size_t>(j)] = out.values[static_cast<size_t>(prev)];
  std::fill(out.missing.begin(), out.missing.end(), 0);
  return out;
}

TimeSeries shift_series(const TimeSeries& series, double shift) {
  TimeSeries out = series;
  for (int i = 0; i < out.size(); ++i)
    if (!out.is_missing(i)) out.values[static_cast<size_t>(i)] += shift;
  return out;
}

TimeSeries normalize_series(const TimeSeries& series, double max_value) {
  if (!(max_value > 0.0)) throw std::runtime_error("normalize_series: max_value must be positive");
  TimeSeries out = series;
  for (int i = 0; i < out.size(); ++i)
    if (!out.is_missing(i)) out.values[static_cast<size_t>(i)] /= max_value;
  out.norm_max = max_value;
  return out;
}

std::vector<double> slice_history(const TimeSeries& series, int t, int T) {
  if (T <= 0) throw std::runtime_error("slice_history: T must be positive");
  if (t - T < 0)
    throw std::runtime_error("slice_history: window [" + std::to_string(t - T) + "," +
                             std::to_string(t) + ") extends before series start");
  if (t > series.size())
    throw std::runtime_error("slice_history: t beyond series end");
  std::vector<double> out(static_cast<size_t>(T));
  for (int j = 0; j < T; ++j) {
    const int idx = t - T + j;
    if (series.is_missing(idx))
      throw std::runtime_error("slice_history: missing value at day " + std::to_string(idx));
    out[static_cast<size_t>(j)] = series.values[static_cast<size_t>(idx)];
  }
  return out;
}

TimeSeries reindex_series(const TimeSeries& series, std::int64_t new_start, int n_days) {
  TimeSeries out;
  out.kind = series.kind;
  out.norm_max = series.norm_max;
  out.start_day = new_start;
  out.values.assign(static_cast<size_t>(n_days), 0.0);
  out.missing.assign(static_cast<size_t>(n_days), 1);
  for (int i = 0; i < series.size(); ++i) {
    const std::int64_t day = series.start_day + i;
    const std::int64_t j = day - new_start;
    if (j < 0 || j >= n_days) continue;
    out.values[static_cast<size_t>(j)] = series.values[static_cast<size_t>(i)];
    out.missing[static_cast<size_t>(j)] = series.missing[static_cast<size_t>(i)];
  }
  return out;
}

}  // namespace flowcast
