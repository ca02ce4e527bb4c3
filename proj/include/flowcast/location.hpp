#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "flowcast/raster.hpp"
#include "flowcast/timeseries.hpp"

namespace flowcast {

/// One catchment site: an aligned raster stack, shared rain/temperature
/// series and one or more gauges. All series are re-based onto a common
/// per-location timeline [start_day, start_day + n_days).
struct Location {
  std::string name;
  RasterStack rasters;
  TimeSeries rain, temp;
  std::vector<Gauge> gauges;
  std::int64_t start_day = 0;
  int n_days = 0;
};

/// Reads `location.json` and everything it references; validates gauge
/// pixels against the raster bounds and aligns all series.
Location load_location(const std::filesystem::path& dir);

void save_location(const Location& loc, const std::filesystem::path& dir);

struct Dataset {
  std::filesystem::path root;
  std::vector<Location> locations;

  const Location* find(const std::string& name) const;
  int index_of(const std::string& name) const;  // -1 if absent
};

/// Loads every subdirectory of root containing a location.json.
Dataset load_dataset(const std::filesystem::path& root);

struct Split {
  std::vector<std::string> train, val;
};

Split load_split(const std::filesystem::path& file);
void save_split(const Split& split, const std::filesystem::path& file);

/// Per-kind normalization constants for the temporal inputs, plus the
/// per-layer raster maxima. Temperature is shifted by the global minimum
/// before scaling so the normalized range is [0,1] despite negative values.
struct NormStats {
  LayerMaxima maxima;
  double rain_max = 1.0;
  double temp_shift = 0.0;  // subtracted before scaling (global min)
  double temp_scale = 1.0;  // max - min after shift
  double flow_max = 1.0;
};

/// Computes stats over the named locations ("all locations available at
/// preprocessing time" by default; pass the train list for strict mode).
NormStats compute_norm_stats(const Dataset& dataset, const std::vector<std::string>& scope);

void save_norm_stats(const NormStats& stats, const std::filesystem::path& file);
NormStats load_norm_stats(const std::filesystem::path& file);

}  // namespace flowcast
