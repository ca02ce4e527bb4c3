#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flowcast/location.hpp"

namespace flowcast {

enum class BaselineKind : int { mean_per_site = 0, previous_flow };

const char* baseline_name(BaselineKind kind);
BaselineKind baseline_from_name(const std::string& name);

/// Arithmetic mean of the measured flow values over day range [lo, hi).
double mean_per_site(const TimeSeries& flow, int day_lo, int day_hi);

/// Yesterday's measured flow, or nullopt when t-1 is missing / t == 0.
std::optional<double> previous_flow_prediction(const TimeSeries& flow, int t);

struct BaselineSiteResult {
  std::string location, site;
  int n_days = 0;
  double site_rmse = 0.0;
};

struct BaselineReport {
  BaselineKind kind = BaselineKind::mean_per_site;
  std::vector<BaselineSiteResult> sites;
  long n_days_total = 0;
  double aggregate = 0.0;  // day-and-site pooled
  std::string fit_range;   // mean_per_site: day range used for the mean
};

/// Evaluates a baseline over the model's supervised-day protocol (t >= min_day
/// and flow measured); days whose baseline input is missing are excluded and
/// disclosed via the per-site day counts. `fit_range` of (0, n_days) is the
/// full series (the default); pass an explicit range for hygiene experiments.
BaselineReport evaluate_baseline(const Dataset& dataset, const std::vector<std::string>& names,
                                 BaselineKind kind, int min_day,
                                 std::optional<std::pair<int, int>> fit_range = std::nullopt);

}  // namespace flowcast
