#include "flowcast/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace flowcast {

const char* baseline_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::mean_per_site: return "mean-per-site";
    case BaselineKind::previous_flow: return "previous-flow";
  }
  return "?";
}

BaselineKind baseline_from_name(const std::string& name) {
  if (name == "mean-per-site") return BaselineKind::mean_per_site;
  if (name == "previous-flow") return BaselineKind::previous_flow;
  throw std::runtime_error("unknown baseline: " + name);
}

double mean_per_site(const TimeSeries& flow, int day_lo, int day_hi) {
  day_lo = std::max(day_lo, 0);
  day_hi = std::min(day_hi, flow.size());
  double sum = 0.0;
  long n = 0;
  for (int t = day_lo; t < day_hi; ++t)
    if (!flow.is_missing(t)) {
      sum += flow.values[static_cast<size_t>(t)];
      ++n;
    }
  if (n == 0) throw std::runtime_error("mean_per_site: no measured day in range");
  return sum / static_cast<double>(n);
}

std::optional<double> previous_flow_prediction(const TimeSeries& flow, int t) {
  if (t <= 0 || t > flow.size()) return std::nullopt;
  if (flow.is_missing(t - 1)) return std::nullopt;
  return flow.values[static_cast<size_t>(t - 1)];
}

BaselineReport evaluate_baseline(const Dataset& dataset, const std::vector<std::string>& names,
                                 BaselineKind kind, int min_day,
                                 std::optional<std::pair<int, int>> fit_range) {
  BaselineReport report;
  report.kind = kind;
  double pooled_sq = 0.0;
  for (const auto& name : names) {
    const Location* loc = dataset.find(name);
    if (!loc) throw std::runtime_error("unknown location: " + name);
    for (const auto& gauge : loc->gauges) {
      const int lo = fit_range ? fit_range->first : 0;
      const int hi = fit_range ? fit_range->second : gauge.flow.size();
      double mean = 0.0;
      if (kind == BaselineKind::mean_per_site) mean = mean_per_site(gauge.flow, lo, hi);

      BaselineSiteResult site;
      site.location = name;
      site.site = gauge.site_id;
      double site_sq = 0.0;
      for (int t = min_day; t < gauge.flow.size(); ++t) {
        if (gauge.flow.is_missing(t)) continue;
        std::optional<double> pred;
        if (kind == BaselineKind::mean_per_site) pred = mean;
        else pred = previous_flow_prediction(gauge.flow, t);
        if (!pred) continue;  // missing baseline input: excluded, disclosed via n_days
        const double err = *pred - gauge.flow.values[static_cast<size_t>(t)];
        site_sq += err * err;
        ++site.n_days;
      }
      if (site.n_days > 0) site.site_rmse = std::sqrt(site_sq / site.n_days);
      pooled_sq += site_sq;
      report.n_days_total += site.n_days;
      report.sites.push_back(std::move(site));
    }
  }
  if (report.n_days_total == 0) throw std::runtime_error("baseline: no evaluable day");
  report.aggregate = std::sqrt(pooled_sq / static_cast<double>(report.n_days_total));
  report.fit_range = fit_range ? "[" + std::to_string(fit_range->first) + "," +
                                     std::to_string(fit_range->second) + ")"
                               : "full-series";
  return report;
}

}  // namespace flowcast
