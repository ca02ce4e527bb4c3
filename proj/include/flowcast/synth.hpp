#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "flowcast/location.hpp"

namespace flowcast {

/// Linear-reservoir parameters for one gauge. Rain falling on days at or
/// below the snow threshold is stored and released at `melt_mm_per_day`
/// on subsequent warm days.
struct ReservoirParams {
  double k = 0.25;          // recession, fraction of storage released per day
  double c = 0.7;           // runoff coefficient
  double snow_threshold_c = 0.0;
  double melt_mm_per_day = 5.0;
};

/// S_0 = 0; warm days: e_t = c*(r_t + melt_t), S_{t+1} = S_t + e_t - k*S_t,
/// Q_t = k*S_t. Cold days bank the rain as snow and release nothing.
std::vector<double> simulate_flow(std::span<const double> rain, std::span<const double> temp,
                                  const ReservoirParams& params);

struct FlowSimResult {
  std::vector<double> flow;
  double final_storage = 0.0;  // S_N, for conservation checks
  double final_snow = 0.0;
};

FlowSimResult simulate_flow_detailed(std::span<const double> rain, std::span<const double> temp,
                                     const ReservoirParams& params);

struct SynthParams {
  int height = 140, width = 160;
  std::uint64_t seed = 7;
  int n_days = 400;
  int n_gauges = 1;
  int T = 20;  // minimum history demanded downstream; n_days must exceed it
  double k_min = 0.2, k_max = 0.35;
  double c_min = 0.4, c_max = 0.9;
  double snow_threshold_c = 0.0;
  double melt_mm_per_day = 5.0;
  double rain_prob = 0.45;       // chance of a wet day
  double rain_scale_mm = 6.0;    // mean wet-day rainfall
  double temp_mean_c = 5.0, temp_amplitude_c = 10.0, temp_noise_c = 2.0;
  double rain_missing_prob = 0.0, temp_missing_prob = 0.0, flow_missing_prob = 0.0;

  void validate() const;
};

/// Slope as the central-difference gradient magnitude of an elevation grid
/// (replicated borders); zero over constant-elevation regions.
std::vector<float> slope_from_elevation(const std::vector<float>& elevation, int h, int w,
                                        float cell_size_m);

/// Procedurally generates one location: smoothed-noise rasters (slope by
/// finite differences of elevation), seasonal weather and reservoir-driven
/// flow per gauge. Deterministic in (params, loc_seed).
Location generate_location(const SynthParams& params, std::uint64_t loc_seed,
                           const std::string& name);

/// Writes `n_locations` location directories plus maxima.json and a default
/// split (last location held out). Refuses to overwrite unless force is set.
void generate_dataset(const SynthParams& params, int n_locations,
                      const std::filesystem::path& out, bool force);

}  // namespace flowcast
