#include "flowcast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace flowcast {

namespace fs = std::filesystem;

FlowSimResult simulate_flow_detailed(std::span<const double> rain, std::span<const double> temp,
                                     const ReservoirParams& params) {
  if (rain.size() != temp.size())
    throw std::runtime_error("simulate_flow: rain/temperature length mismatch");
  if (!(params.k > 0.0 && params.k < 1.0))
    throw std::runtime_error("simulate_flow: k must lie in (0,1)");
  if (!(params.c > 0.0 && params.c <= 1.0))
    throw std::runtime_error("simulate_flow: c must lie in (0,1]");
  FlowSimResult result;
  result.flow.resize(rain.size());
  double storage = 0.0, snow = 0.0;
  for (size_t t = 0; t < rain.size(); ++t) {
    result.flow[t] = params.k * storage;
    double effective = 0.0;
    if (temp[t] > params.snow_threshold_c) {
      const double melt = std::min(snow, params.melt_mm_per_day);
      snow -= melt;
      effective = params.c * (rain[t] + melt);
    } else {
      snow += rain[t];
    }
    storage += effective - params.k * storage;
  }
  result.final_storage = storage;
  result.final_snow = snow;
  return result;
}

std::vector<double> simulate_flow(std::span<const double> rain, std::span<const double> temp,
                                  const ReservoirParams& params) {
  return simulate_flow_detailed(rain, temp, params).flow;
}

void SynthParams::validate() const {
  if (height <= 0 || width <= 0) throw std::runtime_error("synth: degenerate grid dims");
  if (n_days <= T)
    throw std::runtime_error("synth: n_days must exceed the history length T (" +
                             std::to_string(n_days) + " <= " + std::to_string(T) + ")");
  if (n_gauges < 1) throw std::runtime_error("synth: need at least one gauge");
  if (height < 3 || width < 3) throw std::runtime_error("synth: grid too small for interior gauges");
  if (!(k_min > 0.0 && k_max < 1.0 && k_min <= k_max)) throw std::runtime_error("synth: bad k range");
  if (!(c_min > 0.0 && c_max <= 1.0 && c_min <= c_max)) throw std::runtime_error("synth: bad c range");
}

namespace {

/// Smooth random field: coarse white noise bilinearly upsampled, then box
/// blurred. Output spans [0, 1].
std::vector<float> smooth_field(int h, int w, int coarse, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int ch = std::max(2, h / coarse), cw = std::max(2, w / coarse);
  std::vector<double> coarse_grid(static_cast<size_t>(ch) * cw);
  for (auto& v : coarse_grid) v = unit(rng);

  std::vector<float> field(static_cast<size_t>(h) * w);
  for (int r = 0; r < h; ++r) {
    const double fy = static_cast<double>(r) / h * (ch - 1);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, ch - 1);
    const double ty = fy - y0;
    for (int c = 0; c < w; ++c) {
      const double fx = static_cast<double>(c) / w * (cw - 1);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, cw - 1);
      const double tx = fx - x0;
      const double v00 = coarse_grid[static_cast<size_t>(y0) * cw + x0];
      const double v01 = coarse_grid[static_cast<size_t>(y0) * cw + x1];
      const double v10 = coarse_grid[static_cast<size_t>(y1) * cw + x0];
      const double v11 = coarse_grid[static_cast<size_t>(y1) * cw + x1];
      field[static_cast<size_t>(r) * w + c] = static_cast<float>(
          (1 - ty) * ((1 - tx) * v00 + tx * v01) + ty * ((1 - tx) * v10 + tx * v11));
    }
  }
  // one 3x3 box blur pass to soften the bilinear creases
  std::vector<float> blurred(field.size());
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double sum = 0.0;
      int n = 0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= h || cc >= w) continue;
          sum += field[static_cast<size_t>(rr) * w + cc];
          ++n;
        }
      blurred[static_cast<size_t>(r) * w + c] = static_cast<float>(sum / n);
    }
  return blurred;
}

RasterLayer make_layer(LayerKind kind, int h, int w, std::vector<float> data,
                       float native_res) {
  RasterLayer layer;
  layer.kind = kind;
  layer.height = h;
  layer.width = w;
  layer.native_resolution_m = native_res;
  layer.data = std::move(data);
  return layer;
}

std::vector<float> scaled(std::vector<float> field, float lo, float hi) {
  for (auto& v : field) v = lo + v * (hi - lo);
  return field;
}

std::vector<float> quantized(std::vector<float> field, int levels) {
  for (auto& v : field) v = std::floor(v * levels);
  return field;
}

void inject_missing(TimeSeries& series, double prob, std::mt19937_64& rng) {
  if (prob <= 0.0) return;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int left = series.count_measured();
  for (int i = 0; i < series.size(); ++i) {
    if (left <= 1) break;
    if (unit(rng) < prob) {
      series.missing[static_cast<size_t>(i)] = 1;
      series.values[static_cast<size_t>(i)] = 0.0;
      --left;
    }
  }
}

}  // namespace

std::vector<float> slope_from_elevation(const std::vector<float>& elevation, int h, int w,
                                        float cell_size_m) {
  std::vector<float> slope(elevation.size());
  auto at = [&](int r, int c) {
    r = std::clamp(r, 0, h - 1);
    c = std::clamp(c, 0, w - 1);
    return elevation[static_cast<size_t>(r) * w + c];
  };
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const double dx = (at(r, c + 1) - at(r, c - 1)) / (2.0 * cell_size_m);
      const double dy = (at(r + 1, c) - at(r - 1, c)) / (2.0 * cell_size_m);
      slope[static_cast<size_t>(r) * w + c] = static_cast<float>(std::hypot(dx, dy));
    }
  return slope;
}

Location generate_location(const SynthParams& params, std::uint64_t loc_seed,
                           const std::string& name) {
  params.validate();
  std::mt19937_64 rng(loc_seed);
  const int h = params.height, w = params.width;

  Location loc;
  loc.name = name;
  loc.start_day = days_from_civil(CivilDate{2001, 1, 1});
  loc.n_days = params.n_days;

  RasterStack stack;
  stack.height_px = h;
  stack.width_px = w;
  stack.cell_size_m = 10.0f;

  const std::vector<float> elevation = scaled(smooth_field(h, w, 24, rng), 20.0f, 380.0f);
  const std::vector<float> slope = slope_from_elevation(elevation, h, w, stack.cell_size_m);
  const std::vector<float> greenness = smooth_field(h, w, 12, rng);
  std::vector<float> sat_r(greenness.size()), sat_g(greenness.size()), sat_b(greenness.size());
  {
    const std::vector<float> texture = smooth_field(h, w, 6, rng);
    for (size_t i = 0; i < greenness.size(); ++i) {
      sat_r[i] = 0.25f + 0.5f * texture[i];
      sat_g[i] = 0.30f + 0.6f * greenness[i];
      sat_b[i] = 0.20f + 0.4f * (1.0f - greenness[i]);
    }
  }
  const std::vector<float> soil_moisture = smooth_field(h, w, 10, rng);
  const std::vector<float> land_cover = quantized(smooth_field(h, w, 16, rng), 6);
  const std::vector<float> soil_type = quantized(smooth_field(h, w, 20, rng), 8);
  const std::vector<float> soil_depth = scaled(smooth_field(h, w, 14, rng), 0.2f, 12.0f);
  const std::vector<float> hydraulic = scaled(smooth_field(h, w, 18, rng), 1e-7f, 1e-4f);

  stack.layers.push_back(make_layer(LayerKind::satellite_r, h, w, sat_r, 10.0f));
  stack.layers.push_back(make_layer(LayerKind::satellite_g, h, w, sat_g, 10.0f));
  stack.layers.push_back(make_layer(LayerKind::satellite_b, h, w, sat_b, 10.0f));
  stack.layers.push_back(make_layer(LayerKind::elevation, h, w, elevation, 50.0f));
  stack.layers.push_back(make_layer(LayerKind::slope, h, w, slope, 50.0f));
  stack.layers.push_back(make_layer(LayerKind::soil_moisture, h, w, soil_moisture, 2.0f));
  stack.layers.push_back(make_layer(LayerKind::land_cover, h, w, land_cover, 10.0f));
  stack.layers.push_back(make_layer(LayerKind::soil_type, h, w, soil_type, 10.0f));
  stack.layers.push_back(make_layer(LayerKind::soil_depth, h, w, soil_depth, 10.0f));
  stack.layers.push_back(make_layer(LayerKind::hydraulic_conductivity, h, w, hydraulic, 100.0f));
  loc.rasters = std::move(stack);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<double> rain(static_cast<size_t>(params.n_days));
  std::vector<double> temp(static_cast<size_t>(params.n_days));
  for (int t = 0; t < params.n_days; ++t) {
    const bool wet = unit(rng) < params.rain_prob;
    rain[static_cast<size_t>(t)] =
        wet ? -params.rain_scale_mm * std::log(1.0 - unit(rng)) : 0.0;
    const double season =
        params.temp_amplitude_c * std::sin(2.0 * std::numbers::pi * t / 365.25);
    temp[static_cast<size_t>(t)] = params.temp_mean_c + season + params.temp_noise_c * noise(rng);
  }

  loc.rain.kind = SeriesKind::rain_mm;
  loc.rain.start_day = loc.start_day;
  loc.rain.values = rain;
  loc.rain.missing.assign(rain.size(), 0);
  loc.temp.kind = SeriesKind::temp_celsius;
  loc.temp.start_day = loc.start_day;
  loc.temp.values = temp;
  loc.temp.missing.assign(temp.size(), 0);
  inject_missing(loc.rain, params.rain_missing_prob, rng);
  inject_missing(loc.temp, params.temp_missing_prob, rng);

  for (int g = 0; g < params.n_gauges; ++g) {
    Gauge gauge;
    gauge.site_id = name + "-g" + std::to_string(g);
    gauge.row = 1 + static_cast<int>(unit(rng) * (h - 2));
    gauge.col = 1 + static_cast<int>(unit(rng) * (w - 2));
    ReservoirParams res;
    res.k = params.k_min + unit(rng) * (params.k_max - params.k_min);
    res.c = params.c_min + unit(rng) * (params.c_max - params.c_min);
    res.snow_threshold_c = params.snow_threshold_c;
    res.melt_mm_per_day = params.melt_mm_per_day;
    gauge.flow.kind = SeriesKind::flow_m3s;
    gauge.flow.start_day = loc.start_day;
    gauge.flow.values = simulate_flow(rain, temp, res);
    gauge.flow.missing.assign(gauge.flow.values.size(), 0);
    inject_missing(gauge.flow, params.flow_missing_prob, rng);
    loc.gauges.push_back(std::move(gauge));
  }
  return loc;
}

void generate_dataset(const SynthParams& params, int n_locations, const fs::path& out,
                      bool force) {
  params.validate();
  if (n_locations < 1) throw std::runtime_error("synth: need at least one location");
  if (fs::exists(out) && !fs::is_empty(out) && !force)
    throw std::runtime_error("output directory exists: " + out.string() +
                             " (use --force to overwrite)");
  fs::create_directories(out);

  Dataset ds;
  ds.root = out;
  char suffix[16];
  for (int i = 0; i < n_locations; ++i) {
    std::snprintf(suffix, sizeof(suffix), "%02d", i);
    const std::string name = "synth-" + std::string(suffix);
    Location loc = generate_location(params, params.seed * 1000003ULL + static_cast<std::uint64_t>(i),
                                     name);
    save_location(loc, out / name);
    ds.locations.push_back(std::move(loc));
  }

  std::vector<RasterStack> stacks;
  for (const auto& loc : ds.locations) stacks.push_back(loc.rasters);
  save_maxima(compute_layer_maxima(stacks), out / "maxima.json");

  // Default split: last location held out. A single location trains and
  // validates on itself (overfit runs).
  Split split;
  for (int i = 0; i + 1 < n_locations; ++i)
    split.train.push_back(ds.locations[static_cast<size_t>(i)].name);
  if (split.train.empty()) split.train.push_back(ds.locations.front().name);
  split.val.push_back(ds.locations.back().name);
  save_split(split, out / "split.json");
}

}  // namespace flowcast
