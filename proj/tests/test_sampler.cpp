#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>
#include <set>

#include "flowcast/sampler.hpp"
#include "flowcast/synth.hpp"

using namespace flowcast;

namespace {

Dataset make_dataset(int n_locations, int n_gauges = 1, int grid_h = 120, int grid_w = 130,
                     int n_days = 80) {
  SynthParams params;
  params.height = grid_h;
  params.width = grid_w;
  params.n_days = n_days;
  params.n_gauges = n_gauges;
  Dataset ds;
  for (int i = 0; i < n_locations; ++i)
    ds.locations.push_back(generate_location(params, 1000 + static_cast<std::uint64_t>(i),
                                             "loc-" + std::to_string(i)));
  return ds;
}

std::vector<std::string> names_of(const Dataset& ds) {
  std::vector<std::string> names;
  for (const auto& loc : ds.locations) names.push_back(loc.name);
  return names;
}

// Brute-force oracle: every window origin whose h x w window contains the gauge.
std::set<std::pair<int, int>> brute_force_origins(int gr, int gc, int h, int w, int rows,
                                                  int cols) {
  std::set<std::pair<int, int>> origins;
  for (int r = 0; r + h <= rows; ++r)
    for (int c = 0; c + w <= cols; ++c)
      if (gr >= r && gr < r + h && gc >= c && gc < c + w) origins.insert({r, c});
  return origins;
}

}  // namespace

TEST_CASE("window origin ranges: documented cases") {
  const OriginRange big = enumerate_window_origins(500, 600, 100, 100, 825, 1244);
  CHECK(big.row_lo == 401);
  CHECK(big.row_hi == 500);
  CHECK(big.col_lo == 501);
  CHECK(big.col_hi == 600);
  CHECK(big.count() == 10000);

  const OriginRange corner = enumerate_window_origins(0, 0, 100, 100, 825, 1244);
  CHECK(corner.row_lo == 0);
  CHECK(corner.row_hi == 0);
  CHECK(corner.col_lo == 0);
  CHECK(corner.col_hi == 0);
  CHECK(corner.count() == 1);

  const OriginRange clipped = enumerate_window_origins(50, 50, 100, 100, 120, 120);
  CHECK(clipped.row_lo == 0);
  CHECK(clipped.row_hi == 20);
  CHECK(clipped.col_lo == 0);
  CHECK(clipped.col_hi == 20);
}

TEST_CASE("window origin ranges match the brute-force containment filter") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = 5 + static_cast<int>(rng() % 36);
    const int cols = 5 + static_cast<int>(rng() % 36);
    const int h = 1 + static_cast<int>(rng() % rows);
    const int w = 1 + static_cast<int>(rng() % cols);
    const int gr = static_cast<int>(rng() % rows);
    const int gc = static_cast<int>(rng() % cols);
    const OriginRange range = enumerate_window_origins(gr, gc, h, w, rows, cols);
    const auto expect = brute_force_origins(gr, gc, h, w, rows, cols);
    std::set<std::pair<int, int>> got;
    for (int r = range.row_lo; r <= range.row_hi; ++r)
      for (int c = range.col_lo; c <= range.col_hi; ++c) got.insert({r, c});
    REQUIRE(got == expect);
  }
  CHECK_THROWS(enumerate_window_origins(10, 10, 30, 5, 20, 20));
  CHECK_THROWS(enumerate_window_origins(25, 0, 5, 5, 20, 20));
}

TEST_CASE("channel counts follow the assembly formula for every variant and mask") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  for (int trial = 0; trial < 60; ++trial) {
    AssemblyMode mode;
    mode.T = (trial % 2) ? 10 : 20;
    const Variant variants[] = {Variant::main, Variant::alt_rain_temp, Variant::fc_early,
                                Variant::fc_mid, Variant::flow_lag};
    mode.variant = variants[trial % 5];
    for (auto& b : mode.include_layers) b = rng() % 2 == 0;
    if (mode.spatial_channels() == 0) mode.include_layers[0] = true;
    mode.include_rain = rng() % 2 == 0;
    mode.include_temp = rng() % 2 == 0;
    if (mode.variant == Variant::alt_rain_temp) mode.include_rain = mode.include_temp = true;
    mode.lag_k = 1 + static_cast<int>(rng() % 3);

    const int cp = mode.spatial_channels();
    int expect = cp;
    switch (mode.variant) {
      case Variant::main: expect = cp + mode.T * (mode.include_rain + mode.include_temp); break;
      case Variant::alt_rain_temp: expect = cp + mode.T; break;
      case Variant::fc_early:
      case Variant::fc_mid: expect = cp; break;
      case Variant::flow_lag:
        expect = cp + mode.T * (mode.include_rain + mode.include_temp + 1);
        break;
    }
    CHECK(mode.input_channels() == expect);

    // assemble a tiny window and confirm the realized channel count
    RasterStack window;
    window.height_px = 6;
    window.width_px = 7;
    for (int i = 0; i < kNumLayers; ++i) {
      if (!mode.include_layers[static_cast<size_t>(i)]) continue;
      RasterLayer layer;
      layer.kind = static_cast<LayerKind>(i);
      layer.height = 6;
      layer.width = 7;
      layer.data.resize(42);
      for (auto& v : layer.data) v = unit(rng);
      window.layers.push_back(std::move(layer));
    }
    std::vector<double> rain(static_cast<size_t>(mode.T), 0.25);
    std::vector<double> temp(static_cast<size_t>(mode.T), 0.5);
    std::vector<double> flow(static_cast<size_t>(mode.T), 0.125);
    const Tensor<float> input = assemble_input(window, rain, temp, flow, mode);
    CHECK(input.dim(0) == expect);
    CHECK(input.dim(1) == 6);
    CHECK(input.dim(2) == 7);
  }
}

TEST_CASE("default main assembly gives K = 50; alt gives K = 30") {
  AssemblyMode mode;
  CHECK(mode.input_channels() == 50);
  mode.variant = Variant::alt_rain_temp;
  CHECK(mode.input_channels() == 30);
  mode.variant = Variant::flow_lag;
  CHECK(mode.input_channels() == 70);
}

TEST_CASE("tiled temporal channels are constant; interleaved channels follow parity") {
  RasterStack window;
  window.height_px = 5;
  window.width_px = 5;
  RasterLayer layer;
  layer.kind = LayerKind::elevation;
  layer.height = layer.width = 5;
  layer.data.assign(25, 0.5f);
  window.layers.push_back(layer);

  AssemblyMode mode;
  mode.T = 3;
  mode.include_layers.fill(false);
  mode.include_layers[static_cast<size_t>(LayerKind::elevation)] = true;

  std::vector<double> rain = {0.1, 0.2, 0.3};
  std::vector<double> temp = {0.7, 0.8, 0.9};
  const Tensor<float> tiled = assemble_input(window, rain, temp, {}, mode);
  for (int j = 0; j < 3; ++j) {
    float lo = 1e9f, hi = -1e9f;
    for (long r = 0; r < 5; ++r)
      for (long c = 0; c < 5; ++c) {
        lo = std::min(lo, tiled.at(1 + j, r, c));
        hi = std::max(hi, tiled.at(1 + j, r, c));
      }
    CHECK(hi - lo == 0.0f);  // each tiled map holds copies of a single value
    CHECK(tiled.at(1 + j, 2, 2) == doctest::Approx(rain[static_cast<size_t>(j)]));
    CHECK(tiled.at(4 + j, 2, 2) == doctest::Approx(temp[static_cast<size_t>(j)]));
  }

  mode.variant = Variant::alt_rain_temp;
  const Tensor<float> alt = assemble_input(window, rain, temp, {}, mode);
  CHECK(alt.dim(0) == 1 + 3);
  for (int j = 0; j < 3; ++j)
    for (long r = 0; r < 5; ++r)
      for (long c = 0; c < 5; ++c) {
        const float expect = ((r + c) % 2 == 0) ? static_cast<float>(rain[static_cast<size_t>(j)])
                                                : static_cast<float>(temp[static_cast<size_t>(j)]);
        CHECK(alt.at(1 + j, r, c) == doctest::Approx(expect));
      }

  mode.variant = Variant::flow_lag;
  std::vector<double> flow = {0.11, 0.22, 0.33};
  const Tensor<float> lag = assemble_input(window, rain, temp, flow, mode);
  CHECK(lag.dim(0) == 1 + 9);
  CHECK(lag.at(7 + 2, 0, 0) == doctest::Approx(0.33));
  CHECK_THROWS_WITH_AS(assemble_input(window, rain, temp, {}, mode),
                       doctest::Contains("flow history"), std::runtime_error);
}

TEST_CASE("flips: involution, target remap, parity re-tiling") {
  const Dataset ds = make_dataset(1, 2);
  const NormStats norm = compute_norm_stats(ds, names_of(ds));
  SamplerConfig cfg;
  cfg.h = cfg.w = 100;
  cfg.mode.T = 20;
  cfg.mode.variant = Variant::alt_rain_temp;
  cfg.flip_prob = 0.0;
  const SamplerContext ctx = SamplerContext::build(ds, names_of(ds), cfg, norm);
  const Sample original = ctx.make_eval_sample(0, 0, 40);

  Sample flipped = original;
  apply_flips(flipped, true, false);
  REQUIRE(flipped.targets.size() == original.targets.size());
  for (size_t i = 0; i < original.targets.size(); ++i) {
    CHECK(flipped.targets[i].row == original.targets[i].row);
    CHECK(flipped.targets[i].col == 100 - 1 - original.targets[i].col);
  }
  // spatial content mirrored
  CHECK(flipped.input.at(0, 3, 7) == original.input.at(0, 3, 92));
  // interleaved channels keep the parity convention after the flip
  const long cp = cfg.mode.spatial_channels();
  CHECK(flipped.input.at(cp, 0, 0) == original.input.at(cp, 0, 0));

  Sample twice = flipped;
  apply_flips(twice, true, false);
  CHECK(twice.input.data == original.input.data);
  CHECK(twice.targets[0].col == original.targets[0].col);
  CHECK(twice.meta.flip_h == original.meta.flip_h);

  Sample both = original;
  apply_flips(both, true, true);
  CHECK(both.targets[0].row == 100 - 1 - original.targets[0].row);

  // a target at (10, 20) maps to (10, 79) under a horizontal flip
  Sample synthetic = original;
  synthetic.targets = {TargetPixel{10, 20, 1.0, 1.0, "x"}};
  apply_flips(synthetic, true, false);
  CHECK(synthetic.targets[0].row == 10);
  CHECK(synthetic.targets[0].col == 79);
}

TEST_CASE("training draws are reproducible and well-formed") {
  const Dataset ds = make_dataset(2, 3);
  const NormStats norm = compute_norm_stats(ds, names_of(ds));
  SamplerConfig cfg;
  cfg.h = cfg.w = 100;
  cfg.mode.T = 20;
  const SamplerContext ctx = SamplerContext::build(ds, names_of(ds), cfg, norm);

  std::mt19937_64 rng_a(5), rng_b(5);
  for (int i = 0; i < 10; ++i) {
    const Sample a = ctx.draw_training_sample(rng_a);
    const Sample b = ctx.draw_training_sample(rng_b);
    CHECK(a.input.data == b.input.data);
    REQUIRE(a.targets.size() == b.targets.size());
    CHECK(a.meta.location == b.meta.location);
    CHECK(a.meta.day == b.meta.day);
    CHECK(a.meta.flip_h == b.meta.flip_h);
    REQUIRE(a.targets.size() >= 1);
    CHECK(a.meta.day >= cfg.mode.T);
    for (const auto& t : a.targets) {
      CHECK(t.row >= 0);
      CHECK(t.row < 100);
      CHECK(t.col >= 0);
      CHECK(t.col < 100);
      CHECK(t.norm_max == norm.flow_max);
    }
    // normalized inputs stay in [0, 1]
    for (float v : a.input.data) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  }
}

TEST_CASE("windows supervise every contained measured gauge") {
  const Dataset ds = make_dataset(1, 14, 140, 160);
  const NormStats norm = compute_norm_stats(ds, names_of(ds));
  SamplerConfig cfg;
  cfg.h = cfg.w = 100;
  cfg.mode.T = 20;
  const SamplerContext ctx = SamplerContext::build(ds, names_of(ds), cfg, norm);

  const Sample sample = ctx.make_eval_sample(0, 0, 50);
  // brute-force containment over the location's gauge list
  int expect = 0;
  for (const auto& g : ds.locations[0].gauges) {
    const bool inside = g.row >= sample.meta.origin_row && g.row < sample.meta.origin_row + 100 &&
                        g.col >= sample.meta.origin_col && g.col < sample.meta.origin_col + 100;
    if (inside && !g.flow.is_missing(50)) ++expect;
  }
  CHECK(static_cast<int>(sample.targets.size()) == expect);
  CHECK(expect >= 1);
}

TEST_CASE("eval windows are gauge-centered and clipped") {
  const Dataset ds = make_dataset(1, 1, 120, 130);
  const NormStats norm = compute_norm_stats(ds, names_of(ds));
  SamplerConfig cfg;
  cfg.h = cfg.w = 100;
  cfg.mode.T = 20;
  const SamplerContext ctx = SamplerContext::build(ds, names_of(ds), cfg, norm);
  const auto& gauge = *ctx.locations()[0].gauges[0].gauge;
  const Sample sample = ctx.make_eval_sample(0, 0, ctx.locations()[0].gauges[0].supervised_days[0]);
  CHECK(sample.meta.origin_row == std::clamp(gauge.row - 50, 0, 120 - 100));
  CHECK(sample.meta.origin_col == std::clamp(gauge.col - 50, 0, 130 - 100));
  CHECK_FALSE(sample.meta.flip_h);
  CHECK_FALSE(sample.meta.flip_v);
}

TEST_CASE("supervised days honor history and lag-window eligibility") {
  Dataset ds = make_dataset(1, 1, 120, 130, 80);
  auto& flow = ds.locations[0].gauges[0].flow;
  flow.missing.assign(flow.missing.size(), 0);
  flow.missing[30] = 1;  // one unmeasured day

  const NormStats norm = compute_norm_stats(ds, names_of(ds));
  SamplerConfig cfg;
  cfg.h = cfg.w = 100;
  cfg.mode.T = 20;
  {
    const SamplerContext ctx = SamplerContext::build(ds, names_of(ds), cfg, norm);
    const auto& days = ctx.locations()[0].gauges[0].supervised_days;
    CHECK(days.front() == 20);
    CHECK(std::find(days.begin(), days.end(), 30) == days.end());
    CHECK(std::find(days.begin(), days.end(), 31) != days.end());  // weather history unaffected
  }
  {
    SamplerConfig lag_cfg = cfg;
    lag_cfg.mode.variant = Variant::flow_lag;
    lag_cfg.mode.lag_k = 1;
    const SamplerContext ctx = SamplerContext::build(ds, names_of(ds), lag_cfg, norm);
    const auto& days = ctx.locations()[0].gauges[0].supervised_days;
    CHECK(days.front() == 20);
    for (int t = 30; t <= 50; ++t)  // day 30 is inside every lag window [t-20, t-1]
      CHECK(std::find(days.begin(), days.end(), t) == days.end());
    CHECK(std::find(days.begin(), days.end(), 51) != days.end());
  }
}

TEST_CASE("a location whose only gauge has no measurements is rejected") {
  Dataset ds = make_dataset(1);
  auto& flow = ds.locations[0].gauges[0].flow;
  flow.missing.assign(flow.missing.size(), 1);
  const NormStats norm = compute_norm_stats(ds, names_of(ds));
  SamplerConfig cfg;
  cfg.h = cfg.w = 100;
  CHECK_THROWS_WITH_AS(SamplerContext::build(ds, names_of(ds), cfg, norm),
                       doctest::Contains("no supervised day"), std::runtime_error);
}

TEST_CASE("fc variants carry the temporal side vector instead of tiled channels") {
  const Dataset ds = make_dataset(1);
  const NormStats norm = compute_norm_stats(ds, names_of(ds));
  SamplerConfig cfg;
  cfg.h = cfg.w = 100;
  cfg.mode.T = 20;
  cfg.mode.variant = Variant::fc_early;
  const SamplerContext ctx = SamplerContext::build(ds, names_of(ds), cfg, norm);
  const Sample sample = ctx.make_eval_sample(0, 0, 40);
  CHECK(sample.input.dim(0) == 10);
  REQUIRE(sample.temporal.size() == 40);
  for (int j = 0; j < 20; ++j) {
    CHECK(sample.temporal[static_cast<size_t>(j)] ==
          doctest::Approx(sample.rain_hist[static_cast<size_t>(j)]));
    CHECK(sample.temporal[static_cast<size_t>(20 + j)] ==
          doctest::Approx(sample.temp_hist[static_cast<size_t>(j)]));
  }
}
