#include "flowcast/sampler.hpp"

#include <algorithm>
#include <stdexcept>

namespace flowcast {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::main: return "main";
    case Variant::alt_rain_temp: return "alt_rain_temp";
    case Variant::fc_early: return "fc_early";
    case Variant::fc_mid: return "fc_mid";
    case Variant::flow_lag: return "flow_lag";
  }
  return "?";
}

Variant variant_from_name(const std::string& name) {
  if (name == "main") return Variant::main;
  if (name == "alt_rain_temp") return Variant::alt_rain_temp;
  if (name == "fc_early") return Variant::fc_early;
  if (name == "fc_mid") return Variant::fc_mid;
  if (name == "flow_lag") return Variant::flow_lag;
  throw std::runtime_error("unknown variant: " + name);
}

int AssemblyMode::spatial_channels() const {
  int n = 0;
  for (bool b : include_layers) n += b ? 1 : 0;
  return n;
}

int AssemblyMode::input_channels() const {
  const int cp = spatial_channels();
  switch (variant) {
    case Variant::main: return cp + T * ((include_rain ? 1 : 0) + (include_temp ? 1 : 0));
    case Variant::alt_rain_temp: return cp + T;
    case Variant::fc_early:
    case Variant::fc_mid: return cp;
    case Variant::flow_lag:
      return cp + T * ((include_rain ? 1 : 0) + (include_temp ? 1 : 0) + 1);
  }
  return cp;
}

void AssemblyMode::validate() const {
  if (T <= 0) throw std::runtime_error("assembly mode: T must be positive");
  if (spatial_channels() == 0) throw std::runtime_error("assembly mode: no spatial layers included");
  if (variant == Variant::flow_lag && (lag_k < 1 || lag_k > 3))
    throw std::runtime_error("assembly mode: flow lag k must be in {1,2,3}");
  if (variant == Variant::alt_rain_temp && !(include_rain && include_temp))
    throw std::runtime_error("assembly mode: alt_rain_temp interleaves rain and temperature, both required");
}

OriginRange enumerate_window_origins(int gauge_row, int gauge_col, int h, int w, int rows,
                                     int cols) {
  if (gauge_row < 0 || gauge_col < 0 || gauge_row >= rows || gauge_col >= cols)
    throw std::runtime_error("enumerate_window_origins: gauge outside grid");
  if (h > rows || w > cols)
    throw std::runtime_error("enumerate_window_origins: window larger than grid");
  OriginRange r;
  r.row_lo = std::max(0, gauge_row - h + 1);
  r.row_hi = std::min(gauge_row, rows - h);
  r.col_lo = std::max(0, gauge_col - w + 1);
  r.col_hi = std::min(gauge_col, cols - w);
  return r;
}

namespace {

void fill_constant_channel(Tensor<float>& input, long channel, float value) {
  float* plane = input.ptr() + channel * input.dim(1) * input.dim(2);
  std::fill_n(plane, input.dim(1) * input.dim(2), value);
}

void fill_checkerboard_channel(Tensor<float>& input, long channel, float even_value,
                               float odd_value) {
  const long H = input.dim(1), W = input.dim(2);
  float* plane = input.ptr() + channel * H * W;
  for (long r = 0; r < H; ++r)
    for (long c = 0; c < W; ++c) plane[r * W + c] = ((r + c) % 2 == 0) ? even_value : odd_value;
}

}  // namespace

Tensor<float> assemble_input(const RasterStack& window, std::span<const double> rain_hist,
                             std::span<const double> temp_hist, std::span<const double> flow_hist,
                             const AssemblyMode& mode) {
  mode.validate();
  if (window.channel_count() != mode.spatial_channels())
    throw std::runtime_error("assemble_input: window has " +
                             std::to_string(window.channel_count()) + " layers, mode expects " +
                             std::to_string(mode.spatial_channels()));
  const auto T = static_cast<size_t>(mode.T);
  const bool wants_rain = mode.variant == Variant::alt_rain_temp || mode.include_rain;
  const bool wants_temp = mode.variant == Variant::alt_rain_temp || mode.include_temp;
  if (wants_rain && rain_hist.size() != T)
    throw std::runtime_error("assemble_input: rain history length mismatch");
  if (wants_temp && temp_hist.size() != T)
    throw std::runtime_error("assemble_input: temperature history length mismatch");
  if (mode.variant == Variant::flow_lag && flow_hist.size() != T)
    throw std::runtime_error("assemble_input: flow history of length T required in flow_lag mode");

  const long H = window.height_px, W = window.width_px;
  Tensor<float> input = Tensor<float>::zeros({mode.input_channels(), H, W});
  long ch = 0;
  for (const auto& layer : window.layers) {
    std::copy(layer.data.begin(), layer.data.end(), input.ptr() + ch * H * W);
    ++ch;
  }
  switch (mode.variant) {
    case Variant::fc_early:
    case Variant::fc_mid:
      break;  // temporal values travel in the side vector
    case Variant::alt_rain_temp:
      for (size_t j = 0; j < T; ++j, ++ch)
        fill_checkerboard_channel(input, ch, static_cast<float>(rain_hist[j]),
                                  static_cast<float>(temp_hist[j]));
      break;
    case Variant::main:
    case Variant::flow_lag:
      if (mode.include_rain)
        for (size_t j = 0; j < T; ++j, ++ch)
          fill_constant_channel(input, ch, static_cast<float>(rain_hist[j]));
      if (mode.include_temp)
        for (size_t j = 0; j < T; ++j, ++ch)
          fill_constant_channel(input, ch, static_cast<float>(temp_hist[j]));
      if (mode.variant == Variant::flow_lag)
        for (size_t j = 0; j < T; ++j, ++ch)
          fill_constant_channel(input, ch, static_cast<float>(flow_hist[j]));
      break;
  }
  return input;
}

void apply_flips(Sample& sample, bool flip_h, bool flip_v) {
  if (!flip_h && !flip_v) return;
  const long K = sample.input.dim(0), H = sample.input.dim(1), W = sample.input.dim(2);
  Tensor<float> flipped = Tensor<float>::zeros({K, H, W});
  for (long c = 0; c < K; ++c)
    for (long r = 0; r < H; ++r) {
      const long src_r = flip_v ? H - 1 - r : r;
      for (long col = 0; col < W; ++col) {
        const long src_c = flip_h ? W - 1 - col : col;
        flipped.at(c, r, col) = sample.input.at(c, src_r, src_c);
      }
    }
  sample.input = std::move(flipped);

  // Interleaved channels are rebuilt so the parity convention survives the flip.
  if (sample.mode.variant == Variant::alt_rain_temp) {
    const long cp = sample.mode.spatial_channels();
    for (int j = 0; j < sample.mode.T; ++j)
      fill_checkerboard_channel(sample.input, cp + j,
                                static_cast<float>(sample.rain_hist[static_cast<size_t>(j)]),
                                static_cast<float>(sample.temp_hist[static_cast<size_t>(j)]));
  }
  for (auto& t : sample.targets) {
    if (flip_h) t.col = static_cast<int>(W) - 1 - t.col;
    if (flip_v) t.row = static_cast<int>(H) - 1 - t.row;
  }
  sample.meta.flip_h = sample.meta.flip_h != flip_h;
  sample.meta.flip_v = sample.meta.flip_v != flip_v;
}

SamplerContext SamplerContext::build(const Dataset& dataset, const std::vector<std::string>& names,
                                     const SamplerConfig& cfg, const NormStats& norm) {
  cfg.mode.validate();
  if (names.empty()) throw std::runtime_error("sampler: empty location list");
  SamplerContext ctx;
  ctx.cfg_ = cfg;
  ctx.norm_ = norm;
  for (const auto& name : names) {
    const Location* loc = dataset.find(name);
    if (!loc) throw std::runtime_error("sampler: unknown location " + name);
    if (loc->rasters.height_px < cfg.h || loc->rasters.width_px < cfg.w)
      throw std::runtime_error("sampler: location " + name + " smaller than the sampling window");

    LocationCtx lc;
    lc.loc = loc;
    RasterStack normalized = normalize_stack(loc->rasters, norm.maxima);
    RasterStack masked;
    masked.height_px = normalized.height_px;
    masked.width_px = normalized.width_px;
    masked.cell_size_m = normalized.cell_size_m;
    for (auto& layer : normalized.layers)
      if (cfg.mode.include_layers[static_cast<size_t>(layer.kind)])
        masked.layers.push_back(std::move(layer));
    lc.stack = std::move(masked);

    const TimeSeries rain = normalize_series(interpolate_gaps(loc->rain), norm.rain_max);
    const TimeSeries temp = normalize_series(
        shift_series(interpolate_gaps(loc->temp), -norm.temp_shift), norm.temp_scale);
    lc.rain_norm = rain.values;
    lc.temp_norm = temp.values;

    for (const auto& gauge : loc->gauges) {
      GaugeCtx gc;
      gc.gauge = &gauge;
      gc.flow_missing = gauge.flow.missing;
      gc.flow_norm.resize(gauge.flow.values.size());
      for (size_t i = 0; i < gauge.flow.values.size(); ++i)
        gc.flow_norm[i] = gauge.flow.values[i] / norm.flow_max;
      const int lo = cfg.mode.min_day();
      for (int t = lo; t < loc->n_days; ++t) {
        if (gauge.flow.is_missing(t)) continue;
        if (cfg.mode.variant == Variant::flow_lag) {
          bool ok = true;
          for (int j = t - cfg.mode.T - cfg.mode.lag_k + 1; j <= t - cfg.mode.lag_k; ++j)
            if (gauge.flow.is_missing(j)) {
              ok = false;
              break;
            }
          if (!ok) continue;
        }
        gc.supervised_days.push_back(t);
      }
      lc.gauges.push_back(std::move(gc));
    }
    for (size_t gi = 0; gi < lc.gauges.size(); ++gi)
      if (!lc.gauges[gi].supervised_days.empty()) lc.anchor_gauges.push_back(static_cast<int>(gi));
    if (lc.anchor_gauges.empty())
      throw std::runtime_error("sampler: no supervised day available at location " + name);
    ctx.locations_.push_back(std::move(lc));
  }
  return ctx;
}

Sample SamplerContext::assemble_at(const LocationCtx& lc, int gauge_idx, int origin_row,
                                   int origin_col, int day) const {
  const AssemblyMode& mode = cfg_.mode;
  const GaugeCtx& anchor = lc.gauges[static_cast<size_t>(gauge_idx)];

  Sample sample;
  sample.mode = mode;
  sample.height = cfg_.h;
  sample.width = cfg_.w;
  sample.meta.location = lc.loc->name;
  sample.meta.origin_row = origin_row;
  sample.meta.origin_col = origin_col;
  sample.meta.day = day;
  sample.meta.anchor_site = anchor.gauge->site_id;

  auto slice = [&](const std::vector<double>& v, int end_offset) {
    std::vector<double> out(static_cast<size_t>(mode.T));
    for (int j = 0; j < mode.T; ++j)
      out[static_cast<size_t>(j)] = v[static_cast<size_t>(day - mode.T + j - end_offset)];
    return out;
  };
  sample.rain_hist = slice(lc.rain_norm, 0);
  sample.temp_hist = slice(lc.temp_norm, 0);
  // lag window: T values ending at day - lag_k inclusive
  if (mode.variant == Variant::flow_lag)
    sample.flow_hist = slice(anchor.flow_norm, mode.lag_k - 1);

  const RasterStack window = crop_window(lc.stack, origin_row, origin_col, cfg_.h, cfg_.w);
  sample.input = assemble_input(window, sample.rain_hist, sample.temp_hist, sample.flow_hist, mode);

  if (mode.variant == Variant::fc_early || mode.variant == Variant::fc_mid) {
    sample.temporal.reserve(static_cast<size_t>(2 * mode.T));
    for (double v : sample.rain_hist) sample.temporal.push_back(static_cast<float>(v));
    for (double v : sample.temp_hist) sample.temporal.push_back(static_cast<float>(v));
  }

  for (const auto& gc : lc.gauges) {
    const int r = gc.gauge->row, c = gc.gauge->col;
    if (r < origin_row || r >= origin_row + cfg_.h || c < origin_col || c >= origin_col + cfg_.w)
      continue;
    if (gc.flow_missing[static_cast<size_t>(day)]) continue;
    TargetPixel target;
    target.row = r - origin_row;
    target.col = c - origin_col;
    target.flow_gt = gc.gauge->flow.values[static_cast<size_t>(day)];
    target.norm_max = norm_.flow_max;
    target.site_id = gc.gauge->site_id;
    sample.targets.push_back(std::move(target));
  }
  if (sample.targets.empty())
    throw std::runtime_error("sampler: window contains no measured gauge");
  return sample;
}

Sample SamplerContext::draw_training_sample(std::mt19937_64& rng) const {
  const auto& lc = locations_[std::uniform_int_distribution<size_t>(0, locations_.size() - 1)(rng)];
  const int gauge_idx =
      lc.anchor_gauges[std::uniform_int_distribution<size_t>(0, lc.anchor_gauges.size() - 1)(rng)];
  const GaugeCtx& anchor = lc.gauges[static_cast<size_t>(gauge_idx)];
  const OriginRange range =
      enumerate_window_origins(anchor.gauge->row, anchor.gauge->col, cfg_.h, cfg_.w,
                               lc.stack.height_px, lc.stack.width_px);
  const int origin_row = std::uniform_int_distribution<int>(range.row_lo, range.row_hi)(rng);
  const int origin_col = std::uniform_int_distribution<int>(range.col_lo, range.col_hi)(rng);
  const int day = anchor.supervised_days[std::uniform_int_distribution<size_t>(
      0, anchor.supervised_days.size() - 1)(rng)];

  Sample sample = assemble_at(lc, gauge_idx, origin_row, origin_col, day);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool flip_h = unit(rng) < cfg_.flip_prob;
  const bool flip_v = unit(rng) < cfg_.flip_prob;
  apply_flips(sample, flip_h, flip_v);
  return sample;
}

Sample SamplerContext::make_eval_sample(int loc_idx, int gauge_idx, int day) const {
  const auto& lc = locations_[static_cast<size_t>(loc_idx)];
  const GaugeCtx& gc = lc.gauges[static_cast<size_t>(gauge_idx)];
  const int origin_row = std::clamp(gc.gauge->row - cfg_.h / 2, 0, lc.stack.height_px - cfg_.h);
  const int origin_col = std::clamp(gc.gauge->col - cfg_.w / 2, 0, lc.stack.width_px - cfg_.w);
  return assemble_at(lc, gauge_idx, origin_row, origin_col, day);
}

}  // namespace flowcast
