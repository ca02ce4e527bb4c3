#pragma once

#include <array>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "flowcast/location.hpp"
#include "flowcast/tensor.hpp"

namespace flowcast {

enum class Variant : int { main = 0, alt_rain_temp, fc_early, fc_mid, flow_lag };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

/// Describes how an input tensor is assembled: which spatial layers are
/// included, the history length T, rain/temperature toggles and the variant
/// channel layout. The channel count K is fully determined by these fields.
struct AssemblyMode {
  Variant variant = Variant::main;
  int lag_k = 1;  // flow_lag only, in {1,2,3}
  int T = 20;
  std::array<bool, kNumLayers> include_layers = {true, true, true, true, true,
                                                 true, true, true, true, true};
  bool include_rain = true;
  bool include_temp = true;

  int spatial_channels() const;  // C'
  int input_channels() const;    // K (spatial-only for fc_early/fc_mid)
  int temporal_vector_len() const { return 2 * T; }
  /// Earliest supervisable day index for this mode.
  int min_day() const { return variant == Variant::flow_lag ? T + lag_k - 1 : T; }
  void validate() const;
};

struct TargetPixel {
  int row = 0;  // window-relative
  int col = 0;
  double flow_gt = 0.0;   // m^3/s, raw scale
  double norm_max = 1.0;  // flow normalization divisor
  std::string site_id;
};

struct SampleMeta {
  std::string location;
  int origin_row = 0, origin_col = 0;
  int day = 0;
  bool flip_h = false, flip_v = false;
  std::string anchor_site;
};

/// One training/eval instance. `temporal` carries the fc_early/fc_mid side
/// vector; the normalized histories are retained so interleaved channels can
/// be re-tiled after flips.
struct Sample {
  Tensor<float> input;  // (K, H, W)
  std::vector<float> temporal;
  std::vector<TargetPixel> targets;
  SampleMeta meta;
  std::vector<double> rain_hist, temp_hist, flow_hist;  // normalized, oldest first
  int height = 0, width = 0;
  AssemblyMode mode;
};

/// Inclusive origin ranges of all h x w windows containing the gauge pixel.
struct OriginRange {
  int row_lo = 0, row_hi = -1, col_lo = 0, col_hi = -1;

  long count() const {
    if (row_hi < row_lo || col_hi < col_lo) return 0;
    return static_cast<long>(row_hi - row_lo + 1) * (col_hi - col_lo + 1);
  }
};

OriginRange enumerate_window_origins(int gauge_row, int gauge_col, int h, int w, int rows,
                                     int cols);

/// Builds the (K, H, W) tensor from a normalized, layer-masked window and the
/// normalized histories (each of length T, oldest first).
Tensor<float> assemble_input(const RasterStack& window, std::span<const double> rain_hist,
                             std::span<const double> temp_hist, std::span<const double> flow_hist,
                             const AssemblyMode& mode);

void apply_flips(Sample& sample, bool flip_h, bool flip_v);

struct SamplerConfig {
  int h = 100, w = 100;
  AssemblyMode mode;
  double flip_prob = 0.5;
  std::uint64_t seed = 1;
};

/// Precomputed per-location state: the normalized masked stack, interpolated
/// normalized weather histories, per-gauge normalized flow and the supervised
/// day sets. Immutable once built; safe for concurrent reads.
class SamplerContext {
 public:
  struct GaugeCtx {
    const Gauge* gauge = nullptr;
    std::vector<double> flow_norm;  // normalized; missing entries stay unusable
    std::vector<std::uint8_t> flow_missing;
    std::vector<int> supervised_days;  // mode-eligible days
  };
  struct LocationCtx {
    const Location* loc = nullptr;
    RasterStack stack;  // normalized, layer-masked
    std::vector<double> rain_norm, temp_norm;  // interpolated + normalized
    std::vector<GaugeCtx> gauges;
    std::vector<int> anchor_gauges;  // gauges with >= 1 supervised day
  };

  static SamplerContext build(const Dataset& dataset, const std::vector<std::string>& names,
                              const SamplerConfig& cfg, const NormStats& norm);

  const SamplerConfig& config() const { return cfg_; }
  const NormStats& norm() const { return norm_; }
  const std::vector<LocationCtx>& locations() const { return locations_; }

  /// Hierarchical draw: location, anchor gauge, window origin, supervised
  /// day, then the two independent flips. Targets include every gauge of the
  /// location inside the window whose flow at day t is measured.
  Sample draw_training_sample(std::mt19937_64& rng) const;

  /// Deterministic gauge-centered window (origin clipped to bounds), flips
  /// disabled. Used by evaluation and the periodic RMSE probes.
  Sample make_eval_sample(int loc_idx, int gauge_idx, int day) const;

 private:
  Sample assemble_at(const LocationCtx& lc, int gauge_idx, int origin_row, int origin_col,
                     int day) const;

  SamplerConfig cfg_;
  NormStats norm_;
  std::vector<LocationCtx> locations_;
};

}  // namespace flowcast
