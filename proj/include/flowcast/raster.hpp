#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flowcast {

/// The canonical spatial layers, in the fixed stack order. Three satellite
/// channels plus seven single-channel layers, all resampled onto one shared
/// 10 m grid upstream of this library.
enum class LayerKind : int {
  satellite_r = 0,
  satellite_g,
  satellite_b,
  elevation,
  slope,
  soil_moisture,
  land_cover,
  soil_type,
  soil_depth,
  hydraulic_conductivity,
};

inline constexpr int kNumLayers = 10;

const char* layer_name(LayerKind kind);
std::optional<LayerKind> layer_from_name(const std::string& name);

/// One aligned raster channel. Row-major float32 grid.
struct RasterLayer {
  LayerKind kind = LayerKind::satellite_r;
  int height = 0;
  int width = 0;
  float native_resolution_m = 10.0f;  // metadata only
  std::vector<float> data;            // height * width, row-major

  float at(int r, int c) const { return data[static_cast<size_t>(r) * width + c]; }
  float& at(int r, int c) { return data[static_cast<size_t>(r) * width + c]; }
};

/// An aligned multi-layer stack. A full stack holds the 10 canonical layers
/// in enum order; in-memory stacks produced by layer masking may hold a
/// subset (order preserved).
struct RasterStack {
  std::vector<RasterLayer> layers;
  int height_px = 0;
  int width_px = 0;
  float cell_size_m = 10.0f;

  int channel_count() const { return static_cast<int>(layers.size()); }
  const RasterLayer* find(LayerKind kind) const;
};

/// Per-layer normalization divisors, indexed by LayerKind.
struct LayerMaxima {
  std::array<float, kNumLayers> max_value{};

  float at(LayerKind kind) const { return max_value[static_cast<int>(kind)]; }
};

/// Loads `<layer>.f32` + `<layer>.json` sidecars for the 10 canonical layers,
/// in the order listed by `stack.json`. Rejects missing layers, dimension
/// mismatches and non-finite values.
RasterStack load_raster_stack(const std::filesystem::path& dir);

/// Inverse of load_raster_stack; raw little-endian float32, bit-exact.
void save_raster_stack(const RasterStack& stack, const std::filesystem::path& dir);

void save_layer_file(const RasterLayer& layer, const std::filesystem::path& dir,
                     const std::string& basename, float cell_size_m);

/// Element i is the max over all stacks of layer i. A maximum of exactly 0
/// is replaced by 1 so degenerate all-zero layers normalize to zero.
LayerMaxima compute_layer_maxima(std::span<const RasterStack> stacks);

void save_maxima(const LayerMaxima& maxima, const std::filesystem::path& file);
LayerMaxima load_maxima(const std::filesystem::path& file);

/// Divides each layer elementwise by its maximum.
RasterStack normalize_stack(const RasterStack& stack, const LayerMaxima& maxima);

/// Exact sub-grid copy, no resampling. Throws on out-of-bounds windows.
RasterStack crop_window(const RasterStack& stack, int row, int col, int h, int w);

}  // namespace flowcast
