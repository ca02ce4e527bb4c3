#include "flowcast/raster.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace flowcast {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::array<const char*, kNumLayers> kLayerNames = {
    "satellite_r",   "satellite_g", "satellite_b", "elevation",  "slope",
    "soil_moisture", "land_cover",  "soil_type",   "soil_depth", "hydraulic_conductivity",
};

json read_json_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  json j;
  in >> j;
  return j;
}

void write_json_file(const json& j, const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << j.dump(2) << "\n";
}

}  // namespace

const char* layer_name(LayerKind kind) { return kLayerNames[static_cast<int>(kind)]; }

std::optional<LayerKind> layer_from_name(const std::string& name) {
  for (int i = 0; i < kNumLayers; ++i)
    if (name == kLayerNames[i]) return static_cast<LayerKind>(i);
  return std::nullopt;
}

const RasterLayer* RasterStack::find(LayerKind kind) const {
  for (const auto& layer : layers)
    if (layer.kind == kind) return &layer;
  return nullptr;
}

RasterStack load_raster_stack(const fs::path& dir) {
  const json stack_meta = read_json_file(dir / "stack.json");
  const auto order = stack_meta.at("layers").get<std::vector<std::string>>();
  if (order.size() != kNumLayers)
    throw std::runtime_error("stack.json must list exactly 10 layers, got " +
                             std::to_string(order.size()));
  for (int i = 0; i < kNumLayers; ++i)
    if (order[i] != kLayerNames[i])
      throw std::runtime_error("stack.json layer order mismatch at index " + std::to_string(i) +
                               ": expected " + kLayerNames[i] + ", got " + order[i]);

  RasterStack stack;
  for (int i = 0; i < kNumLayers; ++i) {
    const std::string name = order[i];
    const fs::path data_file = dir / (name + ".f32");
    const fs::path meta_file = dir / (name + ".json");
    if (!fs::exists(data_file) || !fs::exists(meta_file))
      throw std::runtime_error("missing layer: " + name);

    const json meta = read_json_file(meta_file);
    RasterLayer layer;
    layer.kind = static_cast<LayerKind>(i);
    layer.height = meta.at("height").get<int>();
    layer.width = meta.at("width").get<int>();
    layer.native_resolution_m = meta.value("native_resolution_m", 10.0f);
    const float cell = meta.at("cell_size_m").get<float>();
    if (meta.at("layer").get<std::string>() != name)
      throw std::runtime_error("sidecar layer name mismatch for " + name);
    if (layer.height <= 0 || layer.width <= 0)
      throw std::runtime_error("non-positive dimensions for layer " + name);

    if (stack.layers.empty()) {
      stack.height_px = layer.height;
      stack.width_px = layer.width;
      stack.cell_size_m = cell;
    } else if (layer.height != stack.height_px || layer.width != stack.width_px) {
      throw std::runtime_error("dimension mismatch: layer " + name + " is " +
                               std::to_string(layer.height) + "x" + std::to_string(layer.width) +
                               ", expected " + std::to_string(stack.height_px) + "x" +
                               std::to_string(stack.width_px));
    }

    const size_t expected_bytes = static_cast<size_t>(layer.height) * layer.width * sizeof(float);
    std::ifstream in(data_file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + data_file.string());
    layer.data.resize(static_cast<size_t>(layer.height) * layer.width);
    in.read(reinterpret_cast<char*>(layer.data.data()), static_cast<std::streamsize>(expected_bytes));
    if (static_cast<size_t>(in.gcount()) != expected_bytes)
      throw std::runtime_error("short read for layer " + name);
    in.get();
    if (!in.eof())
      throw std::runtime_error("layer file larger than height*width for " + name);

    for (float v : layer.data)
      if (!std::isfinite(v))
        throw std::runtime_error("non-finite value in layer " + name);

    stack.layers.push_back(std::move(layer));
  }
  return stack;
}

void save_layer_file(const RasterLayer& layer, const fs::path& dir, const std::string& basename,
                     float cell_size_m) {
  fs::create_directories(dir);
  const fs::path data_file = dir / (basename + ".f32");
  std::ofstream out(data_file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + data_file.string());
  out.write(reinterpret_cast<const char*>(layer.data.data()),
            static_cast<std::streamsize>(layer.data.size() * sizeof(float)));
  json meta = {
      {"height", layer.height},
      {"width", layer.width},
      {"cell_size_m", cell_size_m},
      {"layer", basename},
      {"native_resolution_m", layer.native_resolution_m},
  };
  write_json_file(meta, dir / (basename + ".json"));
}

void save_raster_stack(const RasterStack& stack, const fs::path& dir) {
  if (stack.channel_count() != kNumLayers)
    throw std::runtime_error("save_raster_stack expects the 10 canonical layers");
  fs::create_directories(dir);
  std::vector<std::string> order;
  for (const auto& layer : stack.layers) order.emplace_back(layer_name(layer.kind));
  write_json_file(json{{"layers", order},
                       {"height", stack.height_px},
                       {"width", stack.width_px},
                       {"cell_size_m", stack.cell_size_m}},
                  dir / "stack.json");
  for (const auto& layer : stack.layers)
    save_layer_file(layer, dir, layer_name(layer.kind), stack.cell_size_m);
}

LayerMaxima compute_layer_maxima(std::span<const RasterStack> stacks) {
  if (stacks.empty()) throw std::runtime_error("compute_layer_maxima: empty stack list");
  LayerMaxima maxima;
  std::array<bool, kNumLayers> seen{};
  for (const auto& stack : stacks) {
    if (stack.channel_count() != kNumLayers)
      throw std::runtime_error("compute_layer_maxima: stack does not have 10 layers");
    for (const auto& layer : stack.layers) {
      const int idx = static_cast<int>(layer.kind);
      for (float v : layer.data) {
        if (!seen[idx] || v > maxima.max_value[idx]) {
          maxima.max_value[idx] = v;
          seen[idx] = true;
        }
      }
    }
  }
  for (int i = 0; i < kNumLayers; ++i)
    if (maxima.max_value[i] == 0.0f) maxima.max_value[i] = 1.0f;
  return maxima;
}

void save_maxima(const LayerMaxima& maxima, const fs::path& file) {
  json j;
  for (int i = 0; i < kNumLayers; ++i) j[kLayerNames[i]] = maxima.max_value[i];
  write_json_file(j, file);
}

LayerMaxima load_maxima(const fs::path& file) {
  const json j = read_json_file(file);
  LayerMaxima maxima;
  for (int i = 0; i < kNumLayers; ++i) maxima.max_value[i] = j.at(kLayerNames[i]).get<float>();
  return maxima;
}

RasterStack normalize_stack(const RasterStack& stack, const LayerMaxima& maxima) {
  RasterStack out = stack;
  for (auto& layer : out.layers) {
    const float divisor = maxima.at(layer.kind);
    if (!(divisor > 0.0f))
      throw std::runtime_error(std::string("non-positive maximum for layer ") +
                               layer_name(layer.kind));
    for (float& v : layer.data) v /= divisor;
  }
  return out;
}

RasterStack crop_window(const RasterStack& stack, int row, int col, int h, int w) {
  if (h <= 0 || w <= 0 || row < 0 || col < 0 || row + h > stack.height_px ||
      col + w > stack.width_px)
    throw std::runtime_error("crop_window out of bounds: origin (" + std::to_string(row) + "," +
                             std::to_string(col) + ") size " + std::to_string(h) + "x" +
                             std::to_string(w) + " on " + std::to_string(stack.height_px) + "x" +
                             std::to_string(stack.width_px));
  RasterStack out;
  out.height_px = h;
  out.width_px = w;
  out.cell_size_m = stack.cell_size_m;
  out.layers.reserve(stack.layers.size());
  for (const auto& layer : stack.layers) {
    RasterLayer cropped;
    cropped.kind = layer.kind;
    cropped.height = h;
    cropped.width = w;
    cropped.native_resolution_m = layer.native_resolution_m;
    cropped.data.resize(static_cast<size_t>(h) * w);
    for (int r = 0; r < h; ++r)
      std::memcpy(cropped.data.data() + static_cast<size_t>(r) * w,
                  layer.data.data() + static_cast<size_t>(row + r) * stack.width_px + col,
                  static_cast<size_t>(w) * sizeof(float));
    out.layers.push_back(std::move(cropped));
  }
  return out;
}

}  // namespace flowcast
