#pragma once

#include <array>
#include <filesystem>

#include "flowcast/tensor.hpp"

namespace flowcast {

/// Perceptual dark-blue-to-yellow colormap, u in [0,1].
std::array<unsigned char, 3> colormap_rgb(double u);

/// Writes an 8-bit color-mapped PPM (P6). Values are normalized per image:
/// the minimum maps to colormap 0, the maximum to colormap 255.
void write_colormapped_ppm(const Tensor<float>& map, const std::filesystem::path& file);

}  // namespace flowcast
