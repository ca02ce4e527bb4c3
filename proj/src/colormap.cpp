#include "flowcast/colormap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace flowcast {

namespace {
// viridis anchors (equally spaced in u)
constexpr double kAnchors[][3] = {
    {0.267004, 0.004874, 0.329415}, {0.282623, 0.140926, 0.457517},
    {0.253935, 0.265254, 0.529983}, {0.206756, 0.371758, 0.553117},
    {0.163625, 0.471133, 0.558148}, {0.127568, 0.566949, 0.550556},
    {0.134692, 0.658636, 0.517649}, {0.266941, 0.748751, 0.440573},
    {0.477504, 0.821444, 0.318195}, {0.741388, 0.873449, 0.149561},
    {0.993248, 0.906157, 0.143936},
};
constexpr int kNumAnchors = static_cast<int>(sizeof(kAnchors) / sizeof(kAnchors[0]));
}  // namespace

std::array<unsigned char, 3> colormap_rgb(double u) {
  u = std::clamp(u, 0.0, 1.0);
  const double pos = u * (kNumAnchors - 1);
  const int i = std::min(static_cast<int>(pos), kNumAnchors - 2);
  const double t = pos - i;
  std::array<unsigned char, 3> rgb{};
  for (int c = 0; c < 3; ++c) {
    const double v = kAnchors[i][c] + t * (kAnchors[i + 1][c] - kAnchors[i][c]);
    rgb[static_cast<size_t>(c)] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  return rgb;
}

void write_colormapped_ppm(const Tensor<float>& map, const std::filesystem::path& file) {
  if (map.rank() != 2 || map.numel() == 0)
    throw std::runtime_error("write_colormapped_ppm: expected a non-empty HxW map");
  const auto [min_it, max_it] = std::minmax_element(map.data.begin(), map.data.end());
  const double lo = *min_it, hi = *max_it;
  const double range = hi > lo ? hi - lo : 1.0;

  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "P6\n" << map.dim(1) << " " << map.dim(0) << "\n255\n";
  for (const float v : map.data) {
    const auto rgb = colormap_rgb((static_cast<double>(v) - lo) / range);
    out.write(reinterpret_cast<const char*>(rgb.data()), 3);
  }
}

}  // namespace flowcast
