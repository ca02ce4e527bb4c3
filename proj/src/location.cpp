#include "flowcast/location.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace flowcast {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

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

Location load_location(const fs::path& dir) {
  const json manifest = read_json_file(dir / "location.json");
  Location loc;
  loc.name = manifest.at("name").get<std::string>();
  loc.rasters = load_raster_stack(dir / manifest.at("rasters").get<std::string>());
  loc.rain = parse_series(dir / manifest.at("rain").get<std::string>(), SeriesKind::rain_mm);
  loc.temp = parse_series(dir / manifest.at("temp").get<std::string>(), SeriesKind::temp_celsius);

  std::int64_t start = std::min(loc.rain.start_day, loc.temp.start_day);
  std::int64_t end = std::max(loc.rain.start_day + loc.rain.size(),
                              loc.temp.start_day + loc.temp.size());
  std::vector<Gauge> gauges;
  for (const auto& g : manifest.at("gauges")) {
    Gauge gauge;
    gauge.site_id = g.at("site_id").get<std::string>();
    gauge.row = g.at("row").get<int>();
    gauge.col = g.at("col").get<int>();
    if (gauge.row < 0 || gauge.col < 0 || gauge.row >= loc.rasters.height_px ||
        gauge.col >= loc.rasters.width_px)
      throw std::runtime_error("gauge " + gauge.site_id + " outside raster bounds");
    gauge.flow = parse_series(dir / g.at("flow").get<std::string>(), SeriesKind::flow_m3s);
    start = std::min(start, gauge.flow.start_day);
    end = std::max(end, gauge.flow.start_day + gauge.flow.size());
    gauges.push_back(std::move(gauge));
  }
  if (gauges.empty()) throw std::runtime_error("location " + loc.name + " has no gauges");

  loc.start_day = start;
  loc.n_days = static_cast<int>(end - start);
  loc.rain = reindex_series(loc.rain, start, loc.n_days);
  loc.temp = reindex_series(loc.temp, start, loc.n_days);
  for (auto& g : gauges) g.flow = reindex_series(g.flow, start, loc.n_days);
  loc.gauges = std::move(gauges);
  return loc;
}

void save_location(const Location& loc, const fs::path& dir) {
  fs::create_directories(dir);
  save_raster_stack(loc.rasters, dir / "rasters");
  save_series_csv(loc.rain, dir / "rain.csv");
  save_series_csv(loc.temp, dir / "temp.csv");
  json gauges = json::array();
  for (const auto& g : loc.gauges) {
    const std::string flow_file = "flow_" + g.site_id + ".csv";
    save_series_csv(g.flow, dir / flow_file);
    gauges.push_back({{"site_id", g.site_id}, {"row", g.row}, {"col", g.col}, {"flow", flow_file}});
  }
  write_json_file(json{{"name", loc.name},
                       {"rasters", "rasters"},
                       {"rain", "rain.csv"},
                       {"temp", "temp.csv"},
                       {"gauges", gauges}},
                  dir / "location.json");
}

const Location* Dataset::find(const std::string& name) const {
  for (const auto& loc : locations)
    if (loc.name == name) return &loc;
  return nullptr;
}

int Dataset::index_of(const std::string& name) const {
  for (size_t i = 0; i < locations.size(); ++i)
    if (locations[i].name == name) return static_cast<int>(i);
  return -1;
}

Dataset load_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw std::runtime_error("dataset root not found: " + root.string());
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory() && fs::exists(entry.path() / "location.json"))
      dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw std::runtime_error("no locations under " + root.string());
  Dataset ds;
  ds.root = root;
  for (const auto& dir : dirs) ds.locations.push_back(load_location(dir));
  return ds;
}

Split load_split(const fs::path& file) {
  const json j = read_json_file(file);
  Split split;
  split.train = j.at("train").get<std::vector<std::string>>();
  split.val = j.at("val").get<std::vector<std::string>>();
  if (split.train.empty()) throw std::runtime_error("split has no training locations");
  return split;
}

void save_split(const Split& split, const fs::path& file) {
  write_json_file(json{{"train", split.train}, {"val", split.val}}, file);
}

NormStats compute_norm_stats(const Dataset& dataset, const std::vector<std::string>& scope) {
  if (scope.empty()) throw std::runtime_error("compute_norm_stats: empty scope");
  std::vector<RasterStack> stacks;
  bool any_rain = false, any_temp = false, any_flow = false;
  double rain_max = 0.0, temp_min = 0.0, temp_max = 0.0, flow_max = 0.0;
  for (const auto& name : scope) {
    const Location* loc = dataset.find(name);
    if (!loc) throw std::runtime_error("unknown location in scope: " + name);
    stacks.push_back(loc->rasters);
    for (int i = 0; i < loc->rain.size(); ++i)
      if (!loc->rain.is_missing(i)) {
        rain_max = any_rain ? std::max(rain_max, loc->rain.values[static_cast<size_t>(i)])
                            : loc->rain.values[static_cast<size_t>(i)];
        any_rain = true;
      }
    for (int i = 0; i < loc->temp.size(); ++i)
      if (!loc->temp.is_missing(i)) {
        const double v = loc->temp.values[static_cast<size_t>(i)];
        if (!any_temp) {
          temp_min = temp_max = v;
          any_temp = true;
        } else {
          temp_min = std::min(temp_min, v);
          temp_max = std::max(temp_max, v);
        }
      }
    for (const auto& g : loc->gauges)
      for (int i = 0; i < g.flow.size(); ++i)
        if (!g.flow.is_missing(i)) {
          flow_max = any_flow ? std::max(flow_max, g.flow.values[static_cast<size_t>(i)])
                              : g.flow.values[static_cast<size_t>(i)];
          any_flow = true;
        }
  }
  NormStats stats;
  stats.maxima = compute_layer_maxima(stacks);
  stats.rain_max = rain_max > 0.0 ? rain_max : 1.0;
  stats.temp_shift = temp_min;
  stats.temp_scale = (temp_max - temp_min) > 0.0 ? temp_max - temp_min : 1.0;
  stats.flow_max = flow_max > 0.0 ? flow_max : 1.0;
  return stats;
}

void save_norm_stats(const NormStats& stats, const fs::path& file) {
  json j;
  for (int i = 0; i < kNumLayers; ++i)
    j["layer_maxima"][layer_name(static_cast<LayerKind>(i))] = stats.maxima.max_value[i];
  j["rain_max"] = stats.rain_max;
  j["temp_shift"] = stats.temp_shift;
  j["temp_scale"] = stats.temp_scale;
  j["flow_max"] = stats.flow_max;
  write_json_file(j, file);
}

NormStats load_norm_stats(const fs::path& file) {
  const json j = read_json_file(file);
  NormStats stats;
  for (int i = 0; i < kNumLayers; ++i)
    stats.maxima.max_value[i] =
        j.at("layer_maxima").at(layer_name(static_cast<LayerKind>(i))).get<float>();
  stats.rain_max = j.at("rain_max").get<double>();
  stats.temp_shift = j.at("temp_shift").get<double>();
  stats.temp_scale = j.at("temp_scale").get<double>();
  stats.flow_max = j.at("flow_max").get<double>();
  return stats;
}

}  // namespace flowcast
