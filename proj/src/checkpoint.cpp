#include "flowcast/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "flowcast/config.hpp"

namespace flowcast {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
constexpr char kMagic[8] = {'F', 'L', 'O', 'W', 'C', 'K', 'P', '1'};

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}
}  // namespace

json model_config_to_json(const ModelConfig& cfg) {
  return json{{"in_channels", cfg.in_channels},
              {"arch", arch_name(cfg.arch)},
              {"temporal_len", cfg.temporal_len},
              {"base_width", cfg.base_width},
              {"init_seed", cfg.init_seed}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig cfg;
  cfg.in_channels = j.at("in_channels").get<int>();
  cfg.arch = arch_from_name(j.at("arch").get<std::string>());
  cfg.temporal_len = j.at("temporal_len").get<int>();
  cfg.base_width = j.at("base_width").get<int>();
  cfg.init_seed = j.at("init_seed").get<std::uint64_t>();
  return cfg;
}

json norm_stats_to_json(const NormStats& stats) {
  json layers;
  for (int i = 0; i < kNumLayers; ++i)
    layers[layer_name(static_cast<LayerKind>(i))] = stats.maxima.max_value[i];
  return json{{"layer_maxima", layers},
              {"rain_max", stats.rain_max},
              {"temp_shift", stats.temp_shift},
              {"temp_scale", stats.temp_scale},
              {"flow_max", stats.flow_max}};
}

NormStats norm_stats_from_json(const json& j) {
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

void save_checkpoint(Fcn8<float>& model, const json& config_echo, const fs::path& file) {
  json tensor_dir = json::array();
  std::vector<float> blob;
  model.for_each_param([&](const std::string& name, Tensor<float>& value, Tensor<float>&) {
    tensor_dir.push_back(json{{"name", name},
                              {"shape", value.shape},
                              {"offset", blob.size() * sizeof(float)},
                              {"numel", value.numel()}});
    blob.insert(blob.end(), value.data.begin(), value.data.end());
  });

  json header = {{"format_version", 1},
                 {"config", config_echo},
                 {"model", model_config_to_json(model.config())},
                 {"data_hash", hex64(fnv1a64(blob.data(), blob.size() * sizeof(float)))},
                 {"tensors", tensor_dir}};
  const std::string header_str = header.dump();

  fs::create_directories(file.parent_path().empty() ? "." : file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + file.string());
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t header_len = header_str.size();
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  out.write(reinterpret_cast<const char*>(blob.data()),
            static_cast<std::streamsize>(blob.size() * sizeof(float)));
  if (!out) throw std::runtime_error("failed writing checkpoint " + file.string());
}

Checkpoint load_checkpoint(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + file.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a checkpoint file: " + file.string());
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (static_cast<std::uint64_t>(in.gcount()) != header_len)
    throw std::runtime_error("truncated checkpoint header: " + file.string());

  Checkpoint ckpt;
  ckpt.header = json::parse(header_str);
  if (ckpt.header.at("format_version").get<int>() != 1)
    throw std::runtime_error("unsupported checkpoint version");

  std::vector<float> blob;
  {
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (raw.size() % sizeof(float) != 0)
      throw std::runtime_error("corrupt checkpoint data section");
    blob.resize(raw.size() / sizeof(float));
    std::memcpy(blob.data(), raw.data(), raw.size());
  }
  const std::string expect_hash = ckpt.header.at("data_hash").get<std::string>();
  if (hex64(fnv1a64(blob.data(), blob.size() * sizeof(float))) != expect_hash)
    throw std::runtime_error("checkpoint data hash mismatch: " + file.string());

  for (const auto& entry : ckpt.header.at("tensors")) {
    Tensor<float> t;
    t.shape = entry.at("shape").get<std::vector<long>>();
    const auto numel = entry.at("numel").get<size_t>();
    const auto offset = entry.at("offset").get<size_t>() / sizeof(float);
    if (offset + numel > blob.size()) throw std::runtime_error("tensor extends past data section");
    t.data.assign(blob.begin() + static_cast<long>(offset),
                  blob.begin() + static_cast<long>(offset + numel));
    ckpt.tensors.emplace(entry.at("name").get<std::string>(), std::move(t));
  }
  ckpt.id = expect_hash;
  return ckpt;
}

Fcn8<float> model_from_checkpoint(const Checkpoint& ckpt) {
  Fcn8<float> model(model_config_from_json(ckpt.header.at("model")));
  size_t filled = 0;
  model.for_each_param([&](const std::string& name, Tensor<float>& value, Tensor<float>&) {
    const auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end())
      throw std::runtime_error("checkpoint missing tensor " + name);
    if (it->second.shape != value.shape)
      throw std::runtime_error("checkpoint shape mismatch for " + name);
    value.data = it->second.data;
    ++filled;
  });
  if (filled != ckpt.tensors.size())
    throw std::runtime_error("checkpoint holds unexpected extra tensors");
  return model;
}

}  // namespace flowcast
