#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "json.hpp"

#include "flowcast/fcn.hpp"
#include "flowcast/location.hpp"
#include "flowcast/tensor.hpp"

namespace flowcast {

/// On-disk model container: magic "FLOWCKP1", a length-prefixed JSON header
/// (format version, config echo, tensor directory) and the raw row-major
/// little-endian float32 tensor data. See README for the exact layout.
struct Checkpoint {
  nlohmann::json header;  // config echo + tensor directory
  std::map<std::string, Tensor<float>> tensors;
  std::string id;  // FNV-1a hash of the data section, hex
};

void save_checkpoint(Fcn8<float>& model, const nlohmann::json& config_echo,
                     const std::filesystem::path& file);

Checkpoint load_checkpoint(const std::filesystem::path& file);

/// Rebuilds the model recorded in the checkpoint and fills its parameters.
/// Missing, extra or reshaped tensors are rejected.
Fcn8<float> model_from_checkpoint(const Checkpoint& ckpt);

ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json model_config_to_json(const ModelConfig& cfg);

nlohmann::json norm_stats_to_json(const NormStats& stats);
NormStats norm_stats_from_json(const nlohmann::json& j);

}  // namespace flowcast
