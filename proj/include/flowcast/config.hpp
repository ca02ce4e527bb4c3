#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "flowcast/adam.hpp"
#include "flowcast/fcn.hpp"
#include "flowcast/loss.hpp"
#include "flowcast/sampler.hpp"

namespace flowcast {

struct TrainConfig {
  int batch_size = 64;
  double lr = 2e-4;
  long total_batches = 250000;
  LossSpec loss;
  bool loss_on_raw_scale = false;  // delta-sweep hygiene flag
  long eval_every = 1000;
  int val_days_cap = 96;    // periodic-probe day budget per gauge; final eval uses all days
  int train_days_cap = 96;
  AdamConfig adam;
  std::string norm_scope = "all";  // "all" (train+val) or "train"

  void validate() const;
};

/// Fully resolved run settings: profile defaults, then config-file values,
/// then explicit overrides (CLI precedence highest).
struct RunConfig {
  std::string profile = "desk";
  std::uint64_t seed = 1;
  SamplerConfig sampler;
  int base_width = 8;
  TrainConfig train;

  ModelConfig model_config() const;
  void validate() const;
};

/// `paper` encodes the full-scale recipe (batch 64, lr 2e-4, 250k batches,
/// T=20, 100x100 windows, Huber delta=1, flip 0.5, width 64). `desk` is the
/// CPU-scale profile used by the test and ablation harnesses.
RunConfig make_profile(const std::string& name);

nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

/// Applies one `key=value` override; unknown keys or malformed values throw.
void apply_override(RunConfig& cfg, const std::string& key, const nlohmann::json& value);
void apply_override_kv(RunConfig& cfg, const std::string& key_eq_value);

/// Named ablation presets (no-elev, only-elev, no-soil, half-time-hist,
/// no-temp, no-rain, flow-t-1..3, alt-rain-temp, fc-early, fc-mid, plus the
/// loss sweep huber-0.8/1.0/1.1, mse, l1). `main` is the identity.
void apply_variant_preset(RunConfig& cfg, const std::string& name);
std::vector<std::string> known_variant_presets();

/// Deterministic 64-bit FNV-1a hash, used for run/checkpoint ids.
std::uint64_t fnv1a64(const void* data, size_t n);
std::string run_id(const RunConfig& cfg);

}  // namespace flowcast
