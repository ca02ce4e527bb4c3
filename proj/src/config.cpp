#include "flowcast/config.hpp"

#include <stdexcept>

namespace flowcast {

using nlohmann::json;

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::runtime_error("config: batch_size must be positive");
  if (!(lr >= 0.0)) throw std::runtime_error("config: lr must be non-negative");
  if (total_batches < 1) throw std::runtime_error("config: total_batches must be positive");
  if (eval_every < 1) throw std::runtime_error("config: eval_every must be positive");
  loss.validate();
  adam.validate();
  if (norm_scope != "all" && norm_scope != "train")
    throw std::runtime_error("config: norm_scope must be 'all' or 'train'");
}

ModelConfig RunConfig::model_config() const {
  ModelConfig mc;
  mc.in_channels = sampler.mode.input_channels();
  switch (sampler.mode.variant) {
    case Variant::fc_early: mc.arch = Arch::fc_early; break;
    case Variant::fc_mid: mc.arch = Arch::fc_mid; break;
    default: mc.arch = Arch::fcn8; break;
  }
  mc.temporal_len = mc.arch == Arch::fcn8 ? 0 : sampler.mode.temporal_vector_len();
  mc.base_width = base_width;
  mc.init_seed = seed;
  return mc;
}

void RunConfig::validate() const {
  sampler.mode.validate();
  train.validate();
  if (sampler.h < 32 || sampler.w < 32) throw std::runtime_error("config: window must be >= 32");
  if (!(sampler.flip_prob >= 0.0 && sampler.flip_prob <= 1.0))
    throw std::runtime_error("config: flip_prob must lie in [0,1]");
  if (base_width < 1) throw std::runtime_error("config: base_width must be positive");
  model_config().validate();
}

RunConfig make_profile(const std::string& name) {
  RunConfig cfg;
  cfg.profile = name;
  if (name == "paper") {
    cfg.sampler.h = cfg.sampler.w = 100;
    cfg.sampler.mode.T = 20;
    cfg.sampler.flip_prob = 0.5;
    cfg.base_width = 64;
    cfg.train.batch_size = 64;
    cfg.train.lr = 2e-4;
    cfg.train.total_batches = 250000;
    cfg.train.loss = LossSpec{LossKind::huber, 1.0};
    cfg.train.eval_every = 1000;
  } else if (name == "desk") {
    cfg.sampler.h = cfg.sampler.w = 100;
    cfg.sampler.mode.T = 20;
    cfg.sampler.flip_prob = 0.5;
    cfg.base_width = 8;
    cfg.train.batch_size = 4;
    cfg.train.lr = 1e-3;
    cfg.train.total_batches = 2000;
    cfg.train.loss = LossSpec{LossKind::huber, 1.0};
    cfg.train.eval_every = 250;
  } else {
    throw std::runtime_error("unknown profile: " + name + " (expected 'paper' or 'desk')");
  }
  return cfg;
}

json run_config_to_json(const RunConfig& cfg) {
  json layers = json::array();
  for (int i = 0; i < kNumLayers; ++i)
    if (cfg.sampler.mode.include_layers[static_cast<size_t>(i)])
      layers.push_back(layer_name(static_cast<LayerKind>(i)));
  return json{
      {"profile", cfg.profile},
      {"seed", cfg.seed},
      {"h", cfg.sampler.h},
      {"w", cfg.sampler.w},
      {"T", cfg.sampler.mode.T},
      {"variant", variant_name(cfg.sampler.mode.variant)},
      {"lag_k", cfg.sampler.mode.lag_k},
      {"include_layers", layers},
      {"include_rain", cfg.sampler.mode.include_rain},
      {"include_temp", cfg.sampler.mode.include_temp},
      {"flip_prob", cfg.sampler.flip_prob},
      {"base_width", cfg.base_width},
      {"batch_size", cfg.train.batch_size},
      {"lr", cfg.train.lr},
      {"total_batches", cfg.train.total_batches},
      {"loss", loss_kind_name(cfg.train.loss.kind)},
      {"delta", cfg.train.loss.delta},
      {"loss_on_raw_scale", cfg.train.loss_on_raw_scale},
      {"eval_every", cfg.train.eval_every},
      {"val_days_cap", cfg.train.val_days_cap},
      {"train_days_cap", cfg.train.train_days_cap},
      {"adam_beta1", cfg.train.adam.beta1},
      {"adam_beta2", cfg.train.adam.beta2},
      {"adam_eps", cfg.train.adam.eps},
      {"norm_scope", cfg.train.norm_scope},
  };
}

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg = make_profile(j.value("profile", "desk"));
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "profile") continue;
    apply_override(cfg, it.key(), it.value());
  }
  return cfg;
}

namespace {

int as_int(const json& v, const std::string& key) {
  if (!v.is_number_integer() && !v.is_number_unsigned())
    throw std::runtime_error("config: '" + key + "' expects an integer, got " + v.dump());
  return v.get<int>();
}

double as_double(const json& v, const std::string& key) {
  if (!v.is_number())
    throw std::runtime_error("config: '" + key + "' expects a number, got " + v.dump());
  return v.get<double>();
}

bool as_bool(const json& v, const std::string& key) {
  if (!v.is_boolean())
    throw std::runtime_error("config: '" + key + "' expects a boolean, got " + v.dump());
  return v.get<bool>();
}

}  // namespace

void apply_override(RunConfig& cfg, const std::string& key, const json& value) {
  auto& mode = cfg.sampler.mode;
  if (key == "seed") cfg.seed = static_cast<std::uint64_t>(as_int(value, key));
  else if (key == "h") cfg.sampler.h = as_int(value, key);
  else if (key == "w") cfg.sampler.w = as_int(value, key);
  else if (key == "T") mode.T = as_int(value, key);
  else if (key == "variant") mode.variant = variant_from_name(value.get<std::string>());
  else if (key == "lag_k") mode.lag_k = as_int(value, key);
  else if (key == "include_layers") {
    if (!value.is_array()) throw std::runtime_error("config: include_layers expects a name array");
    mode.include_layers.fill(false);
    for (const auto& name : value) {
      const auto kind = layer_from_name(name.get<std::string>());
      if (!kind) throw std::runtime_error("config: unknown layer '" + name.get<std::string>() + "'");
      mode.include_layers[static_cast<size_t>(*kind)] = true;
    }
  } else if (key == "include_rain") mode.include_rain = as_bool(value, key);
  else if (key == "include_temp") mode.include_temp = as_bool(value, key);
  else if (key == "flip_prob") cfg.sampler.flip_prob = as_double(value, key);
  else if (key == "base_width") cfg.base_width = as_int(value, key);
  else if (key == "batch_size") cfg.train.batch_size = as_int(value, key);
  else if (key == "lr") cfg.train.lr = as_double(value, key);
  else if (key == "total_batches") cfg.train.total_batches = as_int(value, key);
  else if (key == "loss") cfg.train.loss.kind = loss_kind_from_name(value.get<std::string>());
  else if (key == "delta") cfg.train.loss.delta = as_double(value, key);
  else if (key == "loss_on_raw_scale") cfg.train.loss_on_raw_scale = as_bool(value, key);
  else if (key == "eval_every") cfg.train.eval_every = as_int(value, key);
  else if (key == "val_days_cap") cfg.train.val_days_cap = as_int(value, key);
  else if (key == "train_days_cap") cfg.train.train_days_cap = as_int(value, key);
  else if (key == "adam_beta1") cfg.train.adam.beta1 = as_double(value, key);
  else if (key == "adam_beta2") cfg.train.adam.beta2 = as_double(value, key);
  else if (key == "adam_eps") cfg.train.adam.eps = as_double(value, key);
  else if (key == "norm_scope") cfg.train.norm_scope = value.get<std::string>();
  else throw std::runtime_error("config: unknown key '" + key + "'");
}

void apply_override_kv(RunConfig& cfg, const std::string& key_eq_value) {
  const auto eq = key_eq_value.find('=');
  if (eq == std::string::npos)
    throw std::runtime_error("config: override must look like key=value, got '" + key_eq_value + "'");
  const std::string key = key_eq_value.substr(0, eq);
  const std::string raw = key_eq_value.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;  // bare strings (variant names etc.)
  apply_override(cfg, key, value);
}

void apply_variant_preset(RunConfig& cfg, const std::string& name) {
  auto& mode = cfg.sampler.mode;
  auto set_layers = [&](std::initializer_list<LayerKind> excluded, bool keep_only) {
    if (keep_only) {
      mode.include_layers.fill(false);
      for (auto k : excluded) mode.include_layers[static_cast<size_t>(k)] = true;
    } else {
      for (auto k : excluded) mode.include_layers[static_cast<size_t>(k)] = false;
    }
  };
  if (name == "main") return;
  if (name == "no-elev") set_layers({LayerKind::elevation, LayerKind::slope}, false);
  else if (name == "only-elev") set_layers({LayerKind::elevation, LayerKind::slope}, true);
  else if (name == "no-soil")
    set_layers({LayerKind::soil_moisture, LayerKind::land_cover, LayerKind::soil_type,
                LayerKind::soil_depth},
               false);
  else if (name == "half-time-hist") mode.T = 10;
  else if (name == "no-temp") mode.include_temp = false;
  else if (name == "no-rain") mode.include_rain = false;
  else if (name == "flow-t-1" || name == "flow-t-2" || name == "flow-t-3") {
    mode.variant = Variant::flow_lag;
    mode.lag_k = name.back() - '0';
  } else if (name == "alt-rain-temp") mode.variant = Variant::alt_rain_temp;
  else if (name == "fc-early") mode.variant = Variant::fc_early;
  else if (name == "fc-mid") mode.variant = Variant::fc_mid;
  else if (name == "huber-0.8") cfg.train.loss = LossSpec{LossKind::huber, 0.8};
  else if (name == "huber-1.0") cfg.train.loss = LossSpec{LossKind::huber, 1.0};
  else if (name == "huber-1.1") cfg.train.loss = LossSpec{LossKind::huber, 1.1};
  else if (name == "mse") cfg.train.loss.kind = LossKind::mse;
  else if (name == "l1") cfg.train.loss.kind = LossKind::l1;
  else throw std::runtime_error("unknown variant preset: " + name);
}

std::vector<std::string> known_variant_presets() {
  return {"main",     "no-elev",  "only-elev", "no-soil",  "half-time-hist", "no-temp",
          "no-rain",  "flow-t-1", "flow-t-2",  "flow-t-3", "alt-rain-temp",  "fc-early",
          "fc-mid",   "huber-0.8", "huber-1.0", "huber-1.1", "mse",          "l1"};
}

std::uint64_t fnv1a64(const void* data, size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t hash = 1469598103934665603ULL;
  for (size_t i = 0; i < n; ++i) {
    hash ^= bytes[i];
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::string run_id(const RunConfig& cfg) {
  const std::string dump = run_config_to_json(cfg).dump();
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(dump.data(), dump.size())));
  return std::string(buf);
}

}  // namespace flowcast
