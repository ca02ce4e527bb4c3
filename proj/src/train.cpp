#include "flowcast/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>

#include "flowcast/adam.hpp"
#include "flowcast/checkpoint.hpp"
#include "flowcast/eval.hpp"
#include "flowcast/loss.hpp"

namespace flowcast {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return std::string(buf);
}

json step_to_json(const StepRecord& rec) {
  json j = {{"step", rec.step}, {"loss", rec.loss}};
  if (rec.train_rmse) j["train_rmse"] = *rec.train_rmse;
  if (rec.val_rmse) j["val_rmse"] = *rec.val_rmse;
  if (rec.best_val_rmse) j["best_val_rmse"] = *rec.best_val_rmse;
  return j;
}

}  // namespace

TrainResult train_model(const Dataset& dataset, const Split& split, const RunConfig& cfg,
                        const fs::path& run_dir) {
  cfg.validate();
  const auto wall_start = std::chrono::steady_clock::now();

  std::vector<std::string> scope = split.train;
  if (cfg.train.norm_scope == "all")
    scope.insert(scope.end(), split.val.begin(), split.val.end());
  const NormStats norm = compute_norm_stats(dataset, scope);

  SamplerConfig sampler_cfg = cfg.sampler;
  sampler_cfg.seed = cfg.seed;
  const SamplerContext train_ctx = SamplerContext::build(dataset, split.train, sampler_cfg, norm);
  SamplerConfig eval_cfg = sampler_cfg;
  eval_cfg.flip_prob = 0.0;
  std::optional<SamplerContext> val_ctx;
  if (!split.val.empty())
    val_ctx = SamplerContext::build(dataset, split.val, eval_cfg, norm);

  Fcn8<float> model(cfg.model_config());

  fs::create_directories(run_dir / "checkpoints");
  json config_echo = run_config_to_json(cfg);
  config_echo["norm"] = norm_stats_to_json(norm);
  config_echo["model"] = model_config_to_json(model.config());
  config_echo["param_count"] = model.parameter_count();
  config_echo["split"] = {{"train", split.train}, {"val", split.val}};
  {
    std::ofstream out(run_dir / "config.json");
    out << config_echo.dump(2) << "\n";
    std::ofstream prof(run_dir / "profile.json");
    prof << json{{"name", cfg.profile},
                 {"values", run_config_to_json(make_profile(cfg.profile))}}
                .dump(2)
         << "\n";
  }
  save_maxima(norm.maxima, run_dir / "maxima.json");

  std::vector<Tensor<float>*> params;
  std::vector<const Tensor<float>*> grads;
  model.for_each_param([&](const std::string&, Tensor<float>& value, Tensor<float>& grad) {
    params.push_back(&value);
    grads.push_back(&grad);
  });
  AdamState<float> adam_state;
  AdamConfig adam_cfg = cfg.train.adam;
  adam_cfg.lr = cfg.train.lr;

  // Sampling stream decorrelated from the parameter-init stream.
  std::mt19937_64 rng(cfg.seed + 0x9E3779B97F4A7C15ULL);
  const LossSpec loss_spec = cfg.train.loss;
  const double flow_max = norm.flow_max;
  const bool raw_scale = cfg.train.loss_on_raw_scale;

  TrainResult result;
  result.run_dir = run_dir;
  result.param_count = model.parameter_count();
  std::ofstream log_out(run_dir / "log.jsonl");
  if (!log_out) throw std::runtime_error("cannot write " + (run_dir / "log.jsonl").string());

  std::cout << "training " << variant_name(cfg.sampler.mode.variant) << " (K="
            << cfg.sampler.mode.input_channels() << ", width=" << cfg.base_width << ", "
            << result.param_count << " params) for " << cfg.train.total_batches << " batches\n";

  double best_val = std::numeric_limits<double>::infinity();
  const long total = cfg.train.total_batches;
  for (long step = 0; step < total; ++step) {
    model.zero_grad();
    double batch_loss = 0.0;
    const double inv_batch = 1.0 / cfg.train.batch_size;
    for (int i = 0; i < cfg.train.batch_size; ++i) {
      const Sample sample = train_ctx.draw_training_sample(rng);
      std::vector<float> temporal(sample.temporal.begin(), sample.temporal.end());
      Tensor<float> out = model.forward(sample.input, temporal.empty() ? nullptr : &temporal);

      std::vector<PixelTarget> targets;
      targets.reserve(sample.targets.size());
      for (const auto& t : sample.targets)
        targets.push_back(PixelTarget{t.row, t.col,
                                      raw_scale ? t.flow_gt : t.flow_gt / t.norm_max});
      if (raw_scale)
        for (auto& v : out.data) v = static_cast<float>(v * flow_max);
      Tensor<float> d_map;
      const double sample_loss = masked_loss_backward(out, targets, loss_spec, d_map);
      batch_loss += sample_loss * inv_batch;
      const double grad_scale = raw_scale ? inv_batch * flow_max : inv_batch;
      for (auto& v : d_map.data) v = static_cast<float>(v * grad_scale);
      model.backward(d_map);
    }

    if (!std::isfinite(batch_loss)) {
      save_checkpoint(model, config_echo, run_dir / "checkpoints" / "abort.ckpt");
      throw std::runtime_error("non-finite loss at step " + std::to_string(step) +
                               "; diagnostic checkpoint written");
    }

    StepRecord rec;
    rec.step = step;
    rec.loss = batch_loss;
    const bool probe = (step % cfg.train.eval_every == 0) || step == total - 1;
    if (probe) {
      const EvalReport train_report = evaluate_model(train_ctx, model, cfg.train.train_days_cap);
      rec.train_rmse = train_report.aggregate;
      if (val_ctx) {
        const EvalReport val_report = evaluate_model(*val_ctx, model, cfg.train.val_days_cap);
        rec.val_rmse = val_report.aggregate;
        if (val_report.aggregate < best_val) {
          best_val = val_report.aggregate;
          result.best_step = step;
          save_checkpoint(model, config_echo, run_dir / "checkpoints" / "best.ckpt");
        }
        rec.best_val_rmse = best_val;
      }
      std::cout << "step " << step << " loss " << format_double(batch_loss);
      if (rec.train_rmse) std::cout << " train_rmse " << format_double(*rec.train_rmse);
      if (rec.val_rmse) std::cout << " val_rmse " << format_double(*rec.val_rmse);
      std::cout << "\n";
    }
    log_out << step_to_json(rec).dump() << "\n";
    result.log.push_back(rec);

    adam_step(params, grads, adam_state, adam_cfg);
  }

  const EvalReport final_train = evaluate_model(train_ctx, model, -1);
  result.final_train_rmse = final_train.aggregate;
  result.best_val_rmse = best_val;
  save_checkpoint(model, config_echo, run_dir / "checkpoints" / "final.ckpt");
  if (!val_ctx) {
    // no validation split: the final model doubles as "best"
    save_checkpoint(model, config_echo, run_dir / "checkpoints" / "best.ckpt");
  }

  const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - wall_start)
                           .count();
  {
    std::ofstream out(run_dir / "run.json");
    out << json{{"run_id", run_id(cfg)},
                {"wall_clock_ms", wall_ms},
                {"param_count", result.param_count},
                {"best_step", result.best_step},
                {"best_val_rmse", std::isfinite(best_val) ? json(best_val) : json()},
                {"final_train_rmse", result.final_train_rmse}}
               .dump(2)
        << "\n";
  }
  return result;
}

}  // namespace flowcast
