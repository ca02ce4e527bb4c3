#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "flowcast/config.hpp"
#include "flowcast/location.hpp"

namespace flowcast {

struct StepRecord {
  long step = 0;
  double loss = 0.0;
  std::optional<double> train_rmse, val_rmse, best_val_rmse;
};

struct TrainResult {
  std::filesystem::path run_dir;
  std::vector<StepRecord> log;
  long param_count = 0;
  double best_val_rmse = 0.0;
  long best_step = -1;
  double final_train_rmse = 0.0;
};

/// Runs the optimization loop: single sampler stream, masked loss averaged
/// over the batch, Adam updates, periodic train/val RMSE probes,
/// best-validation and final checkpoints.
///
/// Run directory layout: config.json, profile.json, log.jsonl (one JSON
/// object per step, deterministic for a fixed seed), run.json (run id +
/// wall clock), maxima.json, checkpoints/{best,final}.ckpt.
TrainResult train_model(const Dataset& dataset, const Split& split, const RunConfig& cfg,
                        const std::filesystem::path& run_dir);

}  // namespace flowcast
