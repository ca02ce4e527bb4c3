#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "flowcast/eval.hpp"
#include "flowcast/synth.hpp"
#include "flowcast/train.hpp"

namespace fs = std::filesystem;
using namespace flowcast;

namespace {

RunConfig resolve_config(const std::string& profile, const std::string& config_file,
                         const std::vector<std::string>& overrides) {
  RunConfig cfg = make_profile(profile);
  if (!config_file.empty()) {
    std::ifstream in(config_file);
    if (!in) throw std::runtime_error("cannot open config file " + config_file);
    nlohmann::json j;
    in >> j;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key() == "profile") continue;
      apply_override(cfg, it.key(), it.value());
    }
  }
  for (const auto& kv : overrides) apply_override_kv(cfg, kv);
  cfg.validate();
  return cfg;
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  size_t pos = 0;
  while (pos < csv.size()) {
    const size_t comma = csv.find(',', pos);
    const std::string tok = csv.substr(pos, comma == std::string::npos ? std::string::npos
                                                                       : comma - pos);
    if (!tok.empty()) seeds.push_back(std::stoull(tok));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (seeds.empty()) throw std::runtime_error("no seeds given");
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowcast: dense water-flow-intensity prediction pipeline"};
  app.require_subcommand(1);

  // --- synth ---
  auto* synth = app.add_subcommand("synth", "Generate a synthetic catchment dataset");
  SynthParams sp;
  int n_locations = 4;
  std::string synth_out;
  bool force = false;
  synth->add_option("--out", synth_out, "Output dataset directory")->required();
  synth->add_option("--seed", sp.seed, "Generator seed");
  synth->add_option("--locations", n_locations, "Number of locations");
  synth->add_option("--days", sp.n_days, "Days per series");
  synth->add_option("--gauges", sp.n_gauges, "Gauges per location");
  synth->add_option("--height", sp.height, "Grid height (pixels)");
  synth->add_option("--width", sp.width, "Grid width (pixels)");
  synth->add_option("--T", sp.T, "History length the dataset must support");
  synth->add_option("--rain-missing", sp.rain_missing_prob, "Missing probability for rain days");
  synth->add_option("--temp-missing", sp.temp_missing_prob, "Missing probability for temperature days");
  synth->add_option("--flow-missing", sp.flow_missing_prob, "Missing probability for flow days");
  synth->add_flag("--force", force, "Overwrite an existing dataset directory");

  // --- train ---
  auto* train = app.add_subcommand("train", "Train a model");
  std::string data_dir, split_file, run_dir, profile = "desk", config_file;
  std::vector<std::string> overrides;
  train->add_option("--data", data_dir, "Dataset directory")->required();
  train->add_option("--split", split_file, "Split JSON (train/val location lists)")->required();
  train->add_option("--out", run_dir, "Run directory")->required();
  train->add_option("--profile", profile, "Profile: desk or paper");
  train->add_option("--config", config_file, "Config JSON overriding the profile");
  train->add_option("--set", overrides, "key=value override (highest precedence)");
  bool dry_run = false;
  train->add_flag("--dry-run", dry_run, "Resolve + write config.json, skip training");

  // --- eval ---
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint or baseline");
  std::string ckpt_file, baseline, eval_out = "report", eval_split;
  eval->add_option("--data", data_dir, "Dataset directory")->required();
  eval->add_option("--split", eval_split, "Split JSON; evaluates its val locations")->required();
  eval->add_option("--checkpoint", ckpt_file, "Checkpoint file");
  eval->add_option("--baseline", baseline, "mean-per-site or previous-flow");
  eval->add_option("--out", eval_out, "Report path prefix");
  int eval_min_day = 20;
  eval->add_option("--min-day", eval_min_day, "Earliest evaluable day for baselines");

  // --- ablate ---
  auto* ablate = app.add_subcommand("ablate", "Train + evaluate a suite of variants");
  std::string suite_file, seeds_csv = "1";
  ablate->add_option("--data", data_dir, "Dataset directory")->required();
  ablate->add_option("--split", split_file, "Split JSON")->required();
  ablate->add_option("--suite", suite_file, "Suite JSON listing variants")->required();
  ablate->add_option("--out", run_dir, "Output directory")->required();
  ablate->add_option("--profile", profile, "Profile: desk or paper");
  ablate->add_option("--config", config_file, "Config JSON overriding the profile");
  ablate->add_option("--set", overrides, "key=value override");
  ablate->add_option("--seeds", seeds_csv, "Comma-separated seeds (one run per variant per seed)");

  // --- predict ---
  auto* predict = app.add_subcommand("predict", "Export a dense flow map");
  std::string location, out_prefix = "flow_pred";
  int origin_row = 0, origin_col = 0, day = 0;
  predict->add_option("--data", data_dir, "Dataset directory")->required();
  predict->add_option("--checkpoint", ckpt_file, "Checkpoint file")->required();
  predict->add_option("--location", location, "Location name")->required();
  predict->add_option("--row", origin_row, "Window origin row")->required();
  predict->add_option("--col", origin_col, "Window origin column")->required();
  predict->add_option("--day", day, "Day index t (prediction day)")->required();
  predict->add_option("--out", out_prefix, "Output path prefix (.f32/.json/.ppm)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      generate_dataset(sp, n_locations, synth_out, force);
      std::cout << "wrote " << n_locations << " locations to " << synth_out << "\n";
    } else if (*train) {
      const RunConfig cfg = resolve_config(profile, config_file, overrides);
      if (dry_run) {
        fs::create_directories(run_dir);
        std::ofstream out(fs::path(run_dir) / "config.json");
        out << run_config_to_json(cfg).dump(2) << "\n";
        std::cout << "dry run: resolved config written to " << run_dir << "/config.json\n";
        return 0;
      }
      const Dataset dataset = load_dataset(data_dir);
      const Split split = load_split(split_file);
      const TrainResult result = train_model(dataset, split, cfg, run_dir);
      std::cout << "run complete: best val RMSE "
                << (result.best_step >= 0 ? std::to_string(result.best_val_rmse) : "n/a")
                << ", final train RMSE " << result.final_train_rmse << "\n";
    } else if (*eval) {
      const Dataset dataset = load_dataset(data_dir);
      const Split split = load_split(eval_split);
      EvalReport report;
      if (!baseline.empty()) {
        report = baseline_to_report(
            evaluate_baseline(dataset, split.val, baseline_from_name(baseline), eval_min_day));
      } else if (!ckpt_file.empty()) {
        report = evaluate_checkpoint_on(dataset, split.val, ckpt_file);
      } else {
        throw std::runtime_error("eval needs --checkpoint or --baseline");
      }
      write_report_json(report, eval_out + ".json");
      const EvalReport reports[] = {report};
      write_reports_csv(reports, eval_out + ".csv");
      std::cout << report.method << " aggregate RMSE " << report.aggregate << " over "
                << report.n_days_total << " site-days\n";
    } else if (*ablate) {
      const Dataset dataset = load_dataset(data_dir);
      const Split split = load_split(split_file);
      const RunConfig base = resolve_config(profile, config_file, overrides);
      const auto suite = load_suite(suite_file);
      const auto seeds = parse_seeds(seeds_csv);
      const auto rows = run_ablation_suite(dataset, split, base, suite, seeds, run_dir);
      std::cout << "wrote " << rows.size() << " rows to " << (fs::path(run_dir) / "ablation.csv")
                << "\n";
    } else if (*predict) {
      const Dataset dataset = load_dataset(data_dir);
      predict_dense(dataset, ckpt_file, location, origin_row, origin_col, day, out_prefix);
      std::cout << "wrote " << out_prefix << ".f32 / .json / .ppm\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
