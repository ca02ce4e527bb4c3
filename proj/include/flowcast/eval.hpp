#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "flowcast/baselines.hpp"
#include "flowcast/checkpoint.hpp"
#include "flowcast/config.hpp"
#include "flowcast/sampler.hpp"

namespace flowcast {

/// sqrt(mean((p-g)^2)); lengths must match and be non-zero.
double rmse(std::span<const double> preds, std::span<const double> gts);

struct SiteResult {
  std::string location, site;
  int n_days = 0;
  double site_rmse = 0.0;
};

/// RMSE report in m^3/s. The aggregate pools every (site, day) pair: it is
/// the RMSE of the concatenated prediction list, not a mean of site RMSEs.
struct EvalReport {
  std::string method;
  std::string checkpoint_id;
  std::vector<SiteResult> sites;
  long n_days_total = 0;
  double aggregate = 0.0;
  nlohmann::json config_echo;

  nlohmann::json to_json() const;
};

void write_report_json(const EvalReport& report, const std::filesystem::path& file);

/// CSV rows (variant, site, n_days, rmse, aggregate), one block per report.
void write_reports_csv(std::span<const EvalReport> reports, const std::filesystem::path& file);

/// Gauge-centered deterministic protocol: for every gauge and supervised day
/// (optionally capped, evenly strided), predict the gauge pixel, denormalize,
/// pool. `model` must match the context's assembly mode.
EvalReport evaluate_model(const SamplerContext& ctx, Fcn8<float>& model, int days_cap = -1);

/// Loads the checkpoint, rebuilds its sampler configuration from the config
/// echo and runs the protocol on the named locations.
EvalReport evaluate_checkpoint_on(const Dataset& dataset, const std::vector<std::string>& names,
                                  const std::filesystem::path& ckpt_file, int days_cap = -1);

EvalReport baseline_to_report(const BaselineReport& report);

/// Pools an arbitrary per-(gauge, day) predictor through the same reporting
/// machinery as the dense model. Days where the predictor declines are
/// excluded. Independent of the baselines module's own accumulation: wrapping
/// a baseline here must reproduce its report bit-exactly.
EvalReport evaluate_site_predictor(
    const Dataset& dataset, const std::vector<std::string>& names, int min_day,
    const std::function<std::optional<double>(const Gauge&, int)>& predictor);

/// Dense prediction export: the denormalized flow map as a raster layer file
/// plus a color-mapped image (per-image max normalization).
void predict_dense(const Dataset& dataset, const std::filesystem::path& ckpt_file,
                   const std::string& location, int origin_row, int origin_col, int day,
                   const std::filesystem::path& out_prefix);

struct VariantSpec {
  std::string name;  // preset name, or "main"
  std::vector<std::pair<std::string, nlohmann::json>> overrides;
};

std::vector<VariantSpec> load_suite(const std::filesystem::path& file);

struct AblationRow {
  std::string variant;
  std::uint64_t seed = 0;
  EvalReport report;
};

/// Re-trains each variant under identical seeds (input ablations change the
/// model shape, so checkpoints cannot be shared) and evaluates its best
/// checkpoint on the split's validation locations.
std::vector<AblationRow> run_ablation_suite(const Dataset& dataset, const Split& split,
                                            const RunConfig& base,
                                            std::span<const VariantSpec> suite,
                                            std::span<const std::uint64_t> seeds,
                                            const std::filesystem::path& out_dir);

void write_ablation_csv(std::span<const AblationRow> rows, const std::filesystem::path& file);

}  // namespace flowcast
