#include "flowcast/eval.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "flowcast/colormap.hpp"
#include "flowcast/train.hpp"

namespace flowcast {

namespace fs = std::filesystem;
using nlohmann::json;

double rmse(std::span<const double> preds, std::span<const double> gts) {
  if (preds.size() != gts.size()) throw std::runtime_error("rmse: length mismatch");
  if (preds.empty()) throw std::runtime_error("rmse: empty input");
  double sq = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) {
    const double e = preds[i] - gts[i];
    sq += e * e;
  }
  return std::sqrt(sq / static_cast<double>(preds.size()));
}

json EvalReport::to_json() const {
  json sites_json = json::array();
  for (const auto& s : sites)
    sites_json.push_back(json{{"location", s.location},
                              {"site", s.site},
                              {"n_days", s.n_days},
                              {"rmse", s.site_rmse}});
  return json{{"method", method},
              {"checkpoint_id", checkpoint_id},
              {"aggregate_rmse", aggregate},
              {"n_days_total", n_days_total},
              {"sites", sites_json},
              {"config", config_echo}};
}

void write_report_json(const EvalReport& report, const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << report.to_json().dump(2) << "\n";
}

void write_reports_csv(std::span<const EvalReport> reports, const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "variant,site,n_days,rmse,aggregate\n";
  char buf[64];
  for (const auto& report : reports)
    for (const auto& s : report.sites) {
      std::snprintf(buf, sizeof(buf), "%.6f", s.site_rmse);
      out << report.method << "," << s.site << "," << s.n_days << "," << buf << ",";
      std::snprintf(buf, sizeof(buf), "%.6f", report.aggregate);
      out << buf << "\n";
    }
}

namespace {

/// Evenly strided day subset; identity when cap is negative or >= n.
std::vector<int> capped_days(const std::vector<int>& days, int cap) {
  if (cap < 0 || static_cast<int>(days.size()) <= cap) return days;
  std::vector<int> out;
  out.reserve(static_cast<size_t>(cap));
  const double stride = static_cast<double>(days.size()) / cap;
  for (int i = 0; i < cap; ++i)
    out.push_back(days[static_cast<size_t>(i * stride)]);
  return out;
}

}  // namespace

EvalReport evaluate_model(const SamplerContext& ctx, Fcn8<float>& model, int days_cap) {
  EvalReport report;
  report.method = "model";
  double pooled_sq = 0.0;
  const double flow_max = ctx.norm().flow_max;
  for (size_t li = 0; li < ctx.locations().size(); ++li) {
    const auto& lc = ctx.locations()[li];
    for (size_t gi = 0; gi < lc.gauges.size(); ++gi) {
      const auto& gc = lc.gauges[gi];
      SiteResult site;
      site.location = lc.loc->name;
      site.site = gc.gauge->site_id;
      double site_sq = 0.0;
      for (const int day : capped_days(gc.supervised_days, days_cap)) {
        const Sample sample =
            ctx.make_eval_sample(static_cast<int>(li), static_cast<int>(gi), day);
        std::vector<float> temporal(sample.temporal.begin(), sample.temporal.end());
        const Tensor<float> out =
            model.forward(sample.input, temporal.empty() ? nullptr : &temporal);
        const int r = gc.gauge->row - sample.meta.origin_row;
        const int c = gc.gauge->col - sample.meta.origin_col;
        const double pred = static_cast<double>(out.at(r, c)) * flow_max;
        const double gt = gc.gauge->flow.values[static_cast<size_t>(day)];
        const double e = pred - gt;
        site_sq += e * e;
        ++site.n_days;
      }
      if (site.n_days > 0) site.site_rmse = std::sqrt(site_sq / site.n_days);
      pooled_sq += site_sq;
      report.n_days_total += site.n_days;
      report.sites.push_back(std::move(site));
    }
  }
  if (report.n_days_total == 0) throw std::runtime_error("evaluate_model: no supervised days");
  report.aggregate = std::sqrt(pooled_sq / static_cast<double>(report.n_days_total));
  return report;
}

EvalReport evaluate_checkpoint_on(const Dataset& dataset, const std::vector<std::string>& names,
                                  const fs::path& ckpt_file, int days_cap) {
  const Checkpoint ckpt = load_checkpoint(ckpt_file);
  Fcn8<float> model = model_from_checkpoint(ckpt);
  const RunConfig cfg = run_config_from_json(ckpt.header.at("config"));
  const NormStats norm = norm_stats_from_json(ckpt.header.at("config").at("norm"));
  SamplerConfig sampler_cfg = cfg.sampler;
  sampler_cfg.flip_prob = 0.0;
  const SamplerContext ctx = SamplerContext::build(dataset, names, sampler_cfg, norm);
  EvalReport report = evaluate_model(ctx, model, days_cap);
  report.checkpoint_id = ckpt.id;
  report.config_echo = ckpt.header.at("config");
  return report;
}

EvalReport evaluate_site_predictor(
    const Dataset& dataset, const std::vector<std::string>& names, int min_day,
    const std::function<std::optional<double>(const Gauge&, int)>& predictor) {
  EvalReport report;
  report.method = "site-predictor";
  double pooled_sq = 0.0;
  for (const auto& name : names) {
    const Location* loc = dataset.find(name);
    if (!loc) throw std::runtime_error("unknown location: " + name);
    for (const auto& gauge : loc->gauges) {
      SiteResult site;
      site.location = name;
      site.site = gauge.site_id;
      double site_sq = 0.0;
      for (int t = min_day; t < gauge.flow.size(); ++t) {
        if (gauge.flow.is_missing(t)) continue;
        const auto pred = predictor(gauge, t);
        if (!pred) continue;
        const double e = *pred - gauge.flow.values[static_cast<size_t>(t)];
        site_sq += e * e;
        ++site.n_days;
      }
      if (site.n_days > 0) site.site_rmse = std::sqrt(site_sq / site.n_days);
      pooled_sq += site_sq;
      report.n_days_total += site.n_days;
      report.sites.push_back(std::move(site));
    }
  }
  if (report.n_days_total == 0) throw std::runtime_error("site predictor: no evaluable day");
  report.aggregate = std::sqrt(pooled_sq / static_cast<double>(report.n_days_total));
  return report;
}

EvalReport baseline_to_report(const BaselineReport& baseline) {
  EvalReport report;
  report.method = baseline_name(baseline.kind);
  for (const auto& s : baseline.sites)
    report.sites.push_back(SiteResult{s.location, s.site, s.n_days, s.site_rmse});
  report.n_days_total = baseline.n_days_total;
  report.aggregate = baseline.aggregate;
  report.config_echo = json{{"fit_range", baseline.fit_range}};
  return report;
}

void predict_dense(const Dataset& dataset, const fs::path& ckpt_file, const std::string& location,
                   int origin_row, int origin_col, int day, const fs::path& out_prefix) {
  const Checkpoint ckpt = load_checkpoint(ckpt_file);
  Fcn8<float> model = model_from_checkpoint(ckpt);
  const RunConfig cfg = run_config_from_json(ckpt.header.at("config"));
  const NormStats norm = norm_stats_from_json(ckpt.header.at("config").at("norm"));

  const Location* loc = dataset.find(location);
  if (!loc) throw std::runtime_error("unknown location: " + location);
  if (day < cfg.sampler.mode.min_day() || day >= loc->n_days)
    throw std::runtime_error("day " + std::to_string(day) + " lacks the required " +
                             std::to_string(cfg.sampler.mode.T) + "-day history");

  SamplerConfig sampler_cfg = cfg.sampler;
  sampler_cfg.flip_prob = 0.0;
  const SamplerContext ctx = SamplerContext::build(dataset, {location}, sampler_cfg, norm);
  const auto& lc = ctx.locations().front();

  const RasterStack window =
      crop_window(lc.stack, origin_row, origin_col, sampler_cfg.h, sampler_cfg.w);
  std::vector<double> rain_hist(static_cast<size_t>(sampler_cfg.mode.T));
  std::vector<double> temp_hist(static_cast<size_t>(sampler_cfg.mode.T));
  std::vector<double> flow_hist;
  for (int j = 0; j < sampler_cfg.mode.T; ++j) {
    rain_hist[static_cast<size_t>(j)] = lc.rain_norm[static_cast<size_t>(day - sampler_cfg.mode.T + j)];
    temp_hist[static_cast<size_t>(j)] = lc.temp_norm[static_cast<size_t>(day - sampler_cfg.mode.T + j)];
  }
  if (sampler_cfg.mode.variant == Variant::flow_lag) {
    const auto& gc = lc.gauges.front();
    flow_hist.resize(static_cast<size_t>(sampler_cfg.mode.T));
    for (int j = 0; j < sampler_cfg.mode.T; ++j) {
      const int t = day - sampler_cfg.mode.T + j - sampler_cfg.mode.lag_k + 1;
      if (gc.flow_missing[static_cast<size_t>(t)])
        throw std::runtime_error("flow history missing at day " + std::to_string(t));
      flow_hist[static_cast<size_t>(j)] = gc.flow_norm[static_cast<size_t>(t)];
    }
  }
  const Tensor<float> input =
      assemble_input(window, rain_hist, temp_hist, flow_hist, sampler_cfg.mode);
  std::vector<float> temporal;
  if (sampler_cfg.mode.variant == Variant::fc_early || sampler_cfg.mode.variant == Variant::fc_mid) {
    for (double v : rain_hist) temporal.push_back(static_cast<float>(v));
    for (double v : temp_hist) temporal.push_back(static_cast<float>(v));
  }
  Tensor<float> out = model.forward(input, temporal.empty() ? nullptr : &temporal);
  for (auto& v : out.data) v = static_cast<float>(v * norm.flow_max);

  RasterLayer layer;
  layer.kind = LayerKind::satellite_r;  // kind is not persisted for prediction layers
  layer.height = static_cast<int>(out.dim(0));
  layer.width = static_cast<int>(out.dim(1));
  layer.data = out.data;
  const fs::path dir = out_prefix.parent_path().empty() ? "." : out_prefix.parent_path();
  fs::create_directories(dir);
  save_layer_file(layer, dir, out_prefix.filename().string(), lc.stack.cell_size_m);
  write_colormapped_ppm(out, out_prefix.string() + ".ppm");
}

std::vector<VariantSpec> load_suite(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open suite " + file.string());
  json j;
  in >> j;
  std::vector<VariantSpec> suite;
  for (const auto& entry : j.at("variants")) {
    VariantSpec spec;
    if (entry.is_string()) {
      spec.name = entry.get<std::string>();
    } else {
      spec.name = entry.at("name").get<std::string>();
      if (entry.contains("overrides"))
        for (auto it = entry.at("overrides").begin(); it != entry.at("overrides").end(); ++it)
          spec.overrides.emplace_back(it.key(), it.value());
    }
    suite.push_back(std::move(spec));
  }
  if (suite.empty()) throw std::runtime_error("suite lists no variants");
  return suite;
}

std::vector<AblationRow> run_ablation_suite(const Dataset& dataset, const Split& split,
                                            const RunConfig& base,
                                            std::span<const VariantSpec> suite,
                                            std::span<const std::uint64_t> seeds,
                                            const fs::path& out_dir) {
  if (suite.empty()) throw std::runtime_error("ablation suite is empty");
  if (seeds.empty()) throw std::runtime_error("ablation suite needs at least one seed");
  if (split.val.empty()) throw std::runtime_error("ablation suite needs validation locations");
  std::vector<AblationRow> rows;
  for (const auto& spec : suite) {
    for (const auto seed : seeds) {
      RunConfig cfg = base;
      apply_variant_preset(cfg, spec.name);
      for (const auto& [key, value] : spec.overrides) apply_override(cfg, key, value);
      cfg.seed = seed;
      cfg.validate();
      const fs::path run_dir = out_dir / (spec.name + "-s" + std::to_string(seed));
      std::cout << "[ablate] " << spec.name << " seed " << seed << " -> " << run_dir << "\n";
      train_model(dataset, split, cfg, run_dir);
      AblationRow row;
      row.variant = spec.name;
      row.seed = seed;
      row.report = evaluate_checkpoint_on(dataset, split.val, run_dir / "checkpoints" / "best.ckpt");
      row.report.method = spec.name;
      rows.push_back(std::move(row));
    }
  }
  write_ablation_csv(rows, out_dir / "ablation.csv");
  return rows;
}

void write_ablation_csv(std::span<const AblationRow> rows, const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "variant,seed,site,n_days,rmse,aggregate\n";
  char buf[64];
  for (const auto& row : rows)
    for (const auto& s : row.report.sites) {
      std::snprintf(buf, sizeof(buf), "%.6f", s.site_rmse);
      out << row.variant << "," << row.seed << "," << s.site << "," << s.n_days << "," << buf << ",";
      std::snprintf(buf, sizeof(buf), "%.6f", row.report.aggregate);
      out << buf << "\n";
    }
}

}  // namespace flowcast
