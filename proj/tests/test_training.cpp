#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "flowcast/checkpoint.hpp"
#include "flowcast/eval.hpp"
#include "flowcast/loss.hpp"
#include "flowcast/synth.hpp"
#include "flowcast/train.hpp"

using namespace flowcast;
namespace fs = std::filesystem;

namespace {

// Tiny end-to-end fixture: one 40x44 location, 32x32 windows, short history.
struct Fixture {
  Dataset ds;
  Split split;
  RunConfig cfg;

  explicit Fixture(std::uint64_t seed = 1, int n_locations = 1) {
    SynthParams params;
    params.height = 40;
    params.width = 44;
    params.n_days = 60;
    params.seed = seed;
    for (int i = 0; i < n_locations; ++i)
      ds.locations.push_back(generate_location(params, seed * 100 + static_cast<std::uint64_t>(i),
                                               "loc-" + std::to_string(i)));
    for (const auto& loc : ds.locations) split.train.push_back(loc.name);
    split.val.push_back(ds.locations.back().name);

    cfg = make_profile("desk");
    cfg.seed = seed;
    cfg.sampler.h = cfg.sampler.w = 32;
    cfg.sampler.mode.T = 4;
    cfg.base_width = 2;
    cfg.train.batch_size = 2;
    cfg.train.total_batches = 10;
    cfg.train.eval_every = 5;
  }
};

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("flowcast_train_" + tag);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("lr = 0 leaves parameters bit-identical through a full run") {
  Fixture fx(3);
  fx.cfg.train.lr = 0.0;
  const fs::path dir = fresh_dir("lr0");
  train_model(fx.ds, fx.split, fx.cfg, dir);
  const Checkpoint final_ckpt = load_checkpoint(dir / "checkpoints" / "final.ckpt");
  Fcn8<float> fresh(fx.cfg.model_config());
  fresh.for_each_param([&](const std::string& name, Tensor<float>& value, Tensor<float>&) {
    CHECK(final_ckpt.tensors.at(name).data == value.data);
  });
  fs::remove_all(dir);
}

TEST_CASE("step-0 loss equals an independent recomputation on a fresh model") {
  Fixture fx(4);
  fx.cfg.train.total_batches = 1;
  const fs::path dir = fresh_dir("step0");
  const TrainResult result = train_model(fx.ds, fx.split, fx.cfg, dir);
  REQUIRE(result.log.size() == 1);

  // replay: fresh model, fresh sampling stream with the trainer's seed offset
  std::vector<std::string> scope = fx.split.train;
  scope.insert(scope.end(), fx.split.val.begin(), fx.split.val.end());
  const NormStats norm = compute_norm_stats(fx.ds, scope);
  SamplerConfig sampler_cfg = fx.cfg.sampler;
  sampler_cfg.seed = fx.cfg.seed;
  const SamplerContext ctx = SamplerContext::build(fx.ds, fx.split.train, sampler_cfg, norm);
  Fcn8<float> model(fx.cfg.model_config());
  std::mt19937_64 rng(fx.cfg.seed + 0x9E3779B97F4A7C15ULL);
  double loss = 0.0;
  for (int i = 0; i < fx.cfg.train.batch_size; ++i) {
    const Sample sample = ctx.draw_training_sample(rng);
    const Tensor<float> out = model.forward(sample.input);
    std::vector<PixelTarget> targets;
    for (const auto& t : sample.targets)
      targets.push_back(PixelTarget{t.row, t.col, t.flow_gt / t.norm_max});
    loss += masked_loss(out, targets, fx.cfg.train.loss) / fx.cfg.train.batch_size;
  }
  CHECK(result.log[0].loss == loss);
  fs::remove_all(dir);
}

TEST_CASE("checkpoint round trip: save -> load -> forward is exact") {
  ModelConfig mc;
  mc.in_channels = 18;
  mc.base_width = 2;
  mc.init_seed = 9;
  Fcn8<float> model(mc);
  const fs::path file = fs::temp_directory_path() / "flowcast_roundtrip.ckpt";
  save_checkpoint(model, nlohmann::json{{"note", "roundtrip"}}, file);
  const Checkpoint ckpt = load_checkpoint(file);
  Fcn8<float> loaded = model_from_checkpoint(ckpt);

  std::mt19937_64 rng(10);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  Tensor<float> x = Tensor<float>::zeros({18, 32, 32});
  for (auto& v : x.data) v = unit(rng);
  CHECK(model.forward(x).data == loaded.forward(x).data);
  CHECK_FALSE(ckpt.id.empty());

  // tampering is detected
  {
    std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-4, std::ios::end);
    const float junk = 42.0f;
    f.write(reinterpret_cast<const char*>(&junk), sizeof(junk));
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(file), doctest::Contains("hash"), std::runtime_error);
  fs::remove(file);
}

TEST_CASE("fixed-seed training reproduces log.jsonl byte-identically") {
  Fixture fx(5);
  fx.cfg.train.total_batches = 12;
  fx.cfg.train.eval_every = 4;
  const fs::path dir_a = fresh_dir("det_a");
  const fs::path dir_b = fresh_dir("det_b");
  train_model(fx.ds, fx.split, fx.cfg, dir_a);
  train_model(fx.ds, fx.split, fx.cfg, dir_b);
  const std::string log_a = slurp(dir_a / "log.jsonl");
  CHECK_FALSE(log_a.empty());
  CHECK(log_a == slurp(dir_b / "log.jsonl"));
  CHECK(slurp(dir_a / "checkpoints" / "final.ckpt") == slurp(dir_b / "checkpoints" / "final.ckpt"));
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("short run drives the training RMSE down on an overfittable set") {
  Fixture fx(6);
  fx.cfg.train.total_batches = 250;
  fx.cfg.train.eval_every = 50;
  fx.cfg.train.lr = 2e-3;
  fx.cfg.train.batch_size = 4;
  const fs::path dir = fresh_dir("descent");
  const TrainResult result = train_model(fx.ds, fx.split, fx.cfg, dir);
  REQUIRE(result.log[0].train_rmse.has_value());
  const double start = *result.log[0].train_rmse;
  CHECK(result.final_train_rmse < 0.5 * start);
  fs::remove_all(dir);
}

TEST_CASE("non-finite loss aborts with a diagnostic checkpoint") {
  Fixture fx(7);
  fx.cfg.train.lr = 1e18;
  fx.cfg.train.loss.kind = LossKind::mse;
  fx.cfg.train.total_batches = 5;
  const fs::path dir = fresh_dir("abort");
  CHECK_THROWS_WITH_AS(train_model(fx.ds, fx.split, fx.cfg, dir),
                       doctest::Contains("non-finite loss"), std::runtime_error);
  CHECK(fs::exists(dir / "checkpoints" / "abort.ckpt"));
  fs::remove_all(dir);
}

TEST_CASE("run directory carries config echo, profile and maxima") {
  Fixture fx(8);
  fx.cfg.train.total_batches = 2;
  const fs::path dir = fresh_dir("layout");
  train_model(fx.ds, fx.split, fx.cfg, dir);
  for (const char* name : {"config.json", "profile.json", "log.jsonl", "run.json", "maxima.json"})
    CHECK(fs::exists(dir / name));
  nlohmann::json config = nlohmann::json::parse(slurp(dir / "config.json"));
  CHECK(config.at("seed") == 8);
  CHECK(config.at("param_count").get<long>() > 0);
  CHECK(config.contains("norm"));
  fs::remove_all(dir);
}

TEST_CASE("paper profile encodes the full-scale recipe") {
  const RunConfig paper = make_profile("paper");
  CHECK(paper.train.batch_size == 64);
  CHECK(paper.train.lr == 2e-4);
  CHECK(paper.train.total_batches == 250000);
  CHECK(paper.sampler.mode.T == 20);
  CHECK(paper.sampler.h == 100);
  CHECK(paper.sampler.w == 100);
  CHECK(paper.train.loss.kind == LossKind::huber);
  CHECK(paper.train.loss.delta == 1.0);
  CHECK(paper.sampler.flip_prob == 0.5);
  CHECK(paper.base_width == 64);
  CHECK(paper.train.adam.beta1 == 0.9);
  CHECK(paper.train.adam.beta2 == 0.999);
  CHECK(paper.train.adam.eps == 1e-8);
  CHECK_THROWS(make_profile("unknown"));
}
