#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "flowcast/fcn.hpp"
#include "flowcast/loss.hpp"

using namespace flowcast;

namespace {

struct ParamRef {
  std::string name;
  Tensor<double>* value = nullptr;
  Tensor<double>* grad = nullptr;
  size_t index = 0;
};

// Masked loss of the model on a fixed input; the quantity whose parameter
// gradient is checked against central finite differences.
struct LossProbe {
  Fcn8<double>& model;
  const Tensor<double>& input;
  const std::vector<double>* temporal;
  const std::vector<PixelTarget>& targets;
  LossSpec spec;

  double operator()() {
    std::vector<double> tvec;
    if (temporal) tvec = *temporal;
    const Tensor<double> out = model.forward(input, temporal ? &tvec : nullptr);
    return masked_loss(out, targets, spec);
  }
};

std::vector<ParamRef> collect_params(Fcn8<double>& model) {
  std::vector<ParamRef> refs;
  model.for_each_param([&](const std::string& name, Tensor<double>& value, Tensor<double>& grad) {
    refs.push_back(ParamRef{name, &value, &grad, 0});
  });
  return refs;
}

// Moves the net to a locally smooth operating point: trunk weights scaled
// down and ReLU-feeding biases offset positive, so no activation sits within
// the finite-difference step of a kink. Central differences then measure the
// true gradient instead of kink crossings.
void smooth_operating_point(Fcn8<double>& model) {
  model.for_each_param([](const std::string& name, Tensor<double>& value, Tensor<double>&) {
    const bool relu_fed = name.rfind("conv", 0) == 0 || name == "head.weight" ||
                          name == "head.bias" || name.rfind("temporal_fc1", 0) == 0;
    if (!relu_fed) return;
    if (name.ends_with(".weight"))
      for (auto& v : value.data) v *= 0.2;
    else
      value.fill(1.0);
  });
}

void check_gradients(Fcn8<double>& model, const Tensor<double>& input,
                     const std::vector<double>* temporal,
                     const std::vector<PixelTarget>& targets, int n_params,
                     std::uint64_t seed, double eps, double tol) {
  smooth_operating_point(model);
  const LossSpec spec{LossKind::huber, 1.0};
  LossProbe probe{model, input, temporal, targets, spec};

  model.zero_grad();
  std::vector<double> tvec;
  if (temporal) tvec = *temporal;
  const Tensor<double> out = model.forward(input, temporal ? &tvec : nullptr);
  Tensor<double> d_map;
  masked_loss_backward(out, targets, spec, d_map);
  model.backward(d_map);

  auto refs = collect_params(model);
  std::mt19937_64 rng(seed);
  int checked = 0;
  while (checked < n_params) {
    ParamRef ref = refs[rng() % refs.size()];
    ref.index = rng() % ref.value->data.size();
    const double analytic = ref.grad->data[ref.index];

    const double saved = ref.value->data[ref.index];
    ref.value->data[ref.index] = saved + eps;
    const double plus = probe();
    ref.value->data[ref.index] = saved - eps;
    const double minus = probe();
    ref.value->data[ref.index] = saved;
    const double fd = (plus - minus) / (2.0 * eps);

    const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-8});
    const double rel = std::abs(analytic - fd) / denom;
    INFO(ref.name, "[", ref.index, "] analytic=", analytic, " fd=", fd, " rel=", rel);
    CHECK(rel <= tol);
    ++checked;
  }
}

Tensor<double> random_input(int k, int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Tensor<double> x = Tensor<double>::zeros({k, h, w});
  for (auto& v : x.data) v = unit(rng);
  return x;
}

}  // namespace

TEST_CASE("masked-loss gradients match finite differences (main arch, width 4)") {
  ModelConfig cfg;
  cfg.in_channels = 6;
  cfg.base_width = 4;
  cfg.init_seed = 21;
  Fcn8<double> model(cfg);
  const Tensor<double> input = random_input(6, 40, 40, 22);
  const std::vector<PixelTarget> targets = {{5, 7, 0.4}, {20, 33, 0.9}, {39, 0, 0.1}};
  check_gradients(model, input, nullptr, targets, 20, 23, 1e-3, 1e-4);
}

TEST_CASE("gradients flow through the fc_early temporal branch") {
  ModelConfig cfg;
  cfg.in_channels = 4;
  cfg.base_width = 2;
  cfg.arch = Arch::fc_early;
  cfg.temporal_len = 8;
  cfg.init_seed = 31;
  Fcn8<double> model(cfg);
  const Tensor<double> input = random_input(4, 100, 100, 32);
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> temporal(8);
  for (auto& v : temporal) v = unit(rng);
  const std::vector<PixelTarget> targets = {{50, 50, 0.5}, {10, 90, 0.2}};
  check_gradients(model, input, &temporal, targets, 8, 34, 1e-3, 1e-4);
}

TEST_CASE("gradients flow through the fc_mid temporal branch") {
  ModelConfig cfg;
  cfg.in_channels = 4;
  cfg.base_width = 2;
  cfg.arch = Arch::fc_mid;
  cfg.temporal_len = 8;
  cfg.init_seed = 41;
  Fcn8<double> model(cfg);
  const Tensor<double> input = random_input(4, 100, 100, 42);
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> temporal(8);
  for (auto& v : temporal) v = unit(rng);
  const std::vector<PixelTarget> targets = {{50, 50, 0.5}};
  check_gradients(model, input, &temporal, targets, 6, 44, 1e-3, 1e-4);
}
