#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowcast/tensor.hpp"

namespace flowcast {

enum class LossKind : int { huber = 0, mse, l1 };

const char* loss_kind_name(LossKind kind);
LossKind loss_kind_from_name(const std::string& name);

struct LossSpec {
  LossKind kind = LossKind::huber;
  double delta = 1.0;  // huber only

  void validate() const {
    if (!(delta > 0.0)) throw std::runtime_error("loss spec: delta must be positive");
  }
};

/// huber: e^2/2 for |e| <= delta, else delta*(|e| - delta/2); mse: e^2; l1: |e|.
double pointwise_loss(double f, double f_gt, const LossSpec& spec);

/// d/df of pointwise_loss. The l1 subgradient at e = 0 is taken as 0.
double pointwise_loss_grad(double f, double f_gt, const LossSpec& spec);

/// A supervised pixel inside a flow map, value on the same scale as the map.
struct PixelTarget {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Mean of pointwise_loss over the target pixels; all other pixels contribute
/// zero loss and zero gradient.
template <typename T>
double masked_loss(const Tensor<T>& flow_map, std::span<const PixelTarget> targets,
                   const LossSpec& spec) {
  if (targets.empty()) throw std::runtime_error("masked_loss: empty target list");
  spec.validate();
  double sum = 0.0;
  for (const auto& t : targets) {
    if (t.row < 0 || t.col < 0 || t.row >= flow_map.dim(0) || t.col >= flow_map.dim(1))
      throw std::runtime_error("masked_loss: target pixel out of bounds");
    sum += pointwise_loss(static_cast<double>(flow_map.at(t.row, t.col)), t.value, spec);
  }
  return sum / static_cast<double>(targets.size());
}

/// Loss plus its gradient w.r.t. the flow map (zero off the target pixels).
template <typename T>
double masked_loss_backward(const Tensor<T>& flow_map, std::span<const PixelTarget> targets,
                            const LossSpec& spec, Tensor<T>& d_map) {
  const double loss = masked_loss(flow_map, targets, spec);
  d_map = Tensor<T>::zeros_like(flow_map);
  const double scale = 1.0 / static_cast<double>(targets.size());
  for (const auto& t : targets)
    d_map.at(t.row, t.col) += static_cast<T>(
        scale * pointwise_loss_grad(static_cast<double>(flow_map.at(t.row, t.col)), t.value, spec));
  return loss;
}

}  // namespace flowcast
