#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "flowcast/tensor.hpp"

namespace flowcast {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const {
    if (!(lr >= 0.0)) throw std::runtime_error("adam: lr must be non-negative");
    if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0))
      throw std::runtime_error("adam: betas must lie in (0,1)");
    if (!(eps > 0.0)) throw std::runtime_error("adam: eps must be positive");
  }
};

/// First/second moment buffers, one pair per parameter tensor.
template <typename T>
struct AdamState {
  std::vector<Tensor<T>> m, v;
  long t = 0;

  void ensure_initialized(const std::vector<Tensor<T>*>& params) {
    if (!m.empty()) return;
    for (auto* p : params) {
      m.push_back(Tensor<T>::zeros_like(*p));
      v.push_back(Tensor<T>::zeros_like(*p));
    }
  }
};

/// One bias-corrected Adam update:
///   m <- b1*m + (1-b1)*g;  v <- b2*v + (1-b2)*g^2
///   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
template <typename T>
void adam_step(const std::vector<Tensor<T>*>& params, const std::vector<const Tensor<T>*>& grads,
               AdamState<T>& state, const AdamConfig& cfg) {
  cfg.validate();
  if (params.size() != grads.size()) throw std::runtime_error("adam: param/grad count mismatch");
  state.ensure_initialized(params);
  if (state.m.size() != params.size()) throw std::runtime_error("adam: state size mismatch");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor<T>& p = *params[i];
    const Tensor<T>& g = *grads[i];
    if (p.shape != g.shape || p.shape != state.m[i].shape)
      throw std::runtime_error("adam: shape mismatch at parameter " + std::to_string(i));
    for (size_t j = 0; j < p.data.size(); ++j) {
      const double gj = static_cast<double>(g.data[j]);
      const double mj = cfg.beta1 * static_cast<double>(state.m[i].data[j]) + (1.0 - cfg.beta1) * gj;
      const double vj = cfg.beta2 * static_cast<double>(state.v[i].data[j]) + (1.0 - cfg.beta2) * gj * gj;
      state.m[i].data[j] = static_cast<T>(mj);
      state.v[i].data[j] = static_cast<T>(vj);
      const double m_hat = mj / bc1;
      const double v_hat = vj / bc2;
      p.data[j] = static_cast<T>(static_cast<double>(p.data[j]) -
                                 cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
    }
  }
}

}  // namespace flowcast
