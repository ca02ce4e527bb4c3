#include "flowcast/loss.hpp"

namespace flowcast {

const char* loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::huber: return "huber";
    case LossKind::mse: return "mse";
    case LossKind::l1: return "l1";
  }
  return "?";
}

LossKind loss_kind_from_name(const std::string& name) {
  if (name == "huber") return LossKind::huber;
  if (name == "mse") return LossKind::mse;
  if (name == "l1") return LossKind::l1;
  throw std::runtime_error("unknown loss kind: " + name);
}

double pointwise_loss(double f, double f_gt, const LossSpec& spec) {
  const double e = f - f_gt;
  switch (spec.kind) {
    case LossKind::huber: {
      const double a = std::abs(e);
      return a <= spec.delta ? 0.5 * e * e : spec.delta * (a - 0.5 * spec.delta);
    }
    case LossKind::mse: return e * e;
    case LossKind::l1: return std::abs(e);
  }
  return 0.0;
}

double pointwise_loss_grad(double f, double f_gt, const LossSpec& spec) {
  const double e = f - f_gt;
  switch (spec.kind) {
    case LossKind::huber: {
      if (std::abs(e) <= spec.delta) return e;
      return e > 0 ? spec.delta : -spec.delta;
    }
    case LossKind::mse: return 2.0 * e;
    case LossKind::l1: return e > 0 ? 1.0 : (e < 0 ? -1.0 : 0.0);
  }
  return 0.0;
}

}  // namespace flowcast
