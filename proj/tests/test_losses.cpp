#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "flowcast/loss.hpp"

using namespace flowcast;

namespace {

// Independent closed form used as the oracle here.
double huber_ref(double e, double delta) {
  const double a = std::abs(e);
  return a <= delta ? 0.5 * e * e : delta * (a - 0.5 * delta);
}

double central_diff(double e, const LossSpec& spec, double h) {
  return (pointwise_loss(e + h, 0.0, spec) - pointwise_loss(e - h, 0.0, spec)) / (2.0 * h);
}

}  // namespace

TEST_CASE("huber closed-form values") {
  const LossSpec huber1{LossKind::huber, 1.0};
  CHECK(pointwise_loss(2.0, 0.0, huber1) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(pointwise_loss(0.5, 0.0, huber1) == doctest::Approx(0.125).epsilon(1e-15));
  for (const auto kind : {LossKind::huber, LossKind::mse, LossKind::l1})
    CHECK(pointwise_loss(3.25, 3.25, LossSpec{kind, 1.0}) == 0.0);

  for (const double delta : {0.8, 1.0, 1.1})
    for (const double e : {0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0})
      CHECK(std::abs(pointwise_loss(e, 0.0, LossSpec{LossKind::huber, delta}) -
                     huber_ref(e, delta)) <= 1e-12);
}

TEST_CASE("mse and l1 values") {
  CHECK(pointwise_loss(2.0, 0.0, LossSpec{LossKind::mse, 1.0}) == 4.0);
  CHECK(pointwise_loss(-1.5, 0.0, LossSpec{LossKind::l1, 1.0}) == 1.5);
}

TEST_CASE("huber is continuous and C1 at the branch joint") {
  for (const double delta : {0.8, 1.0, 1.1}) {
    const LossSpec spec{LossKind::huber, delta};
    // value: both closed forms agree at |e| = delta
    CHECK(0.5 * delta * delta == doctest::Approx(delta * (delta - 0.5 * delta)).epsilon(1e-15));
    // derivative: quadratic branch gives e, linear branch gives delta*sign(e)
    CHECK(pointwise_loss_grad(delta, 0.0, spec) == doctest::Approx(delta).epsilon(1e-15));
    CHECK(pointwise_loss_grad(-delta, 0.0, spec) == doctest::Approx(-delta).epsilon(1e-15));
  }
}

TEST_CASE("half-squared error dominates huber, equality on the quadratic branch") {
  const double delta = 1.0;
  const LossSpec spec{LossKind::huber, delta};
  for (double e = -4.0; e <= 4.0; e += 0.03125) {
    const double huber = pointwise_loss(e, 0.0, spec);
    CHECK(0.5 * e * e >= huber - 1e-15);
    if (std::abs(e) <= delta)
      CHECK(huber == doctest::Approx(0.5 * e * e).epsilon(1e-15));
    else
      CHECK(0.5 * e * e > huber);
  }
}

TEST_CASE("analytic gradients match central differences to 1e-8") {
  const double h = 1e-7;
  for (const double delta : {0.8, 1.0, 1.1}) {
    const LossSpec spec{LossKind::huber, delta};
    for (double e = -3.0; e <= 3.0; e += 0.0625) {
      if (std::abs(std::abs(e) - delta) < 2 * h) continue;  // FD straddles the joint there
      CHECK(std::abs(pointwise_loss_grad(e, 0.0, spec) - central_diff(e, spec, h)) <= 1e-8);
    }
  }
  const LossSpec mse{LossKind::mse, 1.0};
  for (double e = -2.0; e <= 2.0; e += 0.125)
    CHECK(std::abs(pointwise_loss_grad(e, 0.0, mse) - central_diff(e, mse, h)) <= 1e-8);
  const LossSpec l1{LossKind::l1, 1.0};
  for (double e : {-2.0, -0.5, 0.5, 2.0})
    CHECK(std::abs(pointwise_loss_grad(e, 0.0, l1) - central_diff(e, l1, h)) <= 1e-8);
}

TEST_CASE("masked loss: mean over targets, zero elsewhere") {
  Tensor<double> map = Tensor<double>::zeros({4, 5});
  map.at(1, 2) = 0.5;  // -> pointwise 0.125 against 0
  map.at(3, 0) = 2.0;  // -> pointwise 1.5
  const LossSpec spec{LossKind::huber, 1.0};
  const std::vector<PixelTarget> targets = {{1, 2, 0.0}, {3, 0, 0.0}};
  CHECK(masked_loss<double>(map, targets, spec) == doctest::Approx(0.8125).epsilon(1e-15));

  Tensor<double> d_map;
  masked_loss_backward<double>(map, targets, spec, d_map);
  for (long r = 0; r < 4; ++r)
    for (long c = 0; c < 5; ++c) {
      const bool is_target = (r == 1 && c == 2) || (r == 3 && c == 0);
      if (!is_target) CHECK(d_map.at(r, c) == 0.0);
    }
  CHECK(d_map.at(1, 2) == doctest::Approx(0.5 * 0.5));  // e/2 targets
  CHECK(d_map.at(3, 0) == doctest::Approx(1.0 * 0.5));  // clipped to delta, /2 targets

  // exact prediction -> zero loss
  Tensor<double> exact = Tensor<double>::zeros({2, 2});
  exact.at(0, 1) = 7.0;
  const std::vector<PixelTarget> one = {{0, 1, 7.0}};
  CHECK(masked_loss<double>(exact, one, spec) == 0.0);
}

TEST_CASE("masked loss is permutation-invariant and validates inputs") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  Tensor<double> map = Tensor<double>::zeros({10, 10});
  for (auto& v : map.data) v = unif(rng);
  std::vector<PixelTarget> targets;
  for (int i = 0; i < 7; ++i)
    targets.push_back(PixelTarget{static_cast<int>(rng() % 10), static_cast<int>(rng() % 10),
                                  unif(rng)});
  const LossSpec spec{LossKind::huber, 1.0};
  const double base = masked_loss<double>(map, targets, spec);
  for (int shuffle = 0; shuffle < 5; ++shuffle) {
    std::shuffle(targets.begin(), targets.end(), rng);
    CHECK(masked_loss<double>(map, targets, spec) == doctest::Approx(base).epsilon(1e-15));
  }

  CHECK_THROWS_WITH_AS(masked_loss<double>(map, {}, spec), doctest::Contains("empty"),
                       std::runtime_error);
  const std::vector<PixelTarget> oob = {{10, 0, 0.0}};
  CHECK_THROWS_WITH_AS(masked_loss<double>(map, oob, spec), doctest::Contains("out of bounds"),
                       std::runtime_error);
  CHECK_THROWS(masked_loss<double>(map, targets, LossSpec{LossKind::huber, 0.0}));
}
