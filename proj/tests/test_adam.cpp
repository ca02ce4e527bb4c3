#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "flowcast/adam.hpp"

using namespace flowcast;

TEST_CASE("zero gradients leave parameters unchanged") {
  Tensor<double> p = Tensor<double>::zeros({3});
  p.data = {1.0, -2.0, 0.5};
  const Tensor<double> g = Tensor<double>::zeros({3});
  AdamState<double> state;
  AdamConfig cfg;
  adam_step<double>({&p}, {&g}, state, cfg);
  CHECK(p.data == std::vector<double>{1.0, -2.0, 0.5});
}

TEST_CASE("first step with unit gradient moves by ~lr") {
  Tensor<double> p = Tensor<double>::zeros({1});
  Tensor<double> g = Tensor<double>::zeros({1});
  g.data[0] = 1.0;
  AdamState<double> state;
  AdamConfig cfg;
  cfg.lr = 2e-4;
  adam_step<double>({&p}, {&g}, state, cfg);
  // bias correction makes m_hat = g and v_hat = g^2 at t = 1
  CHECK(p.data[0] == doctest::Approx(-2e-4 * (1.0 / (1.0 + cfg.eps))).epsilon(1e-12));
}

TEST_CASE("equal gradients produce equal updates") {
  Tensor<double> p = Tensor<double>::zeros({2});
  p.data = {3.0, 3.0};
  Tensor<double> g = Tensor<double>::zeros({2});
  g.data = {0.7, 0.7};
  AdamState<double> state;
  AdamConfig cfg;
  for (int step = 0; step < 5; ++step) adam_step<double>({&p}, {&g}, state, cfg);
  CHECK(p.data[0] == p.data[1]);
}

TEST_CASE("lr = 0 is a bit-exact no-op even with non-zero gradients") {
  Tensor<float> p = Tensor<float>::zeros({3});
  p.data = {1.0f, 2.0f, 3.0f};
  Tensor<float> g = Tensor<float>::zeros({3});
  g.data = {0.3f, -0.4f, 1.7f};
  AdamState<float> state;
  AdamConfig cfg;
  cfg.lr = 0.0;
  for (int step = 0; step < 3; ++step) adam_step<float>({&p}, {&g}, state, cfg);
  CHECK(p.data == std::vector<float>{1.0f, 2.0f, 3.0f});
}

TEST_CASE("shape mismatches are rejected") {
  Tensor<double> p = Tensor<double>::zeros({2});
  Tensor<double> g = Tensor<double>::zeros({3});
  AdamState<double> state;
  AdamConfig cfg;
  CHECK_THROWS_WITH_AS((adam_step<double>({&p}, {&g}, state, cfg)),
                       doctest::Contains("shape mismatch"), std::runtime_error);
  CHECK_THROWS((adam_step<double>({&p}, {}, state, cfg)));
  AdamConfig bad;
  bad.beta1 = 1.5;
  Tensor<double> g2 = Tensor<double>::zeros({2});
  CHECK_THROWS((adam_step<double>({&p}, {&g2}, state, bad)));
}

TEST_CASE("adam converges on a quadratic bowl") {
  Tensor<double> p = Tensor<double>::zeros({1});
  p.data[0] = 5.0;
  AdamState<double> state;
  AdamConfig cfg;
  cfg.lr = 0.05;
  Tensor<double> g = Tensor<double>::zeros({1});
  for (int step = 0; step < 2000; ++step) {
    g.data[0] = 2.0 * p.data[0];  // d/dp of p^2
    adam_step<double>({&p}, {&g}, state, cfg);
  }
  CHECK(std::abs(p.data[0]) < 1e-3);
}
