// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "gradcheck.hpp"
#include "irsce/core/error.hpp"
#include "irsce/nn/layers.hpp"

namespace irsce::nn {
namespace {

FeatureMap<float> ones(int c, int n, int h, int w) {
  FeatureMap<float> x(c, n, h, w);
  std::fill(x.values().begin(), x.values().end(), 1.0f);
  return x;
}

TEST(Conv2d, OnesKernelCountsTaps) {
  const std::vector<float> weight(9, 1.0f), bias{0.0f};
  const auto y = conv2d_forward<float>(ones(1, 1, 3, 3), weight, bias, 1);
  EXPECT_FLOAT_EQ(y.data()[4], 9.0f);  // center
  EXPECT_FLOAT_EQ(y.data()[0], 4.0f);  // corner
  EXPECT_FLOAT_EQ(y.data()[1], 6.0f);  // edge
}

TEST(Conv2d, DeltaKernelIsIdentity) {
  Rng rng(1);
  FeatureMap<float> x(1, 2, 4, 5);
  testing::fill_normal<float>(x.values(), rng);
  std::vector<float> weight(9, 0.0f);
  weight[4] = 1.0f;
  const auto y = conv2d_forward<float>(x, weight, std::vector<float>{0.0f}, 1);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y.data()[i], x.data()[i]);
}

TEST(Conv2d, BiasOnly) {
  Rng rng(2);
  FeatureMap<float> x(3, 2, 3, 3);
  testing::fill_normal<float>(x.values(), rng);
  const std::vector<float> weight(2 * 3 * 9, 0.0f), bias{0.5f, -2.0f};
  const auto y = conv2d_forward<float>(x, weight, bias, 2);
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < y.pixels(); ++i) EXPECT_EQ(y.channel(c)[i], bias[c]);
  }
}

TEST(Conv2d, SamePaddingPreservesShape) {
  const std::vector<float> weight(2 * 3 * 9, 0.1f), bias(3, 0.0f);
  for (int h = 1; h <= 8; ++h) {
    for (int w = 1; w <= 8; ++w) {
      const auto y = conv2d_forward<float>(ones(2, 1, h, w), weight, bias, 3);
      EXPECT_EQ(y.height(), h);
      EXPECT_EQ(y.width(), w);
      EXPECT_EQ(y.channels(), 3);
    }
  }
}

TEST(Conv2d, RejectsWrongWeightSize) {
  const std::vector<float> weight(10, 0.0f), bias(1, 0.0f);
  EXPECT_THROW(conv2d_forward<float>(ones(1, 1, 3, 3), weight, bias, 1), ValidationError);
}

TEST(BatchNorm, ConstantInputGivesZeros) {
  BatchNorm2d<float> bn(2);
  auto x = ones(2, 2, 3, 3);
  const auto y = bn.forward(x, Mode::training, false);
  for (const float v : y.values()) EXPECT_EQ(v, 0.0f);
}

TEST(BatchNorm, TrainingModeStandardizes) {
  Rng rng(3);
  FeatureMap<double> x(3, 4, 5, 5);
  for (auto& v : x.values()) v = 7.0 + 3.0 * rng.normal();
  BatchNorm2d<double> bn(3);
  const auto y = bn.forward(x, Mode::training, false);
  for (int c = 0; c < 3; ++c) {
    const double* p = y.channel(c);
    const double mean = std::accumulate(p, p + y.pixels(), 0.0) / y.pixels();
    double var = 0.0;
    for (int i = 0; i < y.pixels(); ++i) var += (p[i] - mean) * (p[i] - mean);
    var /= y.pixels();
    EXPECT_NEAR(mean, 0.0, 1e-5);
    EXPECT_NEAR(var, 1.0, 1e-3);
  }
}

TEST(BatchNorm, AffineOnStandardizedInput) {
  Rng rng(4);
  FeatureMap<double> x(1, 8, 8, 8);
  testing::fill_normal<double>(x.values(), rng);
  BatchNorm2d<double> bn(1);
  bn.gamma[0] = 2.0;
  bn.beta[0] = 3.0;
  const auto y = bn.forward(x, Mode::training, false);
  const double mean = std::accumulate(y.values().begin(), y.values().end(), 0.0) / y.size();
  double var = 0.0;
  for (const double v : y.values()) var += (v - mean) * (v - mean);
  EXPECT_NEAR(mean, 3.0, 1e-3);
  EXPECT_NEAR(std::sqrt(var / y.size()), 2.0, 1e-3);
}

TEST(BatchNorm, RunningStatisticsUseMomentum) {
  FeatureMap<double> x(1, 1, 1, 2);
  x.data()[0] = 1.0;
  x.data()[1] = 3.0;  // mean 2, biased var 1, unbiased var 2
  BatchNorm2d<double> bn(1);
  bn.forward(x, Mode::training, false);
  EXPECT_NEAR(bn.running_mean[0], 0.9 * 0.0 + 0.1 * 2.0, 1e-12);
  EXPECT_GT(bn.running_var[0], 0.0);
  const double v = bn.running_var[0];
  EXPECT_TRUE(std::abs(v - (0.9 + 0.1 * 1.0)) < 1e-12 || std::abs(v - (0.9 + 0.1 * 2.0)) < 1e-12) << v;
}

TEST(BatchNorm, InferMatchesInferenceForward) {
  Rng rng(5);
  FeatureMap<float> x(4, 3, 3, 3);
  testing::fill_normal<float>(x.values(), rng);
  BatchNorm2d<float> bn(4);
  bn.forward(x, Mode::training, false);  // move running stats off the defaults
  testing::fill_normal<float>(bn.gamma, rng);
  const auto a = bn.forward(x, Mode::inference, false);
  const auto b = bn.infer(x);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.data()[i], b.data()[i]);
}

TEST(Relu, Examples) {
  FeatureMap<float> x(1, 1, 1, 3);
  x.data()[0] = -1.0f;
  x.data()[1] = 0.0f;
  x.data()[2] = 2.0f;
  const auto y = relu_forward(x);
  EXPECT_EQ(y.data()[0], 0.0f);
  EXPECT_EQ(y.data()[1], 0.0f);
  EXPECT_EQ(y.data()[2], 2.0f);

  FeatureMap<float> g(1, 1, 1, 3);
  std::fill(g.values().begin(), g.values().end(), 5.0f);
  x.data()[2] = 3.0f;
  const auto dx = relu_backward(x, g);
  EXPECT_EQ(dx.data()[0], 0.0f);
  EXPECT_EQ(dx.data()[2], 5.0f);
}

TEST(Relu, AllNegative) {
  FeatureMap<float> x(2, 1, 2, 2);
  std::fill(x.values().begin(), x.values().end(), -0.5f);
  const auto y = relu_forward(x);
  const auto dx = relu_backward(x, ones(2, 1, 2, 2));
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(y.data()[i], 0.0f);
    EXPECT_EQ(dx.data()[i], 0.0f);
  }
}

TEST(GradCheck, LayersDouble) {
  Rng rng(6);
  const testing::GradCheckOptions o;
  EXPECT_LT(testing::check_conv<double>(rng, o).max_rel_error, 1e-6);
  EXPECT_LT(testing::check_batchnorm<double>(rng, o).max_rel_error, 1e-6);
  EXPECT_LT(testing::check_relu<double>(rng, o).max_rel_error, 1e-6);
}

TEST(GradCheck, LayersFloatAgreeWithDouble) {
  for (const std::uint64_t seed : {7u, 17u, 27u}) {
    EXPECT_LT(testing::scaled_gap(testing::conv_gradients<float>(seed), testing::conv_gradients<double>(seed)), 1e-5);
    EXPECT_LT(testing::scaled_gap(testing::batchnorm_gradients<float>(seed), testing::batchnorm_gradients<double>(seed)),
              1e-5);
  }
  EXPECT_LT(testing::scaled_gap(testing::conv_gradients<float>(8, 3, 4, 5, 4, 7),
                                testing::conv_gradients<double>(8, 3, 4, 5, 4, 7)),
            1e-5);
}

// Wider and taller than the 2x2x3x3 oracle case.
TEST(GradCheck, ConvLargerShapes) {
  Rng rng(8);
  const testing::GradCheckOptions o;
  EXPECT_LT(testing::check_conv<double>(rng, o, 3, 4, 5, 4, 7).max_rel_error, 1e-6);
  EXPECT_LT(testing::check_batchnorm<double>(rng, o, 3, 5, 2, 6).max_rel_error, 1e-6);
}

}  // namespace
}  // namespace irsce::nn
