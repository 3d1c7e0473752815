// Copyright 2026 The OMLC Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "omlc/online_adaptation.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "omlc/bitstream.h"
#include "omlc/error.h"
#include "test_util.h"

namespace omlc {
namespace {

using testing::ErrorCodeOf;
using testing::RelError;

double Quadratic(std::span<const double> l) { return (l[0] - 2) * (l[0] - 2); }
std::vector<double> QuadraticGrad(std::span<const double> l) {
  return {2 * (l[0] - 2)};
}

TEST(OmlAdaptTest, GammaGridTraceOnQuadratic) {
  SurrogateObjective objective(1, Quadratic, QuadraticGrad);
  OmlConfig config;
  config.iterations = 1;
  const OmlResult r = OmlAdapt(objective, 0.0, config);

  // lambda_t = 0 is clamped to the smallest tradeoff and rounded to fp16.
  const double start = RoundToHalf(kLambdaMin);
  const double g = 2 * (start - 2);
  ASSERT_EQ(r.trace.size(), 7u);
  EXPECT_EQ(r.trace[0].candidate, std::vector<double>{start});
  EXPECT_TRUE(r.trace[0].accepted);

  const double hand[] = {3.8416, 2.56, 4.0, 1444.0};
  for (size_t i = 0; i < config.gamma_grid.size(); ++i) {
    const OmlTraceEntry& e = r.trace[i + 1];
    const double gamma = config.gamma_grid[i];
    const double candidate = RoundToHalf(start - gamma * g);
    EXPECT_EQ(e.iteration, 1);
    EXPECT_EQ(e.gamma, gamma);
    EXPECT_EQ(e.candidate, std::vector<double>{candidate});
    EXPECT_EQ(e.distortion, (candidate - 2) * (candidate - 2));
    if (i < 4) EXPECT_NEAR(e.distortion, hand[i], 1e-3);
    EXPECT_EQ(e.accepted, gamma == 0.1);
  }
  EXPECT_EQ(r.best_lambdas, std::vector<double>{RoundToHalf(0.4)});
  EXPECT_EQ(r.best_lambdas[0], 0.39990234375);
  EXPECT_NEAR(r.best_distortion, 2.56, 1e-3);
  EXPECT_EQ(r.initial_distortion, (start - 2) * (start - 2));

  // gamma* = 0.1 carries into the second iteration.
  config.iterations = 2;
  const OmlResult r2 = OmlAdapt(objective, 0.0, config);
  ASSERT_EQ(r2.trace.size(), 8u);
  EXPECT_EQ(r2.trace[7].iteration, 2);
  EXPECT_EQ(r2.trace[7].gamma, 0.1);
  const double step2 = RoundToHalf(0.39990234375 - 0.1 * QuadraticGrad(
                                                            r.best_lambdas)[0]);
  EXPECT_EQ(r2.trace[7].candidate, std::vector<double>{step2});
}

TEST(OmlAdaptTest, TiesGoToSmallestGamma) {
  // Every candidate lands on the same flat value.
  SurrogateObjective objective(
      1, [](std::span<const double> l) { return l[0] < 0.5 ? 1.0 : 0.0; },
      [](std::span<const double>) { return std::vector<double>{-1.0}; });
  OmlConfig config;
  config.iterations = 1;
  config.gamma_grid = {1.0, 10.0, 100.0};
  const OmlResult r = OmlAdapt(objective, 0.01, config);
  EXPECT_EQ(r.best_lambdas[0], RoundToHalf(0.01 + 1.0));
}

TEST(OmlAdaptTest, ZeroIterationsEvaluatesStartOnly) {
  SurrogateObjective objective(4, [](std::span<const double> l) {
    return l[0] + l[3];
  });
  OmlConfig config;
  config.iterations = 0;
  const OmlResult r = OmlAdapt(objective, 0.0067, config);
  EXPECT_EQ(r.evaluations, 1);
  ASSERT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(r.best_lambdas, std::vector<double>(4, RoundToHalf(0.0067)));
  EXPECT_EQ(r.best_distortion, r.initial_distortion);
}

TEST(OmlAdaptTest, ZeroGradientKeepsStart) {
  SurrogateObjective objective(
      3, [](std::span<const double>) { return 5.0; },
      [](std::span<const double>) { return std::vector<double>(3, 0.0); });
  OmlConfig config;
  config.iterations = 5;
  const OmlResult r = OmlAdapt(objective, 0.013, config);
  EXPECT_EQ(r.best_lambdas, std::vector<double>(3, RoundToHalf(0.013)));
  for (size_t i = 1; i < r.trace.size(); ++i) {
    EXPECT_FALSE(r.trace[i].accepted);
  }
}

TEST(OmlAdaptTest, NeverWorseThanStartAndMonotone) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const size_t k = 1 + rng() % 5;
    std::vector<double> center(k), weight(k);
    for (size_t i = 0; i < k; ++i) {
      center[i] = std::exp(3 * u(rng));
      weight[i] = std::exp(2 * u(rng));
    }
    auto fn = [=](std::span<const double> l) {
      double s = 0;
      for (size_t i = 0; i < l.size(); ++i) {
        const double d = std::log(l[i] / center[i]);
        s += weight[i] * (d * d + 0.1 * d * d * d * d);
      }
      return s;
    };
    SurrogateObjective objective(k, fn);
    OmlConfig config;
    config.iterations = 1 + static_cast<int>(rng() % 10);
    config.gradient_mode = GradientMode::kFiniteDifference;
    const OmlResult r = OmlAdapt(objective, std::exp(2 * u(rng)), config);
    EXPECT_LE(r.best_distortion, r.initial_distortion);
    EXPECT_EQ(r.best_distortion, fn(r.best_lambdas));
    double best = std::numeric_limits<double>::infinity();
    for (const OmlTraceEntry& e : r.trace) {
      if (e.accepted) {
        EXPECT_LT(e.distortion, best);
        best = e.distortion;
      }
      for (double v : e.candidate) {
        EXPECT_EQ(RoundToHalf(v), v);
        EXPECT_GE(v, kLambdaMin);
        EXPECT_LE(v, kLambdaMax);
      }
    }
    EXPECT_EQ(best, r.best_distortion);
  }
}

TEST(OmlAdaptTest, ConvergesOnQuadratic) {
  SurrogateObjective objective(1, Quadratic, QuadraticGrad);
  OmlConfig config;
  config.iterations = 40;
  const OmlResult r = OmlAdapt(objective, 0.0, config);
  EXPECT_LT(r.best_distortion, 1e-4);
  EXPECT_NEAR(r.best_lambdas[0], 2.0, 1e-2);
}

TEST(OmlAdaptTest, RejectsNonFiniteCandidates) {
  SurrogateObjective objective(
      1,
      [](std::span<const double> l) {
        return l[0] > 1.0 ? std::numeric_limits<double>::quiet_NaN()
                          : (l[0] - 2) * (l[0] - 2);
      },
      QuadraticGrad);
  OmlConfig config;
  config.iterations = 10;
  const OmlResult r = OmlAdapt(objective, 0.0, config);
  EXPECT_TRUE(std::isfinite(r.best_distortion));
  EXPECT_LE(r.best_lambdas[0], 1.0);
  for (const OmlTraceEntry& e : r.trace) {
    if (!std::isfinite(e.distortion)) EXPECT_FALSE(e.accepted);
  }
}

TEST(GradLambdaTest, Examples) {
  SurrogateObjective exact(1, Quadratic, QuadraticGrad);
  SurrogateObjective plain(1, Quadratic);
  const std::vector<double> zero = {0.0};
  EXPECT_EQ(GradLambda(exact, zero, GradientMode::kAutodiff, 1e-4)[0], -4.0);
  // At the lower bound the difference is one-sided.
  const std::vector<double> low = {kLambdaMin};
  EXPECT_NEAR(GradLambda(plain, low, GradientMode::kFiniteDifference, 1e-4)[0],
              -4.0, 2e-4);
  const std::vector<double> three = {3.0};
  EXPECT_NEAR(
      GradLambda(plain, three, GradientMode::kFiniteDifference, 1e-4)[0], 2.0,
      1e-9);

  SurrogateObjective broken(1, [](std::span<const double>) {
    return std::numeric_limits<double>::infinity();
  });
  EXPECT_EQ(ErrorCodeOf([&] {
              GradLambda(broken, three, GradientMode::kFiniteDifference, 1e-4);
            }),
            ErrorCode::kNumerical);
}

TEST(OmlConfigTest, Validation) {
  OmlConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.iterations = -1;
  EXPECT_THROW(c.Validate(), Error);
  c = OmlConfig();
  c.gamma_grid = {};
  EXPECT_THROW(c.Validate(), Error);
  c.gamma_grid = {1.0, 1.0};
  EXPECT_THROW(c.Validate(), Error);
  c.gamma_grid = {-1.0, 1.0};
  EXPECT_THROW(c.Validate(), Error);
  c = OmlConfig();
  c.fd_step = 0.0;
  EXPECT_THROW(c.Validate(), Error);
  EXPECT_EQ(ParseGradientMode("fd"), GradientMode::kFiniteDifference);
  EXPECT_EQ(ParseGradientMode("autodiff"), GradientMode::kAutodiff);
  EXPECT_THROW(ParseGradientMode("adjoint"), Error);
}

TEST(QuantizeLambdaTest, ClampsThenRounds) {
  EXPECT_EQ(QuantizeLambda(0.4), 0.39990234375);
  EXPECT_GE(QuantizeLambda(0.0), kLambdaMin);
  EXPECT_LE(QuantizeLambda(1e9), kLambdaMax);
  EXPECT_EQ(QuantizeLambda(QuantizeLambda(0.0067)), QuantizeLambda(0.0067));
}

class DecoderObjectiveTest : public ::testing::Test {
 protected:
  void SetUp() override {
    model_ = Model::Create(testing::TinyConfig(), 0.01, 51);
    testing::RandomizeModulators(&model_.modulators, 52);
    patch_ = testing::RandomImage(20, 28, 53);
    const PaddedImage padded = PadToMultiple(patch_, kDownsampleFactor);
    z_ = RoundLatent(EncodeLatent(padded.image, model_.levels[0].encoder));
  }
  Model model_;
  ImageTensor patch_;
  QuantizedLatent z_;
};

TEST_F(DecoderObjectiveTest, AutodiffMatchesFiniteDifferences) {
  for (Metric metric : {Metric::kMse, Metric::kMsssim}) {
    DecoderObjective objective(patch_, z_, model_.decoder, model_.modulators,
                               metric);
    const std::vector<double> lam = {0.5, 0.3, 0.8, 0.6};
    const auto exact =
        GradLambda(objective, lam, GradientMode::kAutodiff, 1e-4);
    const auto numeric =
        GradLambda(objective, lam, GradientMode::kFiniteDifference, 1e-4);
    for (size_t k = 0; k < lam.size(); ++k) {
      EXPECT_LT(RelError(exact[k], numeric[k]), 1e-2)
          << MetricName(metric) << " k " << k << ": " << exact[k] << " vs "
          << numeric[k];
    }
  }
}

TEST_F(DecoderObjectiveTest, BestReconstructionIsReproducible) {
  OmlConfig config;
  config.iterations = 5;
  const OmlResult r = OmlAdaptPatch(patch_, z_, model_.decoder,
                                    model_.modulators, 0.0067, config);
  EXPECT_LE(r.best_distortion, r.initial_distortion);
  std::vector<double> from_bits;
  for (double v : r.best_lambdas) {
    from_bits.push_back(HalfBitsToDouble(DoubleToHalfBits(v)));
  }
  const Tensor again = ConditionalForward(z_.ToTensor(), model_.decoder,
                                          model_.modulators, from_bits,
                                          nullptr);
  EXPECT_EQ(again, r.best_reconstruction);
  const Tensor crop = CropTensor(again, 0, 0, 20, 28);
  EXPECT_EQ(MeanSquaredError(patch_.tensor(), crop), r.best_distortion);
}

TEST_F(DecoderObjectiveTest, RejectsLatentThatDoesNotCoverPatch) {
  const ImageTensor big = testing::RandomImage(40, 28, 1);
  EXPECT_THROW(DecoderObjective(big, z_, model_.decoder, model_.modulators,
                                Metric::kMse),
               Error);
}

}  // namespace
}  // namespace omlc
