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

#include "omlc/modulation.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "omlc/error.h"
#include "test_util.h"

namespace omlc {
namespace {

using testing::RandomizeModulators;
using testing::RelError;
using testing::TinyConfig;

TEST(SoftplusTest, Examples) {
  EXPECT_DOUBLE_EQ(Softplus(0.0), std::log(2.0));
  EXPECT_EQ(Softplus(kIdentityLogit), 1.0);
  EXPECT_NEAR(kIdentityLogit, std::log(std::exp(1.0) - 1.0), 1e-15);
  const double tiny = Softplus(-40.0);
  EXPECT_GT(tiny, 0.0);
  EXPECT_NEAR(tiny, 4.248354255291589e-18, 1e-30);
  EXPECT_EQ(Softplus(31.0), 31.0);
}

TEST(ScaleFactorsTest, BiasOnlyNetwork) {
  Modulator m("m", 3, 4);
  std::mt19937_64 rng(1);
  m.InitIdentity(rng);
  for (double v : ScaleFactors(0.01, m)) EXPECT_EQ(v, 1.0);
  m.b2.value = {0.0, kIdentityLogit, -40.0, 2.0};
  const ScaleVector s = ScaleFactors(0.3, m);
  EXPECT_DOUBLE_EQ(s[0], std::log(2.0));
  EXPECT_EQ(s[1], 1.0);
  EXPECT_GT(s[2], 0.0);
  EXPECT_DOUBLE_EQ(s[3], std::log1p(std::exp(2.0)));
}

TEST(ScaleFactorsTest, AlwaysPositive) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> log_lambda(std::log(kLambdaMin),
                                                    std::log(kLambdaMax));
  for (int trial = 0; trial < 50; ++trial) {
    Modulator m("m", 4, 8);
    std::normal_distribution<double> n(0.0, 20.0);
    for (Param* p : m.Params()) {
      for (double& v : p->value) v = n(rng);
    }
    for (double v : ScaleFactors(std::exp(log_lambda(rng)), m)) {
      EXPECT_GT(v, 0.0);
    }
  }
}

TEST(ScaleFactorsTest, OutOfRangeLambdaIsClamped) {
  Modulator m("m", 4, 3);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (Param* p : m.Params()) {
    for (double& v : p->value) v = n(rng);
  }
  EXPECT_EQ(ScaleFactors(1e9, m), ScaleFactors(kLambdaMax, m));
  EXPECT_EQ(ScaleFactors(0.0, m), ScaleFactors(kLambdaMin, m));

  ModulatorTape tape;
  const ScaleVector s = m.Scales(0.0, &tape);
  EXPECT_TRUE(tape.clamped);
  const std::vector<double> d(s.size(), 1.0);
  EXPECT_EQ(m.Backward(tape, d, nullptr), 0.0);
}

TEST(ModulateTest, Examples) {
  Tensor y = testing::RandomTensor({3, 4, 5}, -2, 2, 7);
  EXPECT_EQ(Modulate(y, std::vector<double>(3, 1.0)), y);

  const std::vector<double> s = {0.5, 2.0, 3.0};
  Tensor scaled = y;
  for (double& v : scaled.data()) v *= 4.0;
  const Tensor a = Modulate(scaled, s);
  const Tensor b = Modulate(y, s);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_DOUBLE_EQ(a.data()[i], 4.0 * b.data()[i]);
  }

  Tensor twos(3, 2, 2, 2.0);
  const Tensor out = Modulate(twos, s);
  for (double v : out.plane(2)) EXPECT_EQ(v, 6.0);
  for (double v : out.plane(0)) EXPECT_EQ(v, 1.0);

  EXPECT_THROW(Modulate(y, std::vector<double>(2, 1.0)), Error);
}

TEST(ModulateTest, ChannelIndependence) {
  const Tensor y = testing::RandomTensor({4, 3, 3}, -1, 1, 9);
  std::vector<double> s = {0.7, 1.3, 2.1, 0.4};
  const Tensor base = Modulate(y, s);
  s[2] = 5.0;
  const Tensor changed = Modulate(y, s);
  for (int c = 0; c < 4; ++c) {
    const bool same = std::equal(base.plane(c).begin(), base.plane(c).end(),
                                 changed.plane(c).begin());
    EXPECT_EQ(same, c != 2) << "channel " << c;
  }
}

class ConditionalDecodeTest : public ::testing::Test {
 protected:
  void SetUp() override {
    model_ = Model::Create(TinyConfig(), 0.01, 21);
    z_ = RoundLatent(testing::RandomTensor({4, 2, 3}, -3, 3, 22));
  }
  Model model_;
  QuantizedLatent z_;
};

TEST_F(ConditionalDecodeTest, IdentityModulatorsReproducePlainDecoder) {
  const Tensor plain = model_.decoder.Forward(z_.ToTensor(), {}, nullptr);
  for (double lambda : {1e-6, 0.0018, 0.18, 1e4}) {
    const ImageTensor out = ConditionalDecode(
        z_, model_.decoder, model_.modulators,
        TradeoffVector::Uniform(kNumBlocks, lambda));
    EXPECT_EQ(out.tensor(), plain) << "lambda " << lambda;
  }
}

TEST_F(ConditionalDecodeTest, DeterministicAndLambdaSensitive) {
  RandomizeModulators(&model_.modulators, 23);
  const auto lam_a = TradeoffVector::Uniform(kNumBlocks, 0.0018);
  const auto lam_b = TradeoffVector::Uniform(kNumBlocks, 0.18);
  const ImageTensor a1 =
      ConditionalDecode(z_, model_.decoder, model_.modulators, lam_a);
  const ImageTensor a2 =
      ConditionalDecode(z_, model_.decoder, model_.modulators, lam_a);
  const ImageTensor b =
      ConditionalDecode(z_, model_.decoder, model_.modulators, lam_b);
  EXPECT_EQ(a1, a2);
  EXPECT_NE(a1, b);
}

TEST_F(ConditionalDecodeTest, WrongTradeoffCountIsRejected) {
  try {
    ConditionalDecode(z_, model_.decoder, model_.modulators,
                      TradeoffVector::Uniform(3, 0.01));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
}

TEST(TradeoffVectorTest, Validation) {
  EXPECT_THROW(TradeoffVector(std::vector<double>{}), Error);
  EXPECT_THROW(TradeoffVector({0.1, -1.0}), Error);
  EXPECT_THROW(TradeoffVector({2e4}), Error);
  const TradeoffVector v({0.1, 0.2, 0.3});
  EXPECT_EQ(v.size(), 3u);
  EXPECT_EQ(v[1], 0.2);
}

// d(sum w * output)/d(lambda^k) against central differences. The absolute
// step 1e-4 * max(1, |lambda|) is checked where it is small next to lambda;
// a relative step covers smaller tradeoffs.
void CheckLambdaGradient(double log_lo, double log_hi, bool relative_step,
                         double tolerance) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> log_lambda(log_lo, log_hi);
  for (int trial = 0; trial < 5; ++trial) {
    Model m = Model::Create(TinyConfig(), 0.01, 100 + trial);
    RandomizeModulators(&m.modulators, 200 + trial);
    const Tensor latent =
        RoundLatent(testing::RandomTensor({4, 2, 2}, -4, 4, 300 + trial))
            .ToTensor();
    const Tensor w = testing::RandomTensor({3, 32, 32}, -1, 1, 400 + trial);
    auto objective = [&](const std::vector<double>& lam) {
      const Tensor out =
          ConditionalForward(latent, m.decoder, m.modulators, lam, nullptr);
      double s = 0.0;
      for (size_t i = 0; i < out.size(); ++i) s += w.data()[i] * out.data()[i];
      return s;
    };
    std::vector<double> lam(kNumBlocks);
    for (double& v : lam) v = std::exp(log_lambda(rng));

    ConditionalTape tape;
    ConditionalForward(latent, m.decoder, m.modulators, lam, &tape);
    const std::vector<double> grad =
        ConditionalBackward(tape, w, m.decoder, m.modulators, nullptr, nullptr);
    for (int k = 0; k < kNumBlocks; ++k) {
      const double h = relative_step
                            ? 1e-6 * lam[k]
                            : 1e-4 * std::max(1.0, std::abs(lam[k]));
      std::vector<double> up = lam, down = lam;
      up[k] += h;
      down[k] -= h;
      const double numeric = (objective(up) - objective(down)) / (2 * h);
      EXPECT_LT(RelError(grad[k], numeric), tolerance)
          << "trial " << trial << " k " << k << " analytic " << grad[k]
          << " numeric " << numeric;
    }
  }
}

TEST(ConditionalGradientTest, LambdaGradientMatchesFiniteDifferences) {
  CheckLambdaGradient(std::log(0.1), std::log(1.0), false, 1e-2);
}

TEST(ConditionalGradientTest, LambdaGradientSmallTradeoffs) {
  CheckLambdaGradient(std::log(1e-3), std::log(1.0), true, 1e-4);
}

TEST(ConditionalGradientTest, ParameterGradientsMatchFiniteDifferences) {
  Model m = Model::Create(TinyConfig(), 0.01, 41);
  RandomizeModulators(&m.modulators, 42);
  const Tensor latent =
      RoundLatent(testing::RandomTensor({4, 2, 2}, -4, 4, 43)).ToTensor();
  const Tensor w = testing::RandomTensor({3, 32, 32}, -1, 1, 44);
  const std::vector<double> lam = {0.01, 0.05, 0.002, 0.3};
  auto objective = [&]() {
    const Tensor out =
        ConditionalForward(latent, m.decoder, m.modulators, lam, nullptr);
    double s = 0.0;
    for (size_t i = 0; i < out.size(); ++i) s += w.data()[i] * out.data()[i];
    return s;
  };
  ParamList params = m.modulators.Params();
  for (Param* p : m.decoder.Params()) params.push_back(p);
  ZeroGrads(params);
  ConditionalTape tape;
  ConditionalForward(latent, m.decoder, m.modulators, lam, &tape);
  ConditionalBackward(tape, w, m.decoder, m.modulators, &m.decoder,
                      &m.modulators);

  std::mt19937_64 rng(45);
  int checked = 0;
  for (int attempt = 0; attempt < 400 && checked < 8; ++attempt) {
    Param* p = params[rng() % params.size()];
    const size_t i = rng() % p->size();
    if (std::abs(p->grad[i]) < 1e-4) continue;
    const double keep = p->value[i];
    const double h = 1e-5;
    p->value[i] = keep + h;
    const double up = objective();
    p->value[i] = keep - h;
    const double down = objective();
    p->value[i] = keep;
    EXPECT_LT(RelError(p->grad[i], (up - down) / (2 * h)), 1e-2) << p->name;
    ++checked;
  }
  EXPECT_EQ(checked, 8);
}

}  // namespace
}  // namespace omlc
