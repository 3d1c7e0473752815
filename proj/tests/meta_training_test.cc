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

#include "omlc/meta_training.h"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "omlc/error.h"
#include "omlc/synthetic.h"
#include "omlc/training.h"
#include "test_util.h"

namespace omlc {
namespace {

using testing::ErrorCodeOf;
using testing::RelError;
using testing::TinyConfig;

// L(psi, theta) = (psi + theta - c)^2 on both splits; theta may be empty.
class QuadraticTask : public MetaTask {
 public:
  explicit QuadraticTask(double c) : c_(c) {}
  double Loss(Split, std::span<const double> psi,
              std::span<const double> theta, std::vector<double>* g_psi,
              std::vector<double>* g_theta) override {
    const double r = psi[0] + (theta.empty() ? 0.0 : theta[0]) - c_;
    if (g_psi != nullptr) *g_psi = {2 * r};
    if (g_theta != nullptr) {
      g_theta->assign(theta.size(), 2 * r);
    }
    return r * r;
  }

 private:
  double c_;
};

TEST(InnerAdaptTest, QuadraticSteps) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const double c = u(rng), psi = u(rng), alpha = 0.2 * std::abs(u(rng));
    QuadraticTask task(c);
    const std::vector<double> p = {psi};
    EXPECT_NEAR(InnerAdapt(task, p, {}, alpha, 1)[0],
                (1 - 2 * alpha) * psi + 2 * alpha * c, 1e-12);
    EXPECT_NEAR(InnerAdapt(task, p, {}, alpha, 3)[0],
                std::pow(1 - 2 * alpha, 3) * (psi - c) + c, 1e-12);
    EXPECT_EQ(InnerAdapt(task, p, {}, 0.0, 5), p);
  }
}

TEST(MetaGradientTest, ExactModeMatchesAnalytic) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const double c = u(rng), psi = u(rng), alpha = 0.05 * (1 + trial % 4);
    QuadraticTask task(c);
    MetaTask* tasks[] = {&task};
    const std::vector<double> p = {psi};
    const MetaGradient one =
        ComputeMetaGradient(tasks, p, {}, alpha, 1, false, 1e-5);
    const double a = 1 - 2 * alpha;
    EXPECT_NEAR(one.g_psi[0], 2 * a * a * (psi - c), 1e-6);
    EXPECT_NEAR(one.loss, a * a * (psi - c) * (psi - c), 1e-12);
    const MetaGradient two =
        ComputeMetaGradient(tasks, p, {}, alpha, 2, false, 1e-5);
    EXPECT_NEAR(two.g_psi[0], 2 * std::pow(a, 4) * (psi - c), 1e-6);
    const MetaGradient first =
        ComputeMetaGradient(tasks, p, {}, alpha, 1, true, 1e-5);
    EXPECT_NEAR(first.g_psi[0], 2 * a * (psi - c), 1e-12);
  }
}

TEST(MetaGradientTest, ExactModeCarriesSharedParameters) {
  // With theta, one inner step gives r' = (1 - 2 alpha) r, so both
  // gradients are 2 (1 - 2 alpha)^2 r.
  QuadraticTask t1(1.0), t2(-0.5);
  MetaTask* tasks[] = {&t1, &t2};
  const std::vector<double> psi = {0.3}, theta = {0.9};
  const double alpha = 0.1, a = 1 - 2 * alpha;
  const MetaGradient g =
      ComputeMetaGradient(tasks, psi, theta, alpha, 1, false, 1e-5);
  const double r1 = 0.3 + 0.9 - 1.0, r2 = 0.3 + 0.9 + 0.5;
  EXPECT_NEAR(g.g_psi[0], 2 * a * a * (r1 + r2), 1e-6);
  EXPECT_NEAR(g.g_theta[0], 2 * a * a * (r1 + r2), 1e-6);
}

TEST(MetaGradientTest, ToyFamilyConvergesToMean) {
  const std::vector<double> cs = {1.0, 2.0, 6.0, -1.5};
  std::vector<QuadraticTask> owned;
  for (double c : cs) owned.emplace_back(c);
  std::vector<MetaTask*> tasks;
  for (QuadraticTask& t : owned) tasks.push_back(&t);
  const double mean = std::accumulate(cs.begin(), cs.end(), 0.0) / cs.size();

  for (bool first_order : {false, true}) {
    std::vector<double> psi = {-10.0};
    FlatOptimizer opt("sgd", 0.02);
    int steps = 0;
    while (steps < 2000 && std::abs(psi[0] - mean) >= 1e-3) {
      const MetaGradient g =
          ComputeMetaGradient(tasks, psi, {}, 0.1, 1, first_order, 1e-5);
      opt.Step(&psi, g.g_psi);
      ++steps;
    }
    EXPECT_NEAR(psi[0], mean, 1e-3) << "first_order " << first_order;
    EXPECT_LE(steps, 2000);
  }
}

TEST(MetaGradientTest, NonFiniteGradientAborts) {
  class Broken : public MetaTask {
   public:
    double Loss(Split, std::span<const double>, std::span<const double>,
                std::vector<double>* g_psi, std::vector<double>*) override {
      if (g_psi != nullptr) *g_psi = {NAN};
      return 1.0;
    }
  } task;
  const std::vector<double> psi = {0.0};
  EXPECT_EQ(ErrorCodeOf([&] { InnerAdapt(task, psi, {}, 0.1, 1); }),
            ErrorCode::kNumerical);
}

TEST(FlatOptimizerTest, SgdAndAdam) {
  FlatOptimizer sgd("sgd", 0.5);
  std::vector<double> v = {1.0, 2.0};
  sgd.Step(&v, {2.0, -2.0});
  EXPECT_EQ(v, (std::vector<double>{0.0, 3.0}));
  FlatOptimizer adam("adam", 0.1);
  v = {1.0, 2.0};
  adam.Step(&v, {2.0, -0.001});
  EXPECT_NEAR(v[0], 0.9, 1e-6);
  EXPECT_NEAR(v[1], 2.1, 1e-4);
  EXPECT_THROW(FlatOptimizer("rmsprop", 0.1), Error);
}

TEST(DivergenceGuardTest, NeedsHundredConsecutiveExcursions) {
  DivergenceGuard guard;
  guard.Observe(1.0);
  for (int i = 0; i < 99; ++i) guard.Observe(11.0);
  guard.Observe(5.0);
  for (int i = 0; i < 99; ++i) guard.Observe(100.0);
  EXPECT_EQ(ErrorCodeOf([&] { guard.Observe(100.0); }),
            ErrorCode::kNumerical);
  DivergenceGuard other;
  other.Observe(1.0);
  EXPECT_EQ(ErrorCodeOf([&] { other.Observe(NAN); }), ErrorCode::kNumerical);
}

TEST(SampleTaskBatchTest, CountsShapesAndDeterminism) {
  const auto data = GenerateTextureCorpus(4, 40, 48, 3);
  const auto a = SampleTaskBatch(3, data, 2, 32, 9);
  ASSERT_EQ(a.size(), 3u);
  for (const auto& task : a) {
    ASSERT_EQ(task.size(), 2u);
    for (const ImageTensor& crop : task) {
      EXPECT_EQ(crop.height(), 32);
      EXPECT_EQ(crop.width(), 32);
    }
  }
  const auto b = SampleTaskBatch(3, data, 2, 32, 9);
  const auto c = SampleTaskBatch(3, data, 2, 32, 10);
  for (size_t j = 0; j < 3; ++j) {
    for (size_t i = 0; i < 2; ++i) {
      EXPECT_EQ(a[j][i], b[j][i]);
    }
  }
  EXPECT_NE(a[0][0], c[0][0]);
  EXPECT_THROW(SampleTaskBatch(1, {}, 2, 32, 1), Error);
}

class TaskGridTest : public ::testing::Test {
 protected:
  void SetUp() override {
    data_ = GenerateTextureCorpus(5, 32, 32, 11);
    for (double lambda : {0.013, 0.0018, 0.0067}) {
      bases_.push_back(Model::Create(TinyConfig(), lambda,
                                     static_cast<uint64_t>(lambda * 1e4)));
    }
  }
  std::vector<ImageTensor> data_;
  std::vector<Model> bases_;
};

TEST_F(TaskGridTest, BuildSortsAndStartsFromMedianBase) {
  const Model grid = BuildTaskGrid(bases_, 1);
  EXPECT_TRUE(grid.meta);
  EXPECT_EQ(grid.Lambdas(), (std::vector<double>{0.0018, 0.0067, 0.013}));
  const ConstParamList got = grid.decoder.Params();
  const ConstParamList want = std::as_const(bases_[2].decoder).Params();
  for (size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i]->value, want[i]->value);
  }
  for (int k = 0; k < grid.modulators.num_layers(); ++k) {
    for (double s : ScaleFactors(0.5, grid.modulators.layer(k))) {
      EXPECT_EQ(s, 1.0);
    }
  }
  std::vector<Model> dup = {bases_[0], bases_[0]};
  EXPECT_THROW(BuildTaskGrid(dup, 1), Error);
}

TEST_F(TaskGridTest, CodecTaskGradientsMatchFiniteDifferences) {
  Model grid = BuildTaskGrid(bases_, 1);
  testing::RandomizeModulators(&grid.modulators, 5, 0.3);
  CodecMetaTask task(grid, 1, 1.0, QuantizationMode::kRound, 3);
  const auto crops = SampleTaskBatch(1, data_, 2, 32, 4);
  task.SetData(crops[0], crops[0]);
  std::vector<double> psi =
      FlattenValues(std::as_const(grid.modulators).Params());
  std::vector<double> theta =
      FlattenValues(std::as_const(grid.decoder).Params());
  std::vector<double> g_psi, g_theta;
  task.Loss(MetaTask::Split::kQuery, psi, theta, &g_psi, &g_theta);

  std::mt19937_64 rng(6);
  auto check = [&](std::vector<double>* v, const std::vector<double>& g) {
    int checked = 0;
    for (int attempt = 0; attempt < 500 && checked < 6; ++attempt) {
      const size_t i = rng() % v->size();
      if (std::abs(g[i]) < 1e-5) continue;
      const double keep = (*v)[i], h = 1e-6;
      (*v)[i] = keep + h;
      const double up =
          task.Loss(MetaTask::Split::kQuery, psi, theta, nullptr, nullptr);
      (*v)[i] = keep - h;
      const double down =
          task.Loss(MetaTask::Split::kQuery, psi, theta, nullptr, nullptr);
      (*v)[i] = keep;
      EXPECT_LT(RelError(g[i], (up - down) / (2 * h)), 1e-3) << i;
      ++checked;
    }
    EXPECT_EQ(checked, 6);
  };
  check(&psi, g_psi);
  check(&theta, g_theta);
}

TEST_F(TaskGridTest, MetaTrainLeavesEncodersAndEntropyModelsFrozen) {
  const Model grid = BuildTaskGrid(bases_, 1);
  MetaConfig config;
  config.outer_iterations = 4;
  config.batch_size = 1;
  config.crop_size = 32;
  config.outer_learning_rate = 1e-3;
  const MetaTrainingResult r = MetaTrain(grid, data_, config);
  ASSERT_EQ(r.model.levels.size(), 3u);
  for (size_t i = 0; i < 3; ++i) {
    const auto a = r.model.levels[i].encoder.Params();
    const auto b = grid.levels[i].encoder.Params();
    for (size_t p = 0; p < a.size(); ++p) EXPECT_EQ(a[p]->value, b[p]->value);
    EXPECT_EQ(r.model.levels[i].entropy.log_scales.value,
              grid.levels[i].entropy.log_scales.value);
    EXPECT_EQ(r.model.levels[i].lambda, grid.levels[i].lambda);
  }
  EXPECT_NE(r.model.Checksum(), grid.Checksum());
  EXPECT_EQ(r.report.loss_history.size(), 4u);
  EXPECT_EQ(r.report.final_holdout_mse.size(), 3u);

  const MetaTrainingResult again = MetaTrain(grid, data_, config);
  EXPECT_EQ(again.model.Checksum(), r.model.Checksum());
}

TEST_F(TaskGridTest, SingleTaskReducesToBaseTraining) {
  // With one task and identity modulators the holdout objective is the
  // base model's rate-distortion loss.
  const Model grid = BuildTaskGrid({bases_[1]}, 1);
  const auto split = SplitDataset(data_, 0.2);
  const double ds = 65025.0;
  EXPECT_NEAR(MetaHoldoutLoss(grid, split.holdout, ds),
              EvaluateRd(bases_[1], 0, split.holdout, 0.0018 * ds).loss,
              1e-12);
  MetaConfig config;
  config.outer_iterations = 2;
  config.batch_size = 1;
  config.crop_size = 32;
  EXPECT_NO_THROW(MetaTrain(grid, data_, config));
}

TEST(MetaConfigTest, Validation) {
  MetaConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.alpha = -1;
  EXPECT_THROW(c.Validate(), Error);
  c = MetaConfig();
  c.inner_steps = 0;
  EXPECT_THROW(c.Validate(), Error);
  c = MetaConfig();
  c.outer_optimizer = "lbfgs";
  EXPECT_THROW(c.Validate(), Error);
}

}  // namespace
}  // namespace omlc
