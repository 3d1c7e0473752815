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

// MAML over a grid of rate-distortion tradeoffs.
//
// The inner loop adapts the modulator parameters psi to one task; the outer
// loop updates psi and the shared decoder weights theta on the
// post-adaptation loss summed over tasks. Encoders and entropy models stay
// frozen, so the rate term is constant and only distortion drives learning.

#ifndef OMLC_META_TRAINING_H_
#define OMLC_META_TRAINING_H_

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "omlc/codec.h"
#include "omlc/image.h"
#include "omlc/model.h"
#include "omlc/nn.h"

namespace omlc {

struct MetaConfig {
  double alpha = 1e-3;
  int inner_steps = 1;
  double outer_learning_rate = 1e-4;
  int outer_iterations = 500;
  int batch_size = 2;
  int crop_size = 64;
  bool first_order = true;
  // "adam" or "sgd".
  std::string outer_optimizer = "adam";
  // kRound uses hard rounding (the encoder is frozen, so no gradient flows
  // through the quantizer); kNoise is kept for ablations.
  QuantizationMode quantization = QuantizationMode::kRound;
  double distortion_scale = 65025.0;
  double holdout_fraction = 0.2;
  // Probe size for the finite-difference Hessian-vector products of exact
  // (second-order) mode.
  double hvp_epsilon = 1e-5;
  uint64_t seed = 1;
  int log_every = 0;

  void Validate() const;
};

// One task's loss with gradients, as a function of flat parameter vectors.
class MetaTask {
 public:
  enum class Split { kSupport, kQuery };
  virtual ~MetaTask() = default;
  // Either gradient pointer may be null.
  virtual double Loss(Split split, std::span<const double> psi,
                      std::span<const double> theta, std::vector<double>* g_psi,
                      std::vector<double>* g_theta) = 0;
};

// psi after `steps` gradient steps of size alpha on the support loss.
// Throws kNumerical on a non-finite gradient.
std::vector<double> InnerAdapt(MetaTask& task, std::span<const double> psi,
                               std::span<const double> theta, double alpha,
                               int steps);

struct MetaGradient {
  // Post-adaptation query loss summed over tasks.
  double loss = 0.0;
  std::vector<double> g_psi;
  std::vector<double> g_theta;
};

// Gradient of sum_j L_query(InnerAdapt(psi), theta). With `first_order`
// the dependence of the adapted psi on (psi, theta) is ignored; otherwise
// it is backpropagated through every inner step using Hessian-vector
// products from central differences of the support gradient.
MetaGradient ComputeMetaGradient(std::span<MetaTask* const> tasks,
                                 std::span<const double> psi,
                                 std::span<const double> theta, double alpha,
                                 int inner_steps, bool first_order,
                                 double hvp_epsilon);

// Outer optimizer over flat vectors.
class FlatOptimizer {
 public:
  // `kind` is "adam" or "sgd".
  FlatOptimizer(const std::string& kind, double learning_rate);
  void Step(std::vector<double>* values, const std::vector<double>& grad);

 private:
  bool adam_;
  double learning_rate_;
  Param param_;
  Adam optimizer_;
};

// Per-task random crops, one vector per lambda, fully determined by `seed`.
std::vector<std::vector<ImageTensor>> SampleTaskBatch(
    size_t num_tasks, const std::vector<ImageTensor>& dataset, int batch,
    int crop_size, uint64_t seed);

// A meta model whose levels are the given single-level base models in
// increasing lambda order. The shared decoder starts from the base at the
// median lambda; modulators start at identity.
Model BuildTaskGrid(const std::vector<Model>& bases, uint64_t seed);

// Rate-distortion task on one quality level of a meta model, with
// lambda^1 = ... = lambda^K = the level's lambda.
class CodecMetaTask : public MetaTask {
 public:
  CodecMetaTask(const Model& model, int level, double distortion_scale,
                QuantizationMode quantization, uint64_t seed);
  void SetData(std::vector<ImageTensor> support,
               std::vector<ImageTensor> query);
  double Loss(Split split, std::span<const double> psi,
              std::span<const double> theta, std::vector<double>* g_psi,
              std::vector<double>* g_theta) override;

 private:
  struct Sample {
    Tensor image;
    Tensor latent;
    double bpp = 0.0;
  };
  std::vector<Sample> Prepare(const std::vector<ImageTensor>& images);

  const Model& model_;
  int level_;
  double lambda_;
  double effective_lambda_;
  QuantizationMode quantization_;
  std::mt19937_64 rng_;
  std::vector<Sample> support_;
  std::vector<Sample> query_;
  Decoder decoder_;
  ModulatorParams modulators_;
};

// Aborts training whose loss stays above 10x the first observed loss for
// 100 consecutive observations.
class DivergenceGuard {
 public:
  // Throws kNumerical on a non-finite loss or on divergence.
  void Observe(double loss);

 private:
  int observed_ = 0;
  double initial_ = 0.0;
  int above_ = 0;
};

struct MetaReport {
  double initial_holdout_loss = 0.0;
  double final_holdout_loss = 0.0;
  // Per level, conditional decode at the level's lambda.
  std::vector<double> final_holdout_mse;
  std::vector<double> loss_history;
};

struct MetaTrainingResult {
  Model model;
  MetaReport report;
};

using MetaProgressFn = std::function<void(int iteration, double loss)>;

// Average over levels of the held-out RD loss with the conditional decoder.
double MetaHoldoutLoss(const Model& model,
                       const std::vector<ImageTensor>& holdout,
                       double distortion_scale,
                       std::vector<double>* per_level_mse = nullptr);

// Trains decoder and modulators of `grid` (see BuildTaskGrid). Throws
// kNumerical when the loss stays above 10x its initial value for 100
// consecutive iterations.
MetaTrainingResult MetaTrain(const Model& grid,
                             const std::vector<ImageTensor>& dataset,
                             const MetaConfig& config,
                             const MetaProgressFn& progress = {});

}  // namespace omlc

#endif  // OMLC_META_TRAINING_H_
