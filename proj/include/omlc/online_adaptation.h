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

// Encode-time adaptation of the per-block tradeoffs lambda^1..lambda^K.
//
// The latent is fixed; only the decoder conditioning changes. Every
// candidate is clamped and rounded to binary16 before it is evaluated, so
// the decoder reproduces the selected reconstruction from the transmitted
// side information alone.

#ifndef OMLC_ONLINE_ADAPTATION_H_
#define OMLC_ONLINE_ADAPTATION_H_

#include <cstdint>
#include <functional>
#include <string>
#include <span>
#include <vector>

#include "omlc/codec.h"
#include "omlc/image.h"
#include "omlc/metrics.h"
#include "omlc/modulation.h"

namespace omlc {

enum class GradientMode { kAutodiff, kFiniteDifference };

GradientMode ParseGradientMode(const std::string& name);
const char* GradientModeName(GradientMode mode);

struct OmlConfig {
  int iterations = 5;
  std::vector<double> gamma_grid = {0.01, 0.1, 1.0, 10.0, 100.0, 1000.0};
  Metric metric = Metric::kMse;
  GradientMode gradient_mode = GradientMode::kAutodiff;
  // Relative: the step for coordinate k is fd_step * max(1, |lambda^k|).
  double fd_step = 1e-4;
  uint64_t seed = 1;

  // Throws kInvalidArgument on negative iterations, an empty or
  // non-increasing grid, or a non-positive fd_step.
  void Validate() const;
};

struct OmlTraceEntry {
  // 0 for the initial evaluation.
  int iteration = 0;
  double gamma = 0.0;
  std::vector<double> candidate;
  double distortion = 0.0;
  bool accepted = false;
};

struct OmlResult {
  std::vector<double> best_lambdas;
  // Whatever the objective produced for the best candidate (for decoder
  // objectives, the full padded reconstruction).
  Tensor best_reconstruction;
  double best_distortion = 0.0;
  double initial_distortion = 0.0;
  std::vector<OmlTraceEntry> trace;
  // Number of objective evaluations, gradients excluded.
  int evaluations = 0;
};

// A scalar function of the tradeoff vector.
class LambdaObjective {
 public:
  virtual ~LambdaObjective() = default;
  virtual size_t dimension() const = 0;
  // `reconstruction` may be null.
  virtual double Evaluate(std::span<const double> lambdas,
                          Tensor* reconstruction) = 0;
  virtual bool has_gradient() const { return false; }
  // Exact gradient; only called when has_gradient().
  virtual std::vector<double> Gradient(std::span<const double> lambdas);
  // Finite differences never probe below this value.
  virtual double lower_bound() const { return kLambdaMin; }
};

// Objective given as plain functions; used for oracle tests.
class SurrogateObjective : public LambdaObjective {
 public:
  using Fn = std::function<double(std::span<const double>)>;
  using GradFn = std::function<std::vector<double>(std::span<const double>)>;

  SurrogateObjective(size_t dimension, Fn fn, GradFn grad = {});

  size_t dimension() const override { return dimension_; }
  double Evaluate(std::span<const double> lambdas,
                  Tensor* reconstruction) override;
  bool has_gradient() const override { return static_cast<bool>(grad_); }
  std::vector<double> Gradient(std::span<const double> lambdas) override;

 private:
  size_t dimension_;
  Fn fn_;
  GradFn grad_;
};

// Distortion between a patch and the conditional decode of its latent.
// The patch is edge-padded to the latent's resolution; distortion is
// measured on the original extent, except for MS-SSIM on patches smaller
// than 16 pixels, which is measured on the padded extent.
class DecoderObjective : public LambdaObjective {
 public:
  DecoderObjective(const ImageTensor& patch, const QuantizedLatent& z,
                   const Decoder& decoder, const ModulatorParams& modulators,
                   Metric metric);

  size_t dimension() const override;
  double Evaluate(std::span<const double> lambdas,
                  Tensor* reconstruction) override;
  bool has_gradient() const override { return true; }
  std::vector<double> Gradient(std::span<const double> lambdas) override;

 private:
  Tensor Region(const Tensor& full) const;

  Tensor target_;  // padded patch
  Tensor latent_;
  const Decoder& decoder_;
  const ModulatorParams& modulators_;
  Metric metric_;
  int height_;
  int width_;
  bool crop_;
};

// Throws kNumerical when the objective is not finite.
std::vector<double> GradLambda(LambdaObjective& objective,
                               std::span<const double> lambdas,
                               GradientMode mode, double fd_step);

// Clamp to [kLambdaMin, kLambdaMax] then round to binary16. Values are
// chosen so the result stays inside the clamp range.
double QuantizeLambda(double lambda);

// Starts from (lambda_t, ..., lambda_t). Iteration 1 scans the gamma grid
// (ties go to the smaller step) and later iterations take one step of
// gamma*, halving it whenever the candidate fails to improve. The gradient
// is always taken at the best point so far. n = 0 evaluates only the start.
OmlResult OmlAdapt(LambdaObjective& objective, double lambda_t,
                   const OmlConfig& config);

// Convenience wrapper over DecoderObjective.
OmlResult OmlAdaptPatch(const ImageTensor& patch, const QuantizedLatent& z,
                        const Decoder& decoder,
                        const ModulatorParams& modulators, double lambda_t,
                        const OmlConfig& config);

}  // namespace omlc

#endif  // OMLC_ONLINE_ADAPTATION_H_
