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

#ifndef OMLC_TRAINING_H_
#define OMLC_TRAINING_H_

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "omlc/image.h"
#include "omlc/model.h"

namespace omlc {

// Base-model training hyperparameters.
struct TrainConfig {
  int steps = 2000;
  int batch_size = 4;
  int crop_size = 64;
  double learning_rate = 1e-4;
  // Multiplies lambda in the training objective. 255^2 matches the 8-bit
  // convention under which the usual lambda grid (0.0018 .. 0.18) is quoted.
  double distortion_scale = 65025.0;
  double holdout_fraction = 0.2;
  uint64_t seed = 1;
  int log_every = 0;
};

struct DatasetSplit {
  std::vector<ImageTensor> train;
  std::vector<ImageTensor> holdout;
};

// Deterministic split: the last ceil(fraction * n) images are held out.
// A single image serves as both splits.
DatasetSplit SplitDataset(const std::vector<ImageTensor>& images,
                          double holdout_fraction);

// Uniform random crop; images smaller than `size` are edge-padded first.
ImageTensor RandomCrop(const ImageTensor& image, int size,
                       std::mt19937_64& rng);

struct RdEvaluation {
  double loss = 0.0;
  double mse = 0.0;
  double bpp = 0.0;
};

// Hard-rounded rate-distortion of a quality level with the plain (or, when
// `lambdas` is non-empty, conditional) decoder, averaged over images.
RdEvaluation EvaluateRd(const Model& model, int level,
                        const std::vector<ImageTensor>& images,
                        double effective_lambda,
                        std::span<const double> lambdas = {});

struct TrainReport {
  double initial_holdout_loss = 0.0;
  double final_holdout_loss = 0.0;
  RdEvaluation final_holdout;
  std::vector<double> loss_history;
};

struct BaseTrainingResult {
  Model model;
  TrainReport report;
};

// RD loss of one crop for a single-level model with `noise` added to the
// latent in place of quantization, plain decoder. With `accumulate`, adds
// weight * d(loss)/d(param) to the encoder, decoder and entropy model.
double CropRdLoss(Model* model, const Tensor& x, const Tensor& noise,
                  double effective_lambda, double weight, bool accumulate);

using ProgressFn = std::function<void(int step, double loss)>;

// Trains encoder, plain decoder and entropy model at `lambda` with noisy
// quantization. Starts from `init` when given (its single level is
// re-targeted to `lambda`), otherwise from fresh weights.
BaseTrainingResult TrainBase(const std::vector<ImageTensor>& dataset,
                             double lambda, const CodecConfig& codec,
                             const TrainConfig& config,
                             const Model* init = nullptr,
                             const ProgressFn& progress = {});

}  // namespace omlc

#endif  // OMLC_TRAINING_H_
