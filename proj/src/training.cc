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

#include "omlc/training.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "omlc/error.h"

namespace omlc {

DatasetSplit SplitDataset(const std::vector<ImageTensor>& images,
                          double holdout_fraction) {
  if (images.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "dataset is empty");
  }
  OMLC_CHECK_ARG(holdout_fraction >= 0.0 && holdout_fraction < 1.0,
                 "holdout fraction must be in [0, 1)");
  DatasetSplit split;
  if (images.size() == 1) {
    split.train = images;
    split.holdout = images;
    return split;
  }
  size_t held = static_cast<size_t>(
      std::ceil(holdout_fraction * static_cast<double>(images.size())));
  held = std::clamp<size_t>(held, 1, images.size() - 1);
  split.train.assign(images.begin(), images.end() - held);
  split.holdout.assign(images.end() - held, images.end());
  return split;
}

ImageTensor RandomCrop(const ImageTensor& image, int size,
                       std::mt19937_64& rng) {
  OMLC_CHECK_ARG(size >= 1, "crop size must be positive");
  Tensor src = image.tensor();
  if (src.height() < size || src.width() < size) {
    src = PadTensorEdge(src, std::max(size, src.height()),
                        std::max(size, src.width()));
  }
  std::uniform_int_distribution<int> ys(0, src.height() - size);
  std::uniform_int_distribution<int> xs(0, src.width() - size);
  const int top = ys(rng);
  const int left = xs(rng);
  return ImageTensor(CropTensor(src, top, left, size, size));
}

RdEvaluation EvaluateRd(const Model& model, int level,
                        const std::vector<ImageTensor>& images,
                        double effective_lambda,
                        std::span<const double> lambdas) {
  OMLC_CHECK_ARG(!images.empty(), "no images to evaluate");
  const QualityLevel& q = model.levels.at(level);
  RdEvaluation total;
  for (const ImageTensor& image : images) {
    const PaddedImage padded = PadToMultiple(image, kDownsampleFactor);
    const QuantizedLatent z = RoundLatent(EncodeLatent(padded.image, q.encoder));
    const Tensor latent = z.ToTensor();
    Tensor recon =
        lambdas.empty()
            ? model.decoder.Forward(latent, {}, nullptr)
            : ConditionalForward(latent, model.decoder, model.modulators,
                                 lambdas, nullptr);
    recon = CropTensor(recon, 0, 0, image.height(), image.width());
    const double mse = MeanSquaredError(image.tensor(), recon);
    const double bpp =
        q.entropy.RateBits(z) / static_cast<double>(image.num_pixels());
    total.mse += mse;
    total.bpp += bpp;
    total.loss += effective_lambda * mse + bpp;
  }
  const double n = static_cast<double>(images.size());
  total.mse /= n;
  total.bpp /= n;
  total.loss /= n;
  return total;
}

double CropRdLoss(Model* model, const Tensor& x, const Tensor& noise,
                  double effective_lambda, double weight, bool accumulate) {
  QualityLevel& level = model->levels.front();
  const double pixels = static_cast<double>(x.plane_size());
  EncoderTape enc_tape;
  DecoderTape dec_tape;
  const Tensor y = level.encoder.Forward(x, accumulate ? &enc_tape : nullptr);
  RequireSameShape(y, noise, "latent noise");
  Tensor noisy = y;
  auto nv = noisy.data();
  const auto uv = noise.data();
  for (size_t i = 0; i < nv.size(); ++i) nv[i] += uv[i];
  const Tensor x_hat =
      model->decoder.Forward(noisy, {}, accumulate ? &dec_tape : nullptr);
  const double mse = MeanSquaredError(x, x_hat);
  if (!accumulate) {
    return effective_lambda * mse + level.entropy.RateBits(noisy) / pixels;
  }

  Tensor d_latent(noisy.shape());
  const double bits = level.entropy.RateBitsWithGradient(
      noisy, weight / pixels, &d_latent, /*accumulate_params=*/true);
  Tensor d_out(x_hat.shape());
  const double coeff =
      weight * effective_lambda * 2.0 / static_cast<double>(x.size());
  auto dx = d_out.data();
  const auto xh = x_hat.data();
  const auto xv = x.data();
  for (size_t i = 0; i < dx.size(); ++i) dx[i] = coeff * (xh[i] - xv[i]);
  const Tensor d_dist = model->decoder.Backward(dec_tape, d_out, {}, nullptr,
                                                &model->decoder, true);
  auto dl = d_latent.data();
  const auto dd = d_dist.data();
  for (size_t i = 0; i < dl.size(); ++i) dl[i] += dd[i];
  level.encoder.AccumulateGradients(enc_tape, d_latent);
  return effective_lambda * mse + bits / pixels;
}

BaseTrainingResult TrainBase(const std::vector<ImageTensor>& dataset,
                             double lambda, const CodecConfig& codec,
                             const TrainConfig& config, const Model* init,
                             const ProgressFn& progress) {
  OMLC_CHECK_ARG(lambda > 0.0, "lambda must be positive");
  OMLC_CHECK_ARG(config.steps >= 0 && config.batch_size >= 1,
                 "steps must be >= 0 and batch size >= 1");
  OMLC_CHECK_ARG(config.crop_size >= kDownsampleFactor &&
                     config.crop_size % kDownsampleFactor == 0,
                 "crop size must be a positive multiple of 16");
  const DatasetSplit split = SplitDataset(dataset, config.holdout_fraction);

  BaseTrainingResult result;
  if (init != nullptr) {
    OMLC_CHECK_ARG(init->levels.size() == 1 && init->config == codec,
                   "warm start needs a single-level model of the same shape");
    result.model = *init;
    result.model.levels.front().lambda = lambda;
    result.model.meta = false;
  } else {
    result.model = Model::Create(codec, lambda, config.seed);
  }
  Model& model = result.model;
  QualityLevel& level = model.levels.front();
  const double effective_lambda = lambda * config.distortion_scale;

  result.report.initial_holdout_loss =
      EvaluateRd(model, 0, split.holdout, effective_lambda).loss;

  ParamList params = level.encoder.Params();
  for (Param* p : model.decoder.Params()) params.push_back(p);
  for (Param* p : level.entropy.Params()) params.push_back(p);
  Adam optimizer(config.learning_rate);
  std::mt19937_64 rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::uniform_int_distribution<size_t> pick(0, split.train.size() - 1);

  const double weight = 1.0 / config.batch_size;
  for (int step = 0; step < config.steps; ++step) {
    ZeroGrads(params);
    double step_loss = 0.0;
    for (int b = 0; b < config.batch_size; ++b) {
      const ImageTensor crop =
          RandomCrop(split.train[pick(rng)], config.crop_size, rng);
      const Shape latent_shape{codec.latent_channels,
                               config.crop_size / kDownsampleFactor,
                               config.crop_size / kDownsampleFactor};
      const Tensor noise = Quantize(Tensor(latent_shape),
                                    QuantizationMode::kNoise, &rng);
      step_loss += CropRdLoss(&model, crop.tensor(), noise, effective_lambda,
                              weight, /*accumulate=*/true);
    }
    step_loss *= weight;
    if (!std::isfinite(step_loss)) {
      throw Error(ErrorCode::kNumerical,
                  "non-finite training loss at step " + std::to_string(step));
    }
    optimizer.Step(params);
    result.report.loss_history.push_back(step_loss);
    if (progress && config.log_every > 0 && (step + 1) % config.log_every == 0) {
      progress(step + 1, step_loss);
    }
  }

  result.report.final_holdout =
      EvaluateRd(model, 0, split.holdout, effective_lambda);
  result.report.final_holdout_loss = result.report.final_holdout.loss;
  model.training_info = {
      {"stage", "base"},
      {"lambda", lambda},
      {"steps", config.steps},
      {"batch_size", config.batch_size},
      {"crop_size", config.crop_size},
      {"learning_rate", config.learning_rate},
      {"distortion_scale", config.distortion_scale},
      {"seed", config.seed},
      {"warm_start", init != nullptr},
      {"holdout_loss_initial", result.report.initial_holdout_loss},
      {"holdout_loss_final", result.report.final_holdout_loss},
  };
  return result;
}

}  // namespace omlc
