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

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>

#include "omlc/error.h"
#include "omlc/modulation.h"
#include "omlc/training.h"

namespace omlc {
namespace {

void Axpy(double a, std::span<const double> x, std::vector<double>* y) {
  for (size_t i = 0; i < x.size(); ++i) (*y)[i] += a * x[i];
}

double Norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void RequireFinite(std::span<const double> g, const char* what) {
  if (!AllFinite(g)) {
    throw Error(ErrorCode::kNumerical, std::string("non-finite ") + what);
  }
}

}  // namespace

void MetaConfig::Validate() const {
  OMLC_CHECK_ARG(alpha >= 0.0, "alpha must be >= 0");
  OMLC_CHECK_ARG(inner_steps >= 1, "inner steps must be >= 1");
  OMLC_CHECK_ARG(outer_learning_rate > 0.0, "outer step size must be > 0");
  OMLC_CHECK_ARG(outer_iterations >= 0, "outer iterations must be >= 0");
  OMLC_CHECK_ARG(batch_size >= 1, "batch size must be >= 1");
  OMLC_CHECK_ARG(crop_size >= kDownsampleFactor &&
                     crop_size % kDownsampleFactor == 0,
                 "crop size must be a positive multiple of 16");
  OMLC_CHECK_ARG(outer_optimizer == "adam" || outer_optimizer == "sgd",
                 "outer optimizer must be adam or sgd");
  OMLC_CHECK_ARG(distortion_scale > 0.0, "distortion scale must be > 0");
  OMLC_CHECK_ARG(hvp_epsilon > 0.0, "hvp epsilon must be > 0");
}

std::vector<double> InnerAdapt(MetaTask& task, std::span<const double> psi,
                               std::span<const double> theta, double alpha,
                               int steps) {
  OMLC_CHECK_ARG(alpha >= 0.0 && steps >= 0, "invalid inner loop settings");
  std::vector<double> out(psi.begin(), psi.end());
  std::vector<double> g;
  for (int s = 0; s < steps; ++s) {
    task.Loss(MetaTask::Split::kSupport, out, theta, &g, nullptr);
    RequireFinite(g, "inner gradient");
    Axpy(-alpha, g, &out);
  }
  return out;
}

MetaGradient ComputeMetaGradient(std::span<MetaTask* const> tasks,
                                 std::span<const double> psi,
                                 std::span<const double> theta, double alpha,
                                 int inner_steps, bool first_order,
                                 double hvp_epsilon) {
  MetaGradient mg;
  mg.g_psi.assign(psi.size(), 0.0);
  mg.g_theta.assign(theta.size(), 0.0);
  std::vector<double> g_psi, g_theta, gp_plus, gt_plus, gp_minus, gt_minus;
  for (MetaTask* task : tasks) {
    std::vector<std::vector<double>> path{
        std::vector<double>(psi.begin(), psi.end())};
    for (int s = 0; s < inner_steps; ++s) {
      task->Loss(MetaTask::Split::kSupport, path.back(), theta, &g_psi,
                 nullptr);
      RequireFinite(g_psi, "inner gradient");
      std::vector<double> next = path.back();
      Axpy(-alpha, g_psi, &next);
      path.push_back(std::move(next));
    }
    mg.loss += task->Loss(MetaTask::Split::kQuery, path.back(), theta, &g_psi,
                          &g_theta);
    RequireFinite(g_psi, "outer gradient");
    RequireFinite(g_theta, "outer gradient");
    if (!first_order && alpha > 0.0) {
      // Reverse pass through psi_{i+1} = psi_i - alpha * grad L_s(psi_i).
      for (int s = inner_steps - 1; s >= 0; --s) {
        const double norm = Norm(g_psi);
        if (norm == 0.0) break;
        const double e = hvp_epsilon / norm;
        std::vector<double> probe = path[s];
        Axpy(e, g_psi, &probe);
        task->Loss(MetaTask::Split::kSupport, probe, theta, &gp_plus,
                   theta.empty() ? nullptr : &gt_plus);
        probe = path[s];
        Axpy(-e, g_psi, &probe);
        task->Loss(MetaTask::Split::kSupport, probe, theta, &gp_minus,
                   theta.empty() ? nullptr : &gt_minus);
        const double k = -alpha / (2 * e);
        for (size_t i = 0; i < g_psi.size(); ++i) {
          g_psi[i] += k * (gp_plus[i] - gp_minus[i]);
        }
        for (size_t i = 0; i < g_theta.size(); ++i) {
          g_theta[i] += k * (gt_plus[i] - gt_minus[i]);
        }
      }
      RequireFinite(g_psi, "second-order meta gradient");
      RequireFinite(g_theta, "second-order meta gradient");
    }
    Axpy(1.0, g_psi, &mg.g_psi);
    Axpy(1.0, g_theta, &mg.g_theta);
  }
  return mg;
}

FlatOptimizer::FlatOptimizer(const std::string& kind, double learning_rate)
    : adam_(kind == "adam"),
      learning_rate_(learning_rate),
      optimizer_(learning_rate) {
  OMLC_CHECK_ARG(kind == "adam" || kind == "sgd",
                 "unknown optimizer: " + kind);
}

void FlatOptimizer::Step(std::vector<double>* values,
                         const std::vector<double>& grad) {
  OMLC_CHECK_ARG(values->size() == grad.size(), "gradient size mismatch");
  if (!adam_) {
    Axpy(-learning_rate_, grad, values);
    return;
  }
  param_.value = std::move(*values);
  param_.grad = grad;
  optimizer_.Step({&param_});
  *values = std::move(param_.value);
}

std::vector<std::vector<ImageTensor>> SampleTaskBatch(
    size_t num_tasks, const std::vector<ImageTensor>& dataset, int batch,
    int crop_size, uint64_t seed) {
  if (dataset.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "dataset is empty");
  }
  OMLC_CHECK_ARG(batch >= 1, "batch must be >= 1");
  std::vector<std::vector<ImageTensor>> out(num_tasks);
  for (size_t j = 0; j < num_tasks; ++j) {
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + j * 7919 + 1);
    std::uniform_int_distribution<size_t> pick(0, dataset.size() - 1);
    for (int b = 0; b < batch; ++b) {
      out[j].push_back(RandomCrop(dataset[pick(rng)], crop_size, rng));
    }
  }
  return out;
}

Model BuildTaskGrid(const std::vector<Model>& bases, uint64_t seed) {
  OMLC_CHECK_ARG(!bases.empty(), "need at least one base model");
  std::vector<const Model*> sorted;
  for (const Model& m : bases) {
    OMLC_CHECK_ARG(m.levels.size() == 1,
                   "base models must have exactly one quality level");
    OMLC_CHECK_ARG(m.config == bases.front().config,
                   "base models differ in shape");
    sorted.push_back(&m);
  }
  std::sort(sorted.begin(), sorted.end(), [](const Model* a, const Model* b) {
    return a->levels[0].lambda < b->levels[0].lambda;
  });
  for (size_t i = 1; i < sorted.size(); ++i) {
    OMLC_CHECK_ARG(sorted[i]->levels[0].lambda > sorted[i - 1]->levels[0].lambda,
                   "task lambdas must be distinct");
  }
  Model grid;
  grid.config = bases.front().config;
  grid.meta = true;
  for (const Model* m : sorted) grid.levels.push_back(m->levels[0]);
  grid.decoder = sorted[(sorted.size() - 1) / 2]->decoder;
  grid.modulators = ModulatorParams(grid.decoder, grid.config.modulator_hidden);
  std::mt19937_64 rng(seed);
  grid.modulators.InitIdentity(rng);
  return grid;
}

CodecMetaTask::CodecMetaTask(const Model& model, int level,
                             double distortion_scale,
                             QuantizationMode quantization, uint64_t seed)
    : model_(model),
      level_(level),
      lambda_(model.levels.at(level).lambda),
      effective_lambda_(lambda_ * distortion_scale),
      quantization_(quantization),
      rng_(seed),
      decoder_(model.decoder),
      modulators_(model.modulators) {}

std::vector<CodecMetaTask::Sample> CodecMetaTask::Prepare(
    const std::vector<ImageTensor>& images) {
  const QualityLevel& q = model_.levels[level_];
  std::vector<Sample> out;
  for (const ImageTensor& image : images) {
    const PaddedImage padded = PadToMultiple(image, kDownsampleFactor);
    const Tensor y = q.encoder.Forward(padded.image.tensor(), nullptr);
    Sample s;
    s.image = padded.image.tensor();
    s.latent = Quantize(y, quantization_, &rng_);
    s.bpp = q.entropy.RateBits(s.latent) /
            static_cast<double>(padded.image.num_pixels());
    out.push_back(std::move(s));
  }
  return out;
}

void CodecMetaTask::SetData(std::vector<ImageTensor> support,
                            std::vector<ImageTensor> query) {
  OMLC_CHECK_ARG(!support.empty() && !query.empty(),
                 "task batches must be non-empty");
  support_ = Prepare(support);
  query_ = Prepare(query);
}

double CodecMetaTask::Loss(Split split, std::span<const double> psi,
                           std::span<const double> theta,
                           std::vector<double>* g_psi,
                           std::vector<double>* g_theta) {
  const std::vector<Sample>& data =
      split == Split::kSupport ? support_ : query_;
  OMLC_CHECK_ARG(!data.empty(), "task has no data");
  const ParamList mod_params = modulators_.Params();
  const ParamList dec_params = decoder_.Params();
  UnflattenValues(psi, mod_params);
  UnflattenValues(theta, dec_params);
  const bool want_grad = g_psi != nullptr || g_theta != nullptr;
  if (want_grad) {
    ZeroGrads(mod_params);
    ZeroGrads(dec_params);
  }
  const std::vector<double> lambdas(modulators_.num_layers(), lambda_);
  const double weight = 1.0 / static_cast<double>(data.size());
  double loss = 0.0;
  ConditionalTape tape;
  for (const Sample& s : data) {
    const Tensor out = ConditionalForward(s.latent, decoder_, modulators_,
                                          lambdas, want_grad ? &tape : nullptr);
    const double mse = MeanSquaredError(s.image, out);
    loss += weight * (effective_lambda_ * mse + s.bpp);
    if (!want_grad) continue;
    Tensor d_out(out.shape());
    const double coeff = weight * effective_lambda_ * 2.0 /
                         static_cast<double>(out.size());
    auto d = d_out.data();
    const auto o = out.data();
    const auto x = s.image.data();
    for (size_t i = 0; i < d.size(); ++i) d[i] = coeff * (o[i] - x[i]);
    ConditionalBackward(tape, d_out, decoder_, modulators_,
                        g_theta != nullptr ? &decoder_ : nullptr,
                        g_psi != nullptr ? &modulators_ : nullptr);
  }
  if (g_psi != nullptr) *g_psi = FlattenGrads(std::as_const(modulators_).Params());
  if (g_theta != nullptr) *g_theta = FlattenGrads(std::as_const(decoder_).Params());
  return loss;
}

void DivergenceGuard::Observe(double loss) {
  if (!std::isfinite(loss)) {
    throw Error(ErrorCode::kNumerical, "non-finite training loss");
  }
  if (observed_++ == 0) initial_ = loss;
  above_ = loss > 10.0 * initial_ ? above_ + 1 : 0;
  if (above_ >= 100) {
    throw Error(ErrorCode::kNumerical,
                "training diverged: loss above 10x its initial value for 100 "
                "iterations (iteration " + std::to_string(observed_ - 1) + ")");
  }
}

double MetaHoldoutLoss(const Model& model,
                       const std::vector<ImageTensor>& holdout,
                       double distortion_scale,
                       std::vector<double>* per_level_mse) {
  if (per_level_mse != nullptr) per_level_mse->clear();
  double total = 0.0;
  for (size_t j = 0; j < model.levels.size(); ++j) {
    const double lambda = model.levels[j].lambda;
    const std::vector<double> lambdas(model.modulators.num_layers(), lambda);
    const RdEvaluation e = EvaluateRd(model, static_cast<int>(j), holdout,
                                      lambda * distortion_scale, lambdas);
    total += e.loss;
    if (per_level_mse != nullptr) per_level_mse->push_back(e.mse);
  }
  return total / static_cast<double>(model.levels.size());
}

MetaTrainingResult MetaTrain(const Model& grid,
                             const std::vector<ImageTensor>& dataset,
                             const MetaConfig& config,
                             const MetaProgressFn& progress) {
  config.Validate();
  OMLC_CHECK_ARG(!grid.levels.empty(), "task grid is empty");
  OMLC_CHECK_ARG(grid.modulators.num_layers() == kNumBlocks,
                 "task grid has no modulators");
  const DatasetSplit split = SplitDataset(dataset, config.holdout_fraction);

  MetaTrainingResult result;
  result.model = grid;
  Model& model = result.model;
  model.meta = true;
  result.report.initial_holdout_loss =
      MetaHoldoutLoss(model, split.holdout, config.distortion_scale);

  std::vector<double> psi = FlattenValues(
      static_cast<const ModulatorParams&>(model.modulators).Params());
  std::vector<double> theta =
      FlattenValues(static_cast<const Decoder&>(model.decoder).Params());
  const size_t m = model.levels.size();
  std::vector<std::unique_ptr<CodecMetaTask>> tasks;
  std::vector<MetaTask*> task_ptrs;
  for (size_t j = 0; j < m; ++j) {
    tasks.push_back(std::make_unique<CodecMetaTask>(
        model, static_cast<int>(j), config.distortion_scale,
        config.quantization, config.seed + 31 * (j + 1)));
    task_ptrs.push_back(tasks.back().get());
  }
  FlatOptimizer opt_psi(config.outer_optimizer, config.outer_learning_rate);
  FlatOptimizer opt_theta(config.outer_optimizer, config.outer_learning_rate);

  DivergenceGuard guard;
  for (int it = 0; it < config.outer_iterations; ++it) {
    const uint64_t base = config.seed * 1000003ULL + 2 * static_cast<uint64_t>(it);
    auto support = SampleTaskBatch(m, split.train, config.batch_size,
                                   config.crop_size, base);
    auto query = SampleTaskBatch(m, split.train, config.batch_size,
                                 config.crop_size, base + 1);
    for (size_t j = 0; j < m; ++j) {
      tasks[j]->SetData(std::move(support[j]), std::move(query[j]));
    }
    const MetaGradient mg = ComputeMetaGradient(
        task_ptrs, psi, theta, config.alpha, config.inner_steps,
        config.first_order, config.hvp_epsilon);
    const double loss = mg.loss / static_cast<double>(m);
    if (!std::isfinite(loss)) {
      throw Error(ErrorCode::kNumerical,
                  "non-finite meta loss at iteration " + std::to_string(it));
    }
    guard.Observe(loss);
    opt_psi.Step(&psi, mg.g_psi);
    opt_theta.Step(&theta, mg.g_theta);
    result.report.loss_history.push_back(loss);
    if (progress && config.log_every > 0 && (it + 1) % config.log_every == 0) {
      progress(it + 1, loss);
    }
  }
  UnflattenValues(psi, model.modulators.Params());
  UnflattenValues(theta, model.decoder.Params());

  result.report.final_holdout_loss =
      MetaHoldoutLoss(model, split.holdout, config.distortion_scale,
                      &result.report.final_holdout_mse);
  model.training_info = {
      {"stage", "meta"},
      {"lambdas", model.Lambdas()},
      {"alpha", config.alpha},
      {"inner_steps", config.inner_steps},
      {"outer_learning_rate", config.outer_learning_rate},
      {"outer_iterations", config.outer_iterations},
      {"outer_optimizer", config.outer_optimizer},
      {"batch_size", config.batch_size},
      {"crop_size", config.crop_size},
      {"first_order", config.first_order},
      {"quantization",
       config.quantization == QuantizationMode::kRound ? "round" : "noise"},
      {"distortion_scale", config.distortion_scale},
      {"seed", config.seed},
      {"holdout_loss_initial", result.report.initial_holdout_loss},
      {"holdout_loss_final", result.report.final_holdout_loss},
  };
  return result;
}

}  // namespace omlc
