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

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "omlc/bitstream.h"
#include "omlc/error.h"

namespace omlc {

GradientMode ParseGradientMode(const std::string& name) {
  if (name == "autodiff") return GradientMode::kAutodiff;
  if (name == "finite_difference" || name == "fd") {
    return GradientMode::kFiniteDifference;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown gradient mode: " + name);
}

const char* GradientModeName(GradientMode mode) {
  return mode == GradientMode::kAutodiff ? "autodiff" : "finite_difference";
}

void OmlConfig::Validate() const {
  OMLC_CHECK_ARG(iterations >= 0, "oml iterations must be >= 0");
  OMLC_CHECK_ARG(!gamma_grid.empty(), "gamma grid must not be empty");
  for (size_t i = 0; i < gamma_grid.size(); ++i) {
    OMLC_CHECK_ARG(gamma_grid[i] > 0.0 && std::isfinite(gamma_grid[i]),
                   "gamma grid values must be finite and positive");
    OMLC_CHECK_ARG(i == 0 || gamma_grid[i] > gamma_grid[i - 1],
                   "gamma grid must be strictly increasing");
  }
  OMLC_CHECK_ARG(fd_step > 0.0, "fd_step must be positive");
}

std::vector<double> LambdaObjective::Gradient(std::span<const double>) {
  throw Error(ErrorCode::kInvalidArgument,
              "objective has no analytic gradient");
}

SurrogateObjective::SurrogateObjective(size_t dimension, Fn fn, GradFn grad)
    : dimension_(dimension), fn_(std::move(fn)), grad_(std::move(grad)) {
  OMLC_CHECK_ARG(dimension >= 1, "objective dimension must be >= 1");
}

double SurrogateObjective::Evaluate(std::span<const double> lambdas,
                                    Tensor* reconstruction) {
  if (reconstruction != nullptr) *reconstruction = Tensor();
  return fn_(lambdas);
}

std::vector<double> SurrogateObjective::Gradient(
    std::span<const double> lambdas) {
  if (!grad_) return LambdaObjective::Gradient(lambdas);
  return grad_(lambdas);
}

DecoderObjective::DecoderObjective(const ImageTensor& patch,
                                   const QuantizedLatent& z,
                                   const Decoder& decoder,
                                   const ModulatorParams& modulators,
                                   Metric metric)
    : latent_(z.ToTensor()),
      decoder_(decoder),
      modulators_(modulators),
      metric_(metric),
      height_(patch.height()),
      width_(patch.width()) {
  const int h = z.shape.height * kDownsampleFactor;
  const int w = z.shape.width * kDownsampleFactor;
  if (h < height_ || w < width_ || h - height_ >= kDownsampleFactor ||
      w - width_ >= kDownsampleFactor) {
    throw Error(ErrorCode::kShapeMismatch,
                "latent " + z.shape.ToString() + " does not cover a " +
                    std::to_string(height_) + "x" + std::to_string(width_) +
                    " patch");
  }
  target_ = PadTensorEdge(patch.tensor(), h, w);
  crop_ = metric != Metric::kMsssim || std::min(height_, width_) >= 16;
}

size_t DecoderObjective::dimension() const {
  return static_cast<size_t>(modulators_.num_layers());
}

Tensor DecoderObjective::Region(const Tensor& full) const {
  if (!crop_ || (full.height() == height_ && full.width() == width_)) {
    return full;
  }
  return CropTensor(full, 0, 0, height_, width_);
}

double DecoderObjective::Evaluate(std::span<const double> lambdas,
                                  Tensor* reconstruction) {
  Tensor out =
      ConditionalForward(latent_, decoder_, modulators_, lambdas, nullptr);
  const double d = Distortion(Region(target_), Region(out), metric_);
  if (reconstruction != nullptr) *reconstruction = std::move(out);
  return d;
}

std::vector<double> DecoderObjective::Gradient(
    std::span<const double> lambdas) {
  ConditionalTape tape;
  const Tensor out =
      ConditionalForward(latent_, decoder_, modulators_, lambdas, &tape);
  Tensor d_region;
  const double d = DistortionWithGradient(Region(target_), Region(out),
                                          metric_, &d_region);
  if (!std::isfinite(d)) {
    throw Error(ErrorCode::kNumerical, "non-finite distortion in gradient");
  }
  Tensor d_out(out.shape());
  for (int c = 0; c < d_region.channels(); ++c) {
    for (int y = 0; y < d_region.height(); ++y) {
      for (int x = 0; x < d_region.width(); ++x) {
        d_out.at(c, y, x) = d_region.at(c, y, x);
      }
    }
  }
  return ConditionalBackward(tape, d_out, decoder_, modulators_, nullptr,
                             nullptr);
}

std::vector<double> GradLambda(LambdaObjective& objective,
                               std::span<const double> lambdas,
                               GradientMode mode, double fd_step) {
  OMLC_CHECK_ARG(lambdas.size() == objective.dimension(),
                 "lambda vector has the wrong length");
  std::vector<double> g;
  if (mode == GradientMode::kAutodiff) {
    g = objective.Gradient(lambdas);
  } else {
    OMLC_CHECK_ARG(fd_step > 0.0, "fd_step must be positive");
    g.resize(lambdas.size());
    std::vector<double> probe(lambdas.begin(), lambdas.end());
    for (size_t k = 0; k < lambdas.size(); ++k) {
      const double h = fd_step * std::max(1.0, std::abs(lambdas[k]));
      probe[k] = lambdas[k] + h;
      const double up = objective.Evaluate(probe, nullptr);
      if (lambdas[k] - h >= objective.lower_bound()) {
        probe[k] = lambdas[k] - h;
        const double down = objective.Evaluate(probe, nullptr);
        g[k] = (up - down) / (2 * h);
      } else {
        probe[k] = lambdas[k];
        const double center = objective.Evaluate(probe, nullptr);
        g[k] = (up - center) / h;
      }
      probe[k] = lambdas[k];
    }
  }
  if (!AllFinite(g)) {
    throw Error(ErrorCode::kNumerical, "non-finite tradeoff gradient");
  }
  return g;
}

double QuantizeLambda(double lambda) {
  return RoundToHalf(std::clamp(lambda, kLambdaMin, kLambdaMax));
}

namespace {

// Candidate point reached from `from` with step `gamma` along -g.
std::vector<double> Step(const std::vector<double>& from,
                         const std::vector<double>& g, double gamma) {
  std::vector<double> out(from.size());
  for (size_t k = 0; k < from.size(); ++k) {
    out[k] = QuantizeLambda(from[k] - gamma * g[k]);
  }
  return out;
}

class Search {
 public:
  Search(LambdaObjective& objective, const OmlConfig& config)
      : objective_(objective), config_(config) {}

  void Start(double lambda_t) {
    const double start = QuantizeLambda(lambda_t);
    std::vector<double> lambdas(objective_.dimension(), start);
    Tensor recon;
    const double d = objective_.Evaluate(lambdas, &recon);
    ++result_.evaluations;
    if (!std::isfinite(d)) {
      throw Error(ErrorCode::kNumerical,
                  "non-finite distortion at the initial tradeoffs");
    }
    result_.best_lambdas = lambdas;
    result_.best_reconstruction = std::move(recon);
    result_.best_distortion = d;
    result_.initial_distortion = d;
    result_.trace.push_back({0, 0.0, std::move(lambdas), d, true});
  }

  // Evaluates a candidate and records it. Returns its distortion (infinity
  // when not finite). The reconstruction is kept in `recon`.
  double Try(int iteration, double gamma, const std::vector<double>& cand,
             Tensor* recon) {
    double d;
    if (cand == result_.best_lambdas) {
      d = result_.best_distortion;  // same point, no decode needed
      *recon = Tensor();
    } else {
      d = objective_.Evaluate(cand, recon);
      ++result_.evaluations;
    }
    if (!std::isfinite(d)) d = std::numeric_limits<double>::infinity();
    result_.trace.push_back({iteration, gamma, cand, d, false});
    return d;
  }

  bool Improves(double d) const { return d < result_.best_distortion; }

  void Accept(size_t trace_index, Tensor recon) {
    OmlTraceEntry& e = result_.trace[trace_index];
    e.accepted = true;
    result_.best_lambdas = e.candidate;
    result_.best_distortion = e.distortion;
    result_.best_reconstruction = std::move(recon);
  }

  const std::vector<double>& Gradient() {
    if (!grad_valid_ || grad_point_ != result_.best_lambdas) {
      grad_ = GradLambda(objective_, result_.best_lambdas,
                         config_.gradient_mode, config_.fd_step);
      grad_point_ = result_.best_lambdas;
      grad_valid_ = true;
    }
    return grad_;
  }

  OmlResult& result() { return result_; }

 private:
  LambdaObjective& objective_;
  const OmlConfig& config_;
  OmlResult result_;
  std::vector<double> grad_;
  std::vector<double> grad_point_;
  bool grad_valid_ = false;
};

}  // namespace

OmlResult OmlAdapt(LambdaObjective& objective, double lambda_t,
                   const OmlConfig& config) {
  config.Validate();
  OMLC_CHECK_ARG(std::isfinite(lambda_t) && lambda_t >= 0.0,
                 "lambda_t must be non-negative and finite");
  Search search(objective, config);
  search.Start(lambda_t);
  if (config.iterations == 0) return std::move(search.result());

  // Iteration 1: scan the grid from the starting point.
  double gamma_star = config.gamma_grid.front();
  {
    const std::vector<double> g = search.Gradient();
    const std::vector<double> from = search.result().best_lambdas;
    double best_d = std::numeric_limits<double>::infinity();
    size_t best_index = 0;
    Tensor best_recon;
    bool any_finite = false;
    for (double gamma : config.gamma_grid) {
      Tensor recon;
      const double d = search.Try(1, gamma, Step(from, g, gamma), &recon);
      if (d < best_d) {
        best_d = d;
        gamma_star = gamma;
        best_index = search.result().trace.size() - 1;
        best_recon = std::move(recon);
        any_finite = true;
      }
    }
    if (any_finite && search.Improves(best_d)) {
      search.Accept(best_index, std::move(best_recon));
    } else {
      gamma_star *= 0.5;
    }
  }

  for (int it = 2; it <= config.iterations; ++it) {
    const std::vector<double> g = search.Gradient();
    Tensor recon;
    const double d = search.Try(
        it, gamma_star, Step(search.result().best_lambdas, g, gamma_star),
        &recon);
    if (search.Improves(d)) {
      search.Accept(search.result().trace.size() - 1, std::move(recon));
    } else {
      gamma_star *= 0.5;
    }
  }
  return std::move(search.result());
}

OmlResult OmlAdaptPatch(const ImageTensor& patch, const QuantizedLatent& z,
                        const Decoder& decoder,
                        const ModulatorParams& modulators, double lambda_t,
                        const OmlConfig& config) {
  DecoderObjective objective(patch, z, decoder, modulators, config.metric);
  return OmlAdapt(objective, lambda_t, config);
}

}  // namespace omlc
