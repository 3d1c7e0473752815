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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "omlc/error.h"

namespace omlc {
namespace {

double Sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

double Softplus(double x) {
  if (x > 30.0) return x;
  return std::max(std::log1p(std::exp(x)), std::numeric_limits<double>::min());
}

double ClampLambda(double lambda) {
  if (std::isnan(lambda)) return kLambdaMin;
  return std::clamp(lambda, kLambdaMin, kLambdaMax);
}

TradeoffVector::TradeoffVector(std::vector<double> values)
    : values_(std::move(values)) {
  OMLC_CHECK_ARG(!values_.empty(), "tradeoff vector must be non-empty");
  for (double v : values_) {
    if (!(v >= kLambdaMin && v <= kLambdaMax)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "tradeoff value outside [1e-6, 1e4]: " + std::to_string(v));
    }
  }
}

TradeoffVector TradeoffVector::Uniform(int k, double lambda) {
  return TradeoffVector(std::vector<double>(static_cast<size_t>(k), lambda));
}

Modulator::Modulator(const std::string& name, int hidden, int channels)
    : w1(name + ".w1", static_cast<size_t>(hidden)),
      b1(name + ".b1", static_cast<size_t>(hidden)),
      w2(name + ".w2", static_cast<size_t>(channels) * hidden),
      b2(name + ".b2", static_cast<size_t>(channels)) {}

void Modulator::InitIdentity(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& v : w1.value) v = dist(rng);
  for (double& v : b1.value) v = dist(rng);
  std::fill(w2.value.begin(), w2.value.end(), 0.0);
  std::fill(b2.value.begin(), b2.value.end(), kIdentityLogit);
}

ScaleVector Modulator::Scales(double lambda, ModulatorTape* tape) const {
  const double clamped = ClampLambda(lambda);
  if (clamped != lambda) {
    std::fprintf(stderr, "warning: tradeoff %g clamped to %g\n", lambda,
                 clamped);
  }
  const int h = hidden();
  const int n = channels();
  const double t = std::log(clamped);
  std::vector<double> pre(h);
  std::vector<double> act(h);
  for (int j = 0; j < h; ++j) {
    pre[j] = w1.value[j] * t + b1.value[j];
    act[j] = LeakyRelu(pre[j]);
  }
  ScaleVector s(n);
  std::vector<double> logits(n);
  for (int i = 0; i < n; ++i) {
    double acc = b2.value[i];
    const double* row = &w2.value[static_cast<size_t>(i) * h];
    for (int j = 0; j < h; ++j) acc += row[j] * act[j];
    logits[i] = acc;
    s[i] = Softplus(acc);
  }
  if (tape != nullptr) {
    tape->log_lambda = t;
    tape->lambda = clamped;
    tape->clamped = clamped != lambda;
    tape->hidden_pre = std::move(pre);
    tape->logits = std::move(logits);
  }
  return s;
}

double Modulator::Backward(const ModulatorTape& tape,
                           std::span<const double> d_scales,
                           Modulator* grad_sink) const {
  const int h = hidden();
  const int n = channels();
  OMLC_CHECK_ARG(static_cast<int>(d_scales.size()) == n,
                 "modulator backward: scale gradient length mismatch");
  std::vector<double> d_act(h, 0.0);
  for (int i = 0; i < n; ++i) {
    const double d_logit = d_scales[i] * Sigmoid(tape.logits[i]);
    const double* row = &w2.value[static_cast<size_t>(i) * h];
    for (int j = 0; j < h; ++j) d_act[j] += d_logit * row[j];
    if (grad_sink != nullptr) {
      grad_sink->b2.grad[i] += d_logit;
      double* grow = &grad_sink->w2.grad[static_cast<size_t>(i) * h];
      for (int j = 0; j < h; ++j) {
        grow[j] += d_logit * LeakyRelu(tape.hidden_pre[j]);
      }
    }
  }
  double d_t = 0.0;
  for (int j = 0; j < h; ++j) {
    const double d_pre = d_act[j] * LeakyReluSlope(tape.hidden_pre[j]);
    d_t += d_pre * w1.value[j];
    if (grad_sink != nullptr) {
      grad_sink->w1.grad[j] += d_pre * tape.log_lambda;
      grad_sink->b1.grad[j] += d_pre;
    }
  }
  // A clamped input does not move with lambda.
  if (tape.clamped) return 0.0;
  return d_t / tape.lambda;
}

ModulatorParams::ModulatorParams(const Decoder& decoder, int hidden) {
  for (int k = 0; k < kNumBlocks; ++k) {
    layers_.emplace_back("mod" + std::to_string(k), hidden,
                         decoder.BlockChannels(k));
  }
}

void ModulatorParams::InitIdentity(std::mt19937_64& rng) {
  for (Modulator& m : layers_) m.InitIdentity(rng);
}

ParamList ModulatorParams::Params() {
  ParamList out;
  for (Modulator& m : layers_) {
    for (Param* p : m.Params()) out.push_back(p);
  }
  return out;
}

ConstParamList ModulatorParams::Params() const {
  ConstParamList out;
  for (const Modulator& m : layers_) {
    for (const Param* p : m.Params()) out.push_back(p);
  }
  return out;
}

ScaleVector ScaleFactors(double lambda, const Modulator& modulator) {
  return modulator.Scales(lambda, nullptr);
}

Tensor Modulate(const Tensor& features, std::span<const double> s) {
  if (static_cast<int>(s.size()) != features.channels()) {
    throw Error(ErrorCode::kShapeMismatch,
                "modulate: " + std::to_string(s.size()) + " scales for " +
                    std::to_string(features.channels()) + " channels");
  }
  Tensor out = features;
  for (int c = 0; c < out.channels(); ++c) {
    for (double& v : out.plane(c)) v *= s[c];
  }
  return out;
}

Tensor ConditionalForward(const Tensor& latent, const Decoder& decoder,
                          const ModulatorParams& modulators,
                          std::span<const double> lambdas,
                          ConditionalTape* tape) {
  if (static_cast<int>(lambdas.size()) != kNumBlocks ||
      modulators.num_layers() != kNumBlocks) {
    throw Error(ErrorCode::kInvalidArgument,
                "expected " + std::to_string(kNumBlocks) +
                    " tradeoffs and modulators, got " +
                    std::to_string(lambdas.size()));
  }
  std::vector<ScaleVector> scales(kNumBlocks);
  if (tape != nullptr) tape->modulators.assign(kNumBlocks, {});
  for (int k = 0; k < kNumBlocks; ++k) {
    scales[k] = modulators.layer(k).Scales(
        lambdas[k], tape ? &tape->modulators[k] : nullptr);
  }
  Tensor out =
      decoder.Forward(latent, scales, tape ? &tape->decoder : nullptr);
  if (tape != nullptr) tape->scales = std::move(scales);
  return out;
}

std::vector<double> ConditionalBackward(const ConditionalTape& tape,
                                        const Tensor& d_output,
                                        const Decoder& decoder,
                                        const ModulatorParams& modulators,
                                        Decoder* decoder_sink,
                                        ModulatorParams* modulator_sink) {
  std::vector<std::vector<double>> d_scales;
  decoder.Backward(tape.decoder, d_output, tape.scales, &d_scales,
                   decoder_sink, /*need_latent_grad=*/false);
  std::vector<double> d_lambda(kNumBlocks);
  for (int k = 0; k < kNumBlocks; ++k) {
    d_lambda[k] = modulators.layer(k).Backward(
        tape.modulators[k], d_scales[k],
        modulator_sink ? &modulator_sink->layer(k) : nullptr);
  }
  return d_lambda;
}

ImageTensor ConditionalDecode(const QuantizedLatent& z, const Decoder& decoder,
                              const ModulatorParams& modulators,
                              const TradeoffVector& lambdas) {
  return ImageTensor(ConditionalForward(z.ToTensor(), decoder, modulators,
                                        lambdas.values(), nullptr));
}

}  // namespace omlc
