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

// Conditional feature modulation of decoder blocks.
//
// Each decoder block k owns a modulator mapping its tradeoff lambda^k to a
// per-channel positive scale:
//   s = softplus(W2 * leaky(W1 * ln(lambda) + b1) + b2)
// which multiplies channel i of the block output.

#ifndef OMLC_MODULATION_H_
#define OMLC_MODULATION_H_

#include <random>
#include <span>
#include <vector>

#include "omlc/codec.h"
#include "omlc/nn.h"

namespace omlc {

inline constexpr double kLambdaMin = 1e-6;
inline constexpr double kLambdaMax = 1e4;

// softplus(kIdentityLogit) == 1.
inline constexpr double kIdentityLogit = 0.54132485461291810;

double Softplus(double x);
double ClampLambda(double lambda);

// Per-block tradeoffs lambda^1..lambda^K.
class TradeoffVector {
 public:
  TradeoffVector() = default;
  // Values must be finite and within [kLambdaMin, kLambdaMax].
  explicit TradeoffVector(std::vector<double> values);
  static TradeoffVector Uniform(int k, double lambda);

  size_t size() const { return values_.size(); }
  double operator[](size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

  bool operator==(const TradeoffVector&) const = default;

 private:
  std::vector<double> values_;
};

using ScaleVector = std::vector<double>;

struct ModulatorTape {
  double log_lambda = 0.0;
  double lambda = 1.0;
  bool clamped = false;
  std::vector<double> hidden_pre;
  std::vector<double> logits;
};

// Two fully connected layers for one decoder block.
class Modulator {
 public:
  Modulator() = default;
  Modulator(const std::string& name, int hidden, int channels);

  // Output layer zero, bias at kIdentityLogit: every scale is exactly 1.
  void InitIdentity(std::mt19937_64& rng);

  int channels() const { return static_cast<int>(b2.size()); }
  int hidden() const { return static_cast<int>(b1.size()); }

  // Lambda outside [kLambdaMin, kLambdaMax] is clamped with a warning.
  ScaleVector Scales(double lambda, ModulatorTape* tape) const;
  // Returns d(loss)/d(lambda) given d(loss)/d(scale). Parameter gradients go
  // to `grad_sink` when non-null.
  double Backward(const ModulatorTape& tape, std::span<const double> d_scales,
                  Modulator* grad_sink) const;

  ParamList Params() { return {&w1, &b1, &w2, &b2}; }
  ConstParamList Params() const { return {&w1, &b1, &w2, &b2}; }

  Param w1;  // hidden x 1
  Param b1;  // hidden
  Param w2;  // channels x hidden
  Param b2;  // channels
};

class ModulatorParams {
 public:
  ModulatorParams() = default;
  // One modulator per decoder block, sized to the block's channel count.
  ModulatorParams(const Decoder& decoder, int hidden);

  void InitIdentity(std::mt19937_64& rng);

  int num_layers() const { return static_cast<int>(layers_.size()); }
  Modulator& layer(int k) { return layers_[k]; }
  const Modulator& layer(int k) const { return layers_[k]; }

  ParamList Params();
  ConstParamList Params() const;

 private:
  std::vector<Modulator> layers_;
};

ScaleVector ScaleFactors(double lambda, const Modulator& modulator);

// Multiplies channel i of `features` by s[i].
Tensor Modulate(const Tensor& features, std::span<const double> s);

struct ConditionalTape {
  DecoderTape decoder;
  std::vector<ModulatorTape> modulators;
  std::vector<ScaleVector> scales;
};

// Decoder forward with each block output scaled by its modulator. Lambdas
// must have one entry per decoder block. Output clamped to [0, 1].
Tensor ConditionalForward(const Tensor& latent, const Decoder& decoder,
                          const ModulatorParams& modulators,
                          std::span<const double> lambdas,
                          ConditionalTape* tape);

// Backpropagates d(loss)/d(output); returns d(loss)/d(lambda^k). Parameter
// gradients are accumulated into the sinks when non-null.
std::vector<double> ConditionalBackward(const ConditionalTape& tape,
                                        const Tensor& d_output,
                                        const Decoder& decoder,
                                        const ModulatorParams& modulators,
                                        Decoder* decoder_sink,
                                        ModulatorParams* modulator_sink);

ImageTensor ConditionalDecode(const QuantizedLatent& z, const Decoder& decoder,
                              const ModulatorParams& modulators,
                              const TradeoffVector& lambdas);

}  // namespace omlc

#endif  // OMLC_MODULATION_H_
