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

// Base analysis/synthesis transforms, quantizer and factorized entropy model.
//
// Encoder: four stride-2 3x3 convolutions (3 -> N -> N -> N -> C_lat), leaky
// rectifier after the first three. Decoder: four blocks, each a 3x3
// convolution producing 4x the block's channel count followed by 2x pixel
// shuffle; blocks 1-3 emit N channels (with activation), block 4 emits RGB.
// The output of every block is a modulation site.

#ifndef OMLC_CODEC_H_
#define OMLC_CODEC_H_

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "omlc/image.h"
#include "omlc/nn.h"
#include "omlc/tensor.h"

namespace omlc {

inline constexpr int kNumBlocks = 4;
inline constexpr int kDownsampleFactor = 16;

struct CodecConfig {
  int hidden_channels = 64;
  int latent_channels = 32;
  int modulator_hidden = 16;

  bool operator==(const CodecConfig&) const = default;
};

// Integer latent in channel-major order.
struct QuantizedLatent {
  Shape shape;
  std::vector<int32_t> values;

  Tensor ToTensor() const;
  bool operator==(const QuantizedLatent&) const = default;
};

enum class QuantizationMode { kNoise, kRound };

inline double RoundHalfAwayFromZero(double v) { return std::round(v); }

QuantizedLatent RoundLatent(const Tensor& y);
// kRound: elementwise rounding (returned as reals). kNoise: y + U(-0.5, 0.5)
// drawn from `rng`, which must be non-null.
Tensor Quantize(const Tensor& y, QuantizationMode mode, std::mt19937_64* rng);

struct EncoderTape {
  std::array<Shape, kNumBlocks> input_shapes;
  std::array<std::vector<double>, kNumBlocks> cols;
  std::array<Tensor, kNumBlocks> pre_activation;
};

class Encoder {
 public:
  Encoder() = default;
  explicit Encoder(const CodecConfig& config);

  void Init(std::mt19937_64& rng);
  // `x` must have height and width divisible by 16.
  Tensor Forward(const Tensor& x, EncoderTape* tape) const;
  // Accumulates parameter gradients for d(loss)/d(latent).
  void AccumulateGradients(const EncoderTape& tape, const Tensor& d_latent);

  ParamList Params();
  ConstParamList Params() const;

 private:
  std::array<Conv2d, kNumBlocks> stages_;
};

Tensor EncodeLatent(const ImageTensor& x, const Encoder& encoder);

struct DecoderTape {
  std::array<Shape, kNumBlocks> input_shapes;
  std::array<std::vector<double>, kNumBlocks> cols;
  std::array<Tensor, kNumBlocks> pre_activation;
  // Block outputs before modulation.
  std::array<Tensor, kNumBlocks> block_output;
  // Final values before clamping to [0, 1].
  Tensor unclamped;
};

class Decoder {
 public:
  Decoder() = default;
  explicit Decoder(const CodecConfig& config);

  void Init(std::mt19937_64& rng);

  // Channel count N^k of block k's output.
  int BlockChannels(int block) const;

  // `scales` is either empty (plain decoder) or holds one per-channel scale
  // vector per block. Output is clamped to [0, 1].
  Tensor Forward(const Tensor& latent,
                 std::span<const std::vector<double>> scales,
                 DecoderTape* tape) const;

  // Backpropagates d(loss)/d(output). When `d_scales` is non-null it receives
  // d(loss)/d(scale) per block. When `grad_sink` is non-null the parameter
  // gradients are accumulated into it (typically `this`).
  Tensor Backward(const DecoderTape& tape, const Tensor& d_output,
                  std::span<const std::vector<double>> scales,
                  std::vector<std::vector<double>>* d_scales,
                  Decoder* grad_sink, bool need_latent_grad) const;

  ParamList Params();
  ConstParamList Params() const;

 private:
  std::array<Conv2d, kNumBlocks> blocks_;
};

// Zero-mean discretized logistic per latent channel.
class EntropyModel {
 public:
  static constexpr double kPmfFloor = 1.0 / 65536.0;

  EntropyModel() = default;
  explicit EntropyModel(int channels, double initial_scale = 1.0);

  int channels() const { return static_cast<int>(log_scales.size()); }
  double scale(int channel) const;

  double Cdf(int channel, double t) const;
  double Pmf(int channel, double v) const;
  // Mass outside [symbol_min - 0.5, symbol_max + 0.5].
  double TailMass(int channel, int symbol_min, int symbol_max) const;

  // -sum log2(max(pmf, 2^-16)).
  double RateBits(const QuantizedLatent& z) const;
  double RateBits(const Tensor& values) const;
  // Rate on continuous (noisy) values. Accumulates weight * d(bits)/d(values)
  // into `d_values` and, with `accumulate_params`, weight * d(bits)/d(log
  // scale) into the parameter gradient.
  double RateBitsWithGradient(const Tensor& values, double weight,
                              Tensor* d_values, bool accumulate_params);

  ParamList Params() { return {&log_scales}; }
  ConstParamList Params() const { return {&log_scales}; }

  Param log_scales;
};

double MeanSquaredError(const Tensor& x, const Tensor& x_hat);

// lambda * MSE + rate_bits / num_pixels.
double RdLoss(const ImageTensor& x, const ImageTensor& x_hat,
              double rate_bits, double lambda, size_t num_pixels);

}  // namespace omlc

#endif  // OMLC_CODEC_H_
