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

#include "omlc/codec.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "omlc/error.h"

namespace omlc {
namespace {

double Sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double SigmoidSlope(double t) {
  const double s = Sigmoid(t);
  return s * (1.0 - s);
}

// Logistic mass of the unit bin centred on v. Evaluated on the side of the
// distribution where the CDF is small to avoid cancellation.
double BinMass(double v, double scale) {
  const double hi = (v + 0.5) / scale;
  const double lo = (v - 0.5) / scale;
  if (v > 0.0) return Sigmoid(-lo) - Sigmoid(-hi);
  return Sigmoid(hi) - Sigmoid(lo);
}

}  // namespace

Tensor QuantizedLatent::ToTensor() const {
  Tensor t(shape);
  auto d = t.data();
  for (size_t i = 0; i < values.size(); ++i) d[i] = values[i];
  return t;
}

QuantizedLatent RoundLatent(const Tensor& y) {
  QuantizedLatent z{y.shape(), std::vector<int32_t>(y.size())};
  auto d = y.data();
  for (size_t i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d[i])) {
      throw Error(ErrorCode::kNumerical, "non-finite latent value");
    }
    z.values[i] = static_cast<int32_t>(RoundHalfAwayFromZero(d[i]));
  }
  return z;
}

Tensor Quantize(const Tensor& y, QuantizationMode mode, std::mt19937_64* rng) {
  Tensor out = y;
  if (mode == QuantizationMode::kRound) {
    for (double& v : out.data()) v = RoundHalfAwayFromZero(v);
    return out;
  }
  OMLC_CHECK_ARG(rng != nullptr, "noise quantization needs a generator");
  std::uniform_real_distribution<double> noise(-0.5, 0.5);
  for (double& v : out.data()) v += noise(*rng);
  return out;
}

// --- Encoder ---------------------------------------------------------------

Encoder::Encoder(const CodecConfig& config) {
  const int n = config.hidden_channels;
  stages_[0] = Conv2d("enc0", 3, n, 3, 2);
  stages_[1] = Conv2d("enc1", n, n, 3, 2);
  stages_[2] = Conv2d("enc2", n, n, 3, 2);
  stages_[3] = Conv2d("enc3", n, config.latent_channels, 3, 2);
}

void Encoder::Init(std::mt19937_64& rng) {
  for (int i = 0; i < kNumBlocks; ++i) {
    stages_[i].InitHe(rng, i + 1 < kNumBlocks ? 1.0 : 0.5);
  }
}

Tensor Encoder::Forward(const Tensor& x, EncoderTape* tape) const {
  if (x.height() % kDownsampleFactor != 0 ||
      x.width() % kDownsampleFactor != 0) {
    throw Error(ErrorCode::kShapeMismatch,
                "encoder input must be a multiple of 16, got " +
                    x.shape().ToString());
  }
  Tensor h = x;
  for (int i = 0; i < kNumBlocks; ++i) {
    if (tape != nullptr) tape->input_shapes[i] = h.shape();
    Tensor pre = stages_[i].Forward(h, tape ? &tape->cols[i] : nullptr);
    if (i + 1 < kNumBlocks) {
      h = pre;
      LeakyReluInPlace(&h);
      if (tape != nullptr) tape->pre_activation[i] = std::move(pre);
    } else {
      h = std::move(pre);
    }
  }
  return h;
}

void Encoder::AccumulateGradients(const EncoderTape& tape,
                                  const Tensor& d_latent) {
  Tensor g = d_latent;
  for (int i = kNumBlocks - 1; i >= 0; --i) {
    if (i + 1 < kNumBlocks) LeakyReluBackwardInPlace(tape.pre_activation[i], &g);
    stages_[i].AccumulateGradients(tape.cols[i], g);
    if (i > 0) g = stages_[i].InputGradient(tape.input_shapes[i], g);
  }
}

ParamList Encoder::Params() {
  ParamList out;
  for (Conv2d& c : stages_) {
    out.push_back(&c.weight);
    out.push_back(&c.bias);
  }
  return out;
}

ConstParamList Encoder::Params() const {
  ConstParamList out;
  for (const Conv2d& c : stages_) {
    out.push_back(&c.weight);
    out.push_back(&c.bias);
  }
  return out;
}

Tensor EncodeLatent(const ImageTensor& x, const Encoder& encoder) {
  return encoder.Forward(x.tensor(), nullptr);
}

// --- Decoder ---------------------------------------------------------------

Decoder::Decoder(const CodecConfig& config) {
  const int n = config.hidden_channels;
  blocks_[0] = Conv2d("dec0", config.latent_channels, 4 * n, 3, 1);
  blocks_[1] = Conv2d("dec1", n, 4 * n, 3, 1);
  blocks_[2] = Conv2d("dec2", n, 4 * n, 3, 1);
  blocks_[3] = Conv2d("dec3", n, 4 * 3, 3, 1);
}

void Decoder::Init(std::mt19937_64& rng) {
  for (int i = 0; i < kNumBlocks; ++i) {
    blocks_[i].InitHe(rng, i + 1 < kNumBlocks ? 1.0 : 0.25);
  }
  std::fill(blocks_[3].bias.value.begin(), blocks_[3].bias.value.end(), 0.5);
}

int Decoder::BlockChannels(int block) const {
  return blocks_[block].out_channels() / 4;
}

Tensor Decoder::Forward(const Tensor& latent,
                        std::span<const std::vector<double>> scales,
                        DecoderTape* tape) const {
  OMLC_CHECK_ARG(scales.empty() || scales.size() == kNumBlocks,
                 "decoder needs one scale vector per block");
  Tensor h = latent;
  for (int k = 0; k < kNumBlocks; ++k) {
    if (tape != nullptr) tape->input_shapes[k] = h.shape();
    Tensor pre = blocks_[k].Forward(h, tape ? &tape->cols[k] : nullptr);
    Tensor act = pre;
    if (k + 1 < kNumBlocks) LeakyReluInPlace(&act);
    if (tape != nullptr) tape->pre_activation[k] = std::move(pre);
    h = PixelShuffle(act);
    if (tape != nullptr) tape->block_output[k] = h;
    if (!scales.empty()) {
      const std::vector<double>& s = scales[k];
      if (static_cast<int>(s.size()) != h.channels()) {
        throw Error(ErrorCode::kShapeMismatch,
                    "scale vector length does not match block channels");
      }
      for (int c = 0; c < h.channels(); ++c) {
        for (double& v : h.plane(c)) v *= s[c];
      }
    }
  }
  if (tape != nullptr) tape->unclamped = h;
  for (double& v : h.data()) v = std::clamp(v, 0.0, 1.0);
  return h;
}

Tensor Decoder::Backward(const DecoderTape& tape, const Tensor& d_output,
                         std::span<const std::vector<double>> scales,
                         std::vector<std::vector<double>>* d_scales,
                         Decoder* grad_sink, bool need_latent_grad) const {
  RequireSameShape(tape.unclamped, d_output, "decoder backward");
  Tensor g = d_output;
  {
    auto u = tape.unclamped.data();
    auto d = g.data();
    for (size_t i = 0; i < d.size(); ++i) {
      if (u[i] < 0.0 || u[i] > 1.0) d[i] = 0.0;
    }
  }
  if (d_scales != nullptr) d_scales->assign(kNumBlocks, {});
  for (int k = kNumBlocks - 1; k >= 0; --k) {
    if (!scales.empty()) {
      const std::vector<double>& s = scales[k];
      const Tensor& y = tape.block_output[k];
      if (d_scales != nullptr) {
        std::vector<double>& ds = (*d_scales)[k];
        ds.assign(s.size(), 0.0);
        for (int c = 0; c < y.channels(); ++c) {
          auto yp = y.plane(c);
          auto gp = g.plane(c);
          double acc = 0.0;
          for (size_t i = 0; i < yp.size(); ++i) acc += gp[i] * yp[i];
          ds[c] = acc;
        }
      }
      for (int c = 0; c < g.channels(); ++c) {
        for (double& v : g.plane(c)) v *= s[c];
      }
    }
    g = PixelUnshuffle(g);
    if (k + 1 < kNumBlocks) LeakyReluBackwardInPlace(tape.pre_activation[k], &g);
    if (grad_sink != nullptr) {
      grad_sink->blocks_[k].AccumulateGradients(tape.cols[k], g);
    }
    if (k > 0 || need_latent_grad) {
      g = blocks_[k].InputGradient(tape.input_shapes[k], g);
    }
  }
  return need_latent_grad ? g : Tensor();
}

ParamList Decoder::Params() {
  ParamList out;
  for (Conv2d& c : blocks_) {
    out.push_back(&c.weight);
    out.push_back(&c.bias);
  }
  return out;
}

ConstParamList Decoder::Params() const {
  ConstParamList out;
  for (const Conv2d& c : blocks_) {
    out.push_back(&c.weight);
    out.push_back(&c.bias);
  }
  return out;
}

// --- Entropy model ---------------------------------------------------------

EntropyModel::EntropyModel(int channels, double initial_scale)
    : log_scales("entropy.log_scale", static_cast<size_t>(channels)) {
  OMLC_CHECK_ARG(initial_scale > 0.0, "entropy scale must be positive");
  std::fill(log_scales.value.begin(), log_scales.value.end(),
            std::log(initial_scale));
}

double EntropyModel::scale(int channel) const {
  return std::exp(log_scales.value[channel]);
}

double EntropyModel::Cdf(int channel, double t) const {
  return Sigmoid(t / scale(channel));
}

double EntropyModel::Pmf(int channel, double v) const {
  return BinMass(v, scale(channel));
}

double EntropyModel::TailMass(int channel, int symbol_min,
                              int symbol_max) const {
  const double s = scale(channel);
  return Sigmoid((symbol_min - 0.5) / s) + Sigmoid(-(symbol_max + 0.5) / s);
}

double EntropyModel::RateBits(const Tensor& values) const {
  OMLC_CHECK_ARG(values.channels() == channels(),
                 "latent channels do not match entropy model");
  double bits = 0.0;
  for (int c = 0; c < values.channels(); ++c) {
    const double s = scale(c);
    for (double v : values.plane(c)) {
      bits -= std::log2(std::max(BinMass(v, s), kPmfFloor));
    }
  }
  return bits;
}

double EntropyModel::RateBits(const QuantizedLatent& z) const {
  return RateBits(z.ToTensor());
}

double EntropyModel::RateBitsWithGradient(const Tensor& values,
                                          double weight, Tensor* d_values,
                                          bool accumulate_params) {
  OMLC_CHECK_ARG(values.channels() == channels(),
                 "latent channels do not match entropy model");
  RequireSameShape(values, *d_values, "rate gradient");
  const double inv_ln2 = 1.0 / std::log(2.0);
  double bits = 0.0;
  for (int c = 0; c < values.channels(); ++c) {
    const double s = scale(c);
    auto vp = values.plane(c);
    auto dp = d_values->plane(c);
    double d_log_scale = 0.0;
    for (size_t i = 0; i < vp.size(); ++i) {
      const double v = vp[i];
      const double p = BinMass(v, s);
      if (p <= kPmfFloor) {
        bits -= std::log2(kPmfFloor);
        continue;
      }
      bits -= std::log2(p);
      const double hi = (v + 0.5) / s;
      const double lo = (v - 0.5) / s;
      const double sh = SigmoidSlope(hi);
      const double sl = SigmoidSlope(lo);
      const double dp_dv = (sh - sl) / s;
      const double dp_dlogs = -(hi * sh - lo * sl);
      const double coeff = -weight * inv_ln2 / p;
      dp[i] += coeff * dp_dv;
      d_log_scale += coeff * dp_dlogs;
    }
    if (accumulate_params) log_scales.grad[c] += d_log_scale;
  }
  return bits;
}

double MeanSquaredError(const Tensor& x, const Tensor& x_hat) {
  RequireSameShape(x, x_hat, "mse");
  auto a = x.data();
  auto b = x_hat.data();
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double RdLoss(const ImageTensor& x, const ImageTensor& x_hat,
              double rate_bits, double lambda, size_t num_pixels) {
  OMLC_CHECK_ARG(lambda > 0.0, "lambda must be positive");
  OMLC_CHECK_ARG(num_pixels > 0, "pixel count must be positive");
  return lambda * MeanSquaredError(x.tensor(), x_hat.tensor()) +
         rate_bits / static_cast<double>(num_pixels);
}

}  // namespace omlc
