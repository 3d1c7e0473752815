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

// Minimal layer library with hand-written backward passes. Everything runs
// in double precision so finite-difference checks stay meaningful.

#ifndef OMLC_NN_H_
#define OMLC_NN_H_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "omlc/tensor.h"

namespace omlc {

inline constexpr double kLeakySlope = 0.01;

struct Param {
  Param() = default;
  Param(std::string n, size_t size)
      : name(std::move(n)), value(size, 0.0), grad(size, 0.0) {}

  std::string name;
  std::vector<double> value;
  std::vector<double> grad;

  size_t size() const { return value.size(); }
  void ZeroGrad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

using ParamList = std::vector<Param*>;
using ConstParamList = std::vector<const Param*>;

void ZeroGrads(const ParamList& params);
size_t CountValues(const ConstParamList& params);
// Concatenates parameter values (or gradients) in list order.
std::vector<double> FlattenValues(const ConstParamList& params);
std::vector<double> FlattenGrads(const ConstParamList& params);
void UnflattenValues(std::span<const double> flat, const ParamList& params);
bool AllFinite(std::span<const double> values);

// 2-D convolution with square kernel, zero padding kernel/2 and the given
// stride. Weights are laid out [out][in][ky][kx].
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const std::string& name, int in_channels, int out_channels,
         int kernel, int stride);

  Shape OutputShape(const Shape& in) const;

  // `cols` receives the unfolded input needed by the backward passes.
  Tensor Forward(const Tensor& x, std::vector<double>* cols) const;
  Tensor InputGradient(const Shape& in_shape, const Tensor& dy) const;
  void AccumulateGradients(const std::vector<double>& cols, const Tensor& dy);

  void InitHe(std::mt19937_64& rng, double gain = 1.0);

  int in_channels() const { return in_channels_; }
  int out_channels() const { return out_channels_; }

  Param weight;
  Param bias;

 private:
  void Unfold(const Tensor& x, const Shape& out, std::vector<double>* cols)
      const;

  int in_channels_ = 0;
  int out_channels_ = 0;
  int kernel_ = 1;
  int stride_ = 1;
  int pad_ = 0;
};

void LeakyReluInPlace(Tensor* x);
// Multiplies `dy` by the activation derivative evaluated at the
// pre-activation `pre`.
void LeakyReluBackwardInPlace(const Tensor& pre, Tensor* dy);
inline double LeakyRelu(double v) { return v > 0.0 ? v : kLeakySlope * v; }
inline double LeakyReluSlope(double v) { return v > 0.0 ? 1.0 : kLeakySlope; }

// (4C, H, W) -> (C, 2H, 2W).
Tensor PixelShuffle(const Tensor& x);
// Adjoint of PixelShuffle.
Tensor PixelUnshuffle(const Tensor& y);

// Adaptive moment estimation.
class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9,
                double beta2 = 0.999, double epsilon = 1e-8);

  void Step(const ParamList& params);
  double learning_rate() const { return learning_rate_; }

 private:
  double learning_rate_;
  double beta1_;
  double beta2_;
  double epsilon_;
  int64_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace omlc

#endif  // OMLC_NN_H_
