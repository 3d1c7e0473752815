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

#include "omlc/nn.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "omlc/error.h"

namespace omlc {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

}  // namespace

void ZeroGrads(const ParamList& params) {
  for (Param* p : params) p->ZeroGrad();
}

size_t CountValues(const ConstParamList& params) {
  size_t n = 0;
  for (const Param* p : params) n += p->size();
  return n;
}

std::vector<double> FlattenValues(const ConstParamList& params) {
  std::vector<double> flat;
  flat.reserve(CountValues(params));
  for (const Param* p : params) {
    flat.insert(flat.end(), p->value.begin(), p->value.end());
  }
  return flat;
}

std::vector<double> FlattenGrads(const ConstParamList& params) {
  std::vector<double> flat;
  flat.reserve(CountValues(params));
  for (const Param* p : params) {
    flat.insert(flat.end(), p->grad.begin(), p->grad.end());
  }
  return flat;
}

void UnflattenValues(std::span<const double> flat, const ParamList& params) {
  size_t offset = 0;
  for (Param* p : params) {
    OMLC_CHECK_ARG(offset + p->size() <= flat.size(),
                   "flat parameter vector too short");
    std::copy_n(flat.begin() + offset, p->size(), p->value.begin());
    offset += p->size();
  }
  OMLC_CHECK_ARG(offset == flat.size(), "flat parameter vector too long");
}

bool AllFinite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

Conv2d::Conv2d(const std::string& name, int in_channels, int out_channels,
               int kernel, int stride)
    : weight(name + ".weight",
             static_cast<size_t>(out_channels) * in_channels * kernel *
                 kernel),
      bias(name + ".bias", static_cast<size_t>(out_channels)),
      in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      stride_(stride),
      pad_(kernel / 2) {}

Shape Conv2d::OutputShape(const Shape& in) const {
  if (in.channels != in_channels_) {
    throw Error(ErrorCode::kShapeMismatch,
                weight.name + ": expected " + std::to_string(in_channels_) +
                    " input channels, got " + in.ToString());
  }
  return Shape{out_channels_, (in.height + 2 * pad_ - kernel_) / stride_ + 1,
               (in.width + 2 * pad_ - kernel_) / stride_ + 1};
}

void Conv2d::Unfold(const Tensor& x, const Shape& out,
                    std::vector<double>* cols) const {
  const size_t positions = static_cast<size_t>(out.height) * out.width;
  cols->assign(static_cast<size_t>(in_channels_) * kernel_ * kernel_ *
                   positions,
               0.0);
  double* dst = cols->data();
  for (int c = 0; c < in_channels_; ++c) {
    for (int ky = 0; ky < kernel_; ++ky) {
      for (int kx = 0; kx < kernel_; ++kx) {
        for (int oy = 0; oy < out.height; ++oy) {
          const int iy = oy * stride_ + ky - pad_;
          double* row = dst + static_cast<size_t>(oy) * out.width;
          if (iy < 0 || iy >= x.height()) continue;
          for (int ox = 0; ox < out.width; ++ox) {
            const int ix = ox * stride_ + kx - pad_;
            if (ix >= 0 && ix < x.width()) row[ox] = x.at(c, iy, ix);
          }
        }
        dst += positions;
      }
    }
  }
}

Tensor Conv2d::Forward(const Tensor& x, std::vector<double>* cols) const {
  const Shape out_shape = OutputShape(x.shape());
  std::vector<double> local;
  std::vector<double>* unfolded = cols != nullptr ? cols : &local;
  Unfold(x, out_shape, unfolded);
  const int positions = out_shape.height * out_shape.width;
  const int taps = in_channels_ * kernel_ * kernel_;
  Tensor y(out_shape);
  ConstMatrixMap w(weight.value.data(), out_channels_, taps);
  ConstMatrixMap u(unfolded->data(), taps, positions);
  MatrixMap out(y.data().data(), out_channels_, positions);
  out.noalias() = w * u;
  for (int o = 0; o < out_channels_; ++o) out.row(o).array() += bias.value[o];
  return y;
}

Tensor Conv2d::InputGradient(const Shape& in_shape, const Tensor& dy) const {
  const Shape out_shape = OutputShape(in_shape);
  RequireSameShape(dy, Tensor(out_shape), "conv backward");
  const int positions = out_shape.height * out_shape.width;
  const int taps = in_channels_ * kernel_ * kernel_;
  ConstMatrixMap w(weight.value.data(), out_channels_, taps);
  ConstMatrixMap g(dy.data().data(), out_channels_, positions);
  RowMatrix dcols = w.transpose() * g;
  Tensor dx(in_shape);
  for (int c = 0; c < in_channels_; ++c) {
    for (int ky = 0; ky < kernel_; ++ky) {
      for (int kx = 0; kx < kernel_; ++kx) {
        const double* row =
            dcols.data() +
            static_cast<size_t>((c * kernel_ + ky) * kernel_ + kx) * positions;
        for (int oy = 0; oy < out_shape.height; ++oy) {
          const int iy = oy * stride_ + ky - pad_;
          if (iy < 0 || iy >= in_shape.height) continue;
          for (int ox = 0; ox < out_shape.width; ++ox) {
            const int ix = ox * stride_ + kx - pad_;
            if (ix >= 0 && ix < in_shape.width) {
              dx.at(c, iy, ix) += row[oy * out_shape.width + ox];
            }
          }
        }
      }
    }
  }
  return dx;
}

void Conv2d::AccumulateGradients(const std::vector<double>& cols,
                                 const Tensor& dy) {
  const int positions = dy.height() * dy.width();
  const int taps = in_channels_ * kernel_ * kernel_;
  OMLC_CHECK_ARG(cols.size() == static_cast<size_t>(taps) * positions,
                 "conv gradient: cached columns do not match dy");
  ConstMatrixMap u(cols.data(), taps, positions);
  ConstMatrixMap g(dy.data().data(), out_channels_, positions);
  MatrixMap dw(weight.grad.data(), out_channels_, taps);
  dw.noalias() += g * u.transpose();
  // Plain loop: a vectorized reduction would depend on buffer alignment.
  for (int o = 0; o < out_channels_; ++o) {
    const double* row = dy.data().data() + static_cast<size_t>(o) * positions;
    double s = 0.0;
    for (int i = 0; i < positions; ++i) s += row[i];
    bias.grad[o] += s;
  }
}

void Conv2d::InitHe(std::mt19937_64& rng, double gain) {
  const double fan_in = static_cast<double>(in_channels_) * kernel_ * kernel_;
  const double bound = gain * std::sqrt(6.0 / fan_in);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& w : weight.value) w = dist(rng);
  std::fill(bias.value.begin(), bias.value.end(), 0.0);
}

void LeakyReluInPlace(Tensor* x) {
  for (double& v : x->data()) v = LeakyRelu(v);
}

void LeakyReluBackwardInPlace(const Tensor& pre, Tensor* dy) {
  RequireSameShape(pre, *dy, "leaky relu backward");
  auto p = pre.data();
  auto g = dy->data();
  for (size_t i = 0; i < g.size(); ++i) g[i] *= LeakyReluSlope(p[i]);
}

Tensor PixelShuffle(const Tensor& x) {
  if (x.channels() % 4 != 0) {
    throw Error(ErrorCode::kShapeMismatch,
                "pixel shuffle needs a multiple of 4 channels");
  }
  Tensor y(x.channels() / 4, x.height() * 2, x.width() * 2);
  for (int c = 0; c < y.channels(); ++c) {
    for (int sub = 0; sub < 4; ++sub) {
      const int dy = sub / 2;
      const int dx = sub % 2;
      for (int yy = 0; yy < x.height(); ++yy) {
        for (int xx = 0; xx < x.width(); ++xx) {
          y.at(c, 2 * yy + dy, 2 * xx + dx) = x.at(c * 4 + sub, yy, xx);
        }
      }
    }
  }
  return y;
}

Tensor PixelUnshuffle(const Tensor& y) {
  Tensor x(y.channels() * 4, y.height() / 2, y.width() / 2);
  for (int c = 0; c < y.channels(); ++c) {
    for (int sub = 0; sub < 4; ++sub) {
      const int dy = sub / 2;
      const int dx = sub % 2;
      for (int yy = 0; yy < x.height(); ++yy) {
        for (int xx = 0; xx < x.width(); ++xx) {
          x.at(c * 4 + sub, yy, xx) = y.at(c, 2 * yy + dy, 2 * xx + dx);
        }
      }
    }
  }
  return x;
}

Adam::Adam(double learning_rate, double beta1, double beta2, double epsilon)
    : learning_rate_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon) {}

void Adam::Step(const ParamList& params) {
  if (m_.empty()) {
    for (const Param* p : params) {
      m_.emplace_back(p->size(), 0.0);
      v_.emplace_back(p->size(), 0.0);
    }
  }
  OMLC_CHECK_ARG(m_.size() == params.size(),
                 "optimizer parameter list changed between steps");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    Param& p = *params[i];
    std::vector<double>& m = m_[i];
    std::vector<double>& v = v_[i];
    for (size_t j = 0; j < p.size(); ++j) {
      const double g = p.grad[j];
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g;
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g * g;
      p.value[j] -=
          learning_rate_ * (m[j] / c1) / (std::sqrt(v[j] / c2) + epsilon_);
    }
  }
}

}  // namespace omlc
