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

#include "omlc/synthetic.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace omlc {
namespace {

using Rgb = std::array<double, 3>;

Rgb RandomColor(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  return {u(rng), u(rng), u(rng)};
}

// Bilinearly interpolated lattice noise with the given cell size.
class ValueNoise {
 public:
  ValueNoise(int height, int width, double cell, std::mt19937_64& rng)
      : cell_(cell),
        gw_(static_cast<int>(width / cell) + 2),
        gh_(static_cast<int>(height / cell) + 2),
        grid_(static_cast<size_t>(gw_) * gh_) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : grid_) v = u(rng);
  }

  double operator()(int y, int x) const {
    const double fy = y / cell_;
    const double fx = x / cell_;
    const int iy = static_cast<int>(fy);
    const int ix = static_cast<int>(fx);
    const double ty = Smooth(fy - iy);
    const double tx = Smooth(fx - ix);
    const double a = At(iy, ix) * (1 - tx) + At(iy, ix + 1) * tx;
    const double b = At(iy + 1, ix) * (1 - tx) + At(iy + 1, ix + 1) * tx;
    return a * (1 - ty) + b * ty;
  }

 private:
  static double Smooth(double t) { return t * t * (3 - 2 * t); }
  double At(int y, int x) const {
    return grid_[static_cast<size_t>(y) * gw_ + x];
  }

  double cell_;
  int gw_;
  int gh_;
  std::vector<double> grid_;
};

}  // namespace

ImageTensor GenerateTexture(int height, int width, uint64_t seed) {
  std::mt19937_64 rng(seed * 0x2545F4914F6CDD1DULL + 17);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Tensor t(3, height, width);

  const Rgb c0 = RandomColor(rng);
  const Rgb c1 = RandomColor(rng);
  const double angle = u01(rng) * 2 * std::numbers::pi;
  const double gx = std::cos(angle) / std::max(width, 1);
  const double gy = std::sin(angle) / std::max(height, 1);

  struct Grating {
    double fx, fy, phase, amp;
    Rgb tint;
  };
  std::vector<Grating> gratings(1 + rng() % 3);
  for (Grating& g : gratings) {
    const double period = 4.0 + 28.0 * u01(rng);
    const double theta = u01(rng) * std::numbers::pi;
    g.fx = 2 * std::numbers::pi * std::cos(theta) / period;
    g.fy = 2 * std::numbers::pi * std::sin(theta) / period;
    g.phase = u01(rng) * 2 * std::numbers::pi;
    g.amp = 0.04 + 0.12 * u01(rng);
    g.tint = {u01(rng), u01(rng), u01(rng)};
  }
  const ValueNoise noise(height, width, 6.0 + 14.0 * u01(rng), rng);
  const double noise_amp = 0.05 + 0.15 * u01(rng);

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double w = std::clamp(0.5 + (x - width / 2.0) * gx +
                                      (y - height / 2.0) * gy,
                                  0.0, 1.0);
      double grating[3] = {0, 0, 0};
      for (const Grating& g : gratings) {
        const double s = g.amp * std::sin(g.fx * x + g.fy * y + g.phase);
        for (int c = 0; c < 3; ++c) grating[c] += s * (0.5 + g.tint[c]);
      }
      const double n = noise_amp * noise(y, x);
      for (int c = 0; c < 3; ++c) {
        t.at(c, y, x) = c0[c] * (1 - w) + c1[c] * w + grating[c] + n;
      }
    }
  }

  const int shapes = 2 + static_cast<int>(rng() % 5);
  for (int s = 0; s < shapes; ++s) {
    const Rgb color = RandomColor(rng);
    const double cy = u01(rng) * height;
    const double cx = u01(rng) * width;
    const double ry = 3 + u01(rng) * height / 4.0;
    const double rx = 3 + u01(rng) * width / 4.0;
    const bool ellipse = (rng() & 1) != 0;
    const double alpha = 0.5 + 0.5 * u01(rng);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double dy = (y - cy) / ry;
        const double dx = (x - cx) / rx;
        const bool inside = ellipse ? dx * dx + dy * dy <= 1.0
                                    : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
        if (!inside) continue;
        for (int c = 0; c < 3; ++c) {
          t.at(c, y, x) = (1 - alpha) * t.at(c, y, x) + alpha * color[c];
        }
      }
    }
  }

  std::normal_distribution<double> grain(0.0, 0.01);
  for (double& v : t.data()) v = std::clamp(v + grain(rng), 0.0, 1.0);
  return ImageTensor(std::move(t));
}

std::vector<ImageTensor> GenerateTextureCorpus(int count, int height,
                                               int width, uint64_t seed) {
  std::vector<ImageTensor> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    out.push_back(GenerateTexture(height, width, seed * 1000003ULL + i));
  }
  return out;
}

ImageTensor ConstantImage(int height, int width, double r, double g,
                          double b) {
  Tensor t(3, height, width);
  const double rgb[3] = {r, g, b};
  for (int c = 0; c < 3; ++c) {
    for (double& v : t.plane(c)) v = rgb[c];
  }
  return ImageTensor(std::move(t));
}

}  // namespace omlc
