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

#ifndef OMLC_TESTS_TEST_UTIL_H_
#define OMLC_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>

#include "omlc/codec.h"
#include "omlc/error.h"
#include "omlc/image.h"
#include "omlc/model.h"
#include "omlc/modulation.h"
#include "omlc/nn.h"

namespace omlc::testing {

inline CodecConfig TinyConfig() {
  CodecConfig c;
  c.hidden_channels = 6;
  c.latent_channels = 4;
  c.modulator_hidden = 5;
  return c;
}

inline ImageTensor RandomImage(int height, int width, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor t(3, height, width);
  for (double& v : t.data()) v = u(rng);
  return ImageTensor(std::move(t));
}

inline Tensor RandomTensor(Shape shape, double lo, double hi, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(shape);
  for (double& v : t.data()) v = u(rng);
  return t;
}

// Gives every modulator weight a random value so the scales depend on
// lambda.
inline void RandomizeModulators(ModulatorParams* m, uint64_t seed,
                                double spread = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, spread);
  for (Param* p : m->Params()) {
    for (double& v : p->value) v = n(rng);
  }
}

// Symmetric relative error, safe near zero.
inline double RelError(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-10});
  return std::abs(a - b) / denom;
}

// Code of the omlc::Error thrown by `fn`, or nullopt if none was thrown.
inline std::optional<ErrorCode> ErrorCodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace omlc::testing

#endif  // OMLC_TESTS_TEST_UTIL_H_
