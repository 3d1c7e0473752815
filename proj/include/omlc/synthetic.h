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

#ifndef OMLC_SYNTHETIC_H_
#define OMLC_SYNTHETIC_H_

#include <cstdint>
#include <vector>

#include "omlc/image.h"

namespace omlc {

// Procedural texture: colour gradient, oriented gratings, value noise and
// hard-edged shapes. Fully determined by `seed`.
ImageTensor GenerateTexture(int height, int width, uint64_t seed);

std::vector<ImageTensor> GenerateTextureCorpus(int count, int height,
                                               int width, uint64_t seed);

// Single flat colour.
ImageTensor ConstantImage(int height, int width, double r, double g,
                          double b);

}  // namespace omlc

#endif  // OMLC_SYNTHETIC_H_
