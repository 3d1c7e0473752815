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

// Whole-image encode and decode.
//
// Encoding tiles the image, codes each patch's latent with the entropy model
// of the selected quality level, adapts the patch's tradeoffs online and
// writes a container. Decoding performs one conditional decode per patch.

#ifndef OMLC_PIPELINE_H_
#define OMLC_PIPELINE_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "omlc/bitstream.h"
#include "omlc/image.h"
#include "omlc/model.h"
#include "omlc/online_adaptation.h"

namespace omlc {

struct EncodeOptions {
  double lambda = 0.0067;
  OmlConfig oml;
  int patch_size = 512;
  // When false, patches smaller than patch_size skip adaptation.
  bool adapt_boundary = true;
  // Patches are independent, so results do not depend on this.
  int jobs = 1;
  // Defaults to the level whose lambda is nearest to `lambda`.
  std::optional<int> quality_index;
};

struct PatchStats {
  PatchRect rect;
  std::vector<double> lambdas;
  double initial_distortion = 0.0;
  double best_distortion = 0.0;
  int evaluations = 0;
  size_t payload_bytes = 0;
  // Ideal code length under the quantized table.
  double table_bits = 0.0;
  bool adapted = false;
};

struct EncodeResult {
  std::vector<uint8_t> bytes;
  Container container;
  ImageTensor reconstruction;
  std::vector<PatchStats> patches;
  BitBreakdown bits;
  BppReport bpp;
  int quality_index = 0;
  // Pixel-weighted means of the per-patch distortions.
  double initial_distortion = 0.0;
  double best_distortion = 0.0;
  double seconds = 0.0;
};

EncodeResult EncodeImage(const ImageTensor& image, const Model& model,
                         const EncodeOptions& options);

// Errors: container errors from ReadContainer, kChecksumMismatch when the
// container was written for another model, kFormat for inconsistent fields.
ImageTensor DecodeImage(std::span<const uint8_t> bytes, const Model& model);

// Machine-readable summary of an encode.
nlohmann::json EncodeStatsJson(const EncodeResult& result,
                               const EncodeOptions& options);

}  // namespace omlc

#endif  // OMLC_PIPELINE_H_
