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

#ifndef OMLC_MODEL_H_
#define OMLC_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "json.hpp"
#include "omlc/codec.h"
#include "omlc/modulation.h"

namespace omlc {

// A frozen analysis transform and its entropy model, trained at `lambda`.
struct QualityLevel {
  double lambda = 0.0;
  Encoder encoder;
  EntropyModel entropy;
};

// Everything needed to encode and decode. A base model has one quality
// level and identity modulators; a meta model shares one conditional
// decoder across several levels sorted by increasing lambda.
struct Model {
  CodecConfig config;
  bool meta = false;
  std::vector<QualityLevel> levels;
  Decoder decoder;
  ModulatorParams modulators;
  // Free-form training record copied into the manifest.
  nlohmann::json training_info = nlohmann::json::object();

  // Fresh weights, one level at `lambda`.
  static Model Create(const CodecConfig& config, double lambda, uint64_t seed);

  // Index of the level whose lambda is nearest in the log domain.
  int NearestLevel(double lambda) const;
  std::vector<double> Lambdas() const;

  // CRC-32 over all parameter bytes (little-endian float64) in the order:
  // per level encoder then entropy model, decoder, modulators.
  uint32_t Checksum() const;
};

void SaveModel(const Model& model, const std::filesystem::path& dir);
// Verifies the manifest checksum against the loaded parameters.
Model LoadModel(const std::filesystem::path& dir);

}  // namespace omlc

#endif  // OMLC_MODEL_H_
