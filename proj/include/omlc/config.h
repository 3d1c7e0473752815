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

// JSON run configuration shared by the command-line tools.
//
// Every section is optional; missing keys take their defaults and unknown
// keys are rejected. ToJson() writes the fully materialized document.

#ifndef OMLC_CONFIG_H_
#define OMLC_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "omlc/codec.h"
#include "omlc/meta_training.h"
#include "omlc/online_adaptation.h"
#include "omlc/training.h"

namespace omlc {

struct EncodeSettings {
  int patch_size = 512;
  bool adapt_boundary = true;
  int jobs = 1;
};

struct RunConfig {
  CodecConfig model;
  TrainConfig train;
  MetaConfig meta;
  std::vector<double> lambdas = {0.0018, 0.0035, 0.0067, 0.013};
  OmlConfig oml;
  EncodeSettings encode;
  uint64_t seed = 1;
  std::string data_dir;
  std::string out_dir;

  // Copies `seed` into the per-stage seeds.
  void PropagateSeed();
};

// Throws kInvalidArgument on unknown keys, wrong types or invalid values.
RunConfig ParseRunConfig(const nlohmann::json& doc);
RunConfig LoadRunConfig(const std::filesystem::path& path);
nlohmann::json ToJson(const RunConfig& config);

// Applies OMLC_SEED from the environment, if set.
void ApplyEnvironment(RunConfig* config);

}  // namespace omlc

#endif  // OMLC_CONFIG_H_
