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

#include "omlc/model.h"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "omlc/error.h"

namespace omlc {
namespace {

constexpr char kManifestName[] = "manifest.json";
constexpr char kFormatName[] = "omlc-checkpoint";
constexpr int kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

void AppendBytes(const ConstParamList& params, std::vector<uint8_t>* out) {
  for (const Param* p : params) {
    const auto* bytes = reinterpret_cast<const uint8_t*>(p->value.data());
    out->insert(out->end(), bytes, bytes + p->size() * sizeof(double));
  }
}

std::vector<uint8_t> ParamBytes(const ConstParamList& params) {
  std::vector<uint8_t> out;
  AppendBytes(params, &out);
  return out;
}

void WriteFile(const std::filesystem::path& path,
               const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::vector<uint8_t> ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void LoadParams(const std::filesystem::path& path, const ParamList& params) {
  const std::vector<uint8_t> bytes = ReadFile(path);
  size_t expected = 0;
  for (const Param* p : params) expected += p->size() * sizeof(double);
  if (bytes.size() != expected) {
    throw Error(ErrorCode::kFormat,
                path.string() + ": expected " + std::to_string(expected) +
                    " bytes, found " + std::to_string(bytes.size()));
  }
  size_t offset = 0;
  for (Param* p : params) {
    std::memcpy(p->value.data(), bytes.data() + offset,
                p->size() * sizeof(double));
    offset += p->size() * sizeof(double);
  }
}

std::string LevelFile(const char* stem, size_t index) {
  return std::string(stem) + "_" + std::to_string(index) + ".bin";
}

}  // namespace

Model Model::Create(const CodecConfig& config, double lambda, uint64_t seed) {
  OMLC_CHECK_ARG(config.hidden_channels >= 1 && config.latent_channels >= 1 &&
                     config.modulator_hidden >= 1,
                 "channel counts must be positive");
  std::mt19937_64 rng(seed);
  Model m;
  m.config = config;
  QualityLevel level{lambda, Encoder(config),
                     EntropyModel(config.latent_channels)};
  level.encoder.Init(rng);
  m.levels.push_back(std::move(level));
  m.decoder = Decoder(config);
  m.decoder.Init(rng);
  m.modulators = ModulatorParams(m.decoder, config.modulator_hidden);
  m.modulators.InitIdentity(rng);
  return m;
}

int Model::NearestLevel(double lambda) const {
  OMLC_CHECK_ARG(!levels.empty(), "model has no quality levels");
  OMLC_CHECK_ARG(lambda > 0.0, "lambda must be positive");
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < levels.size(); ++i) {
    const double d = std::abs(std::log(levels[i].lambda / lambda));
    if (d < best_dist) {
      best_dist = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

std::vector<double> Model::Lambdas() const {
  std::vector<double> out;
  for (const QualityLevel& l : levels) out.push_back(l.lambda);
  return out;
}

uint32_t Model::Checksum() const {
  std::vector<uint8_t> bytes;
  for (const QualityLevel& l : levels) {
    AppendBytes(l.encoder.Params(), &bytes);
    AppendBytes(l.entropy.Params(), &bytes);
  }
  AppendBytes(decoder.Params(), &bytes);
  AppendBytes(modulators.Params(), &bytes);
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32_z(crc, bytes.data(), bytes.size());
  return static_cast<uint32_t>(crc);
}

void SaveModel(const Model& model, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string());
  nlohmann::json files = nlohmann::json::object();
  for (size_t i = 0; i < model.levels.size(); ++i) {
    WriteFile(dir / LevelFile("encoder", i),
              ParamBytes(model.levels[i].encoder.Params()));
    WriteFile(dir / LevelFile("entropy", i),
              ParamBytes(model.levels[i].entropy.Params()));
  }
  WriteFile(dir / "decoder.bin", ParamBytes(model.decoder.Params()));
  WriteFile(dir / "modulator.bin", ParamBytes(model.modulators.Params()));

  nlohmann::json manifest;
  manifest["format"] = kFormatName;
  manifest["version"] = kFormatVersion;
  manifest["meta"] = model.meta;
  manifest["hidden_channels"] = model.config.hidden_channels;
  manifest["latent_channels"] = model.config.latent_channels;
  manifest["modulator_hidden"] = model.config.modulator_hidden;
  manifest["num_modulated_blocks"] = kNumBlocks;
  manifest["downsample_factor"] = kDownsampleFactor;
  manifest["lambdas"] = model.Lambdas();
  if (!model.meta) manifest["training_lambda"] = model.levels.front().lambda;
  manifest["checksum"] = model.Checksum();
  manifest["training"] = model.training_info;
  const std::string text = manifest.dump(2) + "\n";
  WriteFile(dir / kManifestName, std::vector<uint8_t>(text.begin(), text.end()));
}

Model LoadModel(const std::filesystem::path& dir) {
  const std::vector<uint8_t> raw = ReadFile(dir / kManifestName);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(raw.begin(), raw.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat,
                (dir / kManifestName).string() + ": " + e.what());
  }
  Model model;
  try {
    if (manifest.at("format").get<std::string>() != kFormatName ||
        manifest.at("version").get<int>() != kFormatVersion) {
      throw Error(ErrorCode::kFormat, dir.string() + ": unknown checkpoint");
    }
    if (manifest.at("num_modulated_blocks").get<int>() != kNumBlocks ||
        manifest.at("downsample_factor").get<int>() != kDownsampleFactor) {
      throw Error(ErrorCode::kFormat,
                  dir.string() + ": unsupported decoder geometry");
    }
    model.meta = manifest.at("meta").get<bool>();
    model.config.hidden_channels = manifest.at("hidden_channels").get<int>();
    model.config.latent_channels = manifest.at("latent_channels").get<int>();
    model.config.modulator_hidden =
        manifest.at("modulator_hidden").get<int>();
    model.training_info = manifest.value("training", nlohmann::json::object());
    const auto lambdas = manifest.at("lambdas").get<std::vector<double>>();
    if (lambdas.empty()) {
      throw Error(ErrorCode::kFormat, dir.string() + ": no quality levels");
    }
    for (size_t i = 0; i < lambdas.size(); ++i) {
      QualityLevel level{lambdas[i], Encoder(model.config),
                         EntropyModel(model.config.latent_channels)};
      LoadParams(dir / LevelFile("encoder", i), level.encoder.Params());
      LoadParams(dir / LevelFile("entropy", i), level.entropy.Params());
      model.levels.push_back(std::move(level));
    }
    model.decoder = Decoder(model.config);
    LoadParams(dir / "decoder.bin", model.decoder.Params());
    model.modulators =
        ModulatorParams(model.decoder, model.config.modulator_hidden);
    LoadParams(dir / "modulator.bin", model.modulators.Params());
    const uint32_t expected = manifest.at("checksum").get<uint32_t>();
    if (model.Checksum() != expected) {
      throw Error(ErrorCode::kChecksumMismatch,
                  dir.string() + ": parameter checksum mismatch");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, dir.string() + ": manifest: " + e.what());
  }
  return model;
}

}  // namespace omlc
