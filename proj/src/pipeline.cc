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

#include "omlc/pipeline.h"

#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <string>
#include <thread>

#include "omlc/entropy_coding.h"
#include "omlc/error.h"
#include "omlc/modulation.h"

namespace omlc {
namespace {

struct PatchOutput {
  PatchRecord record;
  PatchStats stats;
  ImageTensor reconstruction;
};

PatchOutput EncodePatch(const Patch& patch, const Model& model,
                        const QualityLevel& level, const CdfTable& table,
                        const EncodeOptions& options) {
  const PaddedImage padded = PadToMultiple(patch.image, kDownsampleFactor);
  const QuantizedLatent z =
      RoundLatent(EncodeLatent(padded.image, level.encoder));

  PatchOutput out;
  out.record.payload = EncodeSymbols(z, table);
  out.stats.rect = patch.rect;
  out.stats.payload_bytes = out.record.payload.size();
  out.stats.table_bits = TableRateBits(z, table);

  OmlConfig oml = options.oml;
  const bool boundary = patch.rect.height != options.patch_size ||
                        patch.rect.width != options.patch_size;
  if (boundary && !options.adapt_boundary) oml.iterations = 0;
  out.stats.adapted = oml.iterations > 0;

  const OmlResult r = OmlAdaptPatch(patch.image, z, model.decoder,
                                    model.modulators, options.lambda, oml);
  for (double v : r.best_lambdas) {
    out.record.lambda_bits.push_back(DoubleToHalfBits(v));
  }
  out.stats.lambdas = r.best_lambdas;
  out.stats.initial_distortion = r.initial_distortion;
  out.stats.best_distortion = r.best_distortion;
  out.stats.evaluations = r.evaluations;
  out.reconstruction = ImageTensor(CropTensor(
      r.best_reconstruction, 0, 0, patch.rect.height, patch.rect.width));
  return out;
}

}  // namespace

EncodeResult EncodeImage(const ImageTensor& image, const Model& model,
                         const EncodeOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  options.oml.Validate();
  OMLC_CHECK_ARG(!model.levels.empty(), "model has no quality levels");
  OMLC_CHECK_ARG(options.lambda >= kLambdaMin && options.lambda <= kLambdaMax,
                 "lambda must lie in [1e-6, 1e4]");
  OMLC_CHECK_ARG(options.patch_size >= 16 && options.patch_size % 16 == 0 &&
                     options.patch_size <= 65535,
                 "patch size must be a multiple of 16 below 65536");
  OMLC_CHECK_ARG(options.jobs >= 1, "jobs must be >= 1");
  OMLC_CHECK_ARG(image.height() <= 65535 && image.width() <= 65535,
                 "image dimensions exceed 65535");
  OMLC_CHECK_ARG(model.modulators.num_layers() <= 255, "too many modulators");

  EncodeResult result;
  result.quality_index = options.quality_index.has_value()
                             ? *options.quality_index
                             : model.NearestLevel(options.lambda);
  OMLC_CHECK_ARG(result.quality_index >= 0 &&
                     result.quality_index < static_cast<int>(model.levels.size()),
                 "quality index out of range");
  const QualityLevel& level = model.levels[result.quality_index];
  const CdfTable table = BuildCdfTable(level.entropy);

  const std::vector<Patch> patches = Tile(image, options.patch_size);
  std::vector<PatchOutput> outputs(patches.size());
  std::vector<std::exception_ptr> errors(patches.size());
  auto work = [&](size_t first, size_t stride) {
    for (size_t i = first; i < patches.size(); i += stride) {
      try {
        outputs[i] = EncodePatch(patches[i], model, level, table, options);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const size_t jobs =
      std::min(static_cast<size_t>(options.jobs), patches.size());
  if (jobs <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> threads;
    for (size_t t = 0; t < jobs; ++t) threads.emplace_back(work, t, jobs);
    for (std::thread& t : threads) t.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  Container& c = result.container;
  c.header.width = static_cast<uint16_t>(image.width());
  c.header.height = static_cast<uint16_t>(image.height());
  c.header.patch_size = static_cast<uint16_t>(options.patch_size);
  c.header.num_lambdas = static_cast<uint8_t>(model.modulators.num_layers());
  c.header.metric = options.oml.metric == Metric::kMse ? MetricId::kMse
                                                       : MetricId::kMsssim;
  c.header.quality_index = static_cast<uint8_t>(result.quality_index);
  c.header.model_checksum = model.Checksum();

  std::vector<Patch> recon_patches;
  double total_pixels = 0.0;
  for (size_t i = 0; i < patches.size(); ++i) {
    PatchOutput& o = outputs[i];
    c.patches.push_back(std::move(o.record));
    const double px =
        static_cast<double>(o.stats.rect.height) * o.stats.rect.width;
    result.initial_distortion += px * o.stats.initial_distortion;
    result.best_distortion += px * o.stats.best_distortion;
    total_pixels += px;
    recon_patches.push_back({patches[i].rect, std::move(o.reconstruction)});
    result.patches.push_back(std::move(o.stats));
  }
  result.initial_distortion /= total_pixels;
  result.best_distortion /= total_pixels;
  result.reconstruction =
      Assemble(recon_patches, image.height(), image.width());
  result.bytes = WriteContainer(c);
  result.bits = CountBits(c);
  result.bpp = ComputeBpp(result.bits, image.num_pixels());
  result.seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return result;
}

ImageTensor DecodeImage(std::span<const uint8_t> bytes, const Model& model) {
  const Container c = ReadContainer(bytes);
  const ContainerHeader& h = c.header;
  if (h.model_checksum != model.Checksum()) {
    throw Error(ErrorCode::kChecksumMismatch,
                "container was written for a different model");
  }
  if (h.num_lambdas != model.modulators.num_layers()) {
    throw Error(ErrorCode::kFormat, "container K does not match the model");
  }
  if (h.quality_index >= model.levels.size()) {
    throw Error(ErrorCode::kFormat, "quality index out of range");
  }
  if (h.patch_size % kDownsampleFactor != 0 || h.patch_size < 16) {
    throw Error(ErrorCode::kFormat, "patch size is not a multiple of 16");
  }
  const CdfTable table = BuildCdfTable(model.levels[h.quality_index].entropy);
  const std::vector<PatchRect> rects = PatchGrid(h.height, h.width,
                                                 h.patch_size);
  std::vector<Patch> patches;
  for (size_t i = 0; i < rects.size(); ++i) {
    const PatchRect& r = rects[i];
    const Shape shape{model.config.latent_channels,
                      (r.height + kDownsampleFactor - 1) / kDownsampleFactor,
                      (r.width + kDownsampleFactor - 1) / kDownsampleFactor};
    const QuantizedLatent z = DecodeSymbols(c.patches[i].payload, table, shape);
    std::vector<double> lambdas;
    for (uint16_t bits : c.patches[i].lambda_bits) {
      const double v = HalfBitsToDouble(bits);
      if (!(v >= kLambdaMin && v <= kLambdaMax)) {
        throw Error(ErrorCode::kFormat, "side information out of range");
      }
      lambdas.push_back(v);
    }
    const Tensor out = ConditionalForward(z.ToTensor(), model.decoder,
                                          model.modulators, lambdas, nullptr);
    patches.push_back({r, ImageTensor(CropTensor(out, 0, 0, r.height,
                                                 r.width))});
  }
  return Assemble(patches, h.height, h.width);
}

nlohmann::json EncodeStatsJson(const EncodeResult& result,
                               const EncodeOptions& options) {
  nlohmann::json patches = nlohmann::json::array();
  for (const PatchStats& p : result.patches) {
    patches.push_back({{"top", p.rect.top},
                       {"left", p.rect.left},
                       {"height", p.rect.height},
                       {"width", p.rect.width},
                       {"lambdas", p.lambdas},
                       {"initial_distortion", p.initial_distortion},
                       {"best_distortion", p.best_distortion},
                       {"evaluations", p.evaluations},
                       {"payload_bytes", p.payload_bytes},
                       {"adapted", p.adapted}});
  }
  return {
      {"lambda", options.lambda},
      {"quality_index", result.quality_index},
      {"metric", MetricName(options.oml.metric)},
      {"oml_iters", options.oml.iterations},
      {"bytes", result.bytes.size()},
      {"bpp", result.bpp.total},
      {"bpp_payload", result.bpp.payload},
      {"bpp_side_info", result.bpp.side_info},
      {"bpp_framing", result.bpp.framing},
      {"initial_distortion", result.initial_distortion},
      {"adapted_distortion", result.best_distortion},
      {"encode_time", result.seconds},
      {"patches", patches},
  };
}

}  // namespace omlc
