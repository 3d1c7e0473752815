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

// Command-line front end: training, encoding, decoding and evaluation.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "omlc/bitstream.h"
#include "omlc/config.h"
#include "omlc/error.h"
#include "omlc/meta_training.h"
#include "omlc/metrics.h"
#include "omlc/model.h"
#include "omlc/pipeline.h"
#include "omlc/synthetic.h"
#include "omlc/training.h"

namespace fs = std::filesystem;

namespace omlc {
namespace {

bool IsImageFile(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return e == ".png" || e == ".ppm";
}

std::vector<ImageTensor> LoadImageDir(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kIo, "not a directory: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && IsImageFile(entry.path())) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "no .png or .ppm images in " + dir.string());
  }
  std::vector<ImageTensor> images;
  for (const fs::path& f : files) images.push_back(ReadImage(f));
  return images;
}

std::vector<uint8_t> ReadBytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), {}};
}

void WriteBytes(const fs::path& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

void WriteJson(const fs::path& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  out << doc.dump(2) << "\n";
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

std::vector<double> ParseList(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "not a number list: " + text);
    }
  }
  if (out.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty number list");
  }
  return out;
}

RunConfig LoadConfig(const std::string& path) {
  RunConfig config = path.empty() ? ParseRunConfig(nlohmann::json::object())
                                  : LoadRunConfig(path);
  ApplyEnvironment(&config);
  return config;
}

void Log(int step, double loss) {
  std::fprintf(stderr, "step %d loss %.6g\n", step, loss);
}

// --- train-base --------------------------------------------------------------

struct TrainBaseArgs {
  std::string config, data, out, init;
  double lambda = 0.0;
  std::optional<uint64_t> seed;
};

int TrainBaseCmd(const TrainBaseArgs& a) {
  RunConfig config = LoadConfig(a.config);
  if (a.seed) {
    config.seed = *a.seed;
    config.PropagateSeed();
  }
  const std::vector<ImageTensor> data = LoadImageDir(a.data);
  std::optional<Model> init;
  if (!a.init.empty()) init = LoadModel(a.init);
  BaseTrainingResult r =
      TrainBase(data, a.lambda, config.model, config.train,
                init ? &*init : nullptr, Log);
  SaveModel(r.model, a.out);
  std::printf("trained lambda=%g holdout_loss %.6g -> %.6g mse %.6g bpp %.6g "
              "checksum %08x\n",
              a.lambda, r.report.initial_holdout_loss,
              r.report.final_holdout_loss, r.report.final_holdout.mse,
              r.report.final_holdout.bpp, r.model.Checksum());
  return 0;
}

// --- meta-train --------------------------------------------------------------

struct MetaTrainArgs {
  std::string config, lambdas, data, out;
  std::vector<std::string> bases;
  std::optional<double> alpha;
  std::optional<int> iterations;
  std::optional<uint64_t> seed;
};

int MetaTrainCmd(const MetaTrainArgs& a) {
  RunConfig config = LoadConfig(a.config);
  if (a.seed) {
    config.seed = *a.seed;
    config.PropagateSeed();
  }
  if (a.alpha) config.meta.alpha = *a.alpha;
  if (a.iterations) config.meta.outer_iterations = *a.iterations;
  const std::vector<double> lambdas = ParseList(a.lambdas);
  if (lambdas.size() != a.bases.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                std::to_string(a.bases.size()) + " base models for " +
                    std::to_string(lambdas.size()) + " lambdas");
  }
  std::vector<Model> bases;
  for (size_t i = 0; i < a.bases.size(); ++i) {
    bases.push_back(LoadModel(a.bases[i]));
    if (bases.back().levels.size() != 1) {
      throw Error(ErrorCode::kInvalidArgument,
                  a.bases[i] + " is not a base checkpoint");
    }
    const double trained = bases.back().levels[0].lambda;
    if (std::abs(trained - lambdas[i]) > 1e-12 * std::max(1.0, trained)) {
      throw Error(ErrorCode::kInvalidArgument,
                  a.bases[i] + " was trained at lambda " +
                      std::to_string(trained) + ", expected " +
                      std::to_string(lambdas[i]));
    }
  }
  const std::vector<ImageTensor> data = LoadImageDir(a.data);
  const Model grid = BuildTaskGrid(bases, config.seed);
  MetaTrainingResult r = MetaTrain(grid, data, config.meta, Log);
  SaveModel(r.model, a.out);
  std::printf("meta-trained %zu tasks holdout_loss %.6g -> %.6g\n",
              r.model.levels.size(), r.report.initial_holdout_loss,
              r.report.final_holdout_loss);
  return 0;
}

// --- encode / decode ---------------------------------------------------------

struct EncodeArgs {
  std::string config, input, model, out, recon_out, stats_out;
  std::optional<double> lambda;
  std::optional<int> oml_iters, patch_size, jobs;
  std::optional<std::string> metric, gamma_grid, grad_mode;
  std::optional<bool> adapt_boundary;
};

int EncodeCmd(const EncodeArgs& a) {
  const RunConfig config = LoadConfig(a.config);
  const Model model = LoadModel(a.model);
  const ImageTensor image = ReadImage(a.input);

  EncodeOptions options;
  options.oml = config.oml;
  options.patch_size = config.encode.patch_size;
  options.adapt_boundary = config.encode.adapt_boundary;
  options.jobs = config.encode.jobs;
  options.lambda = a.lambda ? *a.lambda : model.levels.front().lambda;
  if (a.oml_iters) options.oml.iterations = *a.oml_iters;
  if (a.metric) options.oml.metric = ParseMetric(*a.metric);
  if (a.gamma_grid) options.oml.gamma_grid = ParseList(*a.gamma_grid);
  if (a.grad_mode) options.oml.gradient_mode = ParseGradientMode(*a.grad_mode);
  if (a.patch_size) options.patch_size = *a.patch_size;
  if (a.jobs) options.jobs = *a.jobs;
  if (a.adapt_boundary) options.adapt_boundary = *a.adapt_boundary;

  const EncodeResult r = EncodeImage(image, model, options);
  WriteBytes(a.out, r.bytes);
  if (!a.recon_out.empty()) WriteImage(r.reconstruction, a.recon_out);
  const nlohmann::json stats = EncodeStatsJson(r, options);
  if (!a.stats_out.empty()) WriteJson(a.stats_out, stats);

  std::string lambdas;
  for (const PatchStats& p : r.patches) {
    lambdas += lambdas.empty() ? "[" : " [";
    for (size_t k = 0; k < p.lambdas.size(); ++k) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), k ? ",%.6g" : "%.6g", p.lambdas[k]);
      lambdas += buf;
    }
    lambdas += "]";
  }
  std::printf("bpp %.9g initial_distortion %.6g adapted_distortion %.6g "
              "time %.3fs lambdas %s\n",
              r.bpp.total, r.initial_distortion, r.best_distortion, r.seconds,
              lambdas.c_str());
  return 0;
}

int DecodeCmd(const std::string& input, const std::string& model_dir,
              const std::string& out) {
  const Model model = LoadModel(model_dir);
  const std::vector<uint8_t> bytes = ReadBytes(input);
  WriteImage(DecodeImage(bytes, model), out);
  return 0;
}

// --- eval / rd-report --------------------------------------------------------

// A directory holds, per stem: <stem>.omlc, <stem>.orig.{png,ppm},
// <stem>.recon.{png,ppm} and optionally <stem>.stats.json from encode.
struct Triple {
  std::string stem;
  fs::path container, original, recon, stats;
};

fs::path FindImage(const fs::path& dir, const std::string& name) {
  for (const char* ext : {".png", ".ppm"}) {
    const fs::path p = dir / (name + ext);
    if (fs::exists(p)) return p;
  }
  throw Error(ErrorCode::kIo, "missing " + (dir / name).string() +
                                  ".{png,ppm}");
}

std::vector<Triple> FindTriples(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kIo, "not a directory: " + dir.string());
  }
  std::vector<Triple> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".omlc") continue;
    Triple t;
    t.stem = entry.path().stem().string();
    t.container = entry.path();
    t.original = FindImage(dir, t.stem + ".orig");
    t.recon = FindImage(dir, t.stem + ".recon");
    t.stats = dir / (t.stem + ".stats.json");
    out.push_back(std::move(t));
  }
  if (out.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "no .omlc containers in " + dir.string());
  }
  std::sort(out.begin(), out.end(),
            [](const Triple& a, const Triple& b) { return a.stem < b.stem; });
  return out;
}

RdPoint Evaluate(const Triple& t, nlohmann::json* row) {
  const ImageTensor x = ReadImage(t.original);
  const ImageTensor y = ReadImage(t.recon);
  if (x.height() != y.height() || x.width() != y.width()) {
    throw Error(ErrorCode::kShapeMismatch,
                t.stem + ": original and reconstruction differ in size");
  }
  const BppReport bpp = ContainerBpp(ReadBytes(t.container));
  RdPoint p;
  p.bpp = bpp.total;
  p.psnr = Psnr(x, y);
  const bool small = std::min(x.height(), x.width()) < 16;
  p.msssim = small ? std::nan("") : Msssim(x, y);
  p.msssim_db = small ? std::nan("") : MsssimDb(p.msssim);
  *row = {{"stem", t.stem}, {"bpp", p.bpp}, {"bpp_payload", bpp.payload},
          {"bpp_side_info", bpp.side_info}, {"psnr", p.psnr},
          {"msssim", p.msssim}, {"msssim_db", p.msssim_db}};
  if (fs::exists(t.stats)) {
    std::ifstream in(t.stats);
    const nlohmann::json s = nlohmann::json::parse(in);
    p.lambda = s.value("lambda", 0.0);
    p.oml_iters = s.value("oml_iters", 0);
    p.encode_time = s.value("encode_time", 0.0);
    const double stated = s.value("bpp", p.bpp);
    (*row)["stats_bpp_delta"] = std::abs(stated - p.bpp);
    if (std::abs(stated - p.bpp) > 1e-9) {
      throw Error(ErrorCode::kFormat,
                  t.stem + ": stats bpp disagrees with the container");
    }
  }
  return p;
}

int EvalCmd(const std::string& dir) {
  for (const Triple& t : FindTriples(dir)) {
    nlohmann::json row;
    Evaluate(t, &row);
    std::printf("%s\n", row.dump().c_str());
  }
  return 0;
}

int RdReportCmd(const std::string& dir, const std::string& out) {
  std::vector<RdPoint> points;
  for (const Triple& t : FindTriples(dir)) {
    nlohmann::json row;
    points.push_back(Evaluate(t, &row));
  }
  WriteRdReport(points, out);
  std::printf("wrote %zu points to %s\n", points.size(), out.c_str());
  return 0;
}

int GenCorpusCmd(const std::string& out, int count, int size, uint64_t seed) {
  OMLC_CHECK_ARG(count >= 1 && size >= 1, "count and size must be >= 1");
  fs::create_directories(out);
  const auto images = GenerateTextureCorpus(count, size, size, seed);
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "tex_%04d.png", i);
    WriteImage(images[i], fs::path(out) / name);
  }
  return 0;
}

int Main(int argc, char** argv) {
  CLI::App app{"Variable-rate learned image codec with online adaptation"};
  app.require_subcommand(1);

  TrainBaseArgs tb;
  auto* train = app.add_subcommand("train-base", "Train a base model");
  train->add_option("--config", tb.config, "JSON run configuration");
  train->add_option("--lambda", tb.lambda, "Rate-distortion tradeoff")
      ->required();
  train->add_option("--data", tb.data, "Directory of training images")
      ->required();
  train->add_option("--out", tb.out, "Checkpoint directory")->required();
  train->add_option("--seed", tb.seed, "Overrides the config seed");
  train->add_option("--init", tb.init, "Warm-start checkpoint");

  MetaTrainArgs mt;
  auto* meta = app.add_subcommand("meta-train", "Meta-train the decoder");
  meta->add_option("--config", mt.config, "JSON run configuration");
  meta->add_option("--lambdas", mt.lambdas, "Comma-separated task lambdas")
      ->required();
  meta->add_option("--bases", mt.bases, "Base checkpoints, one per lambda")
      ->required();
  meta->add_option("--data", mt.data, "Directory of training images")
      ->required();
  meta->add_option("--out", mt.out, "Checkpoint directory")->required();
  meta->add_option("--alpha", mt.alpha, "Inner step size (0: joint)");
  meta->add_option("--iterations", mt.iterations, "Outer iterations");
  meta->add_option("--seed", mt.seed, "Overrides the config seed");

  EncodeArgs en;
  auto* encode = app.add_subcommand("encode", "Compress an image");
  encode->add_option("input", en.input, "PNG or PPM image")->required();
  encode->add_option("--config", en.config, "JSON run configuration");
  encode->add_option("--model", en.model, "Checkpoint directory")->required();
  encode->add_option("--lambda", en.lambda, "Target tradeoff");
  encode->add_option("--oml-iters", en.oml_iters, "Online iterations");
  encode->add_option("--metric", en.metric, "psnr or msssim");
  encode->add_option("--gamma-grid", en.gamma_grid, "Comma-separated steps");
  encode->add_option("--grad-mode", en.grad_mode,
                     "autodiff or finite_difference");
  encode->add_option("--patch-size", en.patch_size, "Patch size in pixels");
  encode->add_option("--adapt-boundary", en.adapt_boundary,
                     "Adapt partial boundary patches (true/false)");
  encode->add_option("--jobs", en.jobs, "Parallel patches");
  encode->add_option("--out", en.out, "Output .omlc file")->required();
  encode->add_option("--recon-out", en.recon_out, "Write reconstruction");
  encode->add_option("--stats-out", en.stats_out, "Write JSON statistics");

  std::string dec_in, dec_model, dec_out;
  auto* decode = app.add_subcommand("decode", "Decompress a container");
  decode->add_option("input", dec_in, ".omlc file")->required();
  decode->add_option("--model", dec_model, "Checkpoint directory")->required();
  decode->add_option("--out", dec_out, "Output image")->required();

  std::string eval_dir;
  auto* eval = app.add_subcommand("eval", "Per-file metrics as JSON lines");
  eval->add_option("--dir", eval_dir, "Directory of encode results")
      ->required();

  std::string rd_dir, rd_out;
  auto* rd = app.add_subcommand("rd-report", "Write an RD CSV");
  rd->add_option("--dir", rd_dir, "Directory of encode results")->required();
  rd->add_option("--out", rd_out, "CSV path")->required();

  std::string gen_out;
  int gen_count = 16, gen_size = 128;
  uint64_t gen_seed = 1;
  auto* gen = app.add_subcommand("gen-corpus", "Write synthetic textures");
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--count", gen_count, "Number of images");
  gen->add_option("--size", gen_size, "Image side in pixels");
  gen->add_option("--seed", gen_seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return ExitCodeFor(ErrorCode::kInvalidArgument);
  }

  try {
    if (*train) return TrainBaseCmd(tb);
    if (*meta) return MetaTrainCmd(mt);
    if (*encode) return EncodeCmd(en);
    if (*decode) return DecodeCmd(dec_in, dec_model, dec_out);
    if (*eval) return EvalCmd(eval_dir);
    if (*rd) return RdReportCmd(rd_dir, rd_out);
    if (*gen) return GenCorpusCmd(gen_out, gen_count, gen_size, gen_seed);
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", ErrorCodeName(e.code()),
                 e.what());
    return ExitCodeFor(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error (json): %s\n", e.what());
    return ExitCodeFor(ErrorCode::kFormat);
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error (io): %s\n", e.what());
    return ExitCodeFor(ErrorCode::kIo);
  }
  return ExitCodeFor(ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace omlc

int main(int argc, char** argv) { return omlc::Main(argc, argv); }
