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

#include "omlc/config.h"

#include <cstdlib>
#include <fstream>
#include <set>
#include <string>

#include "omlc/error.h"
#include "omlc/modulation.h"

namespace omlc {
namespace {

using nlohmann::json;

// Reads keys out of one JSON object and rejects anything left over.
class Section {
 public:
  Section(const json& doc, std::string name) : name_(std::move(name)) {
    if (!doc.is_object()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "config: '" + name_ + "' must be an object");
    }
    doc_ = &doc;
  }

  template <typename T>
  void Get(const char* key, T* out) {
    seen_.insert(key);
    auto it = doc_->find(key);
    if (it == doc_->end()) return;
    try {
      *out = it->get<T>();
    } catch (const json::exception&) {
      throw Error(ErrorCode::kInvalidArgument,
                  "config: bad type for " + Path(key));
    }
  }

  const json* Child(const char* key) {
    seen_.insert(key);
    auto it = doc_->find(key);
    return it == doc_->end() ? nullptr : &*it;
  }

  void Finish() const {
    for (auto it = doc_->begin(); it != doc_->end(); ++it) {
      if (!seen_.count(it.key())) {
        throw Error(ErrorCode::kInvalidArgument,
                    "config: unknown key " + Path(it.key()));
      }
    }
  }

 private:
  std::string Path(const std::string& key) const {
    return name_.empty() ? key : name_ + "." + key;
  }
  const json* doc_ = nullptr;
  std::string name_;
  std::set<std::string> seen_;
};

std::string QuantizationName(QuantizationMode m) {
  return m == QuantizationMode::kRound ? "round" : "noise";
}

QuantizationMode ParseQuantization(const std::string& s) {
  if (s == "round") return QuantizationMode::kRound;
  if (s == "noise") return QuantizationMode::kNoise;
  throw Error(ErrorCode::kInvalidArgument,
              "config: quantization must be round or noise");
}

}  // namespace

void RunConfig::PropagateSeed() {
  train.seed = seed;
  meta.seed = seed;
  oml.seed = seed;
}

RunConfig ParseRunConfig(const json& doc) {
  RunConfig c;
  Section root(doc, "");
  root.Get("seed", &c.seed);
  root.Get("lambdas", &c.lambdas);
  root.Get("data_dir", &c.data_dir);
  root.Get("out_dir", &c.out_dir);

  if (const json* j = root.Child("model")) {
    Section s(*j, "model");
    int blocks = kNumBlocks;
    s.Get("hidden_channels", &c.model.hidden_channels);
    s.Get("latent_channels", &c.model.latent_channels);
    s.Get("modulator_hidden", &c.model.modulator_hidden);
    s.Get("num_blocks", &blocks);
    s.Finish();
    OMLC_CHECK_ARG(blocks == kNumBlocks,
                   "config: model.num_blocks must be " +
                       std::to_string(kNumBlocks));
  }
  if (const json* j = root.Child("train")) {
    Section s(*j, "train");
    s.Get("steps", &c.train.steps);
    s.Get("batch_size", &c.train.batch_size);
    s.Get("crop_size", &c.train.crop_size);
    s.Get("learning_rate", &c.train.learning_rate);
    s.Get("distortion_scale", &c.train.distortion_scale);
    s.Get("holdout_fraction", &c.train.holdout_fraction);
    s.Get("log_every", &c.train.log_every);
    s.Finish();
  }
  if (const json* j = root.Child("meta")) {
    Section s(*j, "meta");
    std::string quantization = QuantizationName(c.meta.quantization);
    s.Get("alpha", &c.meta.alpha);
    s.Get("inner_steps", &c.meta.inner_steps);
    s.Get("outer_learning_rate", &c.meta.outer_learning_rate);
    s.Get("outer_iterations", &c.meta.outer_iterations);
    s.Get("batch_size", &c.meta.batch_size);
    s.Get("crop_size", &c.meta.crop_size);
    s.Get("first_order", &c.meta.first_order);
    s.Get("outer_optimizer", &c.meta.outer_optimizer);
    s.Get("quantization", &quantization);
    s.Get("distortion_scale", &c.meta.distortion_scale);
    s.Get("holdout_fraction", &c.meta.holdout_fraction);
    s.Get("hvp_epsilon", &c.meta.hvp_epsilon);
    s.Get("log_every", &c.meta.log_every);
    s.Finish();
    c.meta.quantization = ParseQuantization(quantization);
  }
  if (const json* j = root.Child("oml")) {
    Section s(*j, "oml");
    std::string metric = MetricName(c.oml.metric);
    std::string mode = GradientModeName(c.oml.gradient_mode);
    s.Get("iterations", &c.oml.iterations);
    s.Get("gamma_grid", &c.oml.gamma_grid);
    s.Get("metric", &metric);
    s.Get("gradient_mode", &mode);
    s.Get("fd_step", &c.oml.fd_step);
    s.Finish();
    c.oml.metric = ParseMetric(metric);
    c.oml.gradient_mode = ParseGradientMode(mode);
  }
  if (const json* j = root.Child("encode")) {
    Section s(*j, "encode");
    s.Get("patch_size", &c.encode.patch_size);
    s.Get("adapt_boundary", &c.encode.adapt_boundary);
    s.Get("jobs", &c.encode.jobs);
    s.Finish();
  }
  root.Finish();

  OMLC_CHECK_ARG(c.model.hidden_channels >= 1 && c.model.latent_channels >= 1 &&
                     c.model.modulator_hidden >= 1,
                 "config: channel counts must be >= 1");
  OMLC_CHECK_ARG(!c.lambdas.empty(), "config: lambdas must not be empty");
  for (size_t i = 0; i < c.lambdas.size(); ++i) {
    OMLC_CHECK_ARG(c.lambdas[i] >= kLambdaMin && c.lambdas[i] <= kLambdaMax,
                   "config: lambdas must lie in [1e-6, 1e4]");
    OMLC_CHECK_ARG(i == 0 || c.lambdas[i] > c.lambdas[i - 1],
                   "config: lambdas must be strictly increasing");
  }
  OMLC_CHECK_ARG(c.encode.patch_size >= 16 && c.encode.patch_size % 16 == 0 &&
                     c.encode.patch_size <= 65535,
                 "config: encode.patch_size must be a multiple of 16");
  OMLC_CHECK_ARG(c.encode.jobs >= 1, "config: encode.jobs must be >= 1");
  c.meta.Validate();
  c.oml.Validate();
  c.PropagateSeed();
  return c;
}

RunConfig LoadRunConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidArgument,
                "config " + path.string() + ": " + e.what());
  }
  return ParseRunConfig(doc);
}

json ToJson(const RunConfig& c) {
  return {
      {"seed", c.seed},
      {"lambdas", c.lambdas},
      {"data_dir", c.data_dir},
      {"out_dir", c.out_dir},
      {"model",
       {{"hidden_channels", c.model.hidden_channels},
        {"latent_channels", c.model.latent_channels},
        {"modulator_hidden", c.model.modulator_hidden},
        {"num_blocks", kNumBlocks}}},
      {"train",
       {{"steps", c.train.steps},
        {"batch_size", c.train.batch_size},
        {"crop_size", c.train.crop_size},
        {"learning_rate", c.train.learning_rate},
        {"distortion_scale", c.train.distortion_scale},
        {"holdout_fraction", c.train.holdout_fraction},
        {"log_every", c.train.log_every}}},
      {"meta",
       {{"alpha", c.meta.alpha},
        {"inner_steps", c.meta.inner_steps},
        {"outer_learning_rate", c.meta.outer_learning_rate},
        {"outer_iterations", c.meta.outer_iterations},
        {"batch_size", c.meta.batch_size},
        {"crop_size", c.meta.crop_size},
        {"first_order", c.meta.first_order},
        {"outer_optimizer", c.meta.outer_optimizer},
        {"quantization", QuantizationName(c.meta.quantization)},
        {"distortion_scale", c.meta.distortion_scale},
        {"holdout_fraction", c.meta.holdout_fraction},
        {"hvp_epsilon", c.meta.hvp_epsilon},
        {"log_every", c.meta.log_every}}},
      {"oml",
       {{"iterations", c.oml.iterations},
        {"gamma_grid", c.oml.gamma_grid},
        {"metric", MetricName(c.oml.metric)},
        {"gradient_mode", GradientModeName(c.oml.gradient_mode)},
        {"fd_step", c.oml.fd_step}}},
      {"encode",
       {{"patch_size", c.encode.patch_size},
        {"adapt_boundary", c.encode.adapt_boundary},
        {"jobs", c.encode.jobs}}},
  };
}

void ApplyEnvironment(RunConfig* config) {
  const char* env = std::getenv("OMLC_SEED");
  if (env == nullptr || *env == '\0') return;
  try {
    size_t used = 0;
    const unsigned long long v = std::stoull(env, &used);
    if (used != std::string(env).size()) throw std::invalid_argument(env);
    config->seed = v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("OMLC_SEED is not an unsigned integer: ") + env);
  }
  config->PropagateSeed();
}

}  // namespace omlc
