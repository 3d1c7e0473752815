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

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "omlc/error.h"
#include "omlc/model.h"
#include "test_util.h"

namespace omlc {
namespace {

using nlohmann::json;
using testing::ErrorCodeOf;

TEST(RunConfigTest, EmptyDocumentGivesDefaults) {
  const RunConfig c = ParseRunConfig(json::object());
  EXPECT_EQ(c.lambdas, (std::vector<double>{0.0018, 0.0035, 0.0067, 0.013}));
  EXPECT_EQ(c.oml.iterations, 5);
  EXPECT_EQ(c.oml.gamma_grid,
            (std::vector<double>{0.01, 0.1, 1, 10, 100, 1000}));
  EXPECT_EQ(c.encode.patch_size, 512);
  EXPECT_EQ(c.meta.alpha, 1e-3);
  EXPECT_TRUE(c.meta.first_order);
  EXPECT_EQ(c.model.hidden_channels, 64);
  EXPECT_EQ(c.model.latent_channels, 32);
}

TEST(RunConfigTest, ParsesSectionsAndPropagatesSeed) {
  const json doc = json::parse(R"({
    "seed": 42,
    "lambdas": [0.002, 0.02],
    "model": {"hidden_channels": 8, "latent_channels": 6, "num_blocks": 4},
    "meta": {"alpha": 0.01, "first_order": false, "quantization": "noise"},
    "oml": {"iterations": 99, "metric": "msssim", "gradient_mode": "fd"},
    "encode": {"patch_size": 256, "jobs": 2}
  })");
  const RunConfig c = ParseRunConfig(doc);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.train.seed, 42u);
  EXPECT_EQ(c.meta.seed, 42u);
  EXPECT_EQ(c.oml.seed, 42u);
  EXPECT_EQ(c.model.hidden_channels, 8);
  EXPECT_EQ(c.meta.alpha, 0.01);
  EXPECT_FALSE(c.meta.first_order);
  EXPECT_EQ(c.meta.quantization, QuantizationMode::kNoise);
  EXPECT_EQ(c.oml.iterations, 99);
  EXPECT_EQ(c.oml.metric, Metric::kMsssim);
  EXPECT_EQ(c.oml.gradient_mode, GradientMode::kFiniteDifference);
  EXPECT_EQ(c.encode.patch_size, 256);

  const RunConfig again = ParseRunConfig(ToJson(c));
  EXPECT_EQ(ToJson(again), ToJson(c));
}

TEST(RunConfigTest, RejectsUnknownAndInvalidEntries) {
  for (const char* text : {
           R"({"sed": 1})",
           R"({"oml": {"iters": 5}})",
           R"({"model": {"num_blocks": 3}})",
           R"({"lambdas": [0.01, 0.005]})",
           R"({"lambdas": []})",
           R"({"encode": {"patch_size": 100}})",
           R"({"oml": {"gamma_grid": [1, 0.1]}})",
           R"({"meta": {"quantization": "floor"}})",
           R"({"oml": {"iterations": "five"}})",
       }) {
    EXPECT_EQ(ErrorCodeOf([&] { ParseRunConfig(json::parse(text)); }),
              ErrorCode::kInvalidArgument)
        << text;
  }
}

TEST(RunConfigTest, EnvironmentSeedOverrides) {
  RunConfig c = ParseRunConfig(json::parse(R"({"seed": 3})"));
  ::setenv("OMLC_SEED", "1234", 1);
  ApplyEnvironment(&c);
  EXPECT_EQ(c.seed, 1234u);
  EXPECT_EQ(c.meta.seed, 1234u);
  ::setenv("OMLC_SEED", "12x", 1);
  EXPECT_EQ(ErrorCodeOf([&] { ApplyEnvironment(&c); }),
            ErrorCode::kInvalidArgument);
  ::unsetenv("OMLC_SEED");
  ApplyEnvironment(&c);
  EXPECT_EQ(c.seed, 1234u);
}

TEST(RunConfigTest, LoadErrors) {
  EXPECT_EQ(ErrorCodeOf([] { LoadRunConfig("/nonexistent/omlc.json"); }),
            ErrorCode::kIo);
  const auto path = std::filesystem::temp_directory_path() /
                    ("omlc_cfg_" + std::to_string(::getpid()) + ".json");
  std::ofstream(path) << "{ not json";
  EXPECT_EQ(ErrorCodeOf([&] { LoadRunConfig(path); }),
            ErrorCode::kInvalidArgument);
  std::filesystem::remove(path);
}

class ModelIoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("omlc_model_" + std::to_string(::getpid()));
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(ModelIoTest, SaveLoadRoundTrip) {
  Model m = Model::Create(testing::TinyConfig(), 0.0067, 5);
  testing::RandomizeModulators(&m.modulators, 6);
  m.training_info = {{"stage", "base"}};
  SaveModel(m, dir_);
  const Model back = LoadModel(dir_);
  EXPECT_EQ(back.Checksum(), m.Checksum());
  EXPECT_EQ(back.Lambdas(), m.Lambdas());
  EXPECT_EQ(back.config, m.config);
  EXPECT_EQ(back.training_info, m.training_info);
  EXPECT_EQ(back.meta, m.meta);
}

TEST_F(ModelIoTest, CorruptionIsDetected) {
  const Model m = Model::Create(testing::TinyConfig(), 0.0067, 5);
  SaveModel(m, dir_);
  const auto path = dir_ / "decoder.bin";
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(40);
  f.put('\x7f');
  f.close();
  EXPECT_EQ(ErrorCodeOf([&] { LoadModel(dir_); }),
            ErrorCode::kChecksumMismatch);

  std::filesystem::resize_file(path, 8);
  EXPECT_NE(ErrorCodeOf([&] { LoadModel(dir_); }), std::nullopt);
  EXPECT_EQ(ErrorCodeOf([&] { LoadModel(dir_ / "missing"); }), ErrorCode::kIo);
}

TEST(ModelTest, NearestLevelIsLogDomain) {
  Model m = Model::Create(testing::TinyConfig(), 0.001, 1);
  m.levels.push_back(m.levels[0]);
  m.levels[1].lambda = 0.1;
  EXPECT_EQ(m.NearestLevel(0.009), 0);
  EXPECT_EQ(m.NearestLevel(0.011), 1);
  EXPECT_EQ(m.NearestLevel(5.0), 1);
}

}  // namespace
}  // namespace omlc
