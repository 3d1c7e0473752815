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

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "json.hpp"
#include "omlc/bitstream.h"
#include "omlc/image.h"
#include "omlc/meta_training.h"
#include "omlc/metrics.h"
#include "omlc/model.h"
#include "omlc/synthetic.h"
#include "test_util.h"

namespace omlc {
namespace {

namespace fs = std::filesystem;

std::vector<uint8_t> Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(fs::temp_directory_path() /
                        ("omlc_cli_" + std::to_string(::getpid())));
    fs::create_directories(*dir_);
    std::vector<Model> bases;
    for (double lambda : {0.0018, 0.0067, 0.013}) {
      bases.push_back(Model::Create(testing::TinyConfig(), lambda,
                                    static_cast<uint64_t>(lambda * 1e4)));
    }
    Model meta = BuildTaskGrid(bases, 1);
    testing::RandomizeModulators(&meta.modulators, 2, 0.3);
    SaveModel(meta, *dir_ / "meta");
    SaveModel(bases[0], *dir_ / "other");
    WriteImage(GenerateTexture(40, 48, 3), *dir_ / "in.png");
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete dir_;
  }

  static int Run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + OMLC_CLI_PATH + " " + args + " > " +
                            (*dir_ / "log.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  static std::string P(const std::string& name) {
    return (*dir_ / name).string();
  }

  static fs::path* dir_;
};

fs::path* CliTest::dir_ = nullptr;

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(Run(""), 2);
  EXPECT_EQ(Run("frobnicate"), 2);
  EXPECT_EQ(Run("encode " + P("in.png") + " --out " + P("x.omlc")), 2);
  EXPECT_EQ(Run("train-base --lambda 0.01 --out " + P("m")), 2);
  EXPECT_EQ(Run("encode " + P("in.png") + " --model " + P("meta") +
                " --out " + P("x.omlc") + " --metric ssim"),
            2);
  EXPECT_EQ(Run("encode " + P("in.png") + " --model " + P("meta") +
                    " --out " + P("x.omlc"),
                "OMLC_SEED=abc"),
            2);
  EXPECT_EQ(Run("--help"), 0);
}

TEST_F(CliTest, IoErrorsExitThree) {
  EXPECT_EQ(Run("encode " + P("missing.png") + " --model " + P("meta") +
                " --out " + P("x.omlc")),
            3);
  EXPECT_EQ(Run("decode " + P("missing.omlc") + " --model " + P("meta") +
                " --out " + P("y.png")),
            3);
  EXPECT_EQ(Run("eval --dir " + P("nowhere")), 3);
}

TEST_F(CliTest, EncodeDecodeRoundTrip) {
  ASSERT_EQ(Run("encode " + P("in.png") + " --model " + P("meta") +
                " --lambda 0.0067 --oml-iters 3 --patch-size 32 --out " +
                P("rt.omlc") + " --recon-out " + P("rt_enc.png") +
                " --stats-out " + P("rt.json")),
            0);
  ASSERT_EQ(Run("decode " + P("rt.omlc") + " --model " + P("meta") +
                " --out " + P("rt_dec.png")),
            0);
  EXPECT_EQ(ReadImage(P("rt_enc.png")), ReadImage(P("rt_dec.png")));
  std::ifstream in(P("rt.json"));
  const nlohmann::json stats = nlohmann::json::parse(in);
  const auto bytes = Slurp(P("rt.omlc"));
  EXPECT_EQ(stats.at("bpp").get<double>(), 8.0 * bytes.size() / (40 * 48));
  EXPECT_EQ(stats.at("oml_iters").get<int>(), 3);
}

TEST_F(CliTest, FormatErrorsExitFour) {
  ASSERT_EQ(Run("encode " + P("in.png") + " --model " + P("meta") +
                " --oml-iters 0 --out " + P("f.omlc")),
            0);
  EXPECT_EQ(Run("decode " + P("f.omlc") + " --model " + P("other") +
                " --out " + P("f.png")),
            4);
  std::vector<uint8_t> bytes = Slurp(P("f.omlc"));
  bytes[0] = 'Z';
  std::ofstream(P("bad.omlc"), std::ios::binary)
      .write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  EXPECT_EQ(Run("decode " + P("bad.omlc") + " --model " + P("meta") +
                " --out " + P("f.png")),
            4);
}

TEST_F(CliTest, EvalAndRdReport) {
  const fs::path results = *dir_ / "results";
  fs::create_directories(results);
  for (const char* lambda : {"0.0018", "0.013"}) {
    const std::string stem = (results / (std::string("img_") + lambda)).string();
    fs::copy_file(*dir_ / "in.png", stem + ".orig.png",
                  fs::copy_options::overwrite_existing);
    ASSERT_EQ(Run("encode " + P("in.png") + " --model " + P("meta") +
                  " --lambda " + lambda + " --oml-iters 1 --out " + stem +
                  ".omlc --recon-out " + stem + ".recon.png --stats-out " +
                  stem + ".stats.json"),
              0);
  }
  EXPECT_EQ(Run("eval --dir " + results.string()), 0);
  ASSERT_EQ(Run("rd-report --dir " + results.string() + " --out " +
                P("rd.csv")),
            0);
  const std::vector<RdPoint> points = ReadRdReport(P("rd.csv"));
  ASSERT_EQ(points.size(), 2u);
  EXPECT_LE(points[0].bpp, points[1].bpp);
  EXPECT_EQ(points[0].oml_iters, 1);

  // A stats file that disagrees with its container is a format error.
  std::ofstream(results / "img_0.0018.stats.json") << R"({"bpp": 123.0})";
  EXPECT_EQ(Run("eval --dir " + results.string()), 4);
}

TEST_F(CliTest, GenCorpus) {
  ASSERT_EQ(Run("gen-corpus --out " + P("corpus") +
                " --count 3 --size 32 --seed 4"),
            0);
  int count = 0;
  for (const auto& e : fs::directory_iterator(*dir_ / "corpus")) {
    const ImageTensor x = ReadImage(e.path());
    EXPECT_EQ(x.height(), 32);
    ++count;
  }
  EXPECT_EQ(count, 3);
}

}  // namespace
}  // namespace omlc
