// Copyright 2026 The taskcodec Authors. All Rights Reserved.
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

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>

#include "taskcodec/taskcodec.h"

namespace {

namespace fs = std::filesystem;

class Scratch {
 public:
  Scratch() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("taskcodec_capi_" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  std::string operator()(const std::string& leaf) const { return (path_ / leaf).string(); }

 private:
  fs::path path_;
};

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult Cli(const std::string& args) {
  const std::string cmd = std::string(TCC_BINARY) + " " + args + " 2>&1";
  CliResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string Slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CapiTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    s_ = std::make_unique<Scratch>();
    ASSERT_EQ(tcc_synth_dataset((*s_)("cls").c_str(), "classification", 6, 16, 2.0, 3), TCC_OK)
        << tcc_last_error();
    ASSERT_EQ(tcc_config_new(&config_), TCC_OK);
    const char* kv[][2] = {{"data_dir", nullptr},   {"epochs", "2"},    {"batch", "8"},
                           {"latent_channels", "4"}, {"head_width", "4"}, {"bottleneck_width", "6"},
                           {"beta", "0.5"},          {"seed", "5"}};
    const std::string data = (*s_)("cls");
    for (auto& p : kv)
      ASSERT_EQ(tcc_config_set(config_, p[0], p[1] ? p[1] : data.c_str()), TCC_OK)
          << tcc_last_error();
    char* summary = nullptr;
    ASSERT_EQ(tcc_train(config_, (*s_)("run").c_str(), &summary), TCC_OK) << tcc_last_error();
    ASSERT_NE(summary, nullptr);
    summary_ = summary;
    tcc_string_free(summary);
  }
  static void TearDownTestSuite() {
    tcc_config_free(config_);
    config_ = nullptr;
    s_.reset();
  }

  static std::unique_ptr<Scratch> s_;
  static tcc_config* config_;
  static std::string summary_;
};

std::unique_ptr<Scratch> CapiTest::s_;
tcc_config* CapiTest::config_ = nullptr;
std::string CapiTest::summary_;

TEST(CapiBasicsTest, VersionAndExitCodes) {
  EXPECT_STRNE(tcc_version(), "");
  EXPECT_EQ(tcc_exit_code(TCC_OK), 0);
  EXPECT_EQ(tcc_exit_code(TCC_E_USAGE), 1);
  EXPECT_EQ(tcc_exit_code(TCC_E_NUMERIC), 3);
  for (tcc_status s : {TCC_E_DATA, TCC_E_FORMAT, TCC_E_WRONG_MODEL, TCC_E_IO, TCC_E_INTERNAL})
    EXPECT_EQ(tcc_exit_code(s), 2);
}

TEST(CapiBasicsTest, ConfigErrorsAreReported) {
  tcc_config* c = nullptr;
  ASSERT_EQ(tcc_config_new(&c), TCC_OK);
  EXPECT_EQ(tcc_config_set(c, "volume", "11"), TCC_E_USAGE);
  EXPECT_NE(std::string(tcc_last_error()).find("volume"), std::string::npos);
  EXPECT_EQ(tcc_config_set(c, "beta", "1/128"), TCC_OK);
  char* text = nullptr;
  ASSERT_EQ(tcc_config_text(c, &text), TCC_OK);
  EXPECT_NE(std::string(text).find("beta = 0.0078125"), std::string::npos) << text;
  tcc_string_free(text);
  EXPECT_EQ(tcc_config_set(nullptr, "beta", "1"), TCC_E_USAGE);
  EXPECT_EQ(tcc_config_load("/nonexistent.cfg", &c), TCC_E_IO);
  tcc_config_free(c);
  tcc_model* m = nullptr;
  EXPECT_EQ(tcc_model_load("/nonexistent.bin", &m), TCC_E_IO);
  EXPECT_EQ(m, nullptr);
}

TEST_F(CapiTest, TrainWritesArtifacts) {
  for (const char* f : {"checkpoint.bin", "epochs.csv", "summary.json"})
    EXPECT_TRUE(fs::exists((*s_)("run/" + std::string(f)))) << f;
  EXPECT_NE(summary_.find("\"record\""), std::string::npos);
  const std::string csv = Slurp((*s_)("run/epochs.csv"));
  EXPECT_EQ(csv.rfind("epoch,L_D,L_T,L_R,L_total,val_accuracy,val_miou,bpp\n", 0), 0u);
}

TEST_F(CapiTest, CompressDecompressThroughLibrary) {
  tcc_model* m = nullptr;
  ASSERT_EQ(tcc_model_load((*s_)("run/checkpoint.bin").c_str(), &m), TCC_OK) << tcc_last_error();
  const std::string img = (*s_)("cls/class_00/img_00000.png");
  double bpp = 0;
  ASSERT_EQ(tcc_compress_file(m, img.c_str(), (*s_)("a.tcc").c_str(), &bpp), TCC_OK)
      << tcc_last_error();
  EXPECT_DOUBLE_EQ(bpp, 8.0 * fs::file_size((*s_)("a.tcc")) / 256.0);
  ASSERT_EQ(tcc_decompress_file(m, (*s_)("a.tcc").c_str(), (*s_)("a.png").c_str()), TCC_OK);
  EXPECT_TRUE(fs::exists((*s_)("a.png")));
  EXPECT_EQ(tcc_compress_file(m, (*s_)("missing.png").c_str(), (*s_)("b.tcc").c_str(), nullptr),
            TCC_E_IO);
  tcc_model_free(m);
}

TEST_F(CapiTest, CliCompressRoundtripAndExitCodes) {
  const std::string model = "--model " + (*s_)("run/checkpoint.bin");
  const std::string img = (*s_)("cls/class_01/img_00002.png");
  CliResult r = Cli("compress " + model + " " + img + " " + (*s_)("c.tcc"));
  ASSERT_EQ(r.code, 0) << r.out;
  double bpp = 0;
  ASSERT_EQ(std::sscanf(r.out.c_str(), "bpp %lf", &bpp), 1) << r.out;
  EXPECT_NEAR(bpp, 8.0 * fs::file_size((*s_)("c.tcc")) / 256.0, 1e-6);
  EXPECT_EQ(Cli("compress " + model + " " + img + " " + (*s_)("c2.tcc")).code, 0);
  EXPECT_EQ(Slurp((*s_)("c.tcc")), Slurp((*s_)("c2.tcc")));
  EXPECT_EQ(Cli("decompress " + model + " " + (*s_)("c.tcc") + " " + (*s_)("c.png")).code, 0);
  EXPECT_EQ(Cli("decompress " + model + " " + (*s_)("c.tcc") + " " + (*s_)("c2.png")).code, 0);
  EXPECT_EQ(Slurp((*s_)("c.png")), Slurp((*s_)("c2.png")));

  std::string bytes = Slurp((*s_)("c.tcc"));
  bytes.resize(bytes.size() - 1);
  std::ofstream((*s_)("t.tcc"), std::ios::binary) << bytes;
  r = Cli("decompress " + model + " " + (*s_)("t.tcc") + " " + (*s_)("t.png"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("truncated"), std::string::npos) << r.out;
  EXPECT_EQ(Cli("compress " + model + " " + (*s_)("nothing.png") + " x.tcc").code, 2);
  EXPECT_EQ(Cli("compress " + img).code, 1);
  EXPECT_EQ(Cli("frobnicate").code, 1);
  EXPECT_EQ(Cli("train --out " + (*s_)("u") + " --regime sideways").code, 1);
  EXPECT_EQ(Cli("train --out " + (*s_)("u") + " --set nonsense=1").code, 1);
  EXPECT_EQ(Cli("train --out " + (*s_)("u") + " --data " + (*s_)("nodata")).code, 2);
}

TEST_F(CapiTest, CliWrongModelIsRejected) {
  CliResult r = Cli("train --out " + (*s_)("run2") + " --data " + (*s_)("cls") +
              " --epochs 1 --batch 8 --latent-channels 4 --head-width 4 --bottleneck-width 6"
              " --seed 9 --beta 0.5");
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string img = (*s_)("cls/class_02/img_00001.png");
  ASSERT_EQ(Cli("compress --model " + (*s_)("run/checkpoint.bin") + " " + img + " " +
                (*s_)("w.tcc")).code, 0);
  r = Cli("decompress --model " + (*s_)("run2/checkpoint.bin") + " " + (*s_)("w.tcc") + " " +
          (*s_)("w.png"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("different entropy model"), std::string::npos) << r.out;
}

TEST_F(CapiTest, NumericAbortExitsThreeAndKeepsCheckpoint) {
  // An absurd learning rate drives the losses to overflow within a few steps.
  CliResult r = Cli("train --out " + (*s_)("nan") + " --data " + (*s_)("cls") +
              " --epochs 6 --batch 2 --latent-channels 4 --head-width 4 --bottleneck-width 6"
              " --lr 1e200 --beta 1");
  EXPECT_EQ(r.code, 3) << r.out;
  EXPECT_TRUE(fs::exists((*s_)("nan/checkpoint.bin"))) << r.out;
}

TEST_F(CapiTest, SweepJpegAndReport) {
  const double betas[] = {4.0, 1.0 / 128};
  char* js = nullptr;
  ASSERT_EQ(tcc_sweep(config_, betas, 2, (*s_)("sweep").c_str(), &js), TCC_OK) << tcc_last_error();
  tcc_string_free(js);
  EXPECT_TRUE(fs::exists((*s_)("sweep/records.json")));
  EXPECT_TRUE(fs::exists((*s_)("sweep/beta_1/checkpoint.bin")));

  CliResult r = Cli("jpeg-baseline --data " + (*s_)("cls") +
              " --epochs 1 --batch 8 --head-width 4 --quality-list 5,50 --out " +
              (*s_)("jpeg.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(Cli("jpeg-baseline --data " + (*s_)("cls") + " --quality-list 0 --out " +
                (*s_)("j0.json")).code, 1);

  r = Cli("report " + (*s_)("sweep/records.json") + " " + (*s_)("jpeg.json") + " " +
          (*s_)("run/summary.json") + " --csv " + (*s_)("curve.csv") + " --svg " +
          (*s_)("curve.svg"));
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string csv = Slurp((*s_)("curve.csv"));
  EXPECT_EQ(csv.rfind("source,param,bpp,accuracy\n", 0), 0u) << csv;
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 + 2 + 1) << csv;
  EXPECT_NE(Slurp((*s_)("curve.svg")).find("<polyline"), std::string::npos);
  EXPECT_EQ(Cli("report " + (*s_)("missing.json") + " --csv a --svg b").code, 2);
}

TEST_F(CapiTest, CliSynthWritesDataset) {
  CliResult r = Cli("synth --task segmentation --out " + (*s_)("seg") +
              " --count 3 --size 16 --seed 2");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists((*s_)("seg/images/scene_00002.png")));
  EXPECT_TRUE(fs::exists((*s_)("seg/masks/scene_00002.png")));
  EXPECT_EQ(Cli("synth --task counting --out " + (*s_)("x")).code, 1);
}

}  // namespace
