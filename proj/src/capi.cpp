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

#include "taskcodec/taskcodec.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <string>

#include "taskcodec/codec.hpp"
#include "taskcodec/image_io.hpp"
#include "taskcodec/synth.hpp"
#include "taskcodec/trainer.hpp"

struct tcc_config {
  tcc::RunConfig config;
};

struct tcc_model {
  tcc::Model model;
};

namespace {

thread_local std::string g_last_error;

tcc_status SetError(tcc_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename F>
tcc_status Guard(F&& body) {
  try {
    g_last_error.clear();
    body();
    return TCC_OK;
  } catch (const tcc::Error& e) {
    return SetError(static_cast<tcc_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return SetError(TCC_E_INTERNAL, "out of memory");
  } catch (const std::filesystem::filesystem_error& e) {
    return SetError(TCC_E_IO, e.what());
  } catch (const std::exception& e) {
    return SetError(TCC_E_INTERNAL, e.what());
  }
}

void Require(const void* p, const char* what) {
  if (p == nullptr) tcc::Fail(tcc::ErrorCode::kUsage, std::string(what) + " is NULL");
}

char* CopyString(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void WriteText(const std::string& path, const std::string& text) {
  tcc::WriteFileBytes(path, {text.begin(), text.end()});
}

}  // namespace

extern "C" {

const char* tcc_version(void) { return "0.1.0"; }

const char* tcc_last_error(void) { return g_last_error.c_str(); }

int tcc_exit_code(tcc_status status) {
  switch (status) {
    case TCC_OK: return 0;
    case TCC_E_USAGE: return 1;
    case TCC_E_NUMERIC: return 3;
    default: return 2;
  }
}

void tcc_string_free(char* s) { std::free(s); }

tcc_status tcc_config_new(tcc_config** out) {
  return Guard([&] {
    Require(out, "out");
    *out = new tcc_config{};
  });
}

tcc_status tcc_config_load(const char* path, tcc_config** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    *out = nullptr;
    *out = new tcc_config{tcc::LoadRunConfig(path)};
  });
}

tcc_status tcc_config_set(tcc_config* config, const char* key, const char* value) {
  return Guard([&] {
    Require(config, "config");
    Require(key, "key");
    Require(value, "value");
    tcc::SetConfigValue(config->config, key, value);
  });
}

tcc_status tcc_config_text(const tcc_config* config, char** text) {
  return Guard([&] {
    Require(config, "config");
    Require(text, "text");
    *text = CopyString(config->config.ToText());
  });
}

void tcc_config_free(tcc_config* config) { delete config; }

tcc_status tcc_train(const tcc_config* config, const char* out_dir, char** summary_json) {
  return Guard([&] {
    Require(config, "config");
    Require(out_dir, "out_dir");
    const tcc::DataSplit data = tcc::LoadSplit(config->config);
    try {
      const tcc::TrainResult result = tcc::Train(config->config, data);
      tcc::WriteRunArtifacts(result, out_dir);
      if (summary_json) *summary_json = CopyString(tcc::SummaryJson(result));
    } catch (const tcc::TrainingAborted& e) {
      std::filesystem::create_directories(out_dir);
      tcc::SaveCheckpoint(e.last_good(),
                          (std::filesystem::path(out_dir) / "checkpoint.bin").string());
      throw;
    }
  });
}

tcc_status tcc_sweep(const tcc_config* config, const double* betas, size_t count,
                     const char* out_dir, char** records_json) {
  return Guard([&] {
    Require(config, "config");
    Require(betas, "betas");
    Require(out_dir, "out_dir");
    const tcc::DataSplit data = tcc::LoadSplit(config->config);
    const auto entries = tcc::SweepBeta(config->config, {betas, count}, data);
    std::vector<tcc::MetricsRecord> records;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      records.push_back(entries[i].record);
      if (entries[i].run)
        tcc::WriteRunArtifacts(*entries[i].run, (std::filesystem::path(out_dir) /
                                                 ("beta_" + std::to_string(i))).string());
    }
    std::filesystem::create_directories(out_dir);
    const std::string js = tcc::RecordsJson(records);
    WriteText((std::filesystem::path(out_dir) / "records.json").string(), js);
    if (records_json) *records_json = CopyString(js);
  });
}

tcc_status tcc_jpeg_baseline(const tcc_config* config, const int* qualities, size_t count,
                             const char* out_path, char** records_json) {
  return Guard([&] {
    Require(config, "config");
    Require(qualities, "qualities");
    const tcc::DataSplit data = tcc::LoadSplit(config->config);
    const auto records = tcc::JpegBaseline(config->config, data, {qualities, count});
    const std::string js = tcc::RecordsJson(records);
    if (out_path) WriteText(out_path, js);
    if (records_json) *records_json = CopyString(js);
  });
}

tcc_status tcc_report(const char* const* record_files, size_t count, const char* csv_path,
                      const char* svg_path) {
  return Guard([&] {
    Require(record_files, "record_files");
    if (count == 0) tcc::Fail(tcc::ErrorCode::kUsage, "report needs at least one record file");
    std::vector<tcc::MetricsRecord> records;
    for (size_t i = 0; i < count; ++i) {
      Require(record_files[i], "record file name");
      const auto bytes = tcc::ReadFileBytes(record_files[i]);
      for (auto& r : tcc::ParseRecordsJson({bytes.begin(), bytes.end()}))
        records.push_back(std::move(r));
    }
    if (records.empty()) tcc::Fail(tcc::ErrorCode::kData, "no records found");
    const tcc::Curves curves = tcc::BuildCurves(records);
    if (csv_path) WriteText(csv_path, tcc::CurvesCsv(curves));
    if (svg_path) WriteText(svg_path, tcc::CurvesSvg(curves));
  });
}

tcc_status tcc_model_load(const char* checkpoint, tcc_model** out) {
  return Guard([&] {
    Require(checkpoint, "checkpoint");
    Require(out, "out");
    *out = nullptr;
    *out = new tcc_model{tcc::ModelFromCheckpoint(tcc::LoadCheckpoint(checkpoint))};
  });
}

void tcc_model_free(tcc_model* model) { delete model; }

tcc_status tcc_compress_file(const tcc_model* model, const char* input, const char* output,
                             double* bpp) {
  return Guard([&] {
    Require(model, "model");
    Require(input, "input");
    Require(output, "output");
    const tcc::CompressStats st = tcc::CompressImageFile(model->model, input, output);
    if (bpp) *bpp = st.bpp;
  });
}

tcc_status tcc_decompress_file(const tcc_model* model, const char* input, const char* output) {
  return Guard([&] {
    Require(model, "model");
    Require(input, "input");
    Require(output, "output");
    tcc::DecompressFile(model->model, input, output);
  });
}

tcc_status tcc_synth_dataset(const char* dir, const char* task, int count, int size,
                             double contrast, uint64_t seed) {
  return Guard([&] {
    Require(dir, "dir");
    Require(task, "task");
    if (count < 1) tcc::Fail(tcc::ErrorCode::kUsage, "count must be >= 1");
    if (size < 8 || size % 4 != 0)
      tcc::Fail(tcc::ErrorCode::kUsage, "size must be a multiple of 4, at least 8");
    tcc::SynthOptions opts;
    opts.size = size;
    opts.contrast = contrast;
    opts.seed = seed;
    switch (tcc::ParseTaskKind(task)) {
      case tcc::TaskKind::kClassification:
        tcc::SynthesizeClassification(dir, count, opts);
        break;
      case tcc::TaskKind::kSegmentation:
        opts.num_classes = 4;
        tcc::SynthesizeSegmentation(dir, count, opts);
        break;
    }
  });
}

}  // extern "C"
