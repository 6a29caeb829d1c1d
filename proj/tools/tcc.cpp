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

// tcc: train, sweep, compress, decompress and report from the command line.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "taskcodec/taskcodec.h"

namespace {

struct ConfigFlags {
  std::string path;
  std::map<std::string, std::string> values;
  std::vector<std::string> sets;
};

void AddConfigFlags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--config", f.path, "key = value run configuration file");
  static const char* kKeys[][2] = {
      {"regime", "baseline | agnostic | tactic"},
      {"task", "classification | segmentation"},
      {"data", "dataset root (data_dir)"},
      {"seed", "run seed"},
      {"alpha", "task loss weight"},
      {"beta", "rate loss weight"},
      {"gamma", "Dice weight (segmentation)"},
      {"lr", "Adam learning rate"},
      {"batch", "batch size"},
      {"epochs", "training epochs"},
      {"split", "train fraction"},
      {"stage1-epochs", "task-agnostic stage 1 epochs"},
      {"entropy-lr-scale", "learning-rate multiplier of the entropy model"},
      {"prior-init-scale", "initial scale of the latent prior"},
      {"latent-channels", "latent channels"},
      {"bottleneck-width", "bottleneck conv width"},
      {"latent-scale", "encoder input gain"},
      {"head-width", "task head base width"},
  };
  for (const auto& k : kKeys) {
    std::string key = k[0];
    cmd->add_option_function<std::string>(
        "--" + key, [&f, key](const std::string& v) { f.values[key] = v; }, k[1]);
  }
  cmd->add_option("--set", f.sets, "extra key=value overrides");
}

int Report(tcc_status s) {
  if (s != TCC_OK) std::fprintf(stderr, "tcc: %s\n", tcc_last_error());
  return tcc_exit_code(s);
}

std::string ConfigKey(std::string flag) {
  if (flag == "data") return "data_dir";
  for (char& c : flag)
    if (c == '-') c = '_';
  return flag;
}

using ConfigPtr = std::unique_ptr<tcc_config, decltype(&tcc_config_free)>;

tcc_status BuildConfig(const ConfigFlags& f, ConfigPtr& out) {
  tcc_config* raw = nullptr;
  tcc_status s = f.path.empty() ? tcc_config_new(&raw) : tcc_config_load(f.path.c_str(), &raw);
  if (s != TCC_OK) return s;
  out.reset(raw);
  for (const auto& [k, v] : f.values)
    if ((s = tcc_config_set(raw, ConfigKey(k).c_str(), v.c_str())) != TCC_OK) return s;
  for (const std::string& kv : f.sets) {
    const auto eq = kv.find('=');
    const std::string key = eq == std::string::npos ? kv : kv.substr(0, eq);
    const std::string val = eq == std::string::npos ? "" : kv.substr(eq + 1);
    if ((s = tcc_config_set(raw, key.c_str(), val.c_str())) != TCC_OK) return s;
  }
  return TCC_OK;
}

bool SplitList(const std::string& text, std::vector<std::string>& out) {
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return !out.empty();
}

bool ParseBeta(const std::string& s, double& out) {
  char* end = nullptr;
  const auto slash = s.find('/');
  if (slash != std::string::npos) {
    const double num = std::strtod(s.substr(0, slash).c_str(), &end);
    if (*end) return false;
    const double den = std::strtod(s.substr(slash + 1).c_str(), &end);
    if (*end || den == 0.0) return false;
    out = num / den;
  } else {
    out = std::strtod(s.c_str(), &end);
    if (*end || s.empty()) return false;
  }
  return std::isfinite(out);
}

int Usage(const std::string& msg) {
  std::fprintf(stderr, "tcc: %s\n", msg.c_str());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task-aware learned image compression"};
  app.require_subcommand(1);

  ConfigFlags train_flags, sweep_flags, jpeg_flags;
  std::string out_dir, betas = "4,1,1/128", qualities = "2,5,10,15,25,50", jpeg_out;
  std::string model_path, input, output;
  std::vector<std::string> record_files;
  std::string csv_path, svg_path;
  std::string synth_task = "classification", synth_dir;
  int synth_count = 100, synth_size = 32;
  double synth_contrast = 1.0;
  std::uint64_t synth_seed = 0;

  auto* train = app.add_subcommand("train", "train one run");
  AddConfigFlags(train, train_flags);
  train->add_option("--out", out_dir, "output directory")->required();

  auto* sweep = app.add_subcommand("sweep", "TACTIC runs over a list of beta values");
  AddConfigFlags(sweep, sweep_flags);
  sweep->add_option("--betas", betas, "comma-separated beta values (fractions allowed)");
  sweep->add_option("--out", out_dir, "output directory")->required();

  auto* compress = app.add_subcommand("compress", "compress an image file");
  compress->add_option("--model", model_path, "checkpoint")->required();
  compress->add_option("input", input)->required();
  compress->add_option("output", output)->required();

  auto* decompress = app.add_subcommand("decompress", "decompress to PNG");
  decompress->add_option("--model", model_path, "checkpoint")->required();
  decompress->add_option("input", input)->required();
  decompress->add_option("output", output)->required();

  auto* jpeg = app.add_subcommand("jpeg-baseline", "task accuracy on JPEG-coded inputs");
  AddConfigFlags(jpeg, jpeg_flags);
  jpeg->add_option("--quality-list", qualities, "comma-separated JPEG qualities");
  jpeg->add_option("--out", jpeg_out, "records JSON path")->required();

  auto* report = app.add_subcommand("report", "rate-accuracy CSV and SVG from records");
  report->add_option("records", record_files, "records.json / summary.json files")->required();
  report->add_option("--csv", csv_path, "CSV output")->required();
  report->add_option("--svg", svg_path, "SVG output")->required();

  auto* synth = app.add_subcommand("synth", "write a procedural dataset");
  synth->add_option("--task", synth_task, "classification | segmentation");
  synth->add_option("--out", synth_dir, "dataset root")->required();
  synth->add_option("--count", synth_count, "images per class / scenes");
  synth->add_option("--size", synth_size, "image side");
  synth->add_option("--contrast", synth_contrast, "class-evidence strength");
  synth->add_option("--seed", synth_seed, "seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  ConfigPtr config(nullptr, &tcc_config_free);
  if (*train) {
    if (tcc_status s = BuildConfig(train_flags, config); s != TCC_OK) return Report(s);
    char* summary = nullptr;
    const tcc_status s = tcc_train(config.get(), out_dir.c_str(), &summary);
    if (s == TCC_OK) {
      std::printf("%s\n", summary);
      tcc_string_free(summary);
    }
    return Report(s);
  }
  if (*sweep) {
    if (tcc_status s = BuildConfig(sweep_flags, config); s != TCC_OK) return Report(s);
    std::vector<std::string> items;
    std::vector<double> values;
    if (!SplitList(betas, items)) return Usage("empty --betas");
    for (const std::string& b : items) {
      double v;
      if (!ParseBeta(b, v)) return Usage("bad beta '" + b + "'");
      values.push_back(v);
    }
    char* js = nullptr;
    const tcc_status s =
        tcc_sweep(config.get(), values.data(), values.size(), out_dir.c_str(), &js);
    if (s == TCC_OK) {
      std::printf("%s\n", js);
      tcc_string_free(js);
    }
    return Report(s);
  }
  if (*jpeg) {
    if (tcc_status s = BuildConfig(jpeg_flags, config); s != TCC_OK) return Report(s);
    std::vector<std::string> items;
    std::vector<int> values;
    if (!SplitList(qualities, items)) return Usage("empty --quality-list");
    for (const std::string& q : items) {
      char* end = nullptr;
      const long v = std::strtol(q.c_str(), &end, 10);
      if (*end) return Usage("bad quality '" + q + "'");
      values.push_back(static_cast<int>(v));
    }
    char* js = nullptr;
    const tcc_status s =
        tcc_jpeg_baseline(config.get(), values.data(), values.size(), jpeg_out.c_str(), &js);
    if (s == TCC_OK) {
      std::printf("%s\n", js);
      tcc_string_free(js);
    }
    return Report(s);
  }
  if (*compress || *decompress) {
    tcc_model* raw = nullptr;
    if (tcc_status s = tcc_model_load(model_path.c_str(), &raw); s != TCC_OK) return Report(s);
    std::unique_ptr<tcc_model, decltype(&tcc_model_free)> model(raw, &tcc_model_free);
    if (*compress) {
      double bpp = 0.0;
      const tcc_status s = tcc_compress_file(model.get(), input.c_str(), output.c_str(), &bpp);
      if (s == TCC_OK) std::printf("bpp %.6f\n", bpp);
      return Report(s);
    }
    return Report(tcc_decompress_file(model.get(), input.c_str(), output.c_str()));
  }
  if (*report) {
    std::vector<const char*> files;
    for (const std::string& f : record_files) files.push_back(f.c_str());
    return Report(tcc_report(files.data(), files.size(), csv_path.c_str(), svg_path.c_str()));
  }
  if (*synth) {
    return Report(tcc_synth_dataset(synth_dir.c_str(), synth_task.c_str(), synth_count,
                                    synth_size, synth_contrast, synth_seed));
  }
  return 1;
}
