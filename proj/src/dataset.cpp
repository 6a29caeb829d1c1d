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

#include "taskcodec/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include "taskcodec/error.hpp"
#include "taskcodec/image_io.hpp"

namespace tcc {
namespace fs = std::filesystem;
namespace {

bool IsImageFile(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::vector<fs::path> SortedEntries(const fs::path& dir, bool want_dirs) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (want_dirs ? e.is_directory() : (e.is_regular_file() && IsImageFile(e.path())))
      out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string JoinOffenders(const std::vector<std::string>& items) {
  std::string s;
  const std::size_t shown = std::min<std::size_t>(items.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) s += "\n  " + items[i];
  if (items.size() > shown)
    s += "\n  ... and " + std::to_string(items.size() - shown) + " more";
  return s;
}

struct Item {
  std::string image;
  std::string mask;
  int label = -1;
};

}  // namespace

Dataset Dataset::Subset(std::span<const int> indices) const {
  Dataset d;
  d.task = task;
  d.num_classes = num_classes;
  d.class_names = class_names;
  d.images = Gather(images, indices);
  const std::size_t hw = images.plane();
  for (int i : indices) {
    d.paths.push_back(paths[i]);
    d.stored_bpp.push_back(stored_bpp[i]);
    if (task == TaskKind::kClassification) {
      d.labels.push_back(labels[i]);
    } else {
      d.masks.insert(d.masks.end(), masks.begin() + i * hw,
                     masks.begin() + (i + 1) * hw);
    }
  }
  return d;
}

std::vector<int> Dataset::Targets(std::span<const int> indices) const {
  std::vector<int> out;
  const std::size_t hw = images.plane();
  for (int i : indices) {
    if (task == TaskKind::kClassification)
      out.push_back(labels[i]);
    else
      out.insert(out.end(), masks.begin() + i * hw, masks.begin() + (i + 1) * hw);
  }
  return out;
}

std::vector<int> Dataset::AllTargets() const {
  return task == TaskKind::kClassification ? labels : masks;
}

std::vector<int> SplitPermutation(int count, std::uint64_t seed) {
  std::vector<int> perm(count);
  std::iota(perm.begin(), perm.end(), 0);
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), 0x5EEDu};
  std::mt19937_64 rng(seq);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

int TrainCount(int count, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    Fail(ErrorCode::kUsage, "split fraction must lie in (0, 1)");
  const int n = static_cast<int>(std::lround(train_fraction * count));
  return std::clamp(n, 1, std::max(1, count - 1));
}

double MeanStoredBpp(const Dataset& d) {
  if (d.stored_bpp.empty()) return 0.0;
  return std::accumulate(d.stored_bpp.begin(), d.stored_bpp.end(), 0.0) /
         static_cast<double>(d.stored_bpp.size());
}

DataSplit IngestDataset(const std::string& root, TaskKind task,
                        std::uint64_t seed, double train_fraction) {
  const fs::path base(root);
  if (!fs::is_directory(base))
    Fail(ErrorCode::kData, "dataset directory not found: " + root);

  std::vector<Item> items;
  std::vector<std::string> class_names;
  std::vector<std::string> offenders;
  if (task == TaskKind::kClassification) {
    for (const fs::path& dir : SortedEntries(base, true)) {
      const int label = static_cast<int>(class_names.size());
      class_names.push_back(dir.filename().string());
      for (const fs::path& f : SortedEntries(dir, false))
        items.push_back({f.string(), {}, label});
    }
    if (class_names.size() < 2)
      Fail(ErrorCode::kData, "classification dataset needs >= 2 class directories in " + root);
  } else {
    const fs::path img_dir = base / "images";
    const fs::path mask_dir = base / "masks";
    if (!fs::is_directory(img_dir) || !fs::is_directory(mask_dir))
      Fail(ErrorCode::kData, "segmentation dataset needs images/ and masks/ in " + root);
    for (const fs::path& f : SortedEntries(img_dir, false)) {
      const fs::path m = mask_dir / (f.stem().string() + ".png");
      if (!fs::is_regular_file(m)) {
        offenders.push_back("missing mask for " + f.string());
        continue;
      }
      items.push_back({f.string(), m.string(), -1});
    }
  }
  if (!offenders.empty())
    Fail(ErrorCode::kData, "dataset ingestion failed:" + JoinOffenders(offenders));
  if (items.size() < 2)
    Fail(ErrorCode::kData, "dataset needs at least 2 items: " + root);

  Dataset all;
  all.task = task;
  all.class_names = class_names;
  int h = -1, w = -1;
  std::vector<Rgb8> rasters;
  std::vector<Mask8> masks;
  for (const Item& it : items) {
    try {
      Rgb8 img = ReadImage(it.image);
      if (h < 0) {
        h = img.height;
        w = img.width;
      }
      if (img.height != h || img.width != w) {
        offenders.push_back(it.image + ": size " + std::to_string(img.width) + "x" +
                            std::to_string(img.height) + " differs from " +
                            std::to_string(w) + "x" + std::to_string(h));
        continue;
      }
      if (task == TaskKind::kSegmentation) {
        Mask8 m = ReadMask(it.mask);
        if (m.height != h || m.width != w) {
          offenders.push_back(it.mask + ": mask size differs from image");
          continue;
        }
        masks.push_back(std::move(m));
      }
      all.stored_bpp.push_back(8.0 * static_cast<double>(fs::file_size(it.image)) /
                               (static_cast<double>(h) * w));
      all.paths.push_back(it.image);
      all.labels.push_back(it.label);
      rasters.push_back(std::move(img));
    } catch (const Error& e) {
      offenders.push_back(std::string(e.what()));
    }
  }
  if (!offenders.empty())
    Fail(ErrorCode::kData, "dataset ingestion failed:" + JoinOffenders(offenders));
  if (h % 4 || w % 4)
    Fail(ErrorCode::kData, "dataset images must have dimensions divisible by 4, got " +
                               std::to_string(w) + "x" + std::to_string(h));

  const int n = static_cast<int>(rasters.size());
  all.images = Tensor(n, 3, h, w);
  for (int i = 0; i < n; ++i) {
    const Tensor t = ToTensor(rasters[i]);
    std::copy(t.v.begin(), t.v.end(), all.images.v.begin() + i * all.images.sample_size());
  }
  if (task == TaskKind::kSegmentation) {
    int max_label = 1;
    for (const Mask8& m : masks)
      for (std::uint8_t v : m.labels) {
        all.masks.push_back(v);
        max_label = std::max<int>(max_label, v);
      }
    all.labels.clear();
    all.num_classes = max_label + 1;
  } else {
    all.num_classes = static_cast<int>(class_names.size());
  }

  const std::vector<int> perm = SplitPermutation(n, seed);
  const int n_train = TrainCount(n, train_fraction);
  std::vector<int> train_idx(perm.begin(), perm.begin() + n_train);
  std::vector<int> val_idx(perm.begin() + n_train, perm.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());

  DataSplit split;
  split.train = all.Subset(train_idx);
  split.validation = all.Subset(val_idx);
  split.class_frequency.assign(all.num_classes, 0.0);
  const std::vector<int> targets = split.train.AllTargets();
  for (int t : targets) split.class_frequency[t] += 1.0;
  for (double& f : split.class_frequency) f /= static_cast<double>(targets.size());
  return split;
}

}  // namespace tcc
