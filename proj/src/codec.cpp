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

#include "taskcodec/codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "taskcodec/image_io.hpp"

namespace tcc {
namespace {

int Reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

int RoundUp4(int v) { return (v + 3) / 4 * 4; }

std::string Fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

Tensor ReflectPad(const Tensor& image, int height, int width) {
  if (height < image.h || width < image.w)
    Fail(ErrorCode::kInternal, "ReflectPad target smaller than image");
  Tensor out(image.n, image.c, height, width);
  for (int n = 0; n < image.n; ++n)
    for (int c = 0; c < image.c; ++c)
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
          out.at(n, c, y, x) = image.at(n, c, Reflect(y, image.h), Reflect(x, image.w));
  return out;
}

CompressStats CompressImageFile(const Model& model, const std::string& input,
                                const std::string& output) {
  if (!model.spec().use_bottleneck)
    Fail(ErrorCode::kUsage, "checkpoint has no bottleneck (baseline run)");
  const Rgb8 rgb = ReadImage(input);
  if (rgb.height > 0xFFFF || rgb.width > 0xFFFF)
    Fail(ErrorCode::kData, input + ": image too large");
  const Tensor image = ToTensor(rgb);
  const int ph = RoundUp4(image.h), pw = RoundUp4(image.w);
  const bool padded = ph != image.h || pw != image.w;
  const Tensor source = padded ? ReflectPad(image, ph, pw) : image;
  const LatentCode q = QuantizeEval(model.bottleneck().Encode(source));
  Bitstream stream = EncodeStream(q, model.entropy());
  if (padded) {
    stream.true_height = static_cast<std::uint16_t>(image.h);
    stream.true_width = static_cast<std::uint16_t>(image.w);
  }
  const std::vector<std::uint8_t> bytes = SerializeBitstream(stream);
  WriteFileBytes(output, bytes);
  CompressStats st;
  st.height = image.h;
  st.width = image.w;
  st.bytes = bytes.size();
  st.bpp = MeasuredBpp(stream, image.h, image.w);
  return st;
}

void DecompressFile(const Model& model, const std::string& input,
                    const std::string& output) {
  if (!model.spec().use_bottleneck)
    Fail(ErrorCode::kUsage, "checkpoint has no bottleneck (baseline run)");
  const std::vector<std::uint8_t> bytes = ReadFileBytes(input);
  const Bitstream stream = ParseBitstream(bytes);
  const LatentCode latent = DecodeStream(stream, model.entropy());
  Tensor recon = model.bottleneck().Decode(latent);
  ClampUnit(recon);
  if (stream.true_height != 0) {
    Tensor crop(1, recon.c, stream.true_height, stream.true_width);
    for (int c = 0; c < recon.c; ++c)
      for (int y = 0; y < crop.h; ++y)
        for (int x = 0; x < crop.w; ++x) crop.at(0, c, y, x) = recon.at(0, c, y, x);
    recon = std::move(crop);
  }
  WritePng(output, FromTensor(recon));
}

Dataset JpegDataset(const Dataset& data, int quality) {
  Dataset out = data;
  const int pixels = data.images.h * data.images.w;
  out.stored_bpp.assign(data.size(), 0.0);
  for (int i = 0; i < data.size(); ++i) {
    const std::vector<std::uint8_t> jpg = EncodeJpeg(FromTensor(data.images, i), quality);
    const Tensor back = ToTensor(DecodeJpeg(jpg));
    std::copy(back.v.begin(), back.v.end(),
              out.images.v.begin() + static_cast<std::size_t>(i) * out.images.sample_size());
    out.stored_bpp[i] = 8.0 * static_cast<double>(jpg.size()) / pixels;
  }
  return out;
}

std::vector<MetricsRecord> JpegBaseline(const RunConfig& config, const DataSplit& data,
                                        std::span<const int> qualities) {
  if (qualities.empty()) Fail(ErrorCode::kUsage, "JPEG baseline needs at least one quality");
  for (int q : qualities)
    if (q < 1 || q > 100) Fail(ErrorCode::kUsage, "JPEG quality must lie in [1, 100]");
  RunConfig c = config;
  c.regime = Regime::kBaseline;
  std::vector<MetricsRecord> out;
  for (int q : qualities) {
    MetricsRecord rec;
    try {
      DataSplit jd;
      jd.train = JpegDataset(data.train, q);
      jd.validation = JpegDataset(data.validation, q);
      jd.class_frequency = data.class_frequency;
      rec = TrainBaseline(c, jd).record;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kUsage) throw;
      rec.task = c.task;
      rec.seed = c.seed;
      rec.error = e.what();
    }
    rec.regime = "jpeg";
    rec.quality = q;
    out.push_back(rec);
  }
  return out;
}

Curves BuildCurves(const std::vector<MetricsRecord>& records) {
  Curves curves;
  bool seg = false;
  for (const MetricsRecord& r : records) seg = seg || r.task == TaskKind::kSegmentation;
  curves.metric_name = seg ? "mean_iou" : "accuracy";
  struct Acc {
    double bpp = 0, metric = 0;
    int n = 0;
  };
  std::map<std::pair<std::string, double>, Acc> groups;
  double base_sum = 0.0;
  int base_n = 0;
  for (const MetricsRecord& r : records) {
    if (!r.error.empty()) continue;
    const double m = seg ? r.mean_iou : r.accuracy;
    const double param_value = r.regime == "jpeg" ? r.quality : r.beta;
    curves.rows.push_back({r.regime, r.regime == "baseline" ? 0.0 : param_value, r.bpp, m, 1});
    if (r.regime == "baseline") {
      base_sum += m;
      ++base_n;
      continue;
    }
    double param;
    if (r.regime == "jpeg") param = r.quality;
    else if (r.regime == "tactic" || r.regime == "agnostic") param = r.beta;
    else continue;
    Acc& a = groups[{r.regime, param}];
    a.bpp += r.bpp;
    a.metric += m;
    ++a.n;
  }
  std::stable_sort(curves.rows.begin(), curves.rows.end(),
                   [](const CurvePoint& a, const CurvePoint& b) { return a.bpp < b.bpp; });
  if (groups.empty()) Fail(ErrorCode::kData, "no successful compressed runs to plot");
  for (const auto& [key, a] : groups)
    curves.points.push_back({key.first, key.second, a.bpp / a.n, a.metric / a.n, a.n});
  std::sort(curves.points.begin(), curves.points.end(),
            [](const CurvePoint& a, const CurvePoint& b) {
              return a.source != b.source ? a.source < b.source : a.bpp < b.bpp;
            });
  if (base_n) curves.baseline = base_sum / base_n;
  return curves;
}

std::string CurvesCsv(const Curves& curves) {
  std::ostringstream o;
  o << "source,param,bpp," << curves.metric_name << "\n";
  for (const CurvePoint& p : curves.rows) {
    o << p.source << ',';
    if (p.source != "baseline") o << Fmt(p.param);
    o << ',' << Fmt(p.bpp) << ',' << Fmt(p.metric) << '\n';
  }
  return o.str();
}

std::string CurvesSvg(const Curves& curves) {
  constexpr double kW = 640, kH = 420, kL = 70, kR = 20, kT = 30, kB = 60;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const CurvePoint& p : curves.points) {
    xmin = std::min(xmin, p.bpp);
    xmax = std::max(xmax, p.bpp);
    ymin = std::min(ymin, p.metric);
    ymax = std::max(ymax, p.metric);
  }
  if (curves.baseline) {
    ymin = std::min(ymin, *curves.baseline);
    ymax = std::max(ymax, *curves.baseline);
  }
  const bool logx = xmin > 0.0;
  auto tx = [&](double v) { return logx ? std::log10(v) : v; };
  double x0 = tx(xmin), x1 = tx(xmax);
  if (x1 - x0 < 1e-9) { x0 -= 0.5; x1 += 0.5; }
  const double xpad = 0.05 * (x1 - x0);
  x0 -= xpad;
  x1 += xpad;
  if (ymax - ymin < 1e-9) { ymin -= 1; ymax += 1; }
  const double ypad = 0.08 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;
  auto px = [&](double v) { return kL + (tx(v) - x0) / (x1 - x0) * (kW - kL - kR); };
  auto py = [&](double v) { return kT + (ymax - v) / (ymax - ymin) * (kH - kT - kB); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<line x1=\"" << kL << "\" y1=\"" << kH - kB << "\" x2=\"" << kW - kR << "\" y2=\""
    << kH - kB << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << kL << "\" y1=\"" << kT << "\" x2=\"" << kL << "\" y2=\"" << kH - kB
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    o << "<text x=\"" << kL - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">"
      << Fmt(yv) << "</text>\n";
    const double xt = x0 + (x1 - x0) * i / 4.0;
    const double xv = logx ? std::pow(10.0, xt) : xt;
    o << "<text x=\"" << px(xv) << "\" y=\"" << kH - kB + 18
      << "\" text-anchor=\"middle\">" << Fmt(xv) << "</text>\n";
  }
  o << "<text x=\"" << (kL + kW - kR) / 2 << "\" y=\"" << kH - 15
    << "\" text-anchor=\"middle\">bits per pixel" << (logx ? " (log scale)" : "")
    << "</text>\n"
    << "<text x=\"18\" y=\"" << (kT + kH - kB) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << (kT + kH - kB) / 2 << ")\">" << curves.metric_name << "</text>\n";

  const std::map<std::string, std::string> colors = {
      {"tactic", "#d62728"}, {"jpeg", "#1f77b4"}, {"agnostic", "#2ca02c"}};
  int legend = 0;
  for (const auto& [source, color] : colors) {
    std::ostringstream path;
    int count = 0;
    for (const CurvePoint& p : curves.points) {
      if (p.source != source) continue;
      path << (count++ ? " " : "") << px(p.bpp) << ',' << py(p.metric);
      o << "<circle cx=\"" << px(p.bpp) << "\" cy=\"" << py(p.metric)
        << "\" r=\"3.5\" fill=\"" << color << "\"/>\n";
    }
    if (!count) continue;
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\""
      << path.str() << "\"/>\n"
      << "<text x=\"" << kW - kR - 110 << "\" y=\"" << kT + 16 * legend + 4 << "\" fill=\""
      << color << "\">" << source << "</text>\n";
    ++legend;
  }
  if (curves.baseline) {
    o << "<line x1=\"" << kL << "\" y1=\"" << py(*curves.baseline) << "\" x2=\"" << kW - kR
      << "\" y2=\"" << py(*curves.baseline)
      << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n"
      << "<text x=\"" << kW - kR - 110 << "\" y=\"" << kT + 16 * legend + 4
      << "\" fill=\"gray\">uncompressed</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace tcc
