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

#include "taskcodec/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <Eigen/Core>

#include "taskcodec/error.hpp"

namespace tcc {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRow = Eigen::Map<RowMatrix>;
using ConstMapRow = Eigen::Map<const RowMatrix>;

void UniformFill(std::vector<double>& dst, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& x : dst) x = dist(rng);
}

// Column matrix of shape (C*k*k) x (N*H*W) for a 'same' convolution.
RowMatrix Im2Col(const Tensor& x, int k) {
  const int pad = k / 2;
  const int hw = x.h * x.w;
  RowMatrix col = RowMatrix::Zero(static_cast<Eigen::Index>(x.c) * k * k,
                                  static_cast<Eigen::Index>(x.n) * hw);
  for (int n = 0; n < x.n; ++n) {
    for (int c = 0; c < x.c; ++c) {
      const double* src = x.v.data() + (static_cast<std::size_t>(n) * x.c + c) * hw;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          double* row = col.row((c * k + ky) * k + kx).data() +
                        static_cast<std::size_t>(n) * hw;
          for (int y = 0; y < x.h; ++y) {
            const int iy = y + ky - pad;
            if (iy < 0 || iy >= x.h) continue;
            const int x0 = std::max(0, pad - kx);
            const int x1 = std::min(x.w, x.w + pad - kx);
            const double* s = src + iy * x.w + (kx - pad);
            double* d = row + y * x.w;
            for (int ix = x0; ix < x1; ++ix) d[ix] = s[ix];
          }
        }
      }
    }
  }
  return col;
}

void Col2ImAdd(const RowMatrix& col, int k, Tensor& dx) {
  const int pad = k / 2;
  const int hw = dx.h * dx.w;
  for (int n = 0; n < dx.n; ++n) {
    for (int c = 0; c < dx.c; ++c) {
      double* dst = dx.v.data() + (static_cast<std::size_t>(n) * dx.c + c) * hw;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const double* row = col.row((c * k + ky) * k + kx).data() +
                              static_cast<std::size_t>(n) * hw;
          for (int y = 0; y < dx.h; ++y) {
            const int iy = y + ky - pad;
            if (iy < 0 || iy >= dx.h) continue;
            const int x0 = std::max(0, pad - kx);
            const int x1 = std::min(dx.w, dx.w + pad - kx);
            double* d = dst + iy * dx.w + (kx - pad);
            const double* s = row + y * dx.w;
            for (int ix = x0; ix < x1; ++ix) d[ix] += s[ix];
          }
        }
      }
    }
  }
}

// NCHW <-> (C) x (N*H*W) reshuffles.
RowMatrix ChannelMajor(const Tensor& x) {
  const std::size_t hw = x.plane();
  RowMatrix m(x.c, static_cast<Eigen::Index>(x.n * hw));
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c)
      std::memcpy(m.row(c).data() + n * hw,
                  x.v.data() + (static_cast<std::size_t>(n) * x.c + c) * hw,
                  hw * sizeof(double));
  return m;
}

void FromChannelMajor(const RowMatrix& m, Tensor& x) {
  const std::size_t hw = x.plane();
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c)
      std::memcpy(x.v.data() + (static_cast<std::size_t>(n) * x.c + c) * hw,
                  m.row(c).data() + n * hw, hw * sizeof(double));
}

// Samples per im2col chunk, keeping the column matrix cache-sized.
int ChunkSamples(const Tensor& x, int k) {
  const std::size_t per = static_cast<std::size_t>(x.c) * k * k * x.plane();
  return static_cast<int>(std::max<std::size_t>(1, (1u << 16) / std::max<std::size_t>(per, 1)));
}

}  // namespace

// ---------------------------------------------------------------------------

Conv2d::Conv2d(int in_ch, int out_ch, int kernel)
    : in_ch_(in_ch), out_ch_(out_ch), k_(kernel),
      weight_("conv.weight",
              static_cast<std::size_t>(out_ch) * in_ch * kernel * kernel),
      bias_("conv.bias", out_ch) {
  if (kernel % 2 != 1) Fail(ErrorCode::kUsage, "conv kernel must be odd");
}

void Conv2d::Init(Rng& rng) {
  UniformFill(weight_.value, std::sqrt(6.0 / (in_ch_ * k_ * k_)), rng);
  std::fill(bias_.value.begin(), bias_.value.end(), 0.0);
}

Tensor Conv2d::Apply(const Tensor& x) const {
  if (x.c != in_ch_)
    Fail(ErrorCode::kData, "conv: expected " + std::to_string(in_ch_) +
                               " channels, got " + x.shape_string());
  ConstMapRow w(weight_.value.data(), out_ch_, in_ch_ * k_ * k_);
  Tensor y(x.n, out_ch_, x.h, x.w);
  const int step = ChunkSamples(x, k_);
  for (int n0 = 0; n0 < x.n; n0 += step) {
    const Tensor xs = Slice(x, n0, std::min(x.n, n0 + step));
    RowMatrix out = w * Im2Col(xs, k_);
    for (int o = 0; o < out_ch_; ++o) out.row(o).array() += bias_.value[o];
    Tensor ys(xs.n, out_ch_, x.h, x.w);
    FromChannelMajor(out, ys);
    std::copy(ys.v.begin(), ys.v.end(), y.v.begin() + n0 * y.sample_size());
  }
  return y;
}

Tensor Conv2d::Backward(const Tensor& gy) {
  const Tensor& x = input_;
  MapRow dw(weight_.grad.data(), out_ch_, in_ch_ * k_ * k_);
  ConstMapRow w(weight_.value.data(), out_ch_, in_ch_ * k_ * k_);
  Tensor dx(x.n, x.c, x.h, x.w);
  const int step = ChunkSamples(x, k_);
  for (int n0 = 0; n0 < x.n; n0 += step) {
    const int n1 = std::min(x.n, n0 + step);
    const RowMatrix col = Im2Col(Slice(x, n0, n1), k_);
    const RowMatrix g = ChannelMajor(Slice(gy, n0, n1));
    dw.noalias() += g * col.transpose();
    for (int o = 0; o < out_ch_; ++o) bias_.grad[o] += g.row(o).sum();
    const RowMatrix dcol = w.transpose() * g;
    Tensor dxs(n1 - n0, x.c, x.h, x.w);
    Col2ImAdd(dcol, k_, dxs);
    std::copy(dxs.v.begin(), dxs.v.end(), dx.v.begin() + n0 * dx.sample_size());
  }
  return dx;
}

// ---------------------------------------------------------------------------

UpConv2x2::UpConv2x2(int in_ch, int out_ch)
    : in_ch_(in_ch), out_ch_(out_ch),
      weight_("upconv.weight", static_cast<std::size_t>(out_ch) * 4 * in_ch),
      bias_("upconv.bias", out_ch) {}

void UpConv2x2::Init(Rng& rng) {
  UniformFill(weight_.value, std::sqrt(6.0 / in_ch_), rng);
  std::fill(bias_.value.begin(), bias_.value.end(), 0.0);
}

Tensor UpConv2x2::Apply(const Tensor& x) const {
  if (x.c != in_ch_)
    Fail(ErrorCode::kData, "upconv: expected " + std::to_string(in_ch_) +
                               " channels, got " + x.shape_string());
  const RowMatrix in = ChannelMajor(x);
  ConstMapRow w(weight_.value.data(), out_ch_ * 4, in_ch_);
  const RowMatrix out = w * in;
  Tensor y(x.n, out_ch_, x.h * 2, x.w * 2);
  const int hw = x.h * x.w;
  for (int n = 0; n < x.n; ++n)
    for (int o = 0; o < out_ch_; ++o)
      for (int d = 0; d < 4; ++d) {
        const double* src = out.row(o * 4 + d).data() + static_cast<std::size_t>(n) * hw;
        const int dy = d / 2, dx = d % 2;
        for (int yy = 0; yy < x.h; ++yy)
          for (int xx = 0; xx < x.w; ++xx)
            y.at(n, o, 2 * yy + dy, 2 * xx + dx) = src[yy * x.w + xx] + bias_.value[o];
      }
  return y;
}

Tensor UpConv2x2::Backward(const Tensor& gy) {
  const Tensor& x = input_;
  const int hw = x.h * x.w;
  RowMatrix g(out_ch_ * 4, static_cast<Eigen::Index>(x.n) * hw);
  for (int n = 0; n < x.n; ++n)
    for (int o = 0; o < out_ch_; ++o)
      for (int d = 0; d < 4; ++d) {
        double* dst = g.row(o * 4 + d).data() + static_cast<std::size_t>(n) * hw;
        const int dy = d / 2, dx = d % 2;
        for (int yy = 0; yy < x.h; ++yy)
          for (int xx = 0; xx < x.w; ++xx) {
            const double v = gy.at(n, o, 2 * yy + dy, 2 * xx + dx);
            dst[yy * x.w + xx] = v;
            bias_.grad[o] += v;
          }
      }
  const RowMatrix in = ChannelMajor(x);
  MapRow dw(weight_.grad.data(), out_ch_ * 4, in_ch_);
  dw.noalias() += g * in.transpose();
  ConstMapRow w(weight_.value.data(), out_ch_ * 4, in_ch_);
  const RowMatrix din = w.transpose() * g;
  Tensor dxt(x.n, x.c, x.h, x.w);
  FromChannelMajor(din, dxt);
  return dxt;
}

// ---------------------------------------------------------------------------

Tensor MaxPool2::Apply(const Tensor& x) const {
  if (x.h % 2 || x.w % 2)
    Fail(ErrorCode::kData, "maxpool: odd spatial size " + x.shape_string());
  Tensor y(x.n, x.c, x.h / 2, x.w / 2);
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c)
      for (int yy = 0; yy < y.h; ++yy)
        for (int xx = 0; xx < y.w; ++xx) {
          const double a = x.at(n, c, 2 * yy, 2 * xx);
          const double b = x.at(n, c, 2 * yy, 2 * xx + 1);
          const double d = x.at(n, c, 2 * yy + 1, 2 * xx);
          const double e = x.at(n, c, 2 * yy + 1, 2 * xx + 1);
          y.at(n, c, yy, xx) = std::max(std::max(a, b), std::max(d, e));
        }
  return y;
}

Tensor MaxPool2::Backward(const Tensor& gy) {
  const Tensor& x = input_;
  Tensor dx(x.n, x.c, x.h, x.w);
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c)
      for (int yy = 0; yy < gy.h; ++yy)
        for (int xx = 0; xx < gy.w; ++xx) {
          // First maximum in raster order receives the gradient.
          int by = 2 * yy, bx = 2 * xx;
          double best = x.at(n, c, by, bx);
          for (int d = 1; d < 4; ++d) {
            const int iy = 2 * yy + d / 2, ix = 2 * xx + d % 2;
            if (x.at(n, c, iy, ix) > best) {
              best = x.at(n, c, iy, ix);
              by = iy;
              bx = ix;
            }
          }
          dx.at(n, c, by, bx) += gy.at(n, c, yy, xx);
        }
  return dx;
}

// ---------------------------------------------------------------------------

Tensor Relu::Apply(const Tensor& x) const {
  Tensor y = x;
  for (double& v : y.v) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor Relu::Backward(const Tensor& gy) {
  Tensor dx = gy;
  for (std::size_t i = 0; i < dx.v.size(); ++i)
    if (!(input_.v[i] > 0.0)) dx.v[i] = 0.0;
  return dx;
}

Tensor Scale::Apply(const Tensor& x) const {
  Tensor y = x;
  for (double& v : y.v) v = factor_ * v + offset_;
  return y;
}

Tensor Scale::Backward(const Tensor& gy) {
  Tensor dx = gy;
  for (double& v : dx.v) v *= factor_;
  return dx;
}

// ---------------------------------------------------------------------------

Tensor GlobalAvgPool::Apply(const Tensor& x) const {
  Tensor y(x.n, x.c, 1, 1);
  const std::size_t hw = x.plane();
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c) {
      const double* p = x.v.data() + (static_cast<std::size_t>(n) * x.c + c) * hw;
      double s = 0.0;
      for (std::size_t i = 0; i < hw; ++i) s += p[i];
      y.at(n, c, 0, 0) = s / static_cast<double>(hw);
    }
  return y;
}

Tensor GlobalAvgPool::Backward(const Tensor& gy) {
  const Tensor& x = input_;
  Tensor dx(x.n, x.c, x.h, x.w);
  const std::size_t hw = x.plane();
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c) {
      const double g = gy.at(n, c, 0, 0) / static_cast<double>(hw);
      double* p = dx.v.data() + (static_cast<std::size_t>(n) * x.c + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) p[i] = g;
    }
  return dx;
}

// ---------------------------------------------------------------------------

Linear::Linear(int in_features, int out_features)
    : in_(in_features), out_(out_features),
      weight_("linear.weight", static_cast<std::size_t>(in_features) * out_features),
      bias_("linear.bias", out_features) {}

void Linear::Init(Rng& rng) {
  UniformFill(weight_.value, std::sqrt(6.0 / in_), rng);
  std::fill(bias_.value.begin(), bias_.value.end(), 0.0);
}

Tensor Linear::Apply(const Tensor& x) const {
  if (static_cast<int>(x.sample_size()) != in_)
    Fail(ErrorCode::kData, "linear: expected " + std::to_string(in_) +
                               " features, got " + x.shape_string());
  ConstMapRow in(x.v.data(), x.n, in_);
  ConstMapRow w(weight_.value.data(), out_, in_);
  Tensor y(x.n, out_, 1, 1);
  MapRow out(y.v.data(), x.n, out_);
  out.noalias() = in * w.transpose();
  for (int n = 0; n < x.n; ++n)
    for (int o = 0; o < out_; ++o) out(n, o) += bias_.value[o];
  return y;
}

Tensor Linear::Backward(const Tensor& gy) {
  const Tensor& x = input_;
  ConstMapRow in(x.v.data(), x.n, in_);
  ConstMapRow g(gy.v.data(), x.n, out_);
  MapRow dw(weight_.grad.data(), out_, in_);
  dw.noalias() += g.transpose() * in;
  for (int n = 0; n < x.n; ++n)
    for (int o = 0; o < out_; ++o) bias_.grad[o] += g(n, o);
  ConstMapRow w(weight_.value.data(), out_, in_);
  Tensor dx(x.n, x.c, x.h, x.w);
  MapRow din(dx.v.data(), x.n, in_);
  din.noalias() = g * w;
  return dx;
}

// ---------------------------------------------------------------------------

Tensor Sequential::Apply(const Tensor& x) const {
  Tensor h = x;
  for (const auto& l : layers_) h = l->Apply(h);
  return h;
}

Tensor Sequential::Forward(const Tensor& x) {
  Tensor h = x;
  for (auto& l : layers_) h = l->Forward(h);
  return h;
}

Tensor Sequential::Backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
    g = (*it)->Backward(g);
  return g;
}

std::vector<Param*> Sequential::Params() {
  std::vector<Param*> out;
  for (auto& l : layers_)
    for (Param* p : l->Params()) out.push_back(p);
  return out;
}

void Sequential::Init(Rng& rng) {
  for (auto& l : layers_) l->Init(rng);
}

std::vector<std::vector<double>> Snapshot(const std::vector<Param*>& params) {
  std::vector<std::vector<double>> out;
  out.reserve(params.size());
  for (const Param* p : params) out.push_back(p->value);
  return out;
}

void Restore(const std::vector<Param*>& params,
             const std::vector<std::vector<double>>& values) {
  if (values.size() != params.size())
    Fail(ErrorCode::kFormat, "parameter block count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (values[i].size() != params[i]->value.size())
      Fail(ErrorCode::kFormat, "parameter size mismatch in " + params[i]->name);
    params[i]->value = values[i];
  }
}

std::size_t ParameterCount(const std::vector<Param*>& params) {
  std::size_t n = 0;
  for (const Param* p : params) n += p->value.size();
  return n;
}

std::uint64_t ParameterDigest(const std::vector<Param*>& params) {
  std::uint64_t h = 1469598103934665603ull;
  for (const Param* p : params) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p->value.data());
    for (std::size_t i = 0; i < p->value.size() * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  }
  return h;
}

void ZeroGrad(const std::vector<Param*>& params) {
  for (Param* p : params) p->zero_grad();
}

Adam::Adam(std::vector<Param*> params, double lr, double beta1, double beta2,
           double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2),
      eps_(eps) {
  for (const Param* p : params_) {
    m_.emplace_back(p->value.size(), 0.0);
    v_.emplace_back(p->value.size(), 0.0);
  }
  lr_scale_.assign(params_.size(), 1.0);
}

void Adam::SetLrScale(const Param* param, double scale) {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i] == param) {
      lr_scale_[i] = scale;
      return;
    }
  Fail(ErrorCode::kInternal, "SetLrScale: parameter not managed by this optimizer");
}

void Adam::Step() {
  ++step_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Param& p = *params_[i];
    auto& m = m_[i];
    auto& v = v_[i];
    const double lr = lr_ * lr_scale_[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j];
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g;
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g * g;
      p.value[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
    }
  }
}

}  // namespace tcc
