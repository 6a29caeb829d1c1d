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

#ifndef TASKCODEC_LAYERS_HPP_
#define TASKCODEC_LAYERS_HPP_

// Minimal layer set with hand-written backward passes. Every layer offers a
// pure Apply() for inference and a caching Forward()/Backward() pair for
// training. Backward() accumulates into Param::grad and returns the gradient
// with respect to the layer input.

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "taskcodec/tensor.hpp"

namespace tcc {

using Rng = std::mt19937_64;

struct Param {
  std::string name;
  std::vector<double> value;
  std::vector<double> grad;

  explicit Param(std::string n = {}, std::size_t count = 0)
      : name(std::move(n)), value(count, 0.0), grad(count, 0.0) {}
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string kind() const = 0;
  virtual Tensor Apply(const Tensor& x) const = 0;
  virtual Tensor Forward(const Tensor& x) {
    input_ = x;
    return Apply(x);
  }
  virtual Tensor Backward(const Tensor& grad_out) = 0;
  virtual std::vector<Param*> Params() { return {}; }
  // Fan-in-scaled uniform init; layers without weights ignore it.
  virtual void Init(Rng&) {}

 protected:
  Tensor input_;
};

// 'Same' convolution, stride 1, odd square kernel.
class Conv2d : public Layer {
 public:
  Conv2d(int in_ch, int out_ch, int kernel);
  std::string kind() const override { return "conv"; }
  Tensor Apply(const Tensor& x) const override;
  Tensor Backward(const Tensor& grad_out) override;
  std::vector<Param*> Params() override { return {&weight_, &bias_}; }
  void Init(Rng& rng) override;

 private:
  int in_ch_, out_ch_, k_;
  Param weight_;  // [out][in][ky][kx]
  Param bias_;
};

// Transposed convolution with kernel 2 and stride 2 (exact x2 upsampling).
class UpConv2x2 : public Layer {
 public:
  UpConv2x2(int in_ch, int out_ch);
  std::string kind() const override { return "upconv"; }
  Tensor Apply(const Tensor& x) const override;
  Tensor Backward(const Tensor& grad_out) override;
  std::vector<Param*> Params() override { return {&weight_, &bias_}; }
  void Init(Rng& rng) override;

 private:
  int in_ch_, out_ch_;
  Param weight_;  // [out][dy][dx][in]
  Param bias_;
};

class MaxPool2 : public Layer {
 public:
  std::string kind() const override { return "maxpool"; }
  Tensor Apply(const Tensor& x) const override;
  Tensor Backward(const Tensor& grad_out) override;
};

class Relu : public Layer {
 public:
  std::string kind() const override { return "relu"; }
  Tensor Apply(const Tensor& x) const override;
  Tensor Backward(const Tensor& grad_out) override;
};

// Fixed gain, no parameters.
// y = factor * x + offset
class Scale : public Layer {
 public:
  explicit Scale(double factor, double offset = 0.0) : factor_(factor), offset_(offset) {}
  std::string kind() const override { return "scale"; }
  Tensor Apply(const Tensor& x) const override;
  Tensor Backward(const Tensor& grad_out) override;
  Tensor Forward(const Tensor& x) override { return Apply(x); }

 private:
  double factor_;
  double offset_;
};

class GlobalAvgPool : public Layer {
 public:
  std::string kind() const override { return "gap"; }
  Tensor Apply(const Tensor& x) const override;
  Tensor Backward(const Tensor& grad_out) override;
};

// Flattens each sample and applies an affine map; output is N x out x 1 x 1.
class Linear : public Layer {
 public:
  Linear(int in_features, int out_features);
  std::string kind() const override { return "linear"; }
  Tensor Apply(const Tensor& x) const override;
  Tensor Backward(const Tensor& grad_out) override;
  std::vector<Param*> Params() override { return {&weight_, &bias_}; }
  void Init(Rng& rng) override;

 private:
  int in_, out_;
  Param weight_;  // [out][in]
  Param bias_;
};

class Sequential {
 public:
  Sequential() = default;
  Sequential(Sequential&&) = default;
  Sequential& operator=(Sequential&&) = default;

  template <typename L, typename... Args>
  Sequential& Add(Args&&... args) {
    layers_.push_back(std::make_unique<L>(std::forward<Args>(args)...));
    return *this;
  }

  Tensor Apply(const Tensor& x) const;
  Tensor Forward(const Tensor& x);
  Tensor Backward(const Tensor& grad_out);
  std::vector<Param*> Params();
  void Init(Rng& rng);
  std::size_t size() const { return layers_.size(); }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

// Flat copies of parameter values, used for best-epoch snapshots and
// checkpoint (de)serialization.
std::vector<std::vector<double>> Snapshot(const std::vector<Param*>& params);
void Restore(const std::vector<Param*>& params,
             const std::vector<std::vector<double>>& values);
std::size_t ParameterCount(const std::vector<Param*>& params);
// FNV-1a over the raw bytes of every parameter value.
std::uint64_t ParameterDigest(const std::vector<Param*>& params);
void ZeroGrad(const std::vector<Param*>& params);

class Adam {
 public:
  explicit Adam(std::vector<Param*> params, double lr, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);
  void Step();
  double lr() const { return lr_; }
  // Per-parameter learning-rate multiplier (parameter groups).
  void SetLrScale(const Param* param, double scale);

 private:
  std::vector<Param*> params_;
  std::vector<double> lr_scale_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long step_ = 0;
};

}  // namespace tcc

#endif  // TASKCODEC_LAYERS_HPP_
