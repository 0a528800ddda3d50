#pragma once

#include <memory>
#include <string>
#include <vector>

#include "scgan/rng.hpp"
#include "scgan/tensor.hpp"

namespace scgan {

// Forward phase. train: batch statistics + running-stat updates.
// objective_eval: batch statistics without mutating running stats (pure
// objective evaluation). eval: running statistics (generation, metrics).
enum class Phase { train, objective_eval, eval };

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor m, v;  // Adam moments, lazily sized

  explicit Param(std::string n, std::vector<int> shape)
      : name(std::move(n)), value(shape), grad(shape, 0.0) {}
  void zero_grad() { grad.fill(0.0); }
};

// A layer owns its parameters, caches what its backward pass needs, and maps
// an upstream gradient to a downstream one while accumulating parameter
// gradients.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x, Phase phase) = 0;
  virtual Tensor backward(const Tensor& dy) = 0;
  virtual void collect_params(std::vector<Param*>&) {}
  // Non-parameter persistent state (batchnorm running stats).
  virtual void collect_state(std::vector<Tensor*>&) {}
  virtual void init(Rng&) {}
};

class Dense : public Layer {
 public:
  Dense(std::string name, int in, int out);
  Tensor forward(const Tensor& x, Phase phase) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(std::vector<Param*>& out) override;
  void init(Rng& rng) override;

 private:
  int in_, out_;
  Param w_, b_;  // w: [in, out]
  Tensor x_;
};

class Conv2d : public Layer {
 public:
  Conv2d(std::string name, int in_ch, int out_ch, int ksize, int stride, int pad);
  Tensor forward(const Tensor& x, Phase phase) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(std::vector<Param*>& out) override;
  void init(Rng& rng) override;

 private:
  int ci_, co_, k_, s_, p_;
  Param w_, b_;  // w: [co, ci*k*k]
  Tensor cols_;  // cached im2col of the last input
  std::vector<int> xshape_;
};

// Stride-s transposed convolution; adjoint of Conv2d with the same geometry.
class Deconv2d : public Layer {
 public:
  Deconv2d(std::string name, int in_ch, int out_ch, int ksize, int stride, int pad);
  Tensor forward(const Tensor& x, Phase phase) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(std::vector<Param*>& out) override;
  void init(Rng& rng) override;

 private:
  int ci_, co_, k_, s_, p_;
  Param w_, b_;  // w: [ci, co*k*k]
  Tensor xt_;    // cached input reordered to [B*P, ci]
  std::vector<int> xshape_;
  int out_h_ = 0, out_w_ = 0;
};

// Per-channel batch normalization over [B, C, spatial] (spatial = 1 for
// dense activations).
class BatchNorm : public Layer {
 public:
  BatchNorm(std::string name, int channels, double momentum = 0.9,
            double eps = 1e-5);
  Tensor forward(const Tensor& x, Phase phase) override;
  Tensor backward(const Tensor& dy) override;
  void collect_params(std::vector<Param*>& out) override;
  void collect_state(std::vector<Tensor*>& out) override;
  void init(Rng& rng) override;

 private:
  int c_;
  double momentum_, eps_;
  Param gamma_, beta_;
  Tensor running_mean_, running_var_;
  Tensor xhat_, batch_var_;
  std::vector<int> xshape_;
};

class LeakyReLU : public Layer {
 public:
  explicit LeakyReLU(double slope) : slope_(slope) {}
  Tensor forward(const Tensor& x, Phase phase) override;
  Tensor backward(const Tensor& dy) override;

 private:
  double slope_;
  Tensor x_;
};

class Tanh : public Layer {
 public:
  Tensor forward(const Tensor& x, Phase phase) override;
  Tensor backward(const Tensor& dy) override;

 private:
  Tensor y_;
};

class Reshape : public Layer {
 public:
  // target shape excluding the batch dimension
  explicit Reshape(std::vector<int> tail) : tail_(std::move(tail)) {}
  Tensor forward(const Tensor& x, Phase phase) override;
  Tensor backward(const Tensor& dy) override;

 private:
  std::vector<int> tail_;
  std::vector<int> xshape_;
};

class Sequential {
 public:
  void add(std::unique_ptr<Layer> l) { layers_.push_back(std::move(l)); }
  Tensor forward(const Tensor& x, Phase phase);
  Tensor backward(const Tensor& dy);
  std::vector<Param*> params();
  std::vector<Tensor*> state();
  void init(Rng& rng);

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamOpt {
 public:
  explicit AdamOpt(AdamConfig cfg = {}) : cfg_(cfg) {}
  void step(const std::vector<Param*>& params);
  void zero_grads(const std::vector<Param*>& params);
  int64_t t() const { return t_; }
  void set_t(int64_t t) { t_ = t; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  int64_t t_ = 0;
};

}  // namespace scgan
