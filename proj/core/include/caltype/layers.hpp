#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "caltype/activations.hpp"
#include "caltype/matrix.hpp"
#include "caltype/rng.hpp"

namespace caltype {

/// A learnable tensor and its accumulated gradient.
struct Tensor {
  Matrix value;
  Matrix grad;

  explicit Tensor(std::size_t rows = 0, std::size_t cols = 0)
      : value(rows, cols), grad(rows, cols) {}
};

/// Matrix-in / matrix-out building block. forward() caches whatever the
/// matching backward() needs; a layer instance must not be shared mutably
/// across threads while training.
class Layer {
public:
  virtual ~Layer() = default;

  virtual Matrix forward(const Matrix& x) = 0;
  /// Gradient of the loss w.r.t. the forward input; accumulates parameter
  /// gradients into Tensor::grad.
  virtual Matrix backward(const Matrix& grad_out) = 0;

  virtual std::vector<Tensor*> params() { return {}; }
  /// Materializes gradient contributions a layer deferred across backward()
  /// calls (batched for cache efficiency). Call before reading, scaling or
  /// applying parameter gradients.
  virtual void flush_grads() {}
  virtual std::unique_ptr<Layer> clone() const = 0;
  virtual void set_training(bool) {}
  virtual void init(Rng&) {}

  /// First layer of a network may skip the input-gradient computation.
  bool needs_input_grad = true;
};

inline void glorot_uniform(Matrix& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-limit, limit);
}

/// Valid cross-correlation (no kernel flip) over C_in channels.
/// Input C_in x N -> output F x M with M = floor((N - K) / stride) + 1.
class Conv1D : public Layer {
public:
  Conv1D(std::size_t num_filters, std::size_t kernel_size, std::size_t stride,
         std::size_t input_channels);

  Matrix forward(const Matrix& x) override;
  Matrix backward(const Matrix& grad_out) override;
  std::vector<Tensor*> params() override { return {&weights_, &bias_}; }
  std::unique_ptr<Layer> clone() const override;
  void init(Rng& rng) override {
    glorot_uniform(weights_.value, kernel_size_ * input_channels_,
                   kernel_size_ * num_filters_, rng);
    bias_.value.set_zero();
  }

  std::size_t output_length(std::size_t input_length) const;
  std::size_t num_filters() const { return num_filters_; }

  Tensor& weights() { return weights_; } // F x (K * C_in)
  Tensor& bias() { return bias_; }       // F x 1

private:
  std::size_t num_filters_, kernel_size_, stride_, input_channels_;
  Tensor weights_;
  Tensor bias_;
  Matrix cols_; // im2col buffer, (K * C_in) x M
  std::size_t cached_input_length_ = 0;
};

/// Elementwise nonlinearity; caches the pre-activation.
class ActivationLayer : public Layer {
public:
  explicit ActivationLayer(Activation kind) : kind_(kind) {}
  Matrix forward(const Matrix& x) override {
    input_ = x;
    return activate(kind_, x);
  }
  Matrix backward(const Matrix& grad_out) override {
    Matrix g = activate_grad(kind_, input_);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= grad_out[i];
    return g;
  }
  std::unique_ptr<Layer> clone() const override {
    return std::make_unique<ActivationLayer>(kind_);
  }

private:
  Activation kind_;
  Matrix input_;
};

/// Per-channel 1D max pooling; ties break toward the lowest index.
class MaxPool1D : public Layer {
public:
  MaxPool1D(std::size_t pool_size, std::size_t stride);
  Matrix forward(const Matrix& x) override;
  Matrix backward(const Matrix& grad_out) override;
  std::unique_ptr<Layer> clone() const override {
    return std::make_unique<MaxPool1D>(pool_size_, stride_);
  }

private:
  std::size_t pool_size_, stride_;
  std::vector<std::uint32_t> argmax_; // per output cell, input column index
  std::size_t in_rows_ = 0, in_cols_ = 0;
};

/// Inverted dropout: train mode zeroes units with probability 1-p and
/// scales survivors by 1/p; eval mode is the identity.
class Dropout : public Layer {
public:
  explicit Dropout(double keep_prob);
  Matrix forward(const Matrix& x) override;
  Matrix backward(const Matrix& grad_out) override;
  std::unique_ptr<Layer> clone() const override;
  void set_training(bool training) override { training_ = training; }
  void reseed(std::uint64_t seed) { rng_ = Rng(seed); }
  double keep_prob() const { return keep_prob_; }

private:
  double keep_prob_;
  bool training_ = false;
  Rng rng_{0};
  std::vector<std::uint8_t> mask_;
};

/// Reshape C x M feature map into a (C*M) x 1 column.
class Flatten : public Layer {
public:
  Matrix forward(const Matrix& x) override;
  Matrix backward(const Matrix& grad_out) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Flatten>(); }

private:
  std::size_t in_rows_ = 0, in_cols_ = 0;
};

/// Affine map W x + b on column vectors.
class Dense : public Layer {
public:
  Dense(std::size_t out_dim, std::size_t in_dim);
  Matrix forward(const Matrix& x) override;
  Matrix backward(const Matrix& grad_out) override;
  std::vector<Tensor*> params() override { return {&weights_, &bias_}; }
  std::unique_ptr<Layer> clone() const override;
  void init(Rng& rng) override {
    glorot_uniform(weights_.value, weights_.value.cols(), weights_.value.rows(), rng);
    bias_.value.set_zero();
  }

  Tensor& weights() { return weights_; } // out x in
  Tensor& bias() { return bias_; }       // out x 1

private:
  Tensor weights_;
  Tensor bias_;
  Matrix input_;
};

} // namespace caltype
