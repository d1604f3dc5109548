#include "caltype/layers.hpp"

#include <algorithm>
#include <string>

namespace caltype {

// ---------------------------------------------------------------- Conv1D

Conv1D::Conv1D(std::size_t num_filters, std::size_t kernel_size,
               std::size_t stride, std::size_t input_channels)
    : num_filters_(num_filters), kernel_size_(kernel_size), stride_(stride),
      input_channels_(input_channels),
      weights_(num_filters, kernel_size * input_channels),
      bias_(num_filters, 1) {
  if (num_filters < 1 || kernel_size < 1 || stride < 1 || input_channels < 1)
    throw ValidationError("conv1d: filters, kernel, stride, channels must be >= 1");
}

std::size_t Conv1D::output_length(std::size_t input_length) const {
  if (input_length < kernel_size_)
    throw ShapeError("conv1d: input length " + std::to_string(input_length) +
                          " shorter than kernel " + std::to_string(kernel_size_));
  return (input_length - kernel_size_) / stride_ + 1;
}

Matrix Conv1D::forward(const Matrix& x) {
  if (x.rows() != input_channels_)
    throw ShapeError("conv1d: expected " + std::to_string(input_channels_) +
                     " channels, got " + std::to_string(x.rows()));
  const std::size_t n = x.cols();
  const std::size_t m = output_length(n);
  cached_input_length_ = n;

  // im2col: row (c*K + k), column j holds x(c, j*stride + k).
  cols_ = Matrix(kernel_size_ * input_channels_, m);
  for (std::size_t c = 0; c < input_channels_; ++c) {
    const double* src = x.data() + c * n;
    for (std::size_t k = 0; k < kernel_size_; ++k) {
      double* dst = cols_.data() + (c * kernel_size_ + k) * m;
      if (stride_ == 1) {
        std::copy(src + k, src + k + m, dst);
      } else {
        for (std::size_t j = 0; j < m; ++j) dst[j] = src[j * stride_ + k];
      }
    }
  }

  Matrix out(num_filters_, m);
  gemm(out, weights_.value, cols_);
  for (std::size_t f = 0; f < num_filters_; ++f) {
    double b = bias_.value[f];
    for (double& v : out.row(f)) v += b;
  }
  return out;
}

Matrix Conv1D::backward(const Matrix& grad_out) {
  if (grad_out.rows() != num_filters_ || grad_out.cols() != cols_.cols())
    throw ShapeError("conv1d backward: gradient shape mismatch");
  const std::size_t m = grad_out.cols();

  // grad_weights += grad_out * cols^T
  gemm(weights_.grad, grad_out, cols_, false, true, 1.0, 1.0);
  for (std::size_t f = 0; f < num_filters_; ++f) {
    double s = 0.0;
    for (double v : grad_out.row(f)) s += v;
    bias_.grad[f] += s;
  }

  if (!needs_input_grad) return {};

  // grad_cols = W^T * grad_out, then col2im-accumulate.
  Matrix grad_cols(cols_.rows(), m);
  gemm(grad_cols, weights_.value, grad_out, true, false);
  Matrix grad_x(input_channels_, cached_input_length_);
  for (std::size_t c = 0; c < input_channels_; ++c) {
    double* dst = grad_x.data() + c * cached_input_length_;
    for (std::size_t k = 0; k < kernel_size_; ++k) {
      const double* src = grad_cols.data() + (c * kernel_size_ + k) * m;
      for (std::size_t j = 0; j < m; ++j) dst[j * stride_ + k] += src[j];
    }
  }
  return grad_x;
}

std::unique_ptr<Layer> Conv1D::clone() const {
  auto copy = std::make_unique<Conv1D>(num_filters_, kernel_size_, stride_,
                                       input_channels_);
  copy->weights_ = weights_;
  copy->bias_ = bias_;
  copy->needs_input_grad = needs_input_grad;
  return copy;
}

// ------------------------------------------------------------- MaxPool1D

MaxPool1D::MaxPool1D(std::size_t pool_size, std::size_t stride)
    : pool_size_(pool_size), stride_(stride) {
  if (pool_size < 1 || stride < 1)
    throw ValidationError("maxpool: pool size and stride must be >= 1");
}

Matrix MaxPool1D::forward(const Matrix& x) {
  if (x.cols() < pool_size_)
    throw ShapeError("maxpool: input length " + std::to_string(x.cols()) +
                          " shorter than pool window " + std::to_string(pool_size_));
  in_rows_ = x.rows();
  in_cols_ = x.cols();
  const std::size_t m = (x.cols() - pool_size_) / stride_ + 1;
  Matrix out(x.rows(), m);
  argmax_.assign(x.rows() * m, 0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t j = 0; j < m; ++j) {
      std::size_t base = j * stride_;
      double best = x(r, base);
      std::size_t best_i = base;
      for (std::size_t k = 1; k < pool_size_; ++k) {
        double v = x(r, base + k);
        if (v > best) { // ties keep the lowest index
          best = v;
          best_i = base + k;
        }
      }
      out(r, j) = best;
      argmax_[r * m + j] = static_cast<std::uint32_t>(best_i);
    }
  }
  return out;
}

Matrix MaxPool1D::backward(const Matrix& grad_out) {
  const std::size_t m = grad_out.cols();
  if (grad_out.rows() != in_rows_ || argmax_.size() != in_rows_ * m)
    throw ShapeError("maxpool backward: gradient shape mismatch");
  Matrix grad_x(in_rows_, in_cols_);
  for (std::size_t r = 0; r < in_rows_; ++r)
    for (std::size_t j = 0; j < m; ++j)
      grad_x(r, argmax_[r * m + j]) += grad_out(r, j);
  return grad_x;
}

// --------------------------------------------------------------- Dropout

Dropout::Dropout(double keep_prob) : keep_prob_(keep_prob) {
  if (!(keep_prob > 0.0) || keep_prob > 1.0)
    throw ValidationError("dropout: keep probability must be in (0, 1]");
}

Matrix Dropout::forward(const Matrix& x) {
  if (!training_ || keep_prob_ == 1.0) {
    mask_.clear();
    return x;
  }
  mask_.resize(x.size());
  Matrix out(x.rows(), x.cols());
  double scale = 1.0 / keep_prob_;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask_[i] = rng_.bernoulli(keep_prob_) ? 1 : 0;
    out[i] = mask_[i] ? x[i] * scale : 0.0;
  }
  return out;
}

Matrix Dropout::backward(const Matrix& grad_out) {
  if (mask_.empty()) return grad_out; // eval mode or p == 1
  if (mask_.size() != grad_out.size())
    throw ShapeError("dropout backward: gradient shape mismatch");
  Matrix g(grad_out.rows(), grad_out.cols());
  double scale = 1.0 / keep_prob_;
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = mask_[i] ? grad_out[i] * scale : 0.0;
  return g;
}

std::unique_ptr<Layer> Dropout::clone() const {
  auto copy = std::make_unique<Dropout>(keep_prob_);
  copy->training_ = training_;
  copy->rng_ = rng_;
  return copy;
}

// --------------------------------------------------------------- Flatten

Matrix Flatten::forward(const Matrix& x) {
  in_rows_ = x.rows();
  in_cols_ = x.cols();
  Matrix out(x.size(), 1);
  std::copy(x.data(), x.data() + x.size(), out.data());
  return out;
}

Matrix Flatten::backward(const Matrix& grad_out) {
  if (grad_out.size() != in_rows_ * in_cols_)
    throw ShapeError("flatten backward: gradient shape mismatch");
  Matrix g(in_rows_, in_cols_);
  std::copy(grad_out.data(), grad_out.data() + grad_out.size(), g.data());
  return g;
}

// ----------------------------------------------------------------- Dense

Dense::Dense(std::size_t out_dim, std::size_t in_dim)
    : weights_(out_dim, in_dim), bias_(out_dim, 1) {
  if (out_dim < 1 || in_dim < 1)
    throw ValidationError("dense: dimensions must be >= 1");
}

Matrix Dense::forward(const Matrix& x) {
  if (x.rows() != weights_.value.cols() || x.cols() != 1)
    throw ShapeError("dense: expected " + std::to_string(weights_.value.cols()) +
                     "x1 input, got " + std::to_string(x.rows()) + "x" +
                     std::to_string(x.cols()));
  input_ = x;
  Matrix out(weights_.value.rows(), 1);
  gemm(out, weights_.value, x);
  out += bias_.value;
  return out;
}

Matrix Dense::backward(const Matrix& grad_out) {
  if (grad_out.rows() != weights_.value.rows() || grad_out.cols() != 1)
    throw ShapeError("dense backward: gradient shape mismatch");
  gemm(weights_.grad, grad_out, input_, false, true, 1.0, 1.0);
  bias_.grad += grad_out;
  if (!needs_input_grad) return {};
  Matrix grad_x(weights_.value.cols(), 1);
  gemm(grad_x, weights_.value, grad_out, true, false);
  return grad_x;
}

std::unique_ptr<Layer> Dense::clone() const {
  auto copy = std::make_unique<Dense>(weights_.value.rows(), weights_.value.cols());
  copy->weights_ = weights_;
  copy->bias_ = bias_;
  copy->needs_input_grad = needs_input_grad;
  return copy;
}

} // namespace caltype
