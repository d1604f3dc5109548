#pragma once

#include <utility>

#include "caltype/layers.hpp"

namespace caltype {

/// A length-N trace reorganized into T steps of dimensionality d = N / T.
/// Concatenating the rows of data reproduces the original trace bit-exactly.
struct FoldedSequence {
  std::size_t steps = 0;
  std::size_t dim = 0;
  Matrix data; // steps x dim, row t = step t
  std::size_t origin_length() const { return steps * dim; }
};

/// Requires T >= 1 and T | N.
FoldedSequence fold(std::span<const double> x, std::size_t timesteps);
std::vector<double> unfold(const FoldedSequence& seq);

/// Sequence-in / sequence-out recurrent layer: consumes T x d, emits the
/// full hidden sequence T x H so layers can be stacked; the output head is
/// responsible for selecting h_T.
class RecurrentLayer : public Layer {
public:
  std::size_t hidden_size() const { return hidden_; }
  std::size_t input_size() const { return input_; }
  /// Total cell evaluations since construction (instrumentation).
  std::size_t cell_steps() const { return cell_steps_; }

protected:
  RecurrentLayer(std::size_t hidden, std::size_t input)
      : hidden_(hidden), input_(input) {
    if (hidden < 1 || input < 1)
      throw ValidationError("recurrent layer: dimensions must be >= 1");
  }
  std::size_t hidden_, input_;
  std::size_t cell_steps_ = 0;
};

/// h_t = f1(W1 x_t + W2 h_{t-1} + b_h), h_{-1} = 0. f1 is tanh.
class RnnLayer : public RecurrentLayer {
public:
  RnnLayer(std::size_t hidden, std::size_t input,
           Activation act = Activation::kTanh);

  /// Single cell evaluation; pure, no caching.
  std::vector<double> step(std::span<const double> x_t,
                           std::span<const double> h_prev) const;

  Matrix forward(const Matrix& seq) override;
  Matrix backward(const Matrix& grad_h) override;
  std::vector<Tensor*> params() override { return {&w_in_, &w_rec_, &bias_}; }
  void flush_grads() override;
  std::unique_ptr<Layer> clone() const override;
  void init(Rng& rng) override;

  Tensor& w_in() { return w_in_; }   // H x d
  Tensor& w_rec() { return w_rec_; } // H x H
  Tensor& bias() { return bias_; }   // H x 1
  Activation activation() const { return act_; }

private:
  Activation act_;
  Tensor w_in_, w_rec_, bias_;
  Matrix inputs_, pre_, hidden_seq_; // caches, T x {d, H, H}
  // The W1 gradient is accumulated across backward() calls and materialized
  // in one gemm by flush_grads(); streaming the H x d gradient per example
  // is what dominates training time at small T.
  std::vector<double> pend_g_, pend_x_;
  std::size_t pend_rows_ = 0;
};

/// Gates via logistic sigma_g, candidate via tanh:
///   F_t = sigma_g(W_F x_t + R_F h_{t-1} + b_F)      (forget)
///   I_t = sigma_g(W_I x_t + R_I h_{t-1} + b_I)      (input)
///   c'_t = tanh(W_c x_t + R_c h_{t-1} + b_c)        (candidate)
///   c_t = F_t . c_{t-1} + I_t . c'_t
///   O_t = sigma_g(W_O x_t + R_O h_{t-1} + b_O)      (output)
///   h_t = O_t . tanh(c_t)
class LstmLayer : public RecurrentLayer {
public:
  enum Gate { kForget = 0, kInput = 1, kCandidate = 2, kOutput = 3 };

  LstmLayer(std::size_t hidden, std::size_t input);

  /// Single cell evaluation; pure, no caching. Returns (h_t, c_t).
  std::pair<std::vector<double>, std::vector<double>> step(
      std::span<const double> x_t, std::span<const double> h_prev,
      std::span<const double> c_prev) const;

  Matrix forward(const Matrix& seq) override;
  Matrix backward(const Matrix& grad_h) override;
  std::vector<Tensor*> params() override;
  void flush_grads() override;
  std::unique_ptr<Layer> clone() const override;
  void init(Rng& rng) override;

  Tensor& w_in(Gate g) { return w_in_[g]; }   // H x d
  Tensor& w_rec(Gate g) { return w_rec_[g]; } // H x H
  Tensor& bias(Gate g) { return bias_[g]; }   // H x 1

private:
  Tensor w_in_[4], w_rec_[4], bias_[4];
  Matrix inputs_, hidden_seq_, cell_seq_; // T x {d, H, H}
  Matrix gates_[4];                       // activations, T x H each
  Matrix tanh_cell_;                      // tanh(c_t), T x H
  // Deferred input-weight gradients, as in RnnLayer; one gate-gradient
  // buffer each, sharing a single input buffer.
  std::vector<double> pend_g_[4], pend_x_;
  std::size_t pend_rows_ = 0;
};

/// Selects the final hidden state h_T from a T x H sequence; backward
/// routes the gradient to the last row only.
class LastStep : public Layer {
public:
  Matrix forward(const Matrix& seq) override;
  Matrix backward(const Matrix& grad_out) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<LastStep>(); }

private:
  std::size_t steps_ = 0, dim_ = 0;
};

/// Global-norm gradient clipping; returns the pre-clip norm.
double clip_gradients(const std::vector<Tensor*>& params, double max_norm);

} // namespace caltype
