#include "caltype/recurrent.hpp"

#include <cmath>
#include <string>

namespace caltype {

namespace {

// y += M * x (or M^T * x), column-vector spans.
void accum_matvec(std::span<double> y, const Matrix& m, std::span<const double> x,
                  bool transpose) {
  Matrix xv = Matrix::column(x);
  Matrix yv = Matrix::column(y);
  gemm(yv, m, xv, transpose, false, 1.0, 1.0);
  std::copy(yv.data(), yv.data() + yv.size(), y.begin());
}

// grad_w += g * x^T for column spans g (H) and x (d).
void accum_outer(Matrix& grad_w, std::span<const double> g, std::span<const double> x) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    double gi = g[i];
    if (gi == 0.0) continue;
    double* row = grad_w.data() + i * grad_w.cols();
    for (std::size_t j = 0; j < x.size(); ++j) row[j] += gi * x[j];
  }
}

} // namespace

FoldedSequence fold(std::span<const double> x, std::size_t timesteps) {
  if (timesteps < 1)
    throw ValidationError("fold: timestep count must be >= 1");
  if (timesteps > x.size() || x.size() % timesteps != 0)
    throw ValidationError("fold: T = " + std::to_string(timesteps) +
                          " does not divide N = " + std::to_string(x.size()));
  FoldedSequence seq;
  seq.steps = timesteps;
  seq.dim = x.size() / timesteps;
  seq.data = Matrix(seq.steps, seq.dim);
  std::copy(x.begin(), x.end(), seq.data.data());
  return seq;
}

std::vector<double> unfold(const FoldedSequence& seq) {
  return {seq.data.data(), seq.data.data() + seq.data.size()};
}

// ---------------------------------------------------------------- RnnLayer

RnnLayer::RnnLayer(std::size_t hidden, std::size_t input, Activation act)
    : RecurrentLayer(hidden, input), act_(act), w_in_(hidden, input),
      w_rec_(hidden, hidden), bias_(hidden, 1) {}

void RnnLayer::init(Rng& rng) {
  glorot_uniform(w_in_.value, input_, hidden_, rng);
  glorot_uniform(w_rec_.value, hidden_, hidden_, rng);
  bias_.value.set_zero();
}

std::vector<double> RnnLayer::step(std::span<const double> x_t,
                                   std::span<const double> h_prev) const {
  if (x_t.size() != input_ || h_prev.size() != hidden_)
    throw ShapeError("rnn step: input/hidden size mismatch");
  std::vector<double> pre(bias_.value.data(), bias_.value.data() + hidden_);
  accum_matvec(pre, w_in_.value, x_t, false);
  accum_matvec(pre, w_rec_.value, h_prev, false);
  for (double& v : pre) v = activate(act_, v);
  return pre;
}

Matrix RnnLayer::forward(const Matrix& seq) {
  if (seq.cols() != input_)
    throw ShapeError("rnn forward: step dimensionality " + std::to_string(seq.cols()) +
                     " != layer input " + std::to_string(input_));
  const std::size_t steps = seq.rows();
  inputs_ = seq;
  pre_ = Matrix(steps, hidden_);
  hidden_seq_ = Matrix(steps, hidden_);
  std::vector<double> h_prev(hidden_, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    auto pre = pre_.row(t);
    std::copy(bias_.value.data(), bias_.value.data() + hidden_, pre.begin());
    accum_matvec(pre, w_in_.value, seq.row(t), false);
    accum_matvec(pre, w_rec_.value, h_prev, false);
    for (std::size_t i = 0; i < hidden_; ++i)
      hidden_seq_(t, i) = activate(act_, pre[i]);
    h_prev.assign(hidden_seq_.row(t).begin(), hidden_seq_.row(t).end());
    ++cell_steps_;
  }
  return hidden_seq_;
}

Matrix RnnLayer::backward(const Matrix& grad_h) {
  const std::size_t steps = inputs_.rows();
  if (pre_.rows() != steps)
    throw ValidationError("rnn backward called before forward");
  if (grad_h.rows() != steps || grad_h.cols() != hidden_)
    throw ShapeError("rnn backward: gradient shape mismatch");
  // Sequential sweep fills per-step pre-activation gradients; everything
  // touching the (large) input dimension is batched into gemms afterwards.
  Matrix gpre_all(steps, hidden_);
  std::vector<double> carry(hidden_, 0.0);
  for (std::size_t t = steps; t-- > 0;) {
    auto gpre = gpre_all.row(t);
    for (std::size_t i = 0; i < hidden_; ++i)
      gpre[i] = (grad_h(t, i) + carry[i]) * activate_grad(act_, pre_(t, i));
    if (t > 0) accum_outer(w_rec_.grad, gpre, hidden_seq_.row(t - 1));
    for (std::size_t i = 0; i < hidden_; ++i) bias_.grad[i] += gpre[i];
    std::fill(carry.begin(), carry.end(), 0.0);
    accum_matvec(carry, w_rec_.value, gpre, true);
  }
  pend_g_.insert(pend_g_.end(), gpre_all.data(), gpre_all.data() + gpre_all.size());
  pend_x_.insert(pend_x_.end(), inputs_.data(), inputs_.data() + inputs_.size());
  pend_rows_ += steps;
  Matrix grad_x(steps, inputs_.cols());
  if (needs_input_grad) gemm(grad_x, gpre_all, w_in_.value);
  return grad_x;
}

void RnnLayer::flush_grads() {
  if (pend_rows_ == 0) return;
  Matrix g(pend_rows_, hidden_, std::move(pend_g_));
  Matrix x(pend_rows_, input_, std::move(pend_x_));
  gemm(w_in_.grad, g, x, true, false, 1.0, 1.0);
  pend_g_.clear();
  pend_x_.clear();
  pend_rows_ = 0;
}

std::unique_ptr<Layer> RnnLayer::clone() const {
  auto copy = std::make_unique<RnnLayer>(hidden_, input_, act_);
  copy->w_in_ = w_in_;
  copy->w_rec_ = w_rec_;
  copy->bias_ = bias_;
  copy->needs_input_grad = needs_input_grad;
  return copy;
}

// --------------------------------------------------------------- LstmLayer

LstmLayer::LstmLayer(std::size_t hidden, std::size_t input)
    : RecurrentLayer(hidden, input) {
  for (int g = 0; g < 4; ++g) {
    w_in_[g] = Tensor(hidden, input);
    w_rec_[g] = Tensor(hidden, hidden);
    bias_[g] = Tensor(hidden, 1);
  }
}

void LstmLayer::init(Rng& rng) {
  for (int g = 0; g < 4; ++g) {
    glorot_uniform(w_in_[g].value, input_, hidden_, rng);
    glorot_uniform(w_rec_[g].value, hidden_, hidden_, rng);
    bias_[g].value.set_zero();
  }
}

std::vector<Tensor*> LstmLayer::params() {
  std::vector<Tensor*> out;
  for (int g = 0; g < 4; ++g) out.push_back(&w_in_[g]);
  for (int g = 0; g < 4; ++g) out.push_back(&w_rec_[g]);
  for (int g = 0; g < 4; ++g) out.push_back(&bias_[g]);
  return out;
}

std::pair<std::vector<double>, std::vector<double>> LstmLayer::step(
    std::span<const double> x_t, std::span<const double> h_prev,
    std::span<const double> c_prev) const {
  if (x_t.size() != input_ || h_prev.size() != hidden_ || c_prev.size() != hidden_)
    throw ShapeError("lstm step: input/hidden size mismatch");
  std::vector<double> act[4];
  for (int g = 0; g < 4; ++g) {
    act[g].assign(bias_[g].value.data(), bias_[g].value.data() + hidden_);
    accum_matvec(act[g], w_in_[g].value, x_t, false);
    accum_matvec(act[g], w_rec_[g].value, h_prev, false);
    Activation kind = (g == kCandidate) ? Activation::kTanh : Activation::kSigmoid;
    for (double& v : act[g]) v = activate(kind, v);
  }
  std::vector<double> c_t(hidden_), h_t(hidden_);
  for (std::size_t i = 0; i < hidden_; ++i) {
    c_t[i] = act[kForget][i] * c_prev[i] + act[kInput][i] * act[kCandidate][i];
    h_t[i] = act[kOutput][i] * std::tanh(c_t[i]);
  }
  return {std::move(h_t), std::move(c_t)};
}

Matrix LstmLayer::forward(const Matrix& seq) {
  if (seq.cols() != input_)
    throw ShapeError("lstm forward: step dimensionality " + std::to_string(seq.cols()) +
                     " != layer input " + std::to_string(input_));
  const std::size_t steps = seq.rows();
  inputs_ = seq;
  hidden_seq_ = Matrix(steps, hidden_);
  cell_seq_ = Matrix(steps, hidden_);
  tanh_cell_ = Matrix(steps, hidden_);
  for (int g = 0; g < 4; ++g) gates_[g] = Matrix(steps, hidden_);

  std::vector<double> h_prev(hidden_, 0.0), c_prev(hidden_, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    for (int g = 0; g < 4; ++g) {
      auto pre = gates_[g].row(t);
      std::copy(bias_[g].value.data(), bias_[g].value.data() + hidden_, pre.begin());
      accum_matvec(pre, w_in_[g].value, seq.row(t), false);
      accum_matvec(pre, w_rec_[g].value, h_prev, false);
      Activation kind = (g == kCandidate) ? Activation::kTanh : Activation::kSigmoid;
      for (double& v : pre) v = activate(kind, v);
    }
    for (std::size_t i = 0; i < hidden_; ++i) {
      double c = gates_[kForget](t, i) * c_prev[i] +
                 gates_[kInput](t, i) * gates_[kCandidate](t, i);
      cell_seq_(t, i) = c;
      tanh_cell_(t, i) = std::tanh(c);
      hidden_seq_(t, i) = gates_[kOutput](t, i) * tanh_cell_(t, i);
    }
    h_prev.assign(hidden_seq_.row(t).begin(), hidden_seq_.row(t).end());
    c_prev.assign(cell_seq_.row(t).begin(), cell_seq_.row(t).end());
    ++cell_steps_;
  }
  return hidden_seq_;
}

Matrix LstmLayer::backward(const Matrix& grad_h) {
  const std::size_t steps = inputs_.rows();
  if (hidden_seq_.rows() != steps)
    throw ValidationError("lstm backward called before forward");
  if (grad_h.rows() != steps || grad_h.cols() != hidden_)
    throw ShapeError("lstm backward: gradient shape mismatch");

  // As in the forward pass, the sequential sweep is confined to the hidden
  // dimension; input-sized gradient work is batched into gemms at the end.
  Matrix ga[4];
  for (int g = 0; g < 4; ++g) ga[g] = Matrix(steps, hidden_);
  std::vector<double> gh_carry(hidden_, 0.0), gc_carry(hidden_, 0.0);

  for (std::size_t t = steps; t-- > 0;) {
    for (std::size_t i = 0; i < hidden_; ++i) {
      double gh = grad_h(t, i) + gh_carry[i];
      double o = gates_[kOutput](t, i);
      double tc = tanh_cell_(t, i);
      double go = gh * tc;
      double gc = gc_carry[i] + gh * o * (1.0 - tc * tc);
      double c_prev = t > 0 ? cell_seq_(t - 1, i) : 0.0;
      double f = gates_[kForget](t, i);
      double in = gates_[kInput](t, i);
      double cand = gates_[kCandidate](t, i);
      // pre-activation gradients
      ga[kForget](t, i) = gc * c_prev * f * (1.0 - f);
      ga[kInput](t, i) = gc * cand * in * (1.0 - in);
      ga[kCandidate](t, i) = gc * in * (1.0 - cand * cand);
      ga[kOutput](t, i) = go * o * (1.0 - o);
      gc_carry[i] = gc * f;
    }
    std::fill(gh_carry.begin(), gh_carry.end(), 0.0);
    for (int g = 0; g < 4; ++g) {
      auto a = ga[g].row(t);
      if (t > 0) accum_outer(w_rec_[g].grad, a, hidden_seq_.row(t - 1));
      for (std::size_t i = 0; i < hidden_; ++i) bias_[g].grad[i] += a[i];
      accum_matvec(gh_carry, w_rec_[g].value, a, true);
    }
  }
  for (int g = 0; g < 4; ++g)
    pend_g_[g].insert(pend_g_[g].end(), ga[g].data(), ga[g].data() + ga[g].size());
  pend_x_.insert(pend_x_.end(), inputs_.data(), inputs_.data() + inputs_.size());
  pend_rows_ += steps;
  Matrix grad_x(steps, inputs_.cols());
  if (needs_input_grad)
    for (int g = 0; g < 4; ++g)
      gemm(grad_x, ga[g], w_in_[g].value, false, false, 1.0, 1.0);
  return grad_x;
}

void LstmLayer::flush_grads() {
  if (pend_rows_ == 0) return;
  Matrix x(pend_rows_, input_, std::move(pend_x_));
  for (int g = 0; g < 4; ++g) {
    Matrix gg(pend_rows_, hidden_, std::move(pend_g_[g]));
    gemm(w_in_[g].grad, gg, x, true, false, 1.0, 1.0);
    pend_g_[g].clear();
  }
  pend_x_.clear();
  pend_rows_ = 0;
}

std::unique_ptr<Layer> LstmLayer::clone() const {
  auto copy = std::make_unique<LstmLayer>(hidden_, input_);
  for (int g = 0; g < 4; ++g) {
    copy->w_in_[g] = w_in_[g];
    copy->w_rec_[g] = w_rec_[g];
    copy->bias_[g] = bias_[g];
  }
  copy->needs_input_grad = needs_input_grad;
  return copy;
}

// ---------------------------------------------------------------- LastStep

Matrix LastStep::forward(const Matrix& seq) {
  if (seq.rows() == 0) throw ShapeError("last step: empty sequence");
  steps_ = seq.rows();
  dim_ = seq.cols();
  Matrix out(dim_, 1);
  auto last = seq.row(steps_ - 1);
  std::copy(last.begin(), last.end(), out.data());
  return out;
}

Matrix LastStep::backward(const Matrix& grad_out) {
  if (grad_out.rows() != dim_ || grad_out.cols() != 1)
    throw ShapeError("last step backward: gradient shape mismatch");
  Matrix g(steps_, dim_);
  std::copy(grad_out.data(), grad_out.data() + dim_, g.row(steps_ - 1).begin());
  return g;
}

double clip_gradients(const std::vector<Tensor*>& params, double max_norm) {
  if (!(max_norm > 0.0)) throw ValidationError("clip: max norm must be positive");
  double sq = 0.0;
  for (const Tensor* t : params) sq += squared_norm(t->grad);
  double norm = std::sqrt(sq);
  if (norm > max_norm) {
    double scale = max_norm / norm;
    for (Tensor* t : params) t->grad *= scale;
  }
  return norm;
}

} // namespace caltype
