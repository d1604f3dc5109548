#pragma once

#include <cmath>
#include <string>

#include "caltype/errors.hpp"
#include "caltype/matrix.hpp"

namespace caltype {

enum class Activation { kRelu, kSigmoid, kTanh };

inline double activate(Activation kind, double x) {
  switch (kind) {
    case Activation::kRelu: return x > 0.0 ? x : 0.0;
    case Activation::kSigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::kTanh: return std::tanh(x);
  }
  return 0.0;
}

/// Derivative evaluated at the pre-activation x. relu'(0) is 0.
inline double activate_grad(Activation kind, double x) {
  switch (kind) {
    case Activation::kRelu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::kSigmoid: {
      double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 - s);
    }
    case Activation::kTanh: {
      double t = std::tanh(x);
      return 1.0 - t * t;
    }
  }
  return 0.0;
}

inline Matrix activate(Activation kind, const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = activate(kind, x[i]);
  return out;
}

inline Matrix activate_grad(Activation kind, const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = activate_grad(kind, x[i]);
  return out;
}

inline std::string activation_name(Activation kind) {
  switch (kind) {
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kTanh: return "tanh";
  }
  return "?";
}

inline Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "tanh") return Activation::kTanh;
  throw ValidationError("unknown activation: " + name);
}

} // namespace caltype
