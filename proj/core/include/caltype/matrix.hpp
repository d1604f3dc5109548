#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "caltype/errors.hpp"

namespace caltype {

/// Dense row-major matrix of doubles. The universal numeric carrier:
/// weight matrices, channel x time feature maps, gradients.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  /// Adopts an existing row-major buffer without copying.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols)
      throw ShapeError("matrix: adopted buffer size does not match shape");
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);
  static Matrix column(std::span<const double> v);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);
  void fill(double v);
  void set_zero() { fill(0.0); }

  bool all_finite() const;
  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);

/// out = alpha * op(a) * op(b) + beta * out. BLAS-backed; out must be
/// preshaped. op is transpose when the corresponding flag is set.
void gemm(Matrix& out, const Matrix& a, const Matrix& b, bool trans_a = false,
          bool trans_b = false, double alpha = 1.0, double beta = 0.0);

Matrix matmul(const Matrix& a, const Matrix& b);

/// Numerically safe softmax (max-subtraction). Output sums to 1.
std::vector<double> softmax(std::span<const double> x);

double squared_norm(const Matrix& m);

} // namespace caltype
