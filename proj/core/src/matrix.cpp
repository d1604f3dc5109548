#include "caltype/matrix.hpp"

#include <algorithm>
#include <cblas.h>
#include <cmath>

#include "caltype/dataset.hpp"

extern "C" void openblas_set_num_threads(int);

namespace caltype {

namespace {

// BLAS must not spawn its own threads: reduction order inside a gemm call
// has to be fixed for bit-deterministic training.
struct BlasInit {
  BlasInit() { openblas_set_num_threads(1); }
};
const BlasInit blas_init;

std::string shape_str(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

} // namespace

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
  std::size_t r = 0;
  for (const auto& row : rows) {
    if (row.size() != m.cols()) throw ShapeError("ragged initializer rows");
    std::size_t c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::column(std::span<const double> v) {
  Matrix m(v.size(), 1);
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  if (!same_shape(other))
    throw ShapeError("matrix add: " + shape_str(rows_, cols_) + " vs " +
                     shape_str(other.rows_, other.cols_));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  if (!same_shape(other))
    throw ShapeError("matrix sub: " + shape_str(rows_, cols_) + " vs " +
                     shape_str(other.rows_, other.cols_));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }

void gemm(Matrix& out, const Matrix& a, const Matrix& b, bool trans_a,
          bool trans_b, double alpha, double beta) {
  const std::size_t m = trans_a ? a.cols() : a.rows();
  const std::size_t k = trans_a ? a.rows() : a.cols();
  const std::size_t kb = trans_b ? b.cols() : b.rows();
  const std::size_t n = trans_b ? b.rows() : b.cols();
  if (k != kb)
    throw ShapeError("matmul: inner dimensions differ, " +
                     shape_str(trans_a ? a.cols() : a.rows(), k) + " vs " +
                     shape_str(kb, n));
  if (out.rows() != m || out.cols() != n)
    throw ShapeError("matmul: output is " + shape_str(out.rows(), out.cols()) +
                     ", expected " + shape_str(m, n));
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (beta == 0.0) out.set_zero();
    else out *= beta;
    return;
  }
  if (n == 1 && !trans_b) {
    // Matrix-vector products hit the gemv kernels, which avoid the tile
    // padding waste dgemm suffers on single-column shapes.
    cblas_dgemv(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                static_cast<int>(a.rows()), static_cast<int>(a.cols()), alpha,
                a.data(), static_cast<int>(a.cols()), b.data(),
                static_cast<int>(b.cols()), beta, out.data(), 1);
    return;
  }
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m),
              static_cast<int>(n), static_cast<int>(k), alpha, a.data(),
              static_cast<int>(a.cols()), b.data(), static_cast<int>(b.cols()),
              beta, out.data(), static_cast<int>(out.cols()));
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: " + shape_str(a.rows(), a.cols()) + " x " +
                     shape_str(b.rows(), b.cols()));
  Matrix out(a.rows(), b.cols());
  gemm(out, a, b);
  return out;
}

std::vector<double> softmax(std::span<const double> x) {
  if (x.empty()) throw ShapeError("softmax: empty input");
  double max = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - max);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

double squared_norm(const Matrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s += m[i] * m[i];
  return s;
}

NormStats zscore_fit(const Dataset& training) {
  std::size_t n = 0;
  double sum = 0.0;
  for (const auto& ex : training) {
    for (double v : ex.signal) sum += v;
    n += ex.signal.size();
  }
  if (n == 0) throw ValidationError("zscore_fit: empty training set");
  double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const auto& ex : training)
    for (double v : ex.signal) ss += (v - mean) * (v - mean);
  double std = std::sqrt(ss / static_cast<double>(n)); // population std
  if (std <= 1e-12)
    throw ValidationError("zscore_fit: degenerate training set (std <= 1e-12)");
  return {mean, std};
}

std::vector<double> zscore_apply(const NormStats& stats, std::span<const double> x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - stats.mean) / stats.std;
  return out;
}

std::vector<double> zscore_invert(const NormStats& stats, std::span<const double> z) {
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] * stats.std + stats.mean;
  return out;
}

} // namespace caltype
