#pragma once

// Dense double-precision kernels shared by every layer. Row-major storage,
// no BLAS; reductions run in index order so results are reproducible.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "seqtext/errors.hpp"

namespace seqtext {

class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, double fill = 0.0) : data_(n, fill) {}
  Vector(std::initializer_list<double> values) : data_(values) {}
  explicit Vector(std::vector<double> values) : data_(std::move(values)) {}

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const Vector&) const = default;

 private:
  std::vector<double> data_;
};

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  // Nested-list construction, mostly for fixtures: {{1,2},{3,4}}.
  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw ShapeError("ragged matrix initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace detail {

inline std::string shape_str(std::size_t r, std::size_t c) {
  std::ostringstream os;
  os << "(" << r << "x" << c << ")";
  return os.str();
}

inline void require_same_len(const Vector& a, const Vector& b, const char* op) {
  if (a.size() != b.size()) {
    std::ostringstream os;
    os << op << ": length mismatch " << a.size() << " vs " << b.size();
    throw ShapeError(os.str());
  }
}

}  // namespace detail

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + detail::shape_str(a.rows(), a.cols()) + " by " +
                     detail::shape_str(b.rows(), b.cols()));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

// m · v
inline Vector matvec(const Matrix& m, const Vector& v) {
  if (m.cols() != v.size()) {
    throw ShapeError("matvec: " + detail::shape_str(m.rows(), m.cols()) + " times vector of length " +
                     std::to_string(v.size()));
  }
  Vector out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double acc = 0.0;
    const auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) acc += r[j] * v[j];
    out[i] = acc;
  }
  return out;
}

// out += m · v
inline void matvec_acc(const Matrix& m, const Vector& v, Vector& out) {
  if (m.cols() != v.size() || m.rows() != out.size()) {
    throw ShapeError("matvec_acc: " + detail::shape_str(m.rows(), m.cols()) + " with vectors " +
                     std::to_string(v.size()) + " -> " + std::to_string(out.size()));
  }
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double acc = 0.0;
    const auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) acc += r[j] * v[j];
    out[i] += acc;
  }
}

// out += mᵀ · v
inline void matvec_t_acc(const Matrix& m, const Vector& v, Vector& out) {
  if (m.rows() != v.size() || m.cols() != out.size()) {
    throw ShapeError("matvec_t_acc: " + detail::shape_str(m.rows(), m.cols()) + "ᵀ with vectors " +
                     std::to_string(v.size()) + " -> " + std::to_string(out.size()));
  }
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double vi = v[i];
    const auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out[j] += r[j] * vi;
  }
}

// m += a · bᵀ
inline void add_outer(Matrix& m, const Vector& a, const Vector& b) {
  if (m.rows() != a.size() || m.cols() != b.size()) {
    throw ShapeError("add_outer: " + detail::shape_str(m.rows(), m.cols()) + " vs outer " +
                     detail::shape_str(a.size(), b.size()));
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ai = a[i];
    if (ai == 0.0) continue;
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += ai * b[j];
  }
}

inline Vector hadamard(const Vector& a, const Vector& b) {
  detail::require_same_len(a, b, "hadamard");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

inline Vector add(const Vector& a, const Vector& b) {
  detail::require_same_len(a, b, "add");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

inline Vector sub(const Vector& a, const Vector& b) {
  detail::require_same_len(a, b, "sub");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

// a += b
inline void add_inplace(Vector& a, const Vector& b) {
  detail::require_same_len(a, b, "add_inplace");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

inline double dot(const Vector& a, const Vector& b) {
  detail::require_same_len(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Scalar activations. The sigmoid branches on sign so exp never overflows.
inline double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
inline double relu(double x) noexcept { return x > 0.0 ? x : 0.0; }

inline double sigmoid_prime(double x) noexcept {
  const double s = sigmoid(x);
  return s * (1.0 - s);
}
inline double tanh_prime(double x) noexcept {
  const double t = std::tanh(x);
  return 1.0 - t * t;
}
// Subgradient 0 at the kink.
inline double relu_prime(double x) noexcept { return x > 0.0 ? 1.0 : 0.0; }

template <class F>
Vector map(const Vector& v, F&& f) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = f(v[i]);
  return out;
}

inline Vector sigmoid(const Vector& x) { return map(x, [](double v) { return sigmoid(v); }); }
inline Vector tanh(const Vector& x) { return map(x, [](double v) { return std::tanh(v); }); }
inline Vector relu(const Vector& x) { return map(x, [](double v) { return relu(v); }); }
inline Vector sigmoid_prime(const Vector& x) { return map(x, [](double v) { return sigmoid_prime(v); }); }
inline Vector tanh_prime(const Vector& x) { return map(x, [](double v) { return tanh_prime(v); }); }
inline Vector relu_prime(const Vector& x) { return map(x, [](double v) { return relu_prime(v); }); }

inline bool all_finite(std::span<const double> xs) noexcept {
  return std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); });
}

inline double squared_norm(std::span<const double> xs) noexcept {
  double acc = 0.0;
  for (double v : xs) acc += v * v;
  return acc;
}

}  // namespace seqtext
