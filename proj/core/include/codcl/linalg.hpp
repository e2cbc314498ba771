#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

#include "codcl/types.hpp"

namespace codcl {

using Vec = std::vector<double>;

/// Dense row-major matrix, just enough for the small models in this project.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data).subspan(r * cols, cols);
  }
};

inline Vec matvec(const Matrix& m, std::span<const double> x) {
  assert(x.size() == m.cols);
  Vec y(m.rows, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    double acc = 0.0;
    const double* row = m.data.data() + r * m.cols;
    for (std::size_t c = 0; c < m.cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
  return y;
}

/// y += m^T x (accumulates the input-gradient of a linear layer).
inline void matvec_transpose_add(const Matrix& m, std::span<const double> x, Vec& y) {
  assert(x.size() == m.rows && y.size() == m.cols);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double xr = x[r];
    const double* row = m.data.data() + r * m.cols;
    for (std::size_t c = 0; c < m.cols; ++c) y[c] += xr * row[c];
  }
}

/// m += a ⊗ b (outer-product accumulation for weight gradients).
inline void outer_add(Matrix& m, std::span<const double> a, std::span<const double> b) {
  assert(a.size() == m.rows && b.size() == m.cols);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double ar = a[r];
    double* row = m.data.data() + r * m.cols;
    for (std::size_t c = 0; c < m.cols; ++c) row[c] += ar * b[c];
  }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Cosine similarity; 0 when either vector has zero norm.
inline double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = norm2(a);
  const double nb = norm2(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

inline void add_in_place(Vec& a, std::span<const double> b) {
  assert(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

inline void scale_in_place(Vec& a, double s) {
  for (double& x : a) x *= s;
}

inline Vec hadamard(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

}  // namespace codcl
