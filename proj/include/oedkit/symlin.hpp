#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace oedkit {

// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  const std::vector<double>& data() const noexcept { return data_; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  // infinity norm (max absolute row sum)
  double norm_inf() const {
    double m = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) s += std::abs((*this)(i, j));
      m = std::max(m, s);
    }
    return m;
  }

  double norm_frobenius() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw Error(ErrorKind::DimensionMismatch, "matrix product");
    Matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  friend Matrix operator-(const Matrix& a, const Matrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
      throw Error(ErrorKind::DimensionMismatch, "matrix difference");
    Matrix c = a;
    for (std::size_t k = 0; k < c.data_.size(); ++k) c.data_[k] -= b.data_[k];
    return c;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline std::size_t tri_size(std::size_t p) { return p * (p + 1) / 2; }

// Position of (i, j), i <= j, in row-major upper-triangular storage.
inline std::size_t tri_index(std::size_t i, std::size_t j, std::size_t p) {
  if (i > j || j >= p)
    throw Error(ErrorKind::IndexOutOfRange,
                "tri_index(" + std::to_string(i) + "," + std::to_string(j) + "," +
                    std::to_string(p) + ")");
  return i * p - i * (i - 1) / 2 + (j - i);
}

// Inverse of tri_index.
inline std::pair<std::size_t, std::size_t> tri_pair(std::size_t k, std::size_t p) {
  if (k >= tri_size(p)) throw Error(ErrorKind::IndexOutOfRange, "tri_pair");
  std::size_t i = 0;
  std::size_t row_len = p;
  while (k >= row_len) {
    k -= row_len;
    ++i;
    --row_len;
  }
  return {i, i + k};
}

class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t p, double fill = 0.0) : p_(p), e_(tri_size(p), fill) {}
  SymMatrix(std::size_t p, std::vector<double> entries) : p_(p), e_(std::move(entries)) {
    if (e_.size() != tri_size(p))
      throw Error(ErrorKind::DimensionMismatch, "SymMatrix entries length");
  }

  static SymMatrix identity(std::size_t p) {
    SymMatrix m(p);
    for (std::size_t i = 0; i < p; ++i) m.set(i, i, 1.0);
    return m;
  }

  static SymMatrix diagonal(const std::vector<double>& d) {
    SymMatrix m(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m.set(i, i, d[i]);
    return m;
  }

  // Symmetric part (A + Aᵀ)/2 of a square matrix.
  static SymMatrix from_full(const Matrix& a) {
    if (a.rows() != a.cols()) throw Error(ErrorKind::DimensionMismatch, "from_full: not square");
    const std::size_t p = a.rows();
    SymMatrix m(p);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i; j < p; ++j) m.set(i, j, 0.5 * (a(i, j) + a(j, i)));
    return m;
  }

  std::size_t dim() const noexcept { return p_; }
  const std::vector<double>& entries() const noexcept { return e_; }
  std::vector<double>& entries() noexcept { return e_; }

  double operator()(std::size_t i, std::size_t j) const {
    return i <= j ? e_[tri_index(i, j, p_)] : e_[tri_index(j, i, p_)];
  }
  void set(std::size_t i, std::size_t j, double v) {
    if (i > j) std::swap(i, j);
    e_[tri_index(i, j, p_)] = v;
  }
  void add(std::size_t i, std::size_t j, double v) {
    if (i > j) std::swap(i, j);
    e_[tri_index(i, j, p_)] += v;
  }

  Matrix full() const {
    Matrix a(p_, p_);
    for (std::size_t i = 0; i < p_; ++i)
      for (std::size_t j = i; j < p_; ++j) {
        const double v = e_[tri_index(i, j, p_)];
        a(i, j) = v;
        a(j, i) = v;
      }
    return a;
  }

  bool all_finite() const {
    return std::all_of(e_.begin(), e_.end(), [](double v) { return std::isfinite(v); });
  }

  SymMatrix& operator+=(const SymMatrix& o) {
    if (o.p_ != p_) throw Error(ErrorKind::DimensionMismatch, "SymMatrix sum");
    for (std::size_t k = 0; k < e_.size(); ++k) e_[k] += o.e_[k];
    return *this;
  }
  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator*(double s, SymMatrix a) {
    for (double& v : a.e_) v *= s;
    return a;
  }

  friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

 private:
  std::size_t p_ = 0;
  std::vector<double> e_;
};

inline Matrix expand_full(const SymMatrix& m) { return m.full(); }

struct EigenDecomposition {
  std::vector<double> eigenvalues;  // ascending
  Matrix eigenvectors;              // column s pairs with eigenvalues[s]

  std::size_t dim() const noexcept { return eigenvalues.size(); }
  double vec(std::size_t component, std::size_t s) const { return eigenvectors(component, s); }
};

namespace detail {

inline void require_finite(const SymMatrix& m, const char* where) {
  if (!m.all_finite()) throw Error(ErrorKind::NonFinite, where);
}

}  // namespace detail

// Cyclic Jacobi. A pair is rotated unless |a_ij| is negligible against
// sqrt(|a_ii a_jj|); sweeps stop when nothing is rotated, which also meets
// off(M) < 1e-14 ||M||_F.
inline EigenDecomposition sym_eigen(const SymMatrix& m) {
  detail::require_finite(m, "sym_eigen input");
  const std::size_t p = m.dim();
  Matrix a = m.full();
  Matrix v = Matrix::identity(p);
  const double eps = std::numeric_limits<double>::epsilon();
  const double fro = a.norm_frobenius();
  constexpr int max_sweeps = 50;

  for (int sweep = 0; sweep < max_sweeps && fro > 0.0; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i + 1; j < p; ++j) off += 2.0 * a(i, j) * a(i, j);
    if (std::sqrt(off) == 0.0) break;

    bool rotated = false;
    for (std::size_t i = 0; i + 1 < p; ++i) {
      for (std::size_t j = i + 1; j < p; ++j) {
        const double aij = a(i, j);
        const double scale = std::sqrt(std::abs(a(i, i)) * std::abs(a(j, j)));
        if (std::abs(aij) <= 0.5 * eps * scale || std::abs(aij) < 1e-300 * fro) {
          a(i, j) = 0.0;
          a(j, i) = 0.0;
          continue;
        }
        rotated = true;
        const double theta = (a(j, j) - a(i, i)) / (2.0 * aij);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);

        a(i, i) -= t * aij;
        a(j, j) += t * aij;
        a(i, j) = 0.0;
        a(j, i) = 0.0;
        for (std::size_t k = 0; k < p; ++k) {
          if (k == i || k == j) continue;
          const double aki = a(k, i);
          const double akj = a(k, j);
          const double nki = aki - s * (akj + tau * aki);
          const double nkj = akj + s * (aki - tau * akj);
          a(k, i) = nki;
          a(i, k) = nki;
          a(k, j) = nkj;
          a(j, k) = nkj;
        }
        for (std::size_t k = 0; k < p; ++k) {
          const double vki = v(k, i);
          const double vkj = v(k, j);
          v(k, i) = vki - s * (vkj + tau * vki);
          v(k, j) = vkj + s * (vki - tau * vkj);
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<std::size_t> order(p);
  for (std::size_t k = 0; k < p; ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });

  EigenDecomposition out;
  out.eigenvalues.resize(p);
  out.eigenvectors = Matrix(p, p);
  for (std::size_t s = 0; s < p; ++s) {
    const std::size_t src = order[s];
    out.eigenvalues[s] = a(src, src);
    std::size_t big = 0;
    for (std::size_t k = 1; k < p; ++k)
      if (std::abs(v(k, src)) > std::abs(v(big, src))) big = k;
    const double sign = v(big, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < p; ++k) out.eigenvectors(k, s) = sign * v(k, src);
  }
  return out;
}

// Σ f(λ_s) v_s v_sᵀ over the columns accepted by keep.
template <class F, class Keep>
SymMatrix spectral_map(const EigenDecomposition& ed, F f, Keep keep) {
  const std::size_t p = ed.dim();
  SymMatrix out(p);
  for (std::size_t s = 0; s < p; ++s) {
    const double lam = ed.eigenvalues[s];
    if (!keep(lam)) continue;
    const double w = f(lam);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i; j < p; ++j)
        out.add(i, j, w * ed.vec(i, s) * ed.vec(j, s));
  }
  return out;
}

inline double default_rtol(std::size_t p) {
  return static_cast<double>(p) * std::numeric_limits<double>::epsilon();
}

inline double max_abs_eigenvalue(const EigenDecomposition& ed) {
  double m = 0.0;
  for (double l : ed.eigenvalues) m = std::max(m, std::abs(l));
  return m;
}

inline SymMatrix pseudo_inverse(const EigenDecomposition& ed, double rtol) {
  if (!(rtol > 0.0)) throw Error(ErrorKind::InvalidArgument, "pseudo_inverse: rtol must be > 0");
  const double cut = rtol * max_abs_eigenvalue(ed);
  return spectral_map(
      ed, [](double l) { return 1.0 / l; },
      [cut](double l) { return std::abs(l) > cut && l != 0.0; });
}

inline SymMatrix pseudo_inverse(const SymMatrix& m, double rtol) {
  return pseudo_inverse(sym_eigen(m), rtol);
}

inline SymMatrix pseudo_inverse(const SymMatrix& m) {
  return pseudo_inverse(sym_eigen(m), default_rtol(m.dim()));
}

struct SignedLogDet {
  int sign = 0;
  double logabsdet = -std::numeric_limits<double>::infinity();
};

inline SignedLogDet signed_log_det(const EigenDecomposition& ed) {
  SignedLogDet r{1, 0.0};
  for (double l : ed.eigenvalues) {
    if (l == 0.0) return {0, -std::numeric_limits<double>::infinity()};
    if (l < 0.0) r.sign = -r.sign;
    r.logabsdet += std::log(std::abs(l));
  }
  return r;
}

inline SignedLogDet signed_log_det(const SymMatrix& m) { return signed_log_det(sym_eigen(m)); }

}  // namespace oedkit
