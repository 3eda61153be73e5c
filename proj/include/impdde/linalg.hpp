#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "impdde/errors.hpp"

// Dense vectors and matrices at desk scale (n <= 8 or so). Row-major storage,
// value semantics, no expression templates.

namespace impdde {

class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t n, double fill = 0.0) : d_(n, fill) {}
  Vec(std::initializer_list<double> xs) : d_(xs) {}

  std::size_t size() const noexcept { return d_.size(); }
  double& operator[](std::size_t i) noexcept { return d_[i]; }
  double operator[](std::size_t i) const noexcept { return d_[i]; }
  double* data() noexcept { return d_.data(); }
  const double* data() const noexcept { return d_.data(); }

  Vec& operator+=(const Vec& o) {
    for (std::size_t i = 0; i < d_.size(); ++i) d_[i] += o.d_[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (std::size_t i = 0; i < d_.size(); ++i) d_[i] -= o.d_[i];
    return *this;
  }
  Vec& operator*=(double a) {
    for (double& x : d_) x *= a;
    return *this;
  }

  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(double a, Vec v) { return v *= a; }
  friend Vec operator*(Vec v, double a) { return v *= a; }

  /// Euclidean norm.
  double norm() const {
    double s = 0;
    for (double x : d_) s += x * x;
    return std::sqrt(s);
  }

  bool all_finite() const {
    for (double x : d_)
      if (!std::isfinite(x)) return false;
    return true;
  }

 private:
  std::vector<double> d_;
};

class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0) : r_(rows), c_(cols), d_(rows * cols, fill) {}

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return r_; }
  std::size_t cols() const noexcept { return c_; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return d_[i * c_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return d_[i * c_ + j]; }
  double* data() noexcept { return d_.data(); }
  const double* data() const noexcept { return d_.data(); }

  Mat& operator+=(const Mat& o) {
    for (std::size_t i = 0; i < d_.size(); ++i) d_[i] += o.d_[i];
    return *this;
  }
  Mat& operator-=(const Mat& o) {
    for (std::size_t i = 0; i < d_.size(); ++i) d_[i] -= o.d_[i];
    return *this;
  }
  Mat& operator*=(double a) {
    for (double& x : d_) x *= a;
    return *this;
  }

  friend Mat operator+(Mat a, const Mat& b) { return a += b; }
  friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
  friend Mat operator*(double a, Mat m) { return m *= a; }

  friend Vec operator*(const Mat& m, const Vec& v) {
    Vec out(m.r_);
    for (std::size_t i = 0; i < m.r_; ++i) {
      double s = 0;
      const double* row = m.d_.data() + i * m.c_;
      for (std::size_t j = 0; j < m.c_; ++j) s += row[j] * v[j];
      out[i] = s;
    }
    return out;
  }

  friend Mat operator*(const Mat& a, const Mat& b) {
    Mat out(a.r_, b.c_);
    for (std::size_t i = 0; i < a.r_; ++i)
      for (std::size_t k = 0; k < a.c_; ++k) {
        const double aik = a(i, k);
        for (std::size_t j = 0; j < b.c_; ++j) out(i, j) += aik * b(k, j);
      }
    return out;
  }

  Mat transposed() const {
    Mat out(c_, r_);
    for (std::size_t i = 0; i < r_; ++i)
      for (std::size_t j = 0; j < c_; ++j) out(j, i) = (*this)(i, j);
    return out;
  }

  bool all_finite() const {
    for (double x : d_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  /// Max absolute entry; cheap gauge used for residual checks.
  double max_abs() const {
    double m = 0;
    for (double x : d_) m = std::max(m, std::abs(x));
    return m;
  }

 private:
  std::size_t r_ = 0, c_ = 0;
  std::vector<double> d_;
};

/// Largest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
inline double symmetric_max_eigenvalue(Mat s) {
  const std::size_t n = s.rows();
  if (n == 1) return s(0, 0);
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += s(p, q) * s(p, q);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(s(p, q)) < 1e-300) continue;
        const double theta = (s(q, q) - s(p, p)) / (2 * s(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double skp = s(k, p), skq = s(k, q);
          s(k, p) = c * skp - sn * skq;
          s(k, q) = sn * skp + c * skq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double spk = s(p, k), sqk = s(q, k);
          s(p, k) = c * spk - sn * sqk;
          s(q, k) = sn * spk + c * sqk;
        }
      }
  }
  double lam = s(0, 0);
  for (std::size_t i = 1; i < n; ++i) lam = std::max(lam, s(i, i));
  return lam;
}

/// Induced 2-norm (largest singular value). Closed form up to 2x2, Jacobi on
/// the Gram matrix beyond.
inline double operator_norm_2(const Mat& a) {
  if (a.rows() == 1 && a.cols() == 1) return std::abs(a(0, 0));
  if (a.rows() == 2 && a.cols() == 2) {
    const double fro2 = a(0, 0) * a(0, 0) + a(0, 1) * a(0, 1) + a(1, 0) * a(1, 0) + a(1, 1) * a(1, 1);
    const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    const double gap = std::sqrt(std::max(0.0, fro2 * fro2 - 4.0 * det * det));
    return std::sqrt(0.5 * (fro2 + gap));
  }
  const double lam = symmetric_max_eigenvalue(a.transposed() * a);
  return lam > 0 ? std::sqrt(lam) : 0.0;
}

/// Determinant by LU with partial pivoting.
inline double determinant(Mat a) {
  const std::size_t n = a.rows();
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      det = -det;
    }
    if (a(k, k) == 0.0) return 0.0;
    det *= a(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
    }
  }
  return det;
}

}  // namespace impdde
