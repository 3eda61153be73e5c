#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <vector>

#include "impdde/grid.hpp"
#include "impdde/linalg.hpp"
#include "impdde/system.hpp"

namespace impdde {

/// Fundamental matrix Phi(t) of z' = A(t)z on [0, horizon], its inverse path,
/// and the uniform operator-norm bound M of U(t, s) = Phi(t) Phi(s)^{-1}.
///
/// The inverse path solves the adjoint equation Psi' = -Psi A(t), Psi(0) = I,
/// so no matrix is ever inverted numerically. Both paths advance with the
/// classical fourth-order one-step method across every grid node >= 0.
class EvolutionCache {
 public:
  static EvolutionCache build(const MatrixFn& A, GridPtr grid) {
    EvolutionCache c;
    c.grid_ = std::move(grid);
    c.idx0_ = c.grid_->index_of_time0();

    const Mat A0 = A(c.grid_->node(c.idx0_));
    if (A0.rows() != A0.cols() || A0.rows() == 0) throw DomainError("A(t) must be square");
    c.n_ = A0.rows();
    if (!A0.all_finite()) throw NumericError("non-finite entries in A(t)", c.grid_->node(c.idx0_));

    const std::size_t count = c.grid_->node_count() - c.idx0_;
    c.phi_.reserve(count);
    c.phi_inv_.reserve(count);
    c.phi_.push_back(Mat::identity(c.n_));
    c.phi_inv_.push_back(Mat::identity(c.n_));

    for (std::size_t k = c.idx0_; k + 1 < c.grid_->node_count(); ++k) {
      const double t0 = c.grid_->node(k);
      const double t1 = c.grid_->node(k + 1);
      const double h = t1 - t0;
      const Mat a0 = A(t0), am = A(t0 + 0.5 * h), a1 = A(t1);
      if (!a0.all_finite() || !am.all_finite() || !a1.all_finite())
        throw NumericError("non-finite entries in A(t)", t1);

      const Mat& p = c.phi_.back();
      Mat k1 = a0 * p;
      Mat k2 = am * (p + (0.5 * h) * k1);
      Mat k3 = am * (p + (0.5 * h) * k2);
      Mat k4 = a1 * (p + h * k3);
      Mat pn = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

      const Mat& q = c.phi_inv_.back();
      Mat j1 = -1.0 * (q * a0);
      Mat j2 = -1.0 * ((q + (0.5 * h) * j1) * am);
      Mat j3 = -1.0 * ((q + (0.5 * h) * j2) * am);
      Mat j4 = -1.0 * ((q + h * j3) * a1);
      Mat qn = q + (h / 6.0) * (j1 + 2.0 * j2 + 2.0 * j3 + j4);

      if (!pn.all_finite() || !qn.all_finite())
        throw NumericError("fundamental matrix integration produced non-finite values", t1);
      c.phi_.push_back(std::move(pn));
      c.phi_inv_.push_back(std::move(qn));
    }

    c.inversion_residual_ = 0;
    for (std::size_t k = 0; k < c.phi_.size(); ++k) {
      Mat res = c.phi_[k] * c.phi_inv_[k] - Mat::identity(c.n_);
      c.inversion_residual_ = std::max(c.inversion_residual_, res.max_abs());
    }

    // Dense node-pair maximization of ||Phi(t) PhiInv(s)||_2 over s <= t,
    // then a 5% safety margin on top of the grid-resolution maximum.
    double worst = 1.0;
    for (std::size_t s = 0; s < c.phi_.size(); ++s)
      for (std::size_t t = s; t < c.phi_.size(); ++t)
        worst = std::max(worst, operator_norm_2(c.phi_[t] * c.phi_inv_[s]));
    c.M_ = 1.05 * worst;
    return c;
  }

  std::size_t dim() const noexcept { return n_; }
  const GridPtr& grid() const noexcept { return grid_; }
  std::size_t index_of_time0() const noexcept { return idx0_; }

  /// Uniform bound on ||U(t, s)||_2 over sampled 0 <= s <= t; always >= 1.
  double norm_bound() const noexcept { return M_; }

  /// Max node residual of Phi(t) PhiInv(t) - I.
  double inversion_residual() const noexcept { return inversion_residual_; }

  const Mat& phi_at_node(std::size_t node) const { return phi_[node - idx0_]; }
  const Mat& phi_inv_at_node(std::size_t node) const { return phi_inv_[node - idx0_]; }

  Mat phi(double t) const { return interp(phi_, t); }
  Mat phi_inv(double t) const { return interp(phi_inv_, t); }

  /// U(t, s) = Phi(t) Phi(s)^{-1}; t, s anywhere in [0, horizon].
  Mat evolution_op(double t, double s) const { return phi(t) * phi_inv(s); }

 private:
  Mat interp(const std::vector<Mat>& table, double t) const {
    const double tol = grid_->snap_tol();
    if (t < -tol || t > grid_->end() + tol) throw DomainError("evolution operator time outside [0, horizon]");
    const TimeGrid::Loc loc = grid_->locate(std::max(t, 0.0));
    if (loc.at_node) {
      if (loc.i < idx0_) throw DomainError("evolution operator time outside [0, horizon]");
      return table[loc.i - idx0_];
    }
    const std::size_t j = loc.i;
    if (j < idx0_) throw DomainError("evolution operator time outside [0, horizon]");
    const double a = grid_->node(j), b = grid_->node(j + 1);
    const double w = (t - a) / (b - a);
    Mat out = (1.0 - w) * table[j - idx0_];
    out += w * table[j + 1 - idx0_];
    return out;
  }

  GridPtr grid_;
  std::size_t idx0_ = 0;
  std::size_t n_ = 0;
  std::vector<Mat> phi_;
  std::vector<Mat> phi_inv_;
  double M_ = 1.05;
  double inversion_residual_ = 0;
};

}  // namespace impdde
