#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "impdde/grid.hpp"
#include "impdde/history.hpp"
#include "impdde/linalg.hpp"

namespace impdde {

enum class Side { Left, Right };

/// Discretized piecewise-continuous trajectory on [-r, tau] (or an extended
/// horizon). One stored value per grid node; segment boundaries additionally
/// carry a right value so jumps are represented without duplicated nodes. The
/// stored node value is the left value, matching z(t_k) = z(t_k^-).
/// Evaluation is piecewise linear and never interpolates across a boundary.
///
/// Value storage is shared copy-on-write: copies (and the history views
/// handed to callbacks) are cheap, and a trajectory is safe to share across
/// threads once construction is done.
class Trajectory {
 public:
  Trajectory() = default;

  Trajectory(GridPtr grid, std::size_t dim) : grid_(std::move(grid)), dim_(dim) {
    data_ = std::make_shared<Data>();
    data_->left.assign(grid_->node_count(), Vec(dim));
    data_->right.assign(grid_->breakpoint_count(), Vec(dim));
    data_->right_set.assign(grid_->breakpoint_count(), 0);
  }

  /// Sample a continuous function onto the grid (both sides equal).
  static Trajectory from_function(GridPtr grid, std::size_t dim, const std::function<Vec(double)>& fn) {
    Trajectory z(std::move(grid), dim);
    for (std::size_t i = 0; i < z.grid_->node_count(); ++i) z.data_->left[i] = fn(z.grid_->node(i));
    return z;
  }

  static Trajectory constant(GridPtr grid, const Vec& c) {
    Trajectory z(std::move(grid), c.size());
    for (auto& v : z.data_->left) v = c;
    return z;
  }

  const GridPtr& grid() const noexcept { return grid_; }
  std::size_t dim() const noexcept { return dim_; }

  const Vec& left_at(std::size_t node) const noexcept { return data_->left[node]; }

  const Vec& right_at(std::size_t node) const noexcept {
    const std::ptrdiff_t slot = grid_->breakpoint_slot(node);
    if (slot >= 0 && data_->right_set[static_cast<std::size_t>(slot)])
      return data_->right[static_cast<std::size_t>(slot)];
    return data_->left[node];
  }

  const Vec& value_at(std::size_t node, Side side) const noexcept {
    return side == Side::Left ? data_->left[node] : right_at(node);
  }

  void set_left(std::size_t node, Vec v) {
    mut().left[node] = std::move(v);
  }

  /// Store a distinct right value; only legal at a segment boundary.
  void set_right(std::size_t node, Vec v) {
    const std::ptrdiff_t slot = grid_->breakpoint_slot(node);
    if (slot < 0) throw DomainError("right value only stored at segment boundaries");
    Data& d = mut();
    d.right[static_cast<std::size_t>(slot)] = std::move(v);
    d.right_set[static_cast<std::size_t>(slot)] = 1;
  }

  /// Evaluate at time t in the grid domain. At a node returns the stored left
  /// or right value per `side` (default left); between nodes interpolates
  /// linearly within the containing segment.
  Vec eval(double t, Side side = Side::Left) const {
    const TimeGrid::Loc loc = grid_->locate(t);
    if (loc.at_node) return value_at(loc.i, side);
    const std::size_t j = loc.i;
    const Vec& vl = right_at(j);  // a segment-start boundary contributes its right value
    const Vec& vr = data_->left[j + 1];
    const double a = grid_->node(j), b = grid_->node(j + 1);
    const double w = (t - a) / (b - a);
    Vec out(dim_);
    for (std::size_t k = 0; k < dim_; ++k) out[k] = (1.0 - w) * vl[k] + w * vr[k];
    return out;
  }

  /// History window anchored at t in [0, horizon]: s -> z(t+s), left-continuous.
  HistorySegment translate(double t) const {
    const double tol = grid_->snap_tol();
    if (t < -tol || t > grid_->end() + tol) throw DomainError("translate anchor outside [0, horizon]");
    return HistorySegment(grid_->partition().r, [z = *this, t](double s) { return z.eval(t + s); });
  }

  /// Right-limit window: pointwise limit of translate(t + eps) as eps -> 0+,
  /// i.e. jump nodes inside the window (and the anchor itself) contribute
  /// their right values. Quadrature uses this at nodes left of a jump.
  HistorySegment translate_right_limit(double t) const {
    return HistorySegment(grid_->partition().r, [z = *this, t](double s) { return z.eval(t + s, Side::Right); });
  }

  /// Sup of the Euclidean norm over all nodes, both sides at boundaries.
  double sup_norm() const {
    double m = 0;
    for (const auto& v : data_->left) m = std::max(m, v.norm());
    for (std::size_t b : grid_->breakpoint_nodes()) m = std::max(m, right_at(b).norm());
    return m;
  }

  bool all_finite() const {
    for (const auto& v : data_->left)
      if (!v.all_finite()) return false;
    for (std::size_t b : grid_->breakpoint_nodes())
      if (!right_at(b).all_finite()) return false;
    return true;
  }

 private:
  struct Data {
    std::vector<Vec> left;
    std::vector<Vec> right;
    std::vector<char> right_set;
  };

  Data& mut() {
    if (data_.use_count() > 1) data_ = std::make_shared<Data>(*data_);
    return *data_;
  }

  GridPtr grid_;
  std::size_t dim_ = 0;
  std::shared_ptr<Data> data_;
};

/// a*x + b*y nodewise, on a shared grid.
inline Trajectory lin_comb(double a, const Trajectory& x, double b, const Trajectory& y) {
  if (x.grid() != y.grid()) throw DomainError("lin_comb requires a shared grid");
  Trajectory out(x.grid(), x.dim());
  for (std::size_t i = 0; i < x.grid()->node_count(); ++i) out.set_left(i, a * x.left_at(i) + b * y.left_at(i));
  for (std::size_t bnode : x.grid()->breakpoint_nodes())
    out.set_right(bnode, a * x.right_at(bnode) + b * y.right_at(bnode));
  return out;
}

/// Discrete sup-norm distance: maximum over the union of both grids (both
/// sides at segment boundaries) of the Euclidean norm of the difference.
/// Exact for piecewise-linear representatives sharing a grid.
inline double sup_distance(const Trajectory& z1, const Trajectory& z2) {
  const auto& g1 = *z1.grid();
  const auto& g2 = *z2.grid();
  const double tol = std::max(g1.snap_tol(), g2.snap_tol());
  if (std::abs(g1.start() - g2.start()) > tol || std::abs(g1.end() - g2.end()) > tol)
    throw DomainError("sup_distance requires matching horizons");
  if (z1.dim() != z2.dim()) throw DomainError("sup_distance requires matching dimensions");

  double m = 0;
  if (z1.grid() == z2.grid()) {
    for (std::size_t i = 0; i < g1.node_count(); ++i) m = std::max(m, (z1.left_at(i) - z2.left_at(i)).norm());
    for (std::size_t b : g1.breakpoint_nodes()) m = std::max(m, (z1.right_at(b) - z2.right_at(b)).norm());
    return m;
  }

  auto probe = [&](double t, bool boundary) {
    m = std::max(m, (z1.eval(t, Side::Left) - z2.eval(t, Side::Left)).norm());
    if (boundary) m = std::max(m, (z1.eval(t, Side::Right) - z2.eval(t, Side::Right)).norm());
  };
  for (std::size_t i = 0; i < g1.node_count(); ++i) probe(g1.node(i), g1.is_breakpoint(i));
  for (std::size_t i = 0; i < g2.node_count(); ++i) probe(g2.node(i), g2.is_breakpoint(i));
  return m;
}

}  // namespace impdde
