#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <vector>

#include "impdde/errors.hpp"
#include "impdde/system.hpp"

namespace impdde {

enum class SegmentKind { History, Ode, Impulse };

/// Maximal interval between two consecutive mandatory breakpoints. Nodes
/// grid[first..last]; the segment covers (grid[first], grid[last]] except for
/// the history segment, which covers [-r, 0] closed.
struct GridSegment {
  std::size_t first = 0;
  std::size_t last = 0;
  SegmentKind kind = SegmentKind::Ode;
  // Impulse: 0-based index into partition.impulses.
  // Ode: number of impulse windows to its left (0 for (0, t_1]).
  std::size_t index = 0;
};

/// Shared, immutable time grid on [-r, tau]. Mandatory breakpoints
/// {-r, 0, t_1, s_1, ..., t_N, s_N, tau} are segment boundaries; every theta_j
/// is forced onto the grid as an ordinary node. Interpolation never crosses a
/// segment boundary.
class TimeGrid {
 public:
  struct Loc {
    bool at_node;
    std::size_t i;  // node index if at_node, else left node of the open interval (i, i+1)
  };

  static std::shared_ptr<const TimeGrid> build(const Partition& p, double step) {
    auto g = std::shared_ptr<TimeGrid>(new TimeGrid());
    g->partition_ = p;
    g->step_ = step;
    std::vector<double> bounds = boundary_times(p);
    const double tol = kMergeTol * (p.tau + p.r);

    // Forced interior nodes: every theta_j, plus the delay images b + r of the
    // boundaries (solution derivatives kink where the delayed read crosses a
    // jump; centered differences and quadrature want those points on-grid).
    std::vector<double> pins = p.theta;
    auto pin_image = [&](double b) {
      const double im = b + p.r;
      if (im > tol && im < p.tau - tol) pins.push_back(im);
    };
    pin_image(0.0);
    for (const auto& w : p.impulses) {
      pin_image(w.t);
      if (w.s > w.t) pin_image(w.s);
    }
    std::sort(pins.begin(), pins.end());

    std::vector<std::vector<double>> forced(bounds.size() - 1);
    for (double th : pins) {
      for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
        if (th > bounds[k] + tol && th < bounds[k + 1] - tol) {
          if (forced[k].empty() || th - forced[k].back() > tol) forced[k].push_back(th);
          break;
        }
      }
    }
    g->nodes_.push_back(bounds.front());
    std::vector<std::size_t> boundary_idx{0};
    for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
      std::vector<double> stops = forced[k];
      stops.push_back(bounds[k + 1]);
      double a = bounds[k];
      const bool single_span = stops.size() == 1;
      for (double b : stops) {
        const double span = b - a;
        std::size_t m = static_cast<std::size_t>(std::ceil(span / step - 1e-9));
        m = std::max<std::size_t>(m, single_span ? 2 : 1);
        for (std::size_t i = 1; i <= m; ++i)
          g->nodes_.push_back(i == m ? b : a + static_cast<double>(i) * span / static_cast<double>(m));
        a = b;
      }
      boundary_idx.push_back(g->nodes_.size() - 1);
    }
    g->finalize(boundary_idx);
    return g;
  }

  static std::shared_ptr<const TimeGrid> build_default(const Partition& p) {
    return build(p, (p.tau + p.r) / 2000.0);
  }

  /// Grid on [-r, T] reusing `base` verbatim on [-r, tau] and appending one
  /// impulse-free segment (tau, T].
  static std::shared_ptr<const TimeGrid> build_extended(const TimeGrid& base, double T) {
    if (!(T > base.end())) throw DomainError("extension endpoint must exceed tau");
    auto g = std::shared_ptr<TimeGrid>(new TimeGrid());
    g->partition_ = base.partition_;
    g->step_ = base.step_;
    g->nodes_ = base.nodes_;
    std::vector<std::size_t> boundary_idx;
    for (std::size_t b : base.break_nodes_) boundary_idx.push_back(b);
    const double a = base.end();
    const double span = T - a;
    const std::size_t m = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(span / g->step_ - 1e-9)));
    for (std::size_t i = 1; i <= m; ++i)
      g->nodes_.push_back(i == m ? T : a + static_cast<double>(i) * span / static_cast<double>(m));
    boundary_idx.push_back(g->nodes_.size() - 1);
    g->finalize(boundary_idx);
    return g;
  }

  /// Rebuild a grid from explicit node times (trajectory round-trips). The
  /// mandatory breakpoints must all be present as nodes.
  static std::shared_ptr<const TimeGrid> from_nodes(const Partition& p, std::vector<double> nodes) {
    auto g = std::shared_ptr<TimeGrid>(new TimeGrid());
    g->partition_ = p;
    g->nodes_ = std::move(nodes);
    if (g->nodes_.size() < 2 || !std::is_sorted(g->nodes_.begin(), g->nodes_.end()))
      throw DomainError("grid nodes must be sorted and at least two");
    g->step_ = (p.tau + p.r) / static_cast<double>(g->nodes_.size());
    std::vector<std::size_t> boundary_idx;
    const double tol = kMergeTol * (p.tau + p.r);
    const std::vector<double> bounds = boundary_times(p);
    const double last = g->nodes_.back();
    for (double b : bounds) {
      if (b > last + tol) break;  // truncated trajectory: later breakpoints absent
      auto it = std::lower_bound(g->nodes_.begin(), g->nodes_.end(), b - tol);
      if (it == g->nodes_.end() || std::abs(*it - b) > tol)
        throw DomainError("mandatory breakpoint missing from grid nodes");
      boundary_idx.push_back(static_cast<std::size_t>(it - g->nodes_.begin()));
    }
    if (last > bounds.back() + tol) boundary_idx.push_back(g->nodes_.size() - 1);
    if (boundary_idx.back() != g->nodes_.size() - 1) boundary_idx.push_back(g->nodes_.size() - 1);
    g->finalize(boundary_idx);
    return g;
  }

  const Partition& partition() const noexcept { return partition_; }
  const std::vector<double>& nodes() const noexcept { return nodes_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  double node(std::size_t i) const noexcept { return nodes_[i]; }
  double start() const noexcept { return nodes_.front(); }
  double end() const noexcept { return nodes_.back(); }
  double step_hint() const noexcept { return step_; }
  const std::vector<GridSegment>& segments() const noexcept { return segments_; }
  std::size_t index_of_time0() const noexcept { return idx0_; }

  const std::vector<std::size_t>& breakpoint_nodes() const noexcept { return break_nodes_; }
  std::size_t breakpoint_count() const noexcept { return break_nodes_.size(); }
  bool is_breakpoint(std::size_t node_idx) const noexcept { return bp_slot_[node_idx] >= 0; }
  /// Slot into per-breakpoint side storage, or -1.
  std::ptrdiff_t breakpoint_slot(std::size_t node_idx) const noexcept { return bp_slot_[node_idx]; }

  Loc locate(double t) const {
    const double tol = snap_tol();
    if (t < start() - tol || t > end() + tol) throw DomainError("time outside grid domain");
    t = std::clamp(t, start(), end());
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), t);
    std::size_t i = static_cast<std::size_t>(it - nodes_.begin());
    if (i < nodes_.size() && std::abs(nodes_[i] - t) <= tol) return {true, i};
    if (i > 0 && std::abs(nodes_[i - 1] - t) <= tol) return {true, i - 1};
    return {false, i - 1};
  }

  /// Segment id owning the open interval (node j, node j+1).
  std::size_t segment_of_interval(std::size_t left_node) const noexcept { return seg_of_interval_[left_node]; }

  double snap_tol() const noexcept { return 1e-9 * (end() - start()); }

 private:
  TimeGrid() = default;

  static constexpr double kMergeTol = 1e-12;

  static std::vector<double> boundary_times(const Partition& p) {
    const double tol = kMergeTol * (p.tau + p.r);
    std::vector<double> bounds{-p.r, 0.0};
    for (const auto& w : p.impulses) {
      bounds.push_back(w.t);
      if (w.s > w.t + tol) bounds.push_back(w.s);  // degenerate window collapses to one boundary
    }
    bounds.push_back(p.tau);
    return bounds;
  }

  void finalize(const std::vector<std::size_t>& boundary_idx) {
    break_nodes_ = boundary_idx;
    bp_slot_.assign(nodes_.size(), -1);
    for (std::size_t s = 0; s < break_nodes_.size(); ++s) bp_slot_[break_nodes_[s]] = static_cast<std::ptrdiff_t>(s);

    // Classify each inter-boundary stretch against the partition.
    segments_.clear();
    const double tol = snap_tol();
    for (std::size_t k = 0; k + 1 < break_nodes_.size(); ++k) {
      GridSegment seg;
      seg.first = break_nodes_[k];
      seg.last = break_nodes_[k + 1];
      const double a = nodes_[seg.first];
      if (a < -tol) {
        seg.kind = SegmentKind::History;
        seg.index = 0;
      } else {
        seg.kind = SegmentKind::Ode;
        seg.index = partition_.impulses.size();  // overwritten below unless past all windows
        for (std::size_t i = 0; i < partition_.impulses.size(); ++i) {
          const auto& w = partition_.impulses[i];
          if (std::abs(a - w.t) <= tol && w.s > w.t + tol) {
            seg.kind = SegmentKind::Impulse;
            seg.index = i;
            break;
          }
          if (a < w.t - tol) {
            seg.kind = SegmentKind::Ode;
            seg.index = i;
            break;
          }
        }
        if (seg.kind == SegmentKind::Ode && nodes_[seg.first] > partition_.tau + tol)
          seg.index = partition_.impulses.size() + 1;  // extension past tau
        else if (seg.kind == SegmentKind::Ode && std::abs(nodes_[seg.first] - partition_.tau) <= tol)
          seg.index = partition_.impulses.size() + 1;
      }
      segments_.push_back(seg);
    }

    seg_of_interval_.assign(nodes_.size() > 0 ? nodes_.size() - 1 : 0, 0);
    for (std::size_t sid = 0; sid < segments_.size(); ++sid)
      for (std::size_t j = segments_[sid].first; j < segments_[sid].last; ++j) seg_of_interval_[j] = sid;

    idx0_ = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (std::abs(nodes_[i]) <= snap_tol()) {
        idx0_ = i;
        break;
      }
  }

  Partition partition_;
  double step_ = 0;
  std::vector<double> nodes_;
  std::vector<std::size_t> break_nodes_;
  std::vector<std::ptrdiff_t> bp_slot_;
  std::vector<GridSegment> segments_;
  std::vector<std::size_t> seg_of_interval_;
  std::size_t idx0_ = 0;
};

using GridPtr = std::shared_ptr<const TimeGrid>;

}  // namespace impdde
