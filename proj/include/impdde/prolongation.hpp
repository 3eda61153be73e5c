#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "impdde/solver.hpp"

namespace impdde {

struct ExtendResult {
  Trajectory trajectory;  // on [-r, T], or [-r, escape) when truncated
  bool escaped = false;
  double escape_time = 0;
};

namespace detail {

/// History view during time-marching: reads the solved base trajectory below
/// tau, the already-marched nodes next, and blends linearly up to the current
/// stage state for the (at most one step wide) overlap window.
struct MarchHistory {
  const Trajectory* base;
  const std::vector<double>* times;  // extension node times
  const std::vector<Vec>* vals;      // marched values, filled up to `filled`
  std::size_t filled;
  double t_stage;
  const Vec* y_stage;

  Vec operator()(double s) const {
    const double tt = t_stage + s;
    const double tau = base->grid()->end();
    if (tt <= tau) return base->eval(tt);
    const double t_known = filled ? (*times)[filled - 1] : tau;
    if (tt >= t_known) {
      Vec vk = known_value();
      if (t_stage - t_known < 1e-14 * (1.0 + std::abs(t_stage))) return vk;
      const double w = (tt - t_known) / (t_stage - t_known);
      vk *= (1.0 - w);
      vk += w * (*y_stage);
      return vk;
    }
    // tt strictly between tau and the newest marched node
    const auto begin = times->begin();
    const std::size_t idx =
        static_cast<std::size_t>(std::lower_bound(begin, begin + static_cast<std::ptrdiff_t>(filled), tt) - begin);
    const double tb = (*times)[idx];
    const Vec& vb = (*vals)[idx];
    double ta;
    Vec va;
    if (idx == 0) {
      ta = tau;
      va = base->eval(tau);
    } else {
      ta = (*times)[idx - 1];
      va = (*vals)[idx - 1];
    }
    const double w = (tt - ta) / (tb - ta);
    va *= (1.0 - w);
    va += w * vb;
    return va;
  }

  Vec known_value() const {
    if (filled) return (*vals)[filled - 1];
    return base->eval(base->grid()->end());
  }
};

}  // namespace detail

/// Continue z' = A(t)z + f(t, z_t) past the solved horizon with the classical
/// fourth-order one-step method, history read from the growing trajectory.
/// No impulses or non-local terms exist past tau. A state whose norm passes
/// `blowup_cap` (or goes non-finite) stops the march; the partial trajectory
/// and the escape time are returned instead of an error.
inline ExtendResult extend_solution(const SystemSpec& spec, const Trajectory& z, double T,
                                    double blowup_cap = 1e6) {
  const GridPtr base_grid = z.grid();
  if (!(T > base_grid->end())) throw DomainError("extension endpoint must exceed the solved horizon");
  const GridPtr ext_grid = TimeGrid::build_extended(*base_grid, T);
  const std::size_t base_count = base_grid->node_count();

  std::vector<double> times;
  for (std::size_t i = base_count; i < ext_grid->node_count(); ++i) times.push_back(ext_grid->node(i));

  std::vector<Vec> vals;
  vals.reserve(times.size());

  const double r = spec.partition.r;
  auto rhs = [&](double t, const Vec& y, std::size_t filled) {
    detail::MarchHistory h{&z, &times, &vals, filled, t, &y};
    HistorySegment window(r, [&h](double s) { return h(s); });
    return spec.A(t) * y + spec.f(t, window);
  };

  bool escaped = false;
  double escape_time = 0;
  Vec y = z.left_at(base_count - 1);
  double t_prev = base_grid->end();
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t1 = times[k];
    const double h = t1 - t_prev;
    const Vec k1 = rhs(t_prev, y, k);
    const Vec k2 = rhs(t_prev + 0.5 * h, y + (0.5 * h) * k1, k);
    const Vec k3 = rhs(t_prev + 0.5 * h, y + (0.5 * h) * k2, k);
    const Vec k4 = rhs(t1, y + h * k3, k);
    Vec y_next = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!y_next.all_finite() || y_next.norm() > blowup_cap) {
      escaped = true;
      escape_time = t1;
      break;
    }
    vals.push_back(y_next);
    y = std::move(y_next);
    t_prev = t1;
  }

  GridPtr out_grid = ext_grid;
  if (escaped) {
    std::vector<double> kept(ext_grid->nodes().begin(), ext_grid->nodes().begin() + base_count + vals.size());
    out_grid = TimeGrid::from_nodes(spec.partition, std::move(kept));
  }

  Trajectory out(out_grid, spec.n);
  for (std::size_t i = 0; i < base_count; ++i) out.set_left(i, z.left_at(i));
  for (std::size_t b : base_grid->breakpoint_nodes()) out.set_right(b, z.right_at(b));
  for (std::size_t k = 0; k < vals.size(); ++k) out.set_left(base_count + k, vals[k]);

  return {std::move(out), escaped, escape_time};
}

/// A-priori bound M (L ||z(a)|| + int_a^b h) exp(M int_a^b h), integrals by
/// trapezoid over the trajectory nodes in [a, b]. Valid when the caller has
/// verified ||f(t, w)|| <= h(t)(1 + ||w(0)||) on the interval.
inline double gronwall_bound(double M, double L, const Trajectory& z, double a, double b,
                             const std::function<double(double)>& growth) {
  if (!(b > a)) throw DomainError("gronwall interval must have positive length");
  std::vector<double> ts{a};
  for (std::size_t i = 0; i < z.grid()->node_count(); ++i) {
    const double t = z.grid()->node(i);
    if (t > a && t < b) ts.push_back(t);
  }
  ts.push_back(b);

  double integral = 0;
  double prev = growth(ts[0]);
  if (prev < 0) throw DomainError("growth function must be nonnegative");
  for (std::size_t i = 1; i < ts.size(); ++i) {
    const double cur = growth(ts[i]);
    if (cur < 0) throw DomainError("growth function must be nonnegative");
    integral += 0.5 * (ts[i] - ts[i - 1]) * (prev + cur);
    prev = cur;
  }
  const double anchor = z.eval(a).norm();
  return M * (L * anchor + integral) * std::exp(M * integral);
}

struct BoundaryAlternative {
  bool escaped = false;
  std::optional<double> first_hit;
};

/// First grid node (either side) whose norm reaches the given radius.
inline BoundaryAlternative boundary_alternative_check(const Trajectory& z, double radius) {
  const double tol = 1e-12 * std::max(1.0, radius);
  const auto& grid = *z.grid();
  for (std::size_t i = 0; i < grid.node_count(); ++i) {
    if (z.left_at(i).norm() >= radius - tol || (grid.is_breakpoint(i) && z.right_at(i).norm() >= radius - tol))
      return {true, grid.node(i)};
  }
  return {false, std::nullopt};
}

}  // namespace impdde
