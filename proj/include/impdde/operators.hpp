#pragma once

#include <span>
#include <string>
#include <vector>

#include "impdde/evolution.hpp"
#include "impdde/system.hpp"
#include "impdde/trajectory.hpp"

namespace impdde {

/// Free vectors of the operator pair: eta is the value J takes on impulse
/// windows, alpha/beta are the plateau values of the reference trajectory,
/// rho the radius of the invariant ball around it. Defaults are zero, which
/// minimizes the plateau terms of the feasibility inequalities.
struct OperatorParams {
  Vec eta;
  Vec alpha;
  Vec beta;
  double rho = 1.0;

  static OperatorParams zeros(std::size_t n, double rho = 1.0) {
    OperatorParams p;
    p.eta = Vec(n);
    p.alpha = Vec(n);
    p.beta = Vec(n);
    p.rho = rho;
    return p;
  }
};

namespace detail {

inline void require_base_grid(const SystemSpec& spec, const TimeGrid& grid) {
  if (grid.end() > spec.partition.tau + grid.snap_tol())
    throw DomainError("operator evaluation requires the base horizon grid");
}

inline Vec checked_rhs(const SystemSpec& spec, double t, const HistorySegment& window) {
  Vec v = spec.f(t, window);
  if (v.size() != spec.n) throw DomainError("f returned a vector of wrong dimension");
  if (!v.all_finite()) throw NumericError("f evaluated to a non-finite value", t);
  return v;
}

inline Vec checked_impulse(const SystemSpec& spec, std::size_t i, double t, const Vec& x) {
  Vec v = spec.G[i](t, x);
  if (v.size() != spec.n) throw DomainError("G returned a vector of wrong dimension");
  if (!v.all_finite()) throw NumericError("impulse map evaluated to a non-finite value", t);
  return v;
}

inline Vec checked_nonlocal(const SystemSpec& spec, std::span<const HistorySegment> tuple, double t) {
  if (tuple.empty()) return Vec(spec.n);
  Vec v = spec.g(tuple, t);
  if (v.size() != spec.n) throw DomainError("g returned a vector of wrong dimension");
  if (!v.all_finite()) throw NumericError("non-local map evaluated to a non-finite value", t);
  return v;
}

}  // namespace detail

/// The translated windows (z_theta_1, ..., z_theta_q) fed to the non-local map.
inline std::vector<HistorySegment> nonlocal_tuple(const SystemSpec& spec, const Trajectory& z) {
  std::vector<HistorySegment> tuple;
  tuple.reserve(spec.partition.theta.size());
  for (double th : spec.partition.theta) tuple.push_back(z.translate(th));
  return tuple;
}

/// Reference trajectory: U(t,0) phi(0) on (0, t_1], alpha on the later ODE
/// windows, beta on the impulse windows, phi on [-r, 0].
inline Trajectory phi_tilde(const SystemSpec& spec, const EvolutionCache& cache, const OperatorParams& params,
                            const GridPtr& grid) {
  detail::require_base_grid(spec, *grid);
  Trajectory out(grid, spec.n);
  const Vec phi0 = spec.phi(0.0);
  for (const GridSegment& seg : grid->segments()) {
    switch (seg.kind) {
      case SegmentKind::History:
        for (std::size_t j = seg.first; j <= seg.last; ++j) out.set_left(j, spec.phi(grid->node(j)));
        break;
      case SegmentKind::Ode:
        if (seg.index == 0) {
          out.set_right(seg.first, phi0);
          for (std::size_t j = seg.first + 1; j <= seg.last; ++j)
            out.set_left(j, cache.phi_at_node(j) * phi0);
        } else {
          out.set_right(seg.first, params.alpha);
          for (std::size_t j = seg.first + 1; j <= seg.last; ++j) out.set_left(j, params.alpha);
        }
        break;
      case SegmentKind::Impulse:
        out.set_right(seg.first, params.beta);
        for (std::size_t j = seg.first + 1; j <= seg.last; ++j) out.set_left(j, params.beta);
        break;
    }
  }
  return out;
}

/// J(y): variation-of-constants on each ODE window, eta on impulse windows,
/// phi on [-r, 0]. The evolution operator is factored as
/// Phi(t) [PhiInv(a) v0 + cumulative trapezoid of PhiInv(s) f(s, y_s)], so
/// each window costs one forward pass.
inline Trajectory apply_J(const SystemSpec& spec, const EvolutionCache& cache, const OperatorParams& params,
                          const Trajectory& y) {
  const GridPtr& grid = y.grid();
  detail::require_base_grid(spec, *grid);
  Trajectory out(grid, spec.n);

  for (const GridSegment& seg : grid->segments()) {
    if (seg.kind == SegmentKind::History) {
      for (std::size_t j = seg.first; j <= seg.last; ++j) out.set_left(j, spec.phi(grid->node(j)));
    } else if (seg.kind == SegmentKind::Impulse) {
      out.set_right(seg.first, params.eta);
      for (std::size_t j = seg.first + 1; j <= seg.last; ++j) out.set_left(j, params.eta);
    } else {
      const double a = grid->node(seg.first);
      Vec v0;
      if (seg.index == 0) {
        const auto tuple = nonlocal_tuple(spec, y);
        v0 = spec.phi(0.0) - detail::checked_nonlocal(spec, tuple, 0.0);
      } else {
        v0 = detail::checked_impulse(spec, seg.index - 1, a, y.left_at(seg.first));
      }
      const Vec c = cache.phi_inv_at_node(seg.first) * v0;
      out.set_right(seg.first, cache.phi_at_node(seg.first) * c);

      // The integrand s -> PhiInv(s) f(s, y_s) jumps wherever the delayed
      // window crosses a jump of y. Each trapezoid interval therefore takes
      // the right limit at its left node and the left limit at its right
      // node; at the open lower endpoint only the right limit exists.
      const double r = grid->partition().r;
      const auto& bp = grid->breakpoint_nodes();
      auto window_crosses_jump = [&](double t) {
        for (std::size_t b : bp) {
          const double tb = grid->node(b);
          if (tb >= t - r - grid->snap_tol() && tb < t - grid->snap_tol()) return true;
          if (tb >= t) break;
        }
        return false;
      };

      Vec integral(spec.n);
      Vec w_prev = cache.phi_inv_at_node(seg.first) *
                   detail::checked_rhs(spec, a, y.translate_right_limit(a));
      for (std::size_t j = seg.first + 1; j <= seg.last; ++j) {
        const double t = grid->node(j);
        Vec w = cache.phi_inv_at_node(j) * detail::checked_rhs(spec, t, y.translate(t));
        const double h = t - grid->node(j - 1);
        for (std::size_t k = 0; k < spec.n; ++k) integral[k] += 0.5 * h * (w_prev[k] + w[k]);
        out.set_left(j, cache.phi_at_node(j) * (c + integral));
        if (j < seg.last && window_crosses_jump(t))
          w_prev = cache.phi_inv_at_node(j) * detail::checked_rhs(spec, t, y.translate_right_limit(t));
        else
          w_prev = std::move(w);
      }
    }
  }
  return out;
}

/// F(z, y): y on the ODE windows, G_i(t, z(t)) on impulse windows,
/// phi - g(z_theta...) on [-r, 0].
inline Trajectory apply_F(const SystemSpec& spec, const OperatorParams& /*params*/, const Trajectory& z,
                          const Trajectory& y) {
  const GridPtr& grid = z.grid();
  detail::require_base_grid(spec, *grid);
  if (y.grid() != grid) throw DomainError("apply_F requires both arguments on one grid");
  Trajectory out(grid, spec.n);

  for (const GridSegment& seg : grid->segments()) {
    switch (seg.kind) {
      case SegmentKind::History: {
        const auto tuple = nonlocal_tuple(spec, z);
        for (std::size_t j = seg.first; j <= seg.last; ++j) {
          const double t = grid->node(j);
          out.set_left(j, spec.phi(t) - detail::checked_nonlocal(spec, tuple, t));
        }
        break;
      }
      case SegmentKind::Ode:
        out.set_right(seg.first, y.right_at(seg.first));
        for (std::size_t j = seg.first + 1; j <= seg.last; ++j) out.set_left(j, y.left_at(j));
        break;
      case SegmentKind::Impulse:
        out.set_right(seg.first,
                      detail::checked_impulse(spec, seg.index, grid->node(seg.first), z.right_at(seg.first)));
        for (std::size_t j = seg.first + 1; j <= seg.last; ++j)
          out.set_left(j, detail::checked_impulse(spec, seg.index, grid->node(j), z.left_at(j)));
        break;
    }
  }
  return out;
}

/// Defect of the solution characterization: sup distance between z and
/// F(z, J(z)). Zero (up to discretization) exactly when z solves the system.
inline double characterization_residual(const SystemSpec& spec, const EvolutionCache& cache,
                                        const OperatorParams& params, const Trajectory& z) {
  return sup_distance(z, apply_F(spec, params, z, apply_J(spec, cache, params, z)));
}

}  // namespace impdde
