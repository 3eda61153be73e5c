#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "impdde/operators.hpp"

namespace impdde {

enum class InitialIterate { PhiTilde, Zero, Custom };

struct SolveOptions {
  double tol = 1e-8;
  std::size_t max_iters = 200;
  InitialIterate initial = InitialIterate::PhiTilde;
  std::optional<Trajectory> custom_initial;
};

struct SolveDiagnostics {
  std::size_t iterations = 0;
  std::vector<double> residual_history;  // ||z_{k+1} - z_k|| per iteration
  double final_residual = 0;
  double empirical_contraction = 0;  // geometric-mean ratio of consecutive residuals
  double characterization = 0;       // independent fixed-point defect of the result
  bool converged = false;
};

/// One composite iteration step z -> F(z, J(z)).
inline Trajectory picard_step(const SystemSpec& spec, const EvolutionCache& cache, const OperatorParams& params,
                              const Trajectory& z) {
  return apply_F(spec, params, z, apply_J(spec, cache, params, z));
}

/// Global Picard iteration for F(z, J(z)) = z. Non-convergence within
/// max_iters is reported in the diagnostics, not thrown; non-finite iterates
/// raise NumericError.
inline std::pair<Trajectory, SolveDiagnostics> solve(const SystemSpec& spec, const EvolutionCache& cache,
                                                     const OperatorParams& params, const GridPtr& grid,
                                                     const SolveOptions& opts = {}) {
  if (opts.tol <= 0) throw DomainError("solve tolerance must be positive");
  if (opts.max_iters == 0) throw DomainError("max_iters must be at least 1");

  Trajectory z;
  switch (opts.initial) {
    case InitialIterate::PhiTilde: z = phi_tilde(spec, cache, params, grid); break;
    case InitialIterate::Zero: z = Trajectory::constant(grid, Vec(spec.n)); break;
    case InitialIterate::Custom:
      if (!opts.custom_initial) throw DomainError("custom initial iterate missing");
      z = *opts.custom_initial;
      break;
  }

  SolveDiagnostics diag;
  for (std::size_t k = 0; k < opts.max_iters; ++k) {
    Trajectory next = picard_step(spec, cache, params, z);
    if (!next.all_finite()) throw NumericError("iteration produced non-finite values");
    const double res = sup_distance(next, z);
    diag.residual_history.push_back(res);
    diag.iterations = k + 1;
    z = std::move(next);
    if (res < opts.tol) break;
  }

  diag.final_residual = diag.residual_history.empty() ? 0.0 : diag.residual_history.back();
  if (diag.residual_history.size() >= 2) {
    double log_sum = 0;
    std::size_t count = 0;
    for (std::size_t k = 1; k < diag.residual_history.size(); ++k) {
      const double prev = diag.residual_history[k - 1];
      const double cur = diag.residual_history[k];
      if (prev > 0 && cur > 0) {
        log_sum += std::log(cur / prev);
        ++count;
      }
    }
    diag.empirical_contraction = count ? std::exp(log_sum / static_cast<double>(count)) : 0.0;
  }
  diag.characterization = characterization_residual(spec, cache, params, z);
  diag.converged = diag.final_residual < opts.tol && diag.characterization < 10.0 * opts.tol;
  return {std::move(z), diag};
}

struct UniquenessReport {
  double max_pairwise_distance = 0;
  std::size_t converged_count = 0;
  std::vector<std::size_t> non_converged;  // indices of starts excluded from the distance
};

/// Solve from several initial iterates and report the max pairwise sup
/// distance among the converged results.
inline UniquenessReport uniqueness_probe(const SystemSpec& spec, const EvolutionCache& cache,
                                         const OperatorParams& params, const GridPtr& grid, SolveOptions opts,
                                         const std::vector<Trajectory>& starts) {
  UniquenessReport rep;
  std::vector<Trajectory> results;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    opts.initial = InitialIterate::Custom;
    opts.custom_initial = starts[i];
    auto [z, diag] = solve(spec, cache, params, grid, opts);
    if (diag.converged) {
      results.push_back(std::move(z));
      ++rep.converged_count;
    } else {
      rep.non_converged.push_back(i);
    }
  }
  for (std::size_t i = 0; i < results.size(); ++i)
    for (std::size_t j = i + 1; j < results.size(); ++j)
      rep.max_pairwise_distance = std::max(rep.max_pairwise_distance, sup_distance(results[i], results[j]));
  return rep;
}

struct VerificationReport {
  double ode_residual = 0;       // centered-difference defect of z' = A z + f(t, z_t)
  double impulse_residual = 0;   // max ||z(t) - G_i(t, z(t))|| on impulse windows
  double nonlocal_residual = 0;  // max ||z(t) - phi(t) + g(z_theta...)(t)|| on [-r, 0]
};

/// Check a trajectory against the original system, independently of the
/// operator machinery that produced it.
inline VerificationReport verify_solution(const SystemSpec& spec, const EvolutionCache& /*cache*/,
                                          const Trajectory& z) {
  const GridPtr& grid = z.grid();
  VerificationReport rep;

  std::vector<HistorySegment> tuple;
  if (spec.partition.nonlocal_count() > 0) tuple = nonlocal_tuple(spec, z);

  for (const GridSegment& seg : grid->segments()) {
    switch (seg.kind) {
      case SegmentKind::History:
        for (std::size_t j = seg.first; j <= seg.last; ++j) {
          const double t = grid->node(j);
          const Vec defect = z.left_at(j) - spec.phi(t) + detail::checked_nonlocal(spec, tuple, t);
          rep.nonlocal_residual = std::max(rep.nonlocal_residual, defect.norm());
        }
        break;
      case SegmentKind::Impulse: {
        auto defect = [&](double t, const Vec& v) {
          return (v - detail::checked_impulse(spec, seg.index, t, v)).norm();
        };
        rep.impulse_residual = std::max(rep.impulse_residual, defect(grid->node(seg.first), z.right_at(seg.first)));
        for (std::size_t j = seg.first + 1; j <= seg.last; ++j)
          rep.impulse_residual = std::max(rep.impulse_residual, defect(grid->node(j), z.left_at(j)));
        break;
      }
      case SegmentKind::Ode:
        for (std::size_t j = seg.first + 1; j < seg.last; ++j) {
          const double t = grid->node(j);
          const Vec& before = (j - 1 == seg.first) ? z.right_at(j - 1) : z.left_at(j - 1);
          const Vec& here = z.left_at(j);
          const Vec& after = z.left_at(j + 1);
          // three-point centered first derivative, exact for quadratics on
          // non-uniform spacing
          const double hm = t - grid->node(j - 1);
          const double hp = grid->node(j + 1) - t;
          Vec rate = (-hp / (hm * (hm + hp))) * before;
          rate += ((hp - hm) / (hm * hp)) * here;
          rate += (hm / (hp * (hm + hp))) * after;
          // the delayed window may cross a jump exactly at this node; the
          // centered difference then approximates the mean of the one-sided
          // derivatives, so compare against the mean of the one-sided f limits
          Vec f_mean = detail::checked_rhs(spec, t, z.translate(t));
          f_mean += detail::checked_rhs(spec, t, z.translate_right_limit(t));
          f_mean *= 0.5;
          const Vec defect = rate - spec.A(t) * here - f_mean;
          rep.ode_residual = std::max(rep.ode_residual, defect.norm());
        }
        break;
    }
  }
  return rep;
}

}  // namespace impdde
