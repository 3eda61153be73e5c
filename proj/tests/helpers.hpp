#pragma once

// Shared fixtures and independent oracles for the test suites. Everything in
// here deliberately avoids the library's own evolution/operator machinery so
// oracle values come from a separate path.

#include <cmath>
#include <functional>
#include <vector>

#include "impdde/impdde.hpp"

namespace testutil {

using namespace impdde;

/// Matrix exponential by scaling-and-squaring with a Taylor tail; oracle for
/// constant-coefficient systems.
inline Mat expm(Mat a) {
  const std::size_t n = a.rows();
  int squarings = 0;
  while (a.max_abs() > 0.25) {
    a *= 0.5;
    ++squarings;
  }
  Mat sum = Mat::identity(n);
  Mat term = Mat::identity(n);
  for (int k = 1; k <= 24; ++k) {
    term = (1.0 / k) * (term * a);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

/// Plain RK4 initial-value integration of y' = A(t) y, independent of the
/// evolution cache path.
inline Vec integrate_linear(const MatrixFn& A, Vec y, double t0, double t1, std::size_t steps) {
  const double h = (t1 - t0) / static_cast<double>(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = t0 + h * static_cast<double>(k);
    const Vec k1 = A(t) * y;
    const Vec k2 = A(t + 0.5 * h) * (y + (0.5 * h) * k1);
    const Vec k3 = A(t + 0.5 * h) * (y + (0.5 * h) * k2);
    const Vec k4 = A(t + h) * (y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

/// Minimal "no frills" spec: z' = A z + f, no impulses, no non-local term.
inline SystemSpec plain_spec(std::size_t n, double r, double tau, MatrixFn A, RhsFn f, InitialFn phi) {
  SystemSpec spec;
  spec.n = n;
  spec.partition.r = r;
  spec.partition.tau = tau;
  spec.A = std::move(A);
  spec.f = std::move(f);
  spec.phi = std::move(phi);
  return spec;
}

inline MatrixFn const_matrix(const Mat& a) {
  return [a](double) { return a; };
}

inline MatrixFn zero_matrix(std::size_t n) {
  return [n](double) { return Mat(n, n); };
}

inline RhsFn zero_rhs(std::size_t n) {
  return [n](double, const HistorySegment&) { return Vec(n); };
}

inline InitialFn const_phi(const Vec& c) {
  return [c](double) { return c; };
}

/// Max deviation from `exact` over a fine off-node probe of [lo, hi]; the
/// honest sup-norm error of the delivered piecewise-linear object.
inline double probe_error(const Trajectory& z, const std::function<Vec(double)>& exact, double lo, double hi,
                          std::size_t probes = 4000) {
  double worst = 0;
  for (std::size_t k = 0; k <= probes; ++k) {
    const double t = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(probes);
    worst = std::max(worst, (z.eval(t) - exact(t)).norm());
  }
  return worst;
}

inline LoadedSystem load_scenario(const std::string& name) {
  auto j = builtin_scenario_json(name);
  REQUIRE(j.has_value());
  return load_config_text(*j);
}

/// phi_tilde + a random disturbance of sup norm <= rho: a sample of the
/// invariant ball.
inline Trajectory random_ball_element(Rng& rng, const Trajectory& center, double rho) {
  const Trajectory pert = random_disturbance(rng, center.grid(), center.dim(), rho);
  return lin_comb(1.0, center, 1.0, pert);
}

}  // namespace testutil
