#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "impdde/history.hpp"
#include "impdde/linalg.hpp"

namespace impdde {

/// One non-instantaneous impulse window (t_i, s_i]. t == s is legal and
/// degenerates to an instantaneous jump applied at s.
struct ImpulseWindow {
  double t = 0;
  double s = 0;
};

/// Time structure of a problem instance: delay length r, horizon tau,
/// the impulse windows, and the non-local evaluation times theta.
struct Partition {
  double r = 0;
  double tau = 0;
  std::vector<ImpulseWindow> impulses;  // ordered, t_i <= s_i < t_{i+1}
  std::vector<double> theta;            // ordered, strictly inside (0, tau)

  std::size_t impulse_count() const noexcept { return impulses.size(); }
  std::size_t nonlocal_count() const noexcept { return theta.size(); }

  /// Ordering/range violations as messages; empty means valid.
  std::vector<std::string> validate() const {
    std::vector<std::string> out;
    if (!(r > 0)) out.push_back("delay r must be positive");
    if (!(tau > 0)) out.push_back("horizon tau must be positive");
    const std::size_t N = impulses.size();
    for (std::size_t i = 0; i < N; ++i) {
      const auto& w = impulses[i];
      if (i == 0 && !(w.t > 0)) out.push_back("ordering violation at i=1: t_1 must be > 0");
      if (!(w.t <= w.s)) out.push_back("ordering violation at i=" + std::to_string(i + 1) + ": requires t_i <= s_i");
      const double next_t = (i + 1 < N) ? impulses[i + 1].t : tau;
      if (!(w.s < next_t))
        out.push_back("ordering violation at i=" + std::to_string(i + 1) + ": requires s_i < t_{i+1}");
    }
    for (std::size_t j = 0; j < theta.size(); ++j) {
      if (!(theta[j] > 0 && theta[j] < tau))
        out.push_back("theta out of (0, tau) at j=" + std::to_string(j + 1));
      if (j > 0 && !(theta[j - 1] < theta[j]))
        out.push_back("theta must be strictly increasing at j=" + std::to_string(j + 1));
    }
    return out;
  }
};

/// f(t, z_t): the semi-linear perturbation of the differential equation.
using RhsFn = std::function<Vec(double, const HistorySegment&)>;
/// G_i(t, x): the impulse map on window i.
using ImpulseFn = std::function<Vec(double, const Vec&)>;
/// Pointwise non-local map: value of g(h_1, ..., h_q) at t in [-r, 0].
using NonlocalFn = std::function<Vec(std::span<const HistorySegment>, double)>;
/// A(t): the linear generator.
using MatrixFn = std::function<Mat(double)>;
/// phi(t) on [-r, 0]: the initial history.
using InitialFn = std::function<Vec(double)>;

/// Analytically known constants/envelopes a caller can supply instead of
/// Monte-Carlo estimates.
struct DeclaredConstants {
  std::optional<double> M;
  std::optional<double> L;
  std::optional<double> N_q;
  std::function<double(double)> Psi;             // growth envelope of f
  std::function<double(double, double)> K;       // Lipschitz envelope of f
  std::function<double(double)> growth;          // h(t) of the linear-growth bound
};

/// A full problem instance.
struct SystemSpec {
  std::size_t n = 0;
  Partition partition;
  MatrixFn A;
  RhsFn f;
  std::vector<ImpulseFn> G;  // one map per impulse window
  NonlocalFn g;              // required iff theta nonempty
  InitialFn phi;
  DeclaredConstants declared;
};

/// Every violated structural invariant, as messages. Empty list = valid.
/// Violations are data, not failures.
inline std::vector<std::string> validate_spec(const SystemSpec& spec) {
  std::vector<std::string> out = spec.partition.validate();
  if (spec.n == 0) out.push_back("state dimension must be >= 1");
  if (spec.G.size() != spec.partition.impulse_count())
    out.push_back("impulse map count (" + std::to_string(spec.G.size()) + ") must equal impulse window count (" +
                  std::to_string(spec.partition.impulse_count()) + ")");
  const bool has_theta = spec.partition.nonlocal_count() > 0;
  if (has_theta && !spec.g) out.push_back("non-local map g required when theta is nonempty");
  if (!has_theta && spec.g) out.push_back("non-local map g given but theta is empty");
  if (!spec.A) out.push_back("matrix function A missing");
  if (!spec.phi) out.push_back("initial history phi missing");
  if (!spec.f) out.push_back("perturbation f missing");
  return out;
}

}  // namespace impdde
