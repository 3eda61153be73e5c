#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "impdde/sampling.hpp"
#include "impdde/system.hpp"

namespace impdde {

enum class ConstantSource { Declared, Estimated };

/// Nondecreasing envelope of one variable: either a caller-supplied function
/// or a sampled table (monotonized by running max, linearly interpolated,
/// extended below by the first value and above by the final slope).
class Envelope1 {
 public:
  Envelope1() : fn_([](double) { return 0.0; }) {}

  static Envelope1 from_function(std::function<double(double)> fn) {
    Envelope1 e;
    e.fn_ = std::move(fn);
    return e;
  }

  static Envelope1 from_table(std::vector<double> us, std::vector<double> vals) {
    for (std::size_t i = 1; i < vals.size(); ++i) vals[i] = std::max(vals[i], vals[i - 1]);
    Envelope1 e;
    e.us_ = std::move(us);
    e.vals_ = std::move(vals);
    e.fn_ = nullptr;
    return e;
  }

  bool is_table() const noexcept { return !fn_; }
  const std::vector<double>& table_points() const noexcept { return us_; }
  const std::vector<double>& table_values() const noexcept { return vals_; }

  double operator()(double u) const {
    if (fn_) return fn_(u);
    if (us_.size() == 1) return vals_[0];
    if (u <= us_.front()) return vals_.front();
    std::size_t i = us_.size() - 2;
    if (u < us_.back()) i = static_cast<std::size_t>(std::upper_bound(us_.begin(), us_.end(), u) - us_.begin()) - 1;
    const double w = (u - us_[i]) / (us_[i + 1] - us_[i]);
    return std::max(0.0, (1.0 - w) * vals_[i] + w * vals_[i + 1]);
  }

 private:
  std::function<double(double)> fn_;
  std::vector<double> us_;
  std::vector<double> vals_;
};

/// Two-variable counterpart of Envelope1 (bilinear table).
class Envelope2 {
 public:
  Envelope2() : fn_([](double, double) { return 0.0; }) {}

  static Envelope2 from_function(std::function<double(double, double)> fn) {
    Envelope2 e;
    e.fn_ = std::move(fn);
    return e;
  }

  static Envelope2 from_table(std::vector<double> us, std::vector<std::vector<double>> vals) {
    const std::size_t m = us.size();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 1; j < m; ++j) vals[i][j] = std::max(vals[i][j], vals[i][j - 1]);
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t i = 1; i < m; ++i) vals[i][j] = std::max(vals[i][j], vals[i - 1][j]);
    Envelope2 e;
    e.us_ = std::move(us);
    e.vals_ = std::move(vals);
    e.fn_ = nullptr;
    return e;
  }

  bool is_table() const noexcept { return !fn_; }

  double operator()(double u, double v) const {
    if (fn_) return fn_(u, v);
    if (us_.size() == 1) return vals_[0][0];
    const auto axis = [this](double x, std::size_t& i, double& w) {
      if (x <= us_.front()) {
        i = 0;
        w = 0;
        return;
      }
      i = us_.size() - 2;
      if (x < us_.back()) i = static_cast<std::size_t>(std::upper_bound(us_.begin(), us_.end(), x) - us_.begin()) - 1;
      w = (x - us_[i]) / (us_[i + 1] - us_[i]);  // w > 1 extrapolates the final slope
    };
    std::size_t iu, iv;
    double wu, wv;
    axis(u, iu, wu);
    axis(v, iv, wv);
    const double a = (1.0 - wu) * vals_[iu][iv] + wu * vals_[iu + 1][iv];
    const double b = (1.0 - wu) * vals_[iu][iv + 1] + wu * vals_[iu + 1][iv + 1];
    return std::max(0.0, (1.0 - wv) * a + wv * b);
  }

 private:
  std::function<double(double, double)> fn_;
  std::vector<double> us_;
  std::vector<std::vector<double>> vals_;
};

/// The constant/envelope bundle the feasibility inequalities consume.
/// Estimated entries are sampled lower bounds of the true constants, never
/// certificates; `structural_defect` carries the largest observed violation
/// of g(0) = 0 and G_i(., 0) = 0.
struct ConstantSet {
  double M = 1.0;
  double L = 0.0;
  double N_q = 0.0;
  std::size_t q = 0;
  Envelope1 Psi;
  Envelope2 K;
  ConstantSource M_source = ConstantSource::Declared;
  ConstantSource L_source = ConstantSource::Declared;
  ConstantSource N_q_source = ConstantSource::Declared;
  ConstantSource Psi_source = ConstantSource::Declared;
  ConstantSource K_source = ConstantSource::Declared;
  double structural_defect = 0.0;

  bool any_estimated() const noexcept {
    return M_source == ConstantSource::Estimated || L_source == ConstantSource::Estimated ||
           N_q_source == ConstantSource::Estimated || Psi_source == ConstantSource::Estimated ||
           K_source == ConstantSource::Estimated;
  }
};

struct InequalityCheck {
  double lhs = 0;
  double rhs = 0;
  bool pass = false;
};

struct HypothesisReport {
  ConstantSet constants;
  double rho = 0;
  double phi_tilde_norm = 0;
  InequalityCheck h1_i, h1_ii, h3_i, h3_ii, h3_iii, h4_i, h4_ii;
  bool overall = false;
};

struct LipschitzEstimate {
  double value = 0;        // sampled lower bound of the true constant
  double zero_defect = 0;  // max observed norm of the map at zero
};

/// Sampled Lipschitz constant of the non-local map g over piecewise-linear
/// q-tuples bounded by `radius`. Also measures g at the zero tuple.
inline LipschitzEstimate estimate_lipschitz_g(const SystemSpec& spec, std::size_t samples, double radius,
                                              std::uint64_t seed) {
  const std::size_t q = spec.partition.nonlocal_count();
  if (q == 0) throw DomainError("non-local estimate requires q >= 1");
  const double r = spec.partition.r;
  LipschitzEstimate est;

  const std::size_t t_count = 17;
  std::vector<double> ts(t_count);
  for (std::size_t k = 0; k < t_count; ++k) ts[k] = -r + r * static_cast<double>(k) / (t_count - 1);

  {
    std::vector<HistorySegment> zero_tuple;
    for (std::size_t j = 0; j < q; ++j) zero_tuple.push_back(PLHistory::zero(r, spec.n).segment());
    for (double t : ts) est.zero_defect = std::max(est.zero_defect, spec.g(zero_tuple, t).norm());
  }

  for (std::size_t i = 0; i < samples; ++i) {
    Rng rng(seed, i);
    std::vector<PLHistory> ys, zs;
    std::vector<HistorySegment> ysg, zsg;
    for (std::size_t j = 0; j < q; ++j) {
      ys.push_back(PLHistory::random(rng, r, spec.n, radius));
      zs.push_back(PLHistory::random(rng, r, spec.n, radius));
      ysg.push_back(ys.back().segment());
      zsg.push_back(zs.back().segment());
    }
    for (double t : ts) {
      double den = 0;
      for (std::size_t j = 0; j < q; ++j) den += (ys[j].eval(t) - zs[j].eval(t)).norm();
      if (den < 1e-12) continue;
      const double num = (spec.g(ysg, t) - spec.g(zsg, t)).norm();
      est.value = std::max(est.value, num / den);
    }
  }
  return est;
}

/// Sampled Lipschitz constant of the impulse maps in their state argument,
/// over all windows and window times. Also measures G_i(., 0).
inline LipschitzEstimate estimate_lipschitz_impulses(const SystemSpec& spec, std::size_t samples, double radius,
                                                     std::uint64_t seed) {
  const std::size_t N = spec.partition.impulse_count();
  if (N == 0) throw DomainError("impulse estimate requires N >= 1");
  LipschitzEstimate est;
  for (std::size_t i = 0; i < samples; ++i) {
    Rng rng(seed, i);
    for (std::size_t w = 0; w < N; ++w) {
      const auto& win = spec.partition.impulses[w];
      const double t = win.t + (win.s - win.t) * rng.uniform(1e-6, 1.0);
      est.zero_defect = std::max(est.zero_defect, spec.G[w](t, Vec(spec.n)).norm());
      const Vec x = rng.in_ball(spec.n, radius);
      const Vec y = rng.in_ball(spec.n, radius);
      const double den = (x - y).norm();
      if (den < 1e-12) continue;
      est.value = std::max(est.value, (spec.G[w](t, x) - spec.G[w](t, y)).norm() / den);
    }
  }
  return est;
}

struct KPsiEstimate {
  Envelope2 K;
  Envelope1 Psi;
};

/// Sampled Lipschitz/growth envelopes of f over history balls of the given
/// radii: per cell a max over `samples` random pairs, with t drawn uniformly
/// in [0, tau]. Tables are monotonized by running max.
inline KPsiEstimate estimate_K_Psi(const SystemSpec& spec, std::size_t samples, std::vector<double> radius_grid,
                                   std::uint64_t seed) {
  if (radius_grid.empty()) radius_grid = {0.25, 0.5, 1.0, 2.0, 4.0};
  std::sort(radius_grid.begin(), radius_grid.end());
  const std::size_t m = radius_grid.size();
  const double r = spec.partition.r;
  const double tau = spec.partition.tau;

  std::vector<double> psi_vals(m, 0.0);
  std::vector<std::vector<double>> k_vals(m, std::vector<double>(m, 0.0));

  for (std::size_t iu = 0; iu < m; ++iu) {
    for (std::size_t i = 0; i < samples; ++i) {
      Rng rng(seed, (iu + 1) * 0x100000000ull + i);
      const double t = rng.uniform(0.0, tau);
      const PLHistory h = PLHistory::random(rng, r, spec.n, radius_grid[iu]);
      psi_vals[iu] = std::max(psi_vals[iu], spec.f(t, h.segment()).norm());
    }
    for (std::size_t iv = 0; iv < m; ++iv) {
      for (std::size_t i = 0; i < samples; ++i) {
        Rng rng(seed, ((iu + 1) * 64 + iv + 1) * 0x100000000ull + i);
        const double t = rng.uniform(0.0, tau);
        const PLHistory h1 = PLHistory::random(rng, r, spec.n, radius_grid[iu]);
        const PLHistory h2 = PLHistory::random(rng, r, spec.n, radius_grid[iv]);
        const double den = h1.sup_diff(h2);
        if (den < 1e-12) continue;
        const double num = (spec.f(t, h1.segment()) - spec.f(t, h2.segment())).norm();
        k_vals[iu][iv] = std::max(k_vals[iu][iv], num / den);
      }
    }
  }

  KPsiEstimate out;
  out.Psi = Envelope1::from_table(radius_grid, std::move(psi_vals));
  out.K = Envelope2::from_table(radius_grid, std::move(k_vals));
  return out;
}

/// Evaluate the seven feasibility inequalities literally at the given radius.
inline HypothesisReport check_hypotheses(const ConstantSet& constants, const Partition& partition,
                                         double phi_tilde_norm, double rho, const Vec& alpha, const Vec& beta) {
  if (!(rho > 0)) throw DomainError("rho must be positive");
  HypothesisReport rep;
  rep.constants = constants;
  rep.rho = rho;
  rep.phi_tilde_norm = phi_tilde_norm;

  const double M = constants.M;
  const double L = constants.L;
  const double Nq = constants.N_q;
  const double q = static_cast<double>(constants.q);
  const double tau = partition.tau;
  const double B = phi_tilde_norm + rho;
  const double psiB = constants.Psi(B);
  const double kBB = constants.K(B, B);
  const double na = alpha.size() ? alpha.norm() : 0.0;
  const double nb = beta.size() ? beta.norm() : 0.0;

  auto leq = [](double lhs, double rhs) { return InequalityCheck{lhs, rhs, lhs <= rhs}; };
  auto lt = [](double lhs, double rhs) { return InequalityCheck{lhs, rhs, lhs < rhs}; };

  rep.h1_i = leq(constants.structural_defect, 1e-12);
  rep.h1_ii = lt(L + Nq * q, 0.5);
  rep.h3_i = leq(M * Nq * q * B + M * tau * psiB, rho);
  rep.h3_ii = leq(M * L * B + na + M * tau * psiB, rho);
  rep.h3_iii = leq(L * B + nb, rho);
  rep.h4_i = lt(M * Nq * q + M * tau * kBB, 1.0);
  rep.h4_ii = lt(M * L + M * tau * kBB, 1.0);

  rep.overall = rep.h1_i.pass && rep.h1_ii.pass && rep.h3_i.pass && rep.h3_ii.pass && rep.h3_iii.pass &&
                rep.h4_i.pass && rep.h4_ii.pass;
  return rep;
}

struct FindRhoResult {
  bool feasible = false;
  double rho = 0;
  double resolution = 0;     // radius uncertainty of the returned value
  std::string binding;       // failing inequality when infeasible
};

/// Scan (0, rho_max] for the smallest radius satisfying the H3 inequalities
/// (and H4 when requested), sharpening by bisection between the last
/// infeasible and first feasible scan points.
inline FindRhoResult find_rho(const ConstantSet& constants, const Partition& partition, double phi_tilde_norm,
                              const Vec& alpha, const Vec& beta, double rho_max, bool include_h4 = true) {
  if (!(rho_max > 0)) throw DomainError("rho_max must be positive");
  const std::size_t steps = 2000;

  auto feasible = [&](double rho) {
    const HypothesisReport rep = check_hypotheses(constants, partition, phi_tilde_norm, rho, alpha, beta);
    bool ok = rep.h3_i.pass && rep.h3_ii.pass && rep.h3_iii.pass;
    if (include_h4) ok = ok && rep.h4_i.pass && rep.h4_ii.pass;
    return ok;
  };

  FindRhoResult out;
  double prev = 0;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double rho = rho_max * static_cast<double>(k) / static_cast<double>(steps);
    if (feasible(rho)) {
      out.feasible = true;
      if (k == 1) {
        out.rho = rho;
        out.resolution = rho_max / static_cast<double>(steps);
        return out;
      }
      double lo = prev, hi = rho;
      while (hi - lo > 1e-9 * rho_max) {
        const double mid = 0.5 * (lo + hi);
        (feasible(mid) ? hi : lo) = mid;
      }
      out.rho = hi;
      out.resolution = hi - lo;
      return out;
    }
    prev = rho;
  }

  // Infeasible everywhere: report the first failing inequality at the scan
  // point with the smallest worst violation.
  double best_violation = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= steps; ++k) {
    const double rho = rho_max * static_cast<double>(k) / static_cast<double>(steps);
    const HypothesisReport rep = check_hypotheses(constants, partition, phi_tilde_norm, rho, alpha, beta);
    std::vector<std::pair<std::string, InequalityCheck>> checks{
        {"h3_i", rep.h3_i}, {"h3_ii", rep.h3_ii}, {"h3_iii", rep.h3_iii}};
    if (include_h4) {
      checks.emplace_back("h4_i", rep.h4_i);
      checks.emplace_back("h4_ii", rep.h4_ii);
    }
    double worst = 0;
    std::string first_fail;
    for (const auto& [name, c] : checks)
      if (!c.pass) {
        worst = std::max(worst, c.lhs - c.rhs);
        if (first_fail.empty()) first_fail = name;
      }
    if (worst < best_violation) {
      best_violation = worst;
      out.binding = first_fail;
    }
  }
  return out;
}

}  // namespace impdde
