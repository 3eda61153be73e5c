#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"

using namespace impdde;
using namespace testutil;

namespace {

struct WorkedScenario {
  LoadedSystem ls;
  GridPtr grid;
  EvolutionCache cache;
  Trajectory reference;  // phi_tilde

  WorkedScenario()
      : ls(load_scenario("paper_example")),
        grid(TimeGrid::build(ls.spec.partition, 0.004)),  // coarser grid keeps sampled properties fast
        cache(EvolutionCache::build(ls.spec.A, grid)),
        reference(phi_tilde(ls.spec, cache, ls.params, grid)) {}

  // exact constants of this instance
  static constexpr double kL = 0.005403023058681398;  // |cos 1| / 100
  static constexpr double kNq = 0.01;
  double psi(double u) const { return u * u / 100.0; }
};

}  // namespace

TEST_CASE("phi_tilde: constant history with zero generator and zero plateaus") {
  SystemSpec spec;
  spec.n = 1;
  spec.partition.r = 0.5;
  spec.partition.tau = 2.0;
  spec.partition.impulses = {{0.7, 1.0}};
  spec.A = zero_matrix(1);
  spec.f = zero_rhs(1);
  spec.G = {[](double, const Vec& x) { return x; }};
  spec.phi = const_phi(Vec{3.0});
  const GridPtr grid = TimeGrid::build(spec.partition, 0.01);
  const EvolutionCache cache = EvolutionCache::build(spec.A, grid);
  const OperatorParams params = OperatorParams::zeros(1);

  const Trajectory ref = phi_tilde(spec, cache, params, grid);
  CHECK(ref.eval(-0.2)[0] == 3.0);
  CHECK(ref.eval(0.4)[0] == doctest::Approx(3.0).epsilon(1e-12));  // U(t,0) phi(0) = phi(0)
  CHECK(ref.eval(0.7)[0] == doctest::Approx(3.0).epsilon(1e-12));  // left value at t_1
  CHECK(ref.eval(0.7, Side::Right)[0] == 0.0);                     // beta plateau
  CHECK(ref.eval(0.85)[0] == 0.0);
  CHECK(ref.eval(1.4)[0] == 0.0);                                  // alpha plateau
  CHECK(ref.sup_norm() == doctest::Approx(3.0));
}

TEST_CASE("phi_tilde: scalar decay e^{-t} before the first impulse") {
  SystemSpec spec;
  spec.n = 1;
  spec.partition.r = 0.3;
  spec.partition.tau = 1.5;
  spec.partition.impulses = {{0.9, 1.1}};
  spec.A = [](double) {
    Mat a(1, 1);
    a(0, 0) = -1.0;
    return a;
  };
  spec.f = zero_rhs(1);
  spec.G = {[](double, const Vec& x) { return x; }};
  spec.phi = const_phi(Vec{1.0});
  const GridPtr grid = TimeGrid::build(spec.partition, 1e-3);
  const EvolutionCache cache = EvolutionCache::build(spec.A, grid);
  const Trajectory ref = phi_tilde(spec, cache, OperatorParams::zeros(1), grid);
  for (double t : {0.1, 0.35, 0.62, 0.9})
    CHECK(ref.eval(t)[0] == doctest::Approx(std::exp(-t)).epsilon(1e-6));
}

TEST_CASE("apply_J: all perturbations vanish -> homogeneous evolution of phi(0)") {
  SystemSpec spec = plain_spec(
      1, 0.4, 1.2,
      [](double) {
        Mat a(1, 1);
        a(0, 0) = -0.7;
        return a;
      },
      zero_rhs(1), const_phi(Vec{2.0}));
  const GridPtr grid = TimeGrid::build(spec.partition, 1e-3);
  const EvolutionCache cache = EvolutionCache::build(spec.A, grid);
  const OperatorParams params = OperatorParams::zeros(1);

  Rng rng(1);
  const Trajectory y = random_disturbance(rng, grid, 1, 5.0);
  const Trajectory jy = apply_J(spec, cache, params, y);
  for (double t : {0.2, 0.6, 1.0})
    CHECK(jy.eval(t)[0] == doctest::Approx(2.0 * std::exp(-0.7 * t)).epsilon(1e-6));
  // on [-r, 0], J(y) = phi regardless of y
  for (double t : {-0.4, -0.13, 0.0}) CHECK(jy.eval(t)[0] == 2.0);
}

TEST_CASE("apply_J: constant forcing integrates exactly to t") {
  SystemSpec spec = plain_spec(1, 0.5, 2.0, zero_matrix(1),
                               [](double, const HistorySegment&) { return Vec{1.0}; }, const_phi(Vec{0.0}));
  const GridPtr grid = TimeGrid::build(spec.partition, 1e-3);
  const EvolutionCache cache = EvolutionCache::build(spec.A, grid);
  Rng rng(2);
  const Trajectory y = random_disturbance(rng, grid, 1, 3.0);
  const Trajectory jy = apply_J(spec, cache, OperatorParams::zeros(1), y);
  for (double t : {0.25, 1.0, 1.75, 2.0}) CHECK(jy.eval(t)[0] == doctest::Approx(t).epsilon(1e-8));
}

TEST_CASE("apply_F: passthrough in the no-impulse no-nonlocal case") {
  SystemSpec spec = plain_spec(2, 0.5, 1.0, zero_matrix(2), zero_rhs(2), const_phi(Vec{1.0, -1.0}));
  const GridPtr grid = TimeGrid::build(spec.partition, 0.01);
  Rng rng(3);
  const Trajectory z = random_disturbance(rng, grid, 2, 2.0);
  const Trajectory y = random_disturbance(rng, grid, 2, 2.0);
  const Trajectory fz = apply_F(spec, OperatorParams::zeros(2), z, y);
  for (double t : {0.1, 0.5, 0.99}) CHECK((fz.eval(t) - y.eval(t)).norm() == 0.0);
  for (double t : {-0.5, -0.2}) CHECK((fz.eval(t) - Vec{1.0, -1.0}).norm() == 0.0);
}

TEST_CASE("apply_F: non-local term subtracts (q/R) c for constant arguments") {
  WorkedScenario sc;
  const auto& spec = sc.ls.spec;
  const Vec c{0.4, -0.3};
  const Trajectory z = Trajectory::constant(sc.grid, c);
  Rng rng(4);
  const Trajectory y = random_disturbance(rng, sc.grid, 2, 1.0);
  const Trajectory fz = apply_F(spec, sc.ls.params, z, y);
  // g(z_theta..)(t) = (q/R) c with q = 2, R = 100
  for (double t : {-0.5, -0.21, 0.0}) {
    const Vec expected{0.5 - 0.02 * 0.4, 0.5 - 0.02 * -0.3};
    CHECK((fz.eval(t) - expected).norm() < 1e-12);
  }
}

TEST_CASE("apply_F: impulse window maps zero to zero") {
  WorkedScenario sc;
  const Trajectory z = Trajectory::constant(sc.grid, Vec{0.0, 0.0});
  Rng rng(5);
  const Trajectory y = random_disturbance(rng, sc.grid, 2, 1.0);
  const Trajectory fz = apply_F(sc.ls.spec, sc.ls.params, z, y);
  for (double t : {0.85, 0.95, 1.0}) CHECK(fz.eval(t).norm() == 0.0);
}

TEST_CASE("characterization residual: exact linear solution is a fixed point") {
  Mat a(2, 2);
  a(0, 0) = -0.3;
  a(0, 1) = 1.0;
  a(1, 0) = -1.0;
  a(1, 1) = -0.1;
  SystemSpec spec = plain_spec(2, 0.3, 1.5, const_matrix(a), zero_rhs(2), const_phi(Vec{1.0, 0.5}));
  const GridPtr grid = TimeGrid::build(spec.partition, 1e-3);
  const EvolutionCache cache = EvolutionCache::build(spec.A, grid);
  const OperatorParams params = OperatorParams::zeros(2);

  const Vec phi0{1.0, 0.5};
  const Trajectory exact = Trajectory::from_function(
      grid, 2, [&](double t) { return t <= 0 ? phi0 : expm(t * a) * phi0; });
  CHECK(characterization_residual(spec, cache, params, exact) < 1e-6);

  // phi_tilde itself is the fixed point when f = 0, q = 0, N = 0
  const Trajectory ref = phi_tilde(spec, cache, params, grid);
  CHECK(characterization_residual(spec, cache, params, ref) < 1e-9);
}

TEST_CASE("characterization residual: uniform perturbation moves it Lipschitz-boundedly") {
  WorkedScenario sc;
  const auto& spec = sc.ls.spec;
  auto [z, diag] = solve(spec, sc.cache, sc.ls.params, sc.grid);
  REQUIRE(diag.converged);
  const double base = characterization_residual(spec, sc.cache, sc.ls.params, z);

  const double eps = 0.01;
  const Trajectory shifted = lin_comb(1.0, z, eps, Trajectory::constant(sc.grid, Vec{1.0, 1.0}));
  const double moved = characterization_residual(spec, sc.cache, sc.ls.params, shifted);

  const double M = sc.cache.norm_bound();
  const double B = z.sup_norm() + eps * std::sqrt(2.0) + 0.1;
  const double k_loc = 2.0 * B / 100.0;  // Lipschitz envelope of this f near the solution
  const double bound =
      (1.0 + WorkedScenario::kL + WorkedScenario::kNq * 2 + M + M * spec.partition.tau * k_loc) * eps * std::sqrt(2.0);
  CHECK(std::abs(moved - base) <= bound);
  CHECK(moved > base);  // the perturbed trajectory is no longer a fixed point
}

// Sampled operator properties ------------------------------------------------

TEST_CASE("equicontraction of F in its first argument") {
  WorkedScenario sc;
  const double rho = sc.ls.params.rho;
  Rng rng(101);
  double worst = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const Trajectory y = random_ball_element(rng, sc.reference, rho);
    const Trajectory z1 = random_ball_element(rng, sc.reference, rho);
    const Trajectory z2 = random_ball_element(rng, sc.reference, rho);
    const double dz = sup_distance(z1, z2);
    if (dz < 1e-9) continue;
    const double df = sup_distance(apply_F(sc.ls.spec, sc.ls.params, z1, y), apply_F(sc.ls.spec, sc.ls.params, z2, y));
    worst = std::max(worst, df / dz);
  }
  const double factor = WorkedScenario::kL + WorkedScenario::kNq * 2;
  CHECK(worst <= factor + 1e-9);
  CHECK(factor < 0.5);
}

TEST_CASE("J maps bounded sets onto bounded sets") {
  WorkedScenario sc;
  const auto& spec = sc.ls.spec;
  const double R = 2.0;
  const double M = sc.cache.norm_bound();
  const double phi_norm = std::sqrt(0.5);  // ||(0.5, 0.5)||
  const double psiR = sc.psi(R);
  const double tau = spec.partition.tau;
  const double d = std::max({phi_norm, 0.0, M * (phi_norm + WorkedScenario::kNq * 2 * R) + M * tau * psiR,
                             M * WorkedScenario::kL * R + M * tau * psiR});
  Rng rng(303);
  for (int trial = 0; trial < 25; ++trial) {
    const Trajectory y = random_disturbance(rng, sc.grid, 2, R);
    const Trajectory jy = apply_J(spec, sc.cache, sc.ls.params, y);
    CHECK(jy.sup_norm() <= d + 1e-9);
  }
}

TEST_CASE("J maps bounded sets onto equicontinuous sets") {
  WorkedScenario sc;
  const auto& spec = sc.ls.spec;
  Rng rng(404);
  const double delta = 0.05;
  std::vector<double> moduli;
  for (int member = 0; member < 20; ++member) {
    const Trajectory y = random_disturbance(rng, sc.grid, 2, 2.0);
    const Trajectory jy = apply_J(spec, sc.cache, sc.ls.params, y);
    double worst = 0;
    for (const auto& seg : sc.grid->segments()) {
      if (seg.kind != SegmentKind::Ode) continue;
      for (std::size_t j = seg.first + 1; j + 4 <= seg.last; j += 3) {
        const double t1 = sc.grid->node(j);
        const double t2 = std::min(t1 + delta, sc.grid->node(seg.last));
        if (t2 - t1 < 1e-6) continue;
        worst = std::max(worst, (jy.eval(t2) - jy.eval(t1)).norm() / (t2 - t1));
      }
    }
    moduli.push_back(worst);
  }
  const double mean = std::accumulate(moduli.begin(), moduli.end(), 0.0) / static_cast<double>(moduli.size());
  for (double c : moduli) CHECK(c <= 2.0 * mean + 1e-12);
}

TEST_CASE("composite map leaves the ball around phi_tilde invariant") {
  WorkedScenario sc;
  const double rho = sc.ls.params.rho;
  Rng rng(505);
  for (int trial = 0; trial < 50; ++trial) {
    const Trajectory z = random_ball_element(rng, sc.reference, rho);
    const Trajectory next = picard_step(sc.ls.spec, sc.cache, sc.ls.params, z);
    CHECK(sup_distance(next, sc.reference) <= rho);
  }
}
