#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"

using namespace impdde;
using namespace testutil;

namespace {

Partition bare_partition(double r, double tau, std::size_t q = 0) {
  Partition p;
  p.r = r;
  p.tau = tau;
  for (std::size_t j = 1; j <= q; ++j) p.theta.push_back(tau * static_cast<double>(j) / (q + 1.0));
  return p;
}

ConstantSet constants_of(double M, double L, double Nq, std::size_t q, std::function<double(double)> psi,
                         std::function<double(double, double)> k) {
  ConstantSet c;
  c.M = M;
  c.L = L;
  c.N_q = Nq;
  c.q = q;
  c.Psi = Envelope1::from_function(std::move(psi));
  c.K = Envelope2::from_function(std::move(k));
  return c;
}

}  // namespace

TEST_CASE("estimate_lipschitz_g: paper_example non-local map has constant 1/R") {
  LoadedSystem ls = load_scenario("paper_example");
  const auto est = estimate_lipschitz_g(ls.spec, 10000, 1.0, 77);
  CHECK(est.value == doctest::Approx(0.01).epsilon(0.05));
  CHECK(est.value <= 0.01 + 1e-12);  // sampled estimates are lower bounds
  CHECK(est.zero_defect <= 1e-12);
}

TEST_CASE("estimate_lipschitz_g: zero map and scaled component map") {
  SystemSpec spec;
  spec.n = 1;
  spec.partition = bare_partition(0.5, 2.0, 1);
  spec.A = zero_matrix(1);
  spec.f = zero_rhs(1);
  spec.phi = const_phi(Vec{0.0});
  spec.g = [](std::span<const HistorySegment>, double) { return Vec{0.0}; };
  CHECK(estimate_lipschitz_g(spec, 2000, 1.0, 5).value == 0.0);

  spec.g = [](std::span<const HistorySegment> tuple, double t) { return 2.0 * tuple[0](t); };
  const auto est = estimate_lipschitz_g(spec, 10000, 1.0, 5);
  CHECK(est.value == doctest::Approx(2.0).epsilon(0.05));

  SystemSpec no_q = spec;
  no_q.partition = bare_partition(0.5, 2.0, 0);
  CHECK_THROWS_AS(estimate_lipschitz_g(no_q, 100, 1.0, 5), DomainError);
}

TEST_CASE("estimate_lipschitz_impulses: paper_example impulse map") {
  LoadedSystem ls = load_scenario("paper_example");
  const double exact = std::abs(std::cos(1.0)) / 100.0;
  const auto est = estimate_lipschitz_impulses(ls.spec, 10000, 1.0, 99);
  CHECK(est.value == doctest::Approx(exact).epsilon(0.05));
  CHECK(est.value <= exact + 1e-12);
  CHECK(est.zero_defect <= 1e-12);
}

TEST_CASE("estimate_lipschitz_impulses: zero and linear maps") {
  SystemSpec spec;
  spec.n = 2;
  spec.partition = bare_partition(0.5, 2.0);
  spec.partition.impulses = {{0.5, 1.0}};
  spec.A = zero_matrix(2);
  spec.f = zero_rhs(2);
  spec.phi = const_phi(Vec{0.0, 0.0});
  spec.G = {[](double, const Vec& x) { return Vec(x.size()); }};
  CHECK(estimate_lipschitz_impulses(spec, 2000, 1.0, 5).value == 0.0);

  spec.G = {[](double, const Vec& x) { return (1.0 / 3.0) * x; }};
  CHECK(estimate_lipschitz_impulses(spec, 10000, 1.0, 5).value == doctest::Approx(1.0 / 3.0).epsilon(0.05));

  spec.partition.impulses.clear();
  spec.G.clear();
  CHECK_THROWS_AS(estimate_lipschitz_impulses(spec, 100, 1.0, 5), DomainError);
}

TEST_CASE("estimate_K_Psi: paper_example f gives Psi(u) -> u^2/R") {
  LoadedSystem ls = load_scenario("paper_example");
  SystemSpec spec = ls.spec;
  spec.n = 1;  // scalar variant of the same quadratic delayed read
  spec.f = [](double, const HistorySegment& h) {
    const Vec past = h(-0.5);
    return Vec{past[0] * past[0] / 100.0};
  };
  const auto est = estimate_K_Psi(spec, 4000, {0.5, 1.0, 2.0}, 404);
  for (double u : {0.5, 1.0, 2.0}) CHECK(est.Psi(u) == doctest::Approx(u * u / 100.0).epsilon(0.10));
}

TEST_CASE("estimate_K_Psi: zero f and identity-read f") {
  SystemSpec spec;
  spec.n = 1;
  spec.partition = bare_partition(0.5, 1.0);
  spec.A = zero_matrix(1);
  spec.phi = const_phi(Vec{0.0});
  spec.f = zero_rhs(1);
  const auto zero_est = estimate_K_Psi(spec, 500, {0.5, 1.0}, 3);
  CHECK(zero_est.Psi(1.0) == 0.0);
  CHECK(zero_est.K(1.0, 1.0) == 0.0);

  spec.f = [](double, const HistorySegment& h) { return h(0.0); };
  const auto est = estimate_K_Psi(spec, 6000, {0.5, 1.0, 2.0}, 3);
  CHECK(est.K(1.0, 1.0) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(est.Psi(1.0) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(est.Psi(2.0) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("estimates grow monotonically with the sample budget") {
  LoadedSystem ls = load_scenario("paper_example");
  const auto small = estimate_lipschitz_g(ls.spec, 500, 1.0, 123);
  const auto large = estimate_lipschitz_g(ls.spec, 1000, 1.0, 123);
  CHECK(large.value >= small.value);
  const auto small_i = estimate_lipschitz_impulses(ls.spec, 500, 1.0, 123);
  const auto large_i = estimate_lipschitz_impulses(ls.spec, 1000, 1.0, 123);
  CHECK(large_i.value >= small_i.value);
}

TEST_CASE("check_hypotheses: all-zero constants pass everything") {
  const auto rep = check_hypotheses(constants_of(2.0, 0, 0, 0, [](double) { return 0.0; },
                                                 [](double, double) { return 0.0; }),
                                    bare_partition(0.5, 2.0), 1.0, 1.0, Vec{0.0}, Vec{0.0});
  CHECK(rep.overall);
  CHECK(rep.h3_i.lhs == 0.0);
  CHECK(rep.h4_ii.lhs == 0.0);
}

TEST_CASE("check_hypotheses: frozen arithmetic of the worked example") {
  // M = 1.05, L = 0.01, N_q = 0.01, q = 2, tau = 2, Psi(u) = u^2/100,
  // K(u,v) = (u+v)/50, ||phi~|| = 1, rho = 1, alpha = beta = 0
  const auto c = constants_of(1.05, 0.01, 0.01, 2, [](double u) { return u * u / 100.0; },
                              [](double u, double v) { return (u + v) / 50.0; });
  const auto rep = check_hypotheses(c, bare_partition(0.5, 2.0, 2), 1.0, 1.0, Vec{0.0}, Vec{0.0});
  CHECK(rep.h1_ii.lhs == doctest::Approx(0.03));
  CHECK(rep.h1_ii.pass);
  CHECK(rep.h3_i.lhs == doctest::Approx(0.126));
  CHECK(rep.h3_i.pass);
  CHECK(rep.h4_i.lhs == doctest::Approx(0.189));
  CHECK(rep.h4_i.pass);
  CHECK(rep.overall);
}

TEST_CASE("check_hypotheses: H1(ii) failure flips overall") {
  const auto c = constants_of(1.0, 0.3, 0.1, 3, [](double) { return 0.0; }, [](double, double) { return 0.0; });
  const auto rep = check_hypotheses(c, bare_partition(0.5, 2.0, 3), 1.0, 1.0, Vec{0.0}, Vec{0.0});
  CHECK(rep.h1_ii.lhs == doctest::Approx(0.6));
  CHECK(!rep.h1_ii.pass);
  CHECK(!rep.overall);
}

TEST_CASE("check_hypotheses is monotone in the constants") {
  Rng rng(55);
  const Partition p = bare_partition(0.5, 1.5, 2);
  for (int trial = 0; trial < 200; ++trial) {
    const double M = rng.uniform(1.0, 1.5);
    const double L = rng.uniform(0.0, 0.2);
    const double Nq = rng.uniform(0.0, 0.1);
    const double psi_slope = rng.uniform(0.0, 0.3);
    const double k_val = rng.uniform(0.0, 0.3);
    const double rho = rng.uniform(0.2, 3.0);
    const double bump = rng.uniform(0.0, 0.2);
    auto base = constants_of(M, L, Nq, 2, [=](double u) { return psi_slope * u; },
                             [=](double, double) { return k_val; });
    auto worse = constants_of(M + bump, L + bump, Nq + bump, 2,
                              [=](double u) { return (psi_slope + bump) * u; },
                              [=](double, double) { return k_val + bump; });
    const auto rep_base = check_hypotheses(base, p, 1.0, rho, Vec{0.0}, Vec{0.0});
    const auto rep_worse = check_hypotheses(worse, p, 1.0, rho, Vec{0.0}, Vec{0.0});
    // increasing constants can only break inequalities, never repair them
    for (auto get : {&HypothesisReport::h1_ii, &HypothesisReport::h3_i, &HypothesisReport::h3_ii,
                     &HypothesisReport::h3_iii, &HypothesisReport::h4_i, &HypothesisReport::h4_ii}) {
      if ((rep_worse.*get).pass) CHECK((rep_base.*get).pass);
    }
  }
}

TEST_CASE("find_rho: linear case solves to rho = 1/9") {
  // Psi = 0, q = 0, L = 0.1, M = 1, ||phi~|| = 1: binding H3(ii)/(iii) give
  // 0.1 (1 + rho) <= rho, the smallest solution rho = 1/9
  const auto c = constants_of(1.0, 0.1, 0.0, 0, [](double) { return 0.0; }, [](double, double) { return 0.0; });
  const auto res = find_rho(c, bare_partition(0.5, 2.0), 1.0, Vec{0.0}, Vec{0.0}, 10.0);
  REQUIRE(res.feasible);
  CHECK(res.rho == doctest::Approx(1.0 / 9.0).epsilon(1e-4));

  // feeding the result back passes; stepping well below it fails
  const auto at = check_hypotheses(c, bare_partition(0.5, 2.0), 1.0, res.rho, Vec{0.0}, Vec{0.0});
  CHECK(at.h3_ii.pass);
  CHECK(at.h3_iii.pass);
  const auto below =
      check_hypotheses(c, bare_partition(0.5, 2.0), 1.0, res.rho - 10.0 * res.resolution, Vec{0.0}, Vec{0.0});
  CHECK(!(below.h3_ii.pass && below.h3_iii.pass));
}

TEST_CASE("find_rho: all-zero constants return the scan minimum") {
  const auto c = constants_of(1.0, 0.0, 0.0, 0, [](double) { return 0.0; }, [](double, double) { return 0.0; });
  const auto res = find_rho(c, bare_partition(0.5, 2.0), 1.0, Vec{0.0}, Vec{0.0}, 10.0);
  REQUIRE(res.feasible);
  CHECK(res.rho == doctest::Approx(10.0 / 2000.0));
}

TEST_CASE("find_rho: linear-growth Psi with M tau = 2 is infeasible, binding H3(i)") {
  const auto c = constants_of(1.0, 0.0, 0.0, 0, [](double u) { return u; }, [](double, double) { return 0.0; });
  Partition p = bare_partition(0.5, 2.0);  // M tau = 2
  const auto res = find_rho(c, p, 1.0, Vec{0.0}, Vec{0.0}, 50.0);
  CHECK(!res.feasible);
  CHECK(res.binding == "h3_i");
}

TEST_CASE("envelopes: tables are monotone, interpolate, and extrapolate the last slope") {
  auto e = Envelope1::from_table({1.0, 2.0, 3.0}, {0.5, 0.4, 0.9});  // dips get flattened
  CHECK(e(1.0) == 0.5);
  CHECK(e(2.0) == 0.5);
  CHECK(e(0.2) == 0.5);                            // clamped below
  CHECK(e(2.5) == doctest::Approx(0.7));           // linear between (2, .5) and (3, .9)
  CHECK(e(4.0) == doctest::Approx(1.3));           // final slope extended
  auto k = Envelope2::from_table({1.0, 2.0}, {{0.1, 0.2}, {0.15, 0.3}});
  CHECK(k(1.0, 1.0) == doctest::Approx(0.1));
  CHECK(k(2.0, 2.0) == doctest::Approx(0.3));
  CHECK(k(1.5, 1.5) == doctest::Approx((0.1 + 0.2 + 0.15 + 0.3) / 4.0));
  CHECK(k(3.0, 2.0) == doctest::Approx(0.4));      // extrapolated in u along the v = 2 column
}
