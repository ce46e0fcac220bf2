#include <doctest.h>

#include <cmath>
#include <vector>

#include "abqed/quadrature.hpp"

using namespace abqed;

TEST_CASE("Kronrod panel is exact for polynomials up to degree 22") {
  auto p = [](double x) { return std::pow(x, 22) - 3 * std::pow(x, 7) + 2.0; };
  const double exact = 1.0 / 23 - 3.0 / 8 + 2.0;
  auto r = quad::gauss_kronrod15<double>(p, 0.0, 1.0);
  CHECK(r.value == doctest::Approx(exact).epsilon(1e-14));
}

TEST_CASE("adaptive integration meets its tolerance on a peaked integrand") {
  auto f = [](double x) { return 1.0 / (1e-4 + x * x); };
  const double exact = 2.0 / 1e-2 * std::atan(1.0 / 1e-2);
  quad::AdaptiveOptions opt;
  opt.rel_tol = 1e-12;
  auto r = quad::integrate<double>(f, -1.0, 1.0, opt);
  CHECK(r.converged);
  CHECK(std::abs(r.value - exact) / exact < 1e-11);
}

TEST_CASE("breakpoints handle a kink that bisection would straddle") {
  auto f = [](double x) { return std::abs(x - 0.3); };
  const double exact = 0.5 * (0.3 * 0.3 + 0.7 * 0.7);
  const std::vector<double> cuts{0.3};
  auto r = quad::integrate<double>(f, 0.0, 1.0, {}, cuts);
  CHECK(r.evaluations == 30);
  CHECK(r.value == doctest::Approx(exact).epsilon(1e-14));
}

TEST_CASE("vector-valued integrands integrate componentwise") {
  auto f = [](double x) { return Vec3(std::sin(x), std::cos(x), x); };
  auto r = quad::integrate<Vec3>(f, 0.0, pi, {});
  CHECK(r.value.x() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(r.value.y()) < 1e-12);
  CHECK(r.value.z() == doctest::Approx(pi * pi / 2).epsilon(1e-12));
}

TEST_CASE("exhausted depth reports non-convergence") {
  auto f = [](double x) { return x > 1.0 / 3.0 ? 1.0 : 0.0; };
  quad::AdaptiveOptions opt;
  opt.abs_tol = 1e-30;
  opt.rel_tol = 0.0;
  opt.max_depth = 5;
  CHECK_FALSE(quad::integrate<double>(f, 0.0, 1.0, opt).converged);
}

TEST_CASE("Gauss-Legendre rules integrate polynomials of degree 2n-1") {
  for (int n : {1, 4, 16, 64}) {
    const auto rule = quad::gauss_legendre(n);
    double wsum = 0.0, moment = 0.0;
    for (std::size_t i = 0; i < rule->nodes.size(); ++i) {
      wsum += rule->weights[i];
      moment += rule->weights[i] * std::pow(rule->nodes[i], 2 * n - 2);
    }
    CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(moment == doctest::Approx(2.0 / (2 * n - 1)).epsilon(1e-12));
  }
  auto f = [](double x) { return std::exp(x); };
  CHECK(quad::composite_gauss_legendre<double>(f, 0.0, 2.0, 4, 8) ==
        doctest::Approx(std::exp(2.0) - 1.0).epsilon(1e-14));
}

TEST_CASE("doubling extrapolation recovers the limit of an algebraic sequence") {
  std::vector<double> seq;
  for (int j = 0; j < 6; ++j) seq.push_back(1.0 + 0.3 * std::pow(0.5, 2 * j));
  auto ex = quad::extrapolate_doubling(seq);
  CHECK(ex.richardson_applied);
  CHECK(ex.observed_order == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(std::abs(ex.value - 1.0) < 1e-12);
}

TEST_CASE("extrapolation falls back to the last term on erratic sequences") {
  const std::vector<double> seq{1.0, 1.2, 0.95, 1.01};
  auto ex = quad::extrapolate_doubling(seq);
  CHECK_FALSE(ex.richardson_applied);
  CHECK(ex.value == 1.01);
  CHECK(ex.error > 0.0);
  CHECK(ex.error < 0.06);
}
