#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "abqed/quadrature.hpp"
#include "abqed/sources.hpp"

using namespace abqed;

namespace {

std::vector<Vec3> random_points(int n, double half, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-half, half);
  std::vector<Vec3> out;
  for (int i = 0; i < n; ++i) out.emplace_back(u(rng), u(rng), u(rng));
  return out;
}

double total_charge(const ChargeDensity& d) {
  double q = 0.0;
  for (const auto& m : d.measures) q += m.charge;
  return q;
}

}  // namespace

TEST_CASE("physical constants satisfy c^2 mu0 eps0 = 1") {
  CHECK_NOTHROW(PhysicalConstants::si().validate());
  CHECK_NOTHROW(PhysicalConstants::reduced().validate());
  PhysicalConstants bad;
  bad.c *= 1.001;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("schedules hold their end values and ramp in between") {
  const auto lin = TimeSchedule::linear_ramp(1.0, 3.0, 1.0, 0.0);
  CHECK(lin.value(0.0) == 1.0);
  CHECK(lin.value(2.0) == doctest::Approx(0.5));
  CHECK(lin.value(5.0) == 0.0);
  CHECK(lin.rate(2.0) == doctest::Approx(-0.5));
  CHECK(lin.breakpoints() == std::vector<double>{1.0, 3.0});

  const auto smooth = TimeSchedule::smoothstep_ramp(0.0, 2.0, 2.0, -1.0);
  CHECK(smooth.value(1.0) == doctest::Approx(0.5));
  CHECK(smooth.rate(0.0) == 0.0);
  CHECK(smooth.rate(2.0) == 0.0);
  const double h = 1e-6;
  for (double t : {0.3, 1.0, 1.7})
    CHECK(smooth.rate(t) ==
          doctest::Approx((smooth.value(t + h) - smooth.value(t - h)) / (2 * h)).epsilon(1e-8));

  const auto c = TimeSchedule::constant(0.7);
  CHECK(c.value(-1e9) == 0.7);
  CHECK(c.breakpoints().empty());
  CHECK_THROWS_AS(TimeSchedule::linear_ramp(2.0, 1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("invalid geometry is rejected") {
  CHECK_THROWS_AS(SourceElement::charged_shell(1.0, Vec3::Zero(), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(SourceElement::gaussian_ball(1.0, Vec3::Zero(), -1.0), std::invalid_argument);
  CHECK_THROWS_AS(SourceElement::finite_solenoid(1.0, Vec3::Zero(), Vec3::UnitZ(), 0.01, 0.0, 1e5),
                  std::invalid_argument);
  CHECK_THROWS_AS(SourceElement::infinite_solenoid(1.0, Vec3::Zero(), Vec3::UnitZ(), 0.01, -3.0),
                  std::invalid_argument);
}

TEST_CASE("empty configuration has no density") {
  SourceConfiguration empty;
  const auto rho = charge_density(empty, Vec3(0.1, 0.2, 0.3), 4.0);
  CHECK(rho.smooth == 0.0);
  CHECK(rho.measures.empty());
  const auto J = current_density(empty, Vec3(0.1, 0.2, 0.3), 4.0);
  CHECK(J.smooth == Vec3::Zero());
  CHECK(J.filaments.empty());
}

TEST_CASE("point charge is a weighted point measure") {
  SourceConfiguration c({SourceElement::point_charge(1.6e-19, Vec3::Zero())});
  const auto rho = charge_density(c, Vec3(1, 0, 0), 0.0);
  REQUIRE(rho.measures.size() == 1);
  CHECK(rho.measures[0].shape == ChargeMeasure::Shape::point);
  CHECK(rho.measures[0].center == Vec3::Zero());
  CHECK(rho.measures[0].charge == 1.6e-19);
  CHECK(current_density(c, Vec3(1, 0, 0), 0.0).smooth == Vec3::Zero());
}

TEST_CASE("evaluation next to a singular source is refused") {
  SourceConfiguration c({SourceElement::point_charge(1.0, Vec3::Zero()),
                         SourceElement::charged_shell(1.0, Vec3(5, 0, 0), 1.0)});
  CHECK_THROWS_AS(charge_density(c, Vec3(1e-10, 0, 0), 0.0), EvaluationInsideSource);
  CHECK_THROWS_AS(charge_density(c, Vec3(4.0, 0, 0), 0.0), EvaluationInsideSource);
  CHECK_NOTHROW(charge_density(c, Vec3(1e-8, 0, 0), 0.0));

  auto ramped = SourceElement::point_charge(1.0, Vec3::Zero());
  ramped.with_schedule(TimeSchedule::linear_ramp(0.0, 1.0, 1.0, 0.0));
  SourceConfiguration off({ramped});
  CHECK_NOTHROW(charge_density(off, Vec3::Zero(), 2.0));
}

TEST_CASE("Gaussian ball density integrates to its charge") {
  const double Q = 2.5, s = 0.3;
  SourceConfiguration c({SourceElement::gaussian_ball(Q, Vec3(0.1, -0.2, 0.05), s)});
  auto radial = [&](double r) {
    const Vec3 p = Vec3(0.1, -0.2, 0.05) + r * Vec3(0.6, 0.0, 0.8);
    return 4 * pi * r * r * charge_density(c, p, 0.0).smooth;
  };
  quad::AdaptiveOptions opt;
  opt.rel_tol = 1e-12;
  const auto q = quad::integrate<double>(radial, 0.0, 20 * s, opt);
  CHECK(std::abs(q.value - Q) / Q < 1e-9);
}

TEST_CASE("densities of a union are the sum of the parts") {
  auto ball = SourceElement::gaussian_ball(1.0, Vec3(0.2, 0, 0), 0.4);
  auto loop = SourceElement::current_loop(2.0, Vec3::Zero(), Vec3(0, 1, 1), 0.5, 64);
  loop.wire_radius = 0.1;
  auto shell = SourceElement::charged_shell(-0.5, Vec3(0, 0.3, 0), 0.7);
  SourceConfiguration a({ball, loop}), b({shell}), ab = merge(a, b);
  for (const auto& r : random_points(10, 1.0, 3)) {
    const auto ra = charge_density(a, r, 0.0), rb = charge_density(b, r, 0.0);
    const auto rab = charge_density(ab, r, 0.0);
    CHECK(rab.smooth == ra.smooth + rb.smooth);
    CHECK(total_charge(rab) == total_charge(ra) + total_charge(rb));
    const auto Ja = current_density(a, r, 0.0), Jb = current_density(b, r, 0.0);
    CHECK(current_density(ab, r, 0.0).smooth == Ja.smooth + Jb.smooth);
  }
}

TEST_CASE("scheduled densities are bounded by the largest amplitude") {
  auto ball = SourceElement::gaussian_ball(1.0, Vec3::Zero(), 0.4);
  auto ramped = ball;
  ramped.with_schedule(TimeSchedule::smoothstep_ramp(0.0, 1.0, 0.5, -2.0));
  SourceConfiguration plain({ball}), sched({ramped});
  const double bound = ramped.schedule.max_abs();
  CHECK(bound == 2.0);
  for (double t : {-1.0, 0.1, 0.5, 0.9, 3.0})
    for (const auto& r : random_points(5, 0.8, 11))
      CHECK(std::abs(charge_density(sched, r, t).smooth) <=
            bound * std::abs(charge_density(plain, r, 0.0).smooth));
}

TEST_CASE("every current element discretizes into closed filaments") {
  auto loop = SourceElement::current_loop(1.0, Vec3(0.1, 0.2, 0.3), Vec3(1, 2, 3), 0.05, 17);
  auto sol = SourceElement::finite_solenoid(1.0, Vec3::Zero(), Vec3(0, 1, 0), 0.01, 0.2, 1e3, 20, 32);
  for (const auto& e : {loop, sol}) {
    const auto fs = filaments_of(e, 0.0);
    CHECK_FALSE(fs.empty());
    for (const auto& f : fs) CHECK(f.is_closed(1e-12));
  }
  CHECK(filaments_of(sol, 0.0).size() == 20);
  CHECK(filaments_of(SourceElement::point_charge(1.0, Vec3::Zero()), 0.0).empty());
}

TEST_CASE("ramped solenoid current is halved at the ramp midpoint") {
  auto sol = SourceElement::finite_solenoid(3.0, Vec3::Zero(), Vec3::UnitZ(), 0.01, 1.0, 1e5, 10, 16);
  sol.with_schedule(TimeSchedule::linear_ramp(2.0, 4.0, 1.0, 0.0));
  const double full = filaments_of(sol, 0.0).front().current;
  CHECK(full == doctest::Approx(3.0 * 1e5 * 1.0 / 10));
  CHECK(filaments_of(sol, 3.0).front().current == doctest::Approx(0.5 * full));
  CHECK(filaments_of(sol, 5.0).front().current == 0.0);
}

TEST_CASE("ideal solenoid flux") {
  const auto k = PhysicalConstants::si();
  auto sol = SourceElement::infinite_solenoid(1.0, Vec3::Zero(), Vec3::UnitZ(), 0.01, 1e5);
  const double phi = solenoid_flux(sol, 0.0, k).webers;
  CHECK(phi == doctest::Approx(k.mu0 * 1e5 * pi * 1e-4).epsilon(1e-15));
  CHECK(phi == doctest::Approx(3.9478e-6).epsilon(1e-4));

  auto doubled = sol;
  doubled.turns_per_meter *= 2;
  CHECK(solenoid_flux(doubled, 0.0, k).webers == doctest::Approx(2 * phi).epsilon(1e-15));

  sol.with_schedule(TimeSchedule::linear_ramp(0.0, 1.0, 1.0, 0.0));
  CHECK(solenoid_flux(sol, 2.0, k).webers == 0.0);

  auto fin = SourceElement::finite_solenoid(1.0, Vec3::Zero(), Vec3::UnitZ(), 0.01, 1.0, 1e5);
  CHECK(solenoid_flux(fin, 0.0, k).ideal);
  CHECK(solenoid_flux(fin, 0.0, k).webers == doctest::Approx(phi).epsilon(1e-15));
  CHECK_THROWS_AS(solenoid_flux(SourceElement::point_charge(1.0, Vec3::Zero()), 0.0, k),
                  WrongElementKind);
}

TEST_CASE("divergence check passes closed filaments and flags an open one") {
  auto loop = SourceElement::current_loop(1.0, Vec3::Zero(), Vec3::UnitZ(), 1.0, 32);
  const std::vector<Vec3> near_wire{Vec3(1.0, 0.02, 0.01), Vec3(-0.01, 0.99, 0.0),
                                    Vec3(0.7, 0.7, -0.02)};
  const auto closed = divergence_j_check(SourceConfiguration({loop}), 0.0, near_wire);
  CHECK(closed.relative() < 1e-6);

  auto pair = SourceConfiguration({loop, SourceElement::current_loop(-1.0, Vec3(0, 0, 0.05),
                                                                     Vec3::UnitZ(), 1.0, 32)});
  CHECK(divergence_j_check(pair, 0.0, near_wire).relative() < 1e-6);

  Filament open;
  open.current = 1.0;
  open.segments.push_back(FilamentSegment::line(Vec3(0, 0, 0), Vec3(1, 0, 0)));
  CHECK_FALSE(open.is_closed());
  const std::vector<Vec3> at_end{Vec3(1.0, 0.01, 0.0)};
  const std::vector<Filament> fs{open};
  CHECK(divergence_j_check(fs, at_end).relative() > 1e-2);
}

TEST_CASE("transverse frame completes the axis to a right-handed triad") {
  for (const Vec3& axis : {Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0.3, -0.4, 0.866)}) {
    const Vec3 n = axis.normalized();
    const auto [u, v] = transverse_frame(n);
    CHECK(std::abs(u.dot(n)) < 1e-15);
    CHECK(std::abs(v.dot(u)) < 1e-15);
    CHECK((u.cross(v) - n).norm() < 1e-15);
  }
}
