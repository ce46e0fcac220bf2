#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "abqed/interferometer.hpp"
#include "abqed/quadrature.hpp"

using namespace abqed;

namespace {

const PhysicalConstants R = PhysicalConstants::reduced();
const Particle unit = Particle::for_units(UnitSystem::reduced);

std::shared_ptr<const FieldModel> model(std::vector<SourceElement> els) {
  return std::make_shared<FieldModel>(SourceConfiguration(std::move(els), R));
}

// Ideal solenoid on the z axis, flux along +z, evaluated outside: A = flux/(2 pi rho) phi-hat.
Vec3 ideal_A(double flux, const Vec3& r) {
  const double rho2 = r.x() * r.x() + r.y() * r.y();
  return Vec3(-r.y(), r.x(), 0.0) * (flux / (2 * pi * rho2));
}

// (q/hbar) int A . dl along straight segments, by composite Gauss-Legendre.
double line_integral(double flux, const std::vector<Vec3>& polygon, double q = 1.0) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < polygon.size(); ++i) {
    const Vec3 a = polygon[i], d = polygon[i + 1] - polygon[i];
    auto f = [&](double s) { return ideal_A(flux, a + s * d).dot(d); };
    total += quad::composite_gauss_legendre<double>(f, 0.0, 1.0, 64, 16);
  }
  return q * total;
}

InterferometerScenario magnetic(double flux = 1.0) {
  auto p = MagneticPresetParams::defaults(UnitSystem::reduced);
  p.flux = flux;
  return build_magnetic_preset(p);
}

}  // namespace

TEST_CASE("stop-at-waypoints worldline: knots, dwell legs and derivatives") {
  const ParticlePath path({{0.0, Vec3(0, 0, 0)},
                           {2.0, Vec3(1, 0, 0)},
                           {5.0, Vec3(1, 0, 0)},
                           {6.0, Vec3(1, 2, 0)}},
                          unit);
  CHECK(path.position(2.0) == Vec3(1, 0, 0));
  CHECK(path.position(6.0) == Vec3(1, 2, 0));
  CHECK_FALSE(path.is_dwell(0));
  CHECK(path.is_dwell(1));
  CHECK(path.velocity(3.5) == Vec3::Zero());
  CHECK(path.position(3.5) == Vec3(1, 0, 0));
  for (const auto& k : path.knots()) CHECK(k.v == Vec3::Zero());
  // Straight legs stay on their segment.
  CHECK(std::abs(path.position(0.7).y()) < 1e-15);
  const double h = 1e-6;
  for (double t : {0.3, 1.1, 5.4, 5.9}) {
    const Vec3 fd = (path.position(t + h) - path.position(t - h)) / (2 * h);
    CHECK((fd - path.velocity(t)).norm() < 1e-8);
  }
  CHECK(path.momentum(1.0) == path.velocity(1.0) * unit.mass);
}

TEST_CASE("Catmull-Rom worldline uses central differences at interior knots") {
  const ParticlePath path(
      {{0.0, Vec3(0, 0, 0)}, {1.0, Vec3(1, 1, 0)}, {3.0, Vec3(2, 0, 0)}, {4.0, Vec3(3, 0, 0)}},
      unit, VelocityRule::catmull_rom);
  CHECK((path.knots()[1].v - Vec3(2, 0, 0) / 3.0).norm() < 1e-15);
  CHECK((path.knots()[2].v - Vec3(2, -1, 0) / 3.0).norm() < 1e-15);
  CHECK((path.velocity(1.0) - path.knots()[1].v).norm() < 1e-14);
  const double h = 1e-6;
  const Vec3 fd = (path.position(2.0 + h) - path.position(2.0 - h)) / (2 * h);
  CHECK((fd - path.velocity(2.0)).norm() < 1e-8);
}

TEST_CASE("restricted worldline keeps positions and velocities") {
  const auto sc = magnetic();
  const auto part = sc.path_a.restricted(20.0, 70.0);
  CHECK(part.t0() == 20.0);
  CHECK(part.tf() == 70.0);
  for (double t : {20.0, 33.3, 50.0, 69.0}) {
    CHECK((part.position(t) - sc.path_a.position(t)).norm() < 1e-14);
    CHECK((part.velocity(t) - sc.path_a.velocity(t)).norm() < 1e-14);
  }
}

TEST_CASE("invalid paths and scenarios are rejected") {
  CHECK_THROWS_AS(ParticlePath({{0.0, Vec3::Zero()}}, unit), BadScenarioParameters);
  CHECK_THROWS_AS(ParticlePath({{1.0, Vec3::Zero()}, {1.0, Vec3::UnitX()}}, unit),
                  BadScenarioParameters);
  const ParticlePath fast({{0.0, Vec3::Zero()}, {1.0, Vec3(5, 0, 0)}}, unit);
  CHECK_THROWS_AS(fast.validate(R.c), BadScenarioParameters);
  const ParticlePath heavyless({{0.0, Vec3::Zero()}, {1.0, Vec3(0.1, 0, 0)}}, Particle{1.0, 0.0});
  CHECK_THROWS_AS(heavyless.validate(R.c), BadScenarioParameters);

  auto sc = magnetic();
  auto no_field = sc;
  no_field.field.reset();
  CHECK_THROWS_AS(no_field.validate(), BadScenarioParameters);
  auto mismatch = sc;
  mismatch.path_b = ParticlePath({{0.0, sc.path_b.start()}, {100.0, sc.path_b.end()}},
                                 Particle{2.0, 1.0});
  CHECK_THROWS_AS(mismatch.validate(), BadScenarioParameters);
  auto open = sc;
  open.path_b = sc.path_b.restricted(0.0, 50.0);
  CHECK_THROWS_AS(phase_difference(open), BadScenarioParameters);

  auto p = MagneticPresetParams::defaults(UnitSystem::reduced);
  p.half_height = 0.05;  // inside the solenoid
  CHECK_THROWS_AS(build_magnetic_preset(p), BadScenarioParameters);
  auto e = ElectricPresetParams::defaults(UnitSystem::reduced);
  e.pulse_end = e.timeline.t_leave() + 1.0;
  CHECK_THROWS_AS(build_electric_preset(e), BadScenarioParameters);
  auto d = ElectrodynamicPresetParams::defaults(UnitSystem::reduced);
  d.timeline.dwell_time = 0.0;
  CHECK_THROWS_AS(build_electrodynamic_preset(d), BadScenarioParameters);
}

TEST_CASE("no sources give no phase") {
  InterferometerScenario sc;
  sc.field = model({});
  sc.path_a = ParticlePath({{0, Vec3(-1, 0, 0)}, {5, Vec3(0, -1, 0)}, {10, Vec3(1, 0, 0)}}, unit);
  sc.path_b = ParticlePath({{0, Vec3(-1, 0, 0)}, {5, Vec3(0, 1, 0)}, {10, Vec3(1, 0, 0)}}, unit);
  const auto d = phase_difference(sc);
  CHECK(d.hamiltonian.phi_a == 0.0);
  CHECK(d.energy.delta == 0.0);
  CHECK(d.agreement_required);
}

TEST_CASE("uniform potential inside a charged shell gives -q V0 T / hbar") {
  const double Q = 2.0, radius = 1.0, T = 5.0;
  const double V0 = Q / (4 * pi * radius);
  const auto gp = GaugedPotentials(model({SourceElement::charged_shell(Q, Vec3::Zero(), radius)}),
                                   GaugeFunction::identity());
  const ParticlePath path({{0.0, Vec3(-0.1, 0, 0)}, {T, Vec3(0.2, 0.1, 0)}}, unit);
  for (Calculator c : {Calculator::hamiltonian, Calculator::energy}) {
    const auto ph = accumulate_phase(c, path, gp);
    CHECK(std::abs(ph.phase + V0 * T) < 1e-12);
    CHECK(ph.vector_term == 0.0);
    CHECK(ph.est_error >= 0.0);
    CHECK(ph.evaluations > 0);
  }
}

TEST_CASE("each half of the magnetic loop carries the A line integral") {
  const double flux = 1.0;
  const auto sc = magnetic(flux);
  const auto d = phase_difference(sc);
  std::vector<Vec3> a, b;
  for (const auto& k : sc.path_a.knots()) a.push_back(k.r);
  for (const auto& k : sc.path_b.knots()) b.push_back(k.r);
  CHECK(std::abs(d.hamiltonian.a.vector_term - line_integral(flux, a)) < 1e-9);
  CHECK(std::abs(d.hamiltonian.b.vector_term - line_integral(flux, b)) < 1e-9);
  CHECK(std::abs(d.hamiltonian.delta - flux) < 1e-9);
  CHECK(std::abs(d.energy.delta - flux) < 1e-9);
  CHECK(d.calculator_mismatch < 1e-12);
  CHECK(sc.reference_delta == doctest::Approx(flux).epsilon(1e-14));
}

TEST_CASE("a second circuit doubles the phase difference") {
  auto sc = magnetic(1.0);
  const double w = 0.3, h = 0.3, T = 100.0;
  sc.path_a = ParticlePath({{0, Vec3(-w, 0, 0)},
                            {10, Vec3(-w, -h, 0)},
                            {20, Vec3(w, -h, 0)},
                            {30, Vec3(w, h, 0)},
                            {40, Vec3(-w, h, 0)},
                            {50, Vec3(-w, 0, 0)},
                            {60, Vec3(-w, -h, 0)},
                            {80, Vec3(w, -h, 0)},
                            {T, Vec3(w, 0, 0)}},
                           unit);
  const auto d = phase_difference(sc);
  CHECK(std::abs(d.hamiltonian.delta - 2.0) < 1e-9);
  CHECK(std::abs(d.energy.delta - 2.0) < 1e-9);
}

TEST_CASE("phase differences are linear in flux and voltage") {
  const double d1 = phase_difference(magnetic(0.7)).hamiltonian.delta;
  const double d2 = phase_difference(magnetic(1.4)).hamiltonian.delta;
  CHECK(std::abs(d2 - 2 * d1) < 1e-9);

  auto e = ElectricPresetParams::defaults(UnitSystem::reduced);
  const double T = e.effective_dwell();
  const double base = phase_difference(build_electric_preset(e)).energy.delta;
  CHECK(std::abs(base + (e.V_a - e.V_b) * T) < 1e-6 * std::abs(base));
  e.V_a *= 3;
  const double tripled = phase_difference(build_electric_preset(e)).energy.delta;
  CHECK(std::abs(tripled - 3 * base) < 1e-6 * std::abs(tripled));
  e.V_b = e.V_a;
  CHECK(std::abs(phase_difference(build_electric_preset(e)).hamiltonian.delta) < 1e-9);
}

TEST_CASE("ramping the flux after both paths exit leaves the static result") {
  auto p = ElectrodynamicPresetParams::defaults(UnitSystem::reduced);
  p.ramp_start = p.timeline.t_final() + 10.0;
  p.ramp_end = p.ramp_start + 50.0;
  const auto d = phase_difference(build_electrodynamic_preset(p));
  CHECK(std::abs(d.hamiltonian.delta - p.flux) < 1e-6);
  CHECK(std::abs(d.energy.delta - p.flux) < 1e-6);
}

TEST_CASE("static spatial gauge: both calculators agree per path") {
  const auto sc = magnetic();
  const auto lorenz = phase_difference(sc);
  const auto g = GaugeFunction::gaussian_bump(0.8, Vec3(-0.2, -0.25, 0), 0.15);
  const auto d = phase_difference(sc.with_gauge(g));
  CHECK(std::abs(d.hamiltonian.phi_a - d.energy.phi_a) < 1e-12);
  CHECK(std::abs(d.hamiltonian.phi_b - d.energy.phi_b) < 1e-12);
  CHECK(std::abs(d.hamiltonian.delta - lorenz.hamiltonian.delta) < 1e-9);
  CHECK(d.agreement_required);
}

TEST_CASE("time-only gauge shifts only the Hamiltonian phase") {
  const auto sc = magnetic();
  const double alpha = 0.013, T = sc.path_a.tf() - sc.path_a.t0();
  const auto lorenz = phase_difference(sc);
  const auto d = phase_difference(sc.with_gauge(GaugeFunction::linear(Vec3::Zero(), alpha)));
  CHECK(std::abs(d.energy.phi_a - lorenz.energy.phi_a) < 1e-12);
  CHECK(std::abs(d.hamiltonian.phi_a - (lorenz.hamiltonian.phi_a + alpha * T)) < 1e-9);
  CHECK(std::abs(d.hamiltonian.delta - lorenz.hamiltonian.delta) < 1e-9);
}

TEST_CASE("calculator difference equals the gauge time phase") {
  const auto sc = magnetic();
  const auto g = GaugeFunction::time_modulated_product(1.3, Vec3(0.1, -0.2, 0), 0.2, 0.09, 0.4);
  const auto d = phase_difference(sc.with_gauge(g));
  CHECK_FALSE(d.agreement_required);
  for (const auto* path : {&sc.path_a, &sc.path_b}) {
    const double lib = gauge_time_phase(*path, g, R);
    auto f = [&](double t) { return g.time_derivative(path->position(t), t); };
    double oracle = 0.0;
    const auto knots = path->knots();
    for (std::size_t i = 0; i + 1 < knots.size(); ++i)
      oracle += quad::composite_gauss_legendre<double>(f, knots[i].t, knots[i + 1].t, 64, 16);
    CHECK(std::abs(lib - oracle) < 1e-9);
    const auto& h = path == &sc.path_a ? d.hamiltonian.a : d.hamiltonian.b;
    const auto& e = path == &sc.path_a ? d.energy.a : d.energy.b;
    CHECK(std::abs((h.phase - e.phase) - oracle) < 1e-9);
  }
}

TEST_CASE("open segments: static gauge shifts the energy phase by F(end) - F(start)") {
  const auto sc = magnetic().open_segment(10.0, 60.0);
  CHECK(sc.open_mode);
  CHECK_FALSE(sc.is_closed());
  CHECK(std::isnan(sc.reference_delta));
  const auto g = GaugeFunction::gaussian_bump(0.6, Vec3(-0.3, -0.1, 0), 0.25);
  const std::vector<GaugeFunction> gauges{GaugeFunction::identity(), g};
  const auto rows = open_path_report(sc, gauges);
  REQUIRE(rows.size() == 8);
  const auto gp = sc.potentials();
  for (const auto& row : rows) {
    const auto& path = row.path == 'a' ? sc.path_a : sc.path_b;
    if (row.gauge_index == 0) {
      CHECK(row.phase.phase == accumulate_phase(row.calculator, path, gp, sc.numerics).phase);
      continue;
    }
    const double lorenz = accumulate_phase(row.calculator, path, gp, sc.numerics).phase;
    const double shift = g.value(path.end(), path.tf()) - g.value(path.start(), path.t0());
    CHECK(std::abs(row.phase.phase - lorenz - shift) < 1e-9);
    CHECK(row.gauge_label == g.label());
  }
}

TEST_CASE("seeded gauge sweep keeps delta while moving each path phase") {
  const auto sc = magnetic();
  const auto gauges = random_gauge_family(3, 5, family_bounds_for(sc));
  const auto s = gauge_sweep(sc, gauges);
  CHECK(s.rows.size() == 5);
  CHECK(s.max_delta_deviation_hamiltonian <= 1e-9);
  CHECK(s.max_delta_deviation_energy <= 1e-9);
  CHECK(s.max_calculator_mismatch <= 1e-9);
  CHECK(s.per_path_spread > 1e-3);
}
