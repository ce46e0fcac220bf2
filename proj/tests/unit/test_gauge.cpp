#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "abqed/gauge.hpp"

using namespace abqed;

namespace {

const PhysicalConstants RU = PhysicalConstants::reduced();

struct Event {
  Vec3 r;
  double t;
};

std::vector<Event> random_events(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Event> out;
  for (int i = 0; i < n; ++i) out.push_back({Vec3(u(rng), u(rng), u(rng)), 3.0 * u(rng)});
  return out;
}

std::vector<GaugeFunction> closed_form_gauges() {
  return {GaugeFunction::constant(0.4),
          GaugeFunction::linear(Vec3(0.3, -1.2, 0.5), 0.7, 0.1),
          GaugeFunction::gaussian_bump(1.3, Vec3(0.2, -0.1, 0.4), 0.6),
          GaugeFunction::sinusoidal(0.9, Vec3(2.0, 1.0, -0.5), 1.7, 0.3),
          GaugeFunction::time_modulated_product(-0.8, Vec3(-0.3, 0.2, 0.0), 0.5, 2.3, 0.4)};
}

Vec3 fd_gradient(const GaugeFunction& g, const Vec3& r, double t, double h) {
  Vec3 out;
  for (int c = 0; c < 3; ++c) {
    Vec3 e = Vec3::Zero();
    e[c] = h;
    out[c] = (g.value(r + e, t) - g.value(r - e, t)) / (2 * h);
  }
  return out;
}

double fd_time(const GaugeFunction& g, const Vec3& r, double t, double h) {
  return (g.value(r, t + h) - g.value(r, t - h)) / (2 * h);
}

std::shared_ptr<const FieldModel> ball_and_loop() {
  auto loop = SourceElement::current_loop(1.0, Vec3(0, 0, 0.2), Vec3::UnitZ(), 0.4);
  return std::make_shared<FieldModel>(
      SourceConfiguration({SourceElement::gaussian_ball(1.0, Vec3(0.1, 0, 0), 0.2), loop}, RU));
}

}  // namespace

TEST_CASE("gauge kind names round-trip") {
  for (auto k : {GaugeKind::constant, GaugeKind::linear, GaugeKind::gaussian_bump,
                 GaugeKind::sinusoidal, GaugeKind::time_modulated_product, GaugeKind::from_modes})
    CHECK(gauge_kind_from_string(to_string(k)) == k);
  CHECK_FALSE(gauge_kind_from_string("coulomb").has_value());
}

TEST_CASE("analytic derivatives match central differences") {
  const double h = 1e-5;
  for (const auto& g : closed_form_gauges()) {
    CAPTURE(g.label());
    for (const auto& ev : random_events(20, 5)) {
      const Vec3 grad = g.gradient(ev.r, ev.t);
      const Vec3 fd = fd_gradient(g, ev.r, ev.t, h);
      CHECK((grad - fd).norm() <= 1e-6 * std::max(grad.norm(), 1.0));
      const double dt = g.time_derivative(ev.r, ev.t);
      CHECK(std::abs(dt - fd_time(g, ev.r, ev.t, h)) <= 1e-6 * std::max(std::abs(dt), 1.0));
    }
  }
}

TEST_CASE("invalid gauge terms are rejected") {
  CHECK_THROWS_AS(GaugeFunction::gaussian_bump(1.0, Vec3::Zero(), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(GaugeFunction::sinusoidal(NAN, Vec3::UnitX(), 0, 0), std::invalid_argument);
  GaugeTerm modes;
  modes.kind = GaugeKind::from_modes;
  CHECK_THROWS_AS(modes.validate(), std::invalid_argument);
}

TEST_CASE("constant gauge leaves the Lorenz potentials untouched") {
  const auto base = ball_and_loop();
  GaugedPotentials gp(base, GaugeFunction::constant(5.0));
  CHECK(gp.gauge().is_identity());
  for (const auto& ev : random_events(5, 6)) {
    const auto lorenz = base->both(ev.r, ev.t);
    CHECK(gauged_scalar(gp, ev.r, ev.t) == lorenz.V);
    CHECK(gauged_vector(gp, ev.r, ev.t) == lorenz.A);
  }
}

TEST_CASE("every gauge is applied on top of the Lorenz-gauge potentials") {
  const auto base = ball_and_loop();
  GaugedPotentials gp(base, GaugeFunction::sinusoidal(0.5, Vec3(1, 2, 0), 0.7, 0.1));
  for (const auto& ev : random_events(5, 7)) {
    const auto s = gp.evaluate(ev.r, ev.t);
    const auto lorenz = base->both(ev.r, ev.t);
    CHECK(s.lorenz.V == lorenz.V);
    CHECK(s.lorenz.A == lorenz.A);
    CHECK(s.V == lorenz.V - s.dF_dt);
    CHECK(s.A == lorenz.A + s.grad_F);
  }
  CHECK(gp.with_gauge(GaugeFunction::identity()).base_ptr() == base);
}

TEST_CASE("uniform time gauge shifts V by its rate, linear gauge shifts A uniformly") {
  const auto base = ball_and_loop();
  const double alpha = 0.35;
  const Vec3 kappa(0.2, -0.7, 1.1);
  GaugedPotentials time_only(base, GaugeFunction::linear(Vec3::Zero(), alpha));
  GaugedPotentials space_only(base, GaugeFunction::linear(kappa, 0.0));
  for (const auto& ev : random_events(5, 8)) {
    const auto lorenz = base->both(ev.r, ev.t);
    CHECK(gauged_scalar(time_only, ev.r, ev.t) == doctest::Approx(lorenz.V - alpha));
    CHECK(gauged_vector(time_only, ev.r, ev.t) == lorenz.A);
    CHECK(gauged_scalar(space_only, ev.r, ev.t) == lorenz.V);
    CHECK((gauged_vector(space_only, ev.r, ev.t) - (lorenz.A + kappa)).norm() < 1e-15);
  }
}

TEST_CASE("time-modulated product shifts V by g(r) h'(t)") {
  const auto base = ball_and_loop();
  const auto g = GaugeFunction::time_modulated_product(1.2, Vec3(0.3, 0, 0), 0.4, 1.5, 0.2);
  GaugedPotentials gp(base, g);
  for (const auto& ev : random_events(5, 9)) {
    const double lorenz = base->scalar(ev.r, ev.t).V;
    CHECK(gauged_scalar(gp, ev.r, ev.t) ==
          doctest::Approx(lorenz - fd_time(g, ev.r, ev.t, 1e-5)).epsilon(1e-8));
  }
}

TEST_CASE("a distant bump only adds its gradient tail") {
  const auto base = ball_and_loop();
  const auto g = GaugeFunction::gaussian_bump(2.0, Vec3(3.0, 0, 0), 0.5);
  GaugedPotentials gp(base, g);
  const Vec3 r(0.9, 0.1, -0.2);
  const Vec3 shift = gauged_vector(gp, r, 0.0) - base->vector(r, 0.0).A;
  CHECK((shift - fd_gradient(g, r, 0.0, 1e-5)).norm() < 1e-9);
  const Vec3 farther(0.3, 0.1, -0.2);
  const Vec3 far_shift = gauged_vector(gp, farther, 0.0) - base->vector(farther, 0.0).A;
  CHECK(far_shift.norm() < 0.01 * shift.norm());
}

TEST_CASE("gauge changes leave E and B unchanged") {
  const double h = 1e-4;
  for (const auto& g : closed_form_gauges()) {
    CAPTURE(g.label());
    for (const auto& ev : random_events(5, 10)) {
      // curl(grad F) by central differences of the analytic gradient.
      Eigen::Matrix3d J;
      for (int c = 0; c < 3; ++c) {
        Vec3 e = Vec3::Zero();
        e[c] = h;
        J.col(c) = (g.gradient(ev.r + e, ev.t) - g.gradient(ev.r - e, ev.t)) / (2 * h);
      }
      const Vec3 curl(J(2, 1) - J(1, 2), J(0, 2) - J(2, 0), J(1, 0) - J(0, 1));
      CHECK(curl.norm() < 1e-6 * std::max(J.norm(), 1.0));
      // Change of E: grad(dF/dt) - d(grad F)/dt.
      Vec3 grad_dt;
      for (int c = 0; c < 3; ++c) {
        Vec3 e = Vec3::Zero();
        e[c] = h;
        grad_dt[c] = (g.time_derivative(ev.r + e, ev.t) - g.time_derivative(ev.r - e, ev.t)) / (2 * h);
      }
      const Vec3 dt_grad = (g.gradient(ev.r, ev.t + h) - g.gradient(ev.r, ev.t - h)) / (2 * h);
      CHECK((grad_dt - dt_grad).norm() < 1e-6 * std::max(grad_dt.norm(), 1.0));
    }
  }
}

TEST_CASE("Hamiltonian density and energy shift differ by -q dF/dt") {
  const auto base = ball_and_loop();
  const double q = -1.7, m = 2.0;
  for (const auto& g : closed_form_gauges()) {
    GaugedPotentials gp(base, g);
    for (const auto& ev : random_events(5, 11)) {
      const Vec3 p(0.3, -0.2, 0.05);
      const double H = hamiltonian_density(gp, ev.r, ev.t, q, p, m);
      const double E = energy_shift(gp, ev.r, ev.t, q, p, m);
      const double expected = -q * g.time_derivative(ev.r, ev.t);
      CHECK(std::abs((H - E) - expected) <= 1e-12 * std::max({std::abs(H), std::abs(E), 1.0}));
    }
  }
}

TEST_CASE("Hamiltonian density special cases") {
  const auto base = ball_and_loop();
  GaugedPotentials lorenz(base, GaugeFunction::identity());
  GaugedPotentials spatial(base, GaugeFunction::gaussian_bump(0.7, Vec3(0.2, 0.3, 0), 0.5));
  const Vec3 r(0.5, -0.4, 0.3), p(0.1, 0.2, -0.3);
  CHECK(hamiltonian_density(lorenz, r, 0, 0.0, p, 1.0) == 0.0);
  CHECK(hamiltonian_density(lorenz, r, 0, 2.0, Vec3::Zero(), 1.0) ==
        doctest::Approx(2.0 * base->scalar(r, 0).V));
  const auto s = base->both(r, 0);
  CHECK(hamiltonian_density(lorenz, r, 0, 2.0, p, 4.0) ==
        doctest::Approx(2.0 * s.V - 0.5 * p.dot(s.A)));
  CHECK(energy_shift(lorenz, r, 0, 2.0, p, 4.0) == hamiltonian_density(lorenz, r, 0, 2.0, p, 4.0));
  CHECK(energy_shift(spatial, r, 0, 2.0, p, 4.0) ==
        doctest::Approx(hamiltonian_density(spatial, r, 0, 2.0, p, 4.0)).epsilon(1e-15));
}

TEST_CASE("nonrelativistic check") {
  CHECK(is_nonrelativistic(Vec3(0.001, 0, 0), 1.0, 1.0));
  CHECK_FALSE(is_nonrelativistic(Vec3(0.5, 0, 0), 1.0, 1.0));
}

TEST_CASE("seeded random gauge family") {
  GaugeFamilyBounds b;
  b.feature_size = 0.6;
  b.t0 = 0.0;
  b.t1 = 100.0;
  const auto a = random_gauge_family(7, 20, b);
  const auto again = random_gauge_family(7, 20, b);
  const auto other = random_gauge_family(8, 20, b);
  REQUIRE(a.size() == 20);
  CHECK(a[3].label() == "random-7-3");
  const Vec3 r(0.1, 0.2, 0.3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].value(r, 4.0) == again[i].value(r, 4.0));
    CHECK(a[i].static_gradient());
    CHECK_FALSE(a[i].is_identity());
    const auto& terms = a[i].terms();
    CHECK(terms.size() >= 2);
    CHECK(terms.size() <= 4);
    for (const auto& t : terms) {
      CHECK(std::abs(t.amplitude) <= b.max_amplitude * b.amplitude_scale);
      if (t.kind == GaugeKind::gaussian_bump) {
        CHECK(t.width >= b.feature_size / 10);
        CHECK(t.width <= b.feature_size);
      } else if (t.omega == 0.0) {
        CHECK(2 * pi / t.vector.norm() >= b.feature_size / 10 * (1 - 1e-12));
      }
    }
  }
  int differing = 0;
  for (std::size_t i = 0; i < a.size(); ++i) differing += a[i].value(r, 4.0) != other[i].value(r, 4.0);
  CHECK(differing == 20);
  CHECK_THROWS_AS(random_gauge_family(1, -1, b), std::invalid_argument);
}

TEST_CASE("mode-built gauge terms plug into the gauge algebra") {
  auto src = std::make_shared<ModeGaugeSource>();
  src->config = SourceConfiguration({SourceElement::point_charge(1.0, Vec3::Zero())}, RU);
  src->spec.f = [](int sigma, const Vec3& k, double t) -> cplx {
    return sigma == 0 ? 0.05 * std::exp(-k.squaredNorm() / 2) * std::cos(0.5 * t) : 0.0;
  };
  const auto g = GaugeFunction::from_modes(src);
  CHECK_FALSE(g.static_gradient());
  const Vec3 r(0.4, 0.3, -0.2);
  const auto direct = effective_gauge_from_modes(src->spec, src->config, r, 1.0);
  CHECK(g.value(r, 1.0) == direct.F);
  CHECK(g.gradient(r, 1.0) == direct.grad);
  CHECK(g.time_derivative(r, 1.0) == direct.dF_dt);
  CHECK(g.time_derivative(r, 1.0) == doctest::Approx(fd_time(g, r, 1.0, 1e-3)).epsilon(1e-4));
}
