// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "abqed/cli/commands.hpp"
#include "abqed/interferometer.hpp"
#include "abqed/modespace.hpp"
#include "abqed/potentials.hpp"
#include "abqed/quadrature.hpp"

using namespace abqed;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Ideal solenoid on the z axis, evaluated outside: A = flux / (2 pi rho) phi-hat.
Vec3 ideal_A(double flux, const Vec3& r) {
  const double rho2 = r.x() * r.x() + r.y() * r.y();
  return Vec3(-r.y(), r.x(), 0.0) * (flux / (2 * pi * rho2));
}

double segment_integral(double flux, const Vec3& from, const Vec3& to) {
  const Vec3 d = to - from;
  auto f = [&](double s) { return ideal_A(flux, from + s * d).dot(d); };
  return quad::composite_gauss_legendre<double>(f, 0.0, 1.0, 128, 16);
}

double flux_2hbar_over_e() {
  const auto k = PhysicalConstants::si();
  return 2 * k.hbar / std::abs(Particle::electron().charge);
}

std::vector<InterferometerScenario> preset_scenarios(UnitSystem u, bool small_si_flux) {
  auto m = MagneticPresetParams::defaults(u);
  auto e = ElectricPresetParams::defaults(u);
  auto d = ElectrodynamicPresetParams::defaults(u);
  if (u == UnitSystem::si && small_si_flux) m.flux = d.flux = flux_2hbar_over_e();
  return {build_magnetic_preset(m), build_electric_preset(e), build_electrodynamic_preset(d)};
}

const char* label(UnitSystem u) { return u == UnitSystem::si ? "si" : "reduced"; }

// -- criterion 1 ------------------------------------------------------------

void magnetic_ab(Outcome& o) {
  const auto sc = build_magnetic_preset(MagneticPresetParams::defaults(UnitSystem::si));
  const auto d = phase_difference(sc);
  const double e_h = rel(d.hamiltonian.delta, sc.reference_delta);
  const double e_e = rel(d.energy.delta, sc.reference_delta);
  o.detail << "analytic rel err " << std::max(e_h, e_e);
  o.require(e_h <= 1e-9 && e_e <= 1e-9, "analytic solenoid within 1e-9");

  // A second enclosing loop with curved, asymmetric arms.
  auto sc2 = sc;
  const Particle electron;
  sc2.path_a = ParticlePath({{0, Vec3(-0.03, 0, 0)},
                             {3e-8, Vec3(-0.01, -0.05, 0.002)},
                             {6e-8, Vec3(0.04, -0.02, 0)},
                             {1e-7, Vec3(0.03, 0, 0)}},
                            electron, VelocityRule::catmull_rom);
  sc2.path_b = ParticlePath({{0, Vec3(-0.03, 0, 0)},
                             {5e-8, Vec3(0.0, 0.02, -0.001)},
                             {1e-7, Vec3(0.03, 0, 0)}},
                            electron, VelocityRule::catmull_rom);
  const double e2 = rel(phase_difference(sc2).hamiltonian.delta, sc.reference_delta);
  o.detail << ", curved loop " << e2;
  o.require(e2 <= 1e-9, "curved loop within 1e-9");

  auto p = MagneticPresetParams::defaults(UnitSystem::si);
  p.solenoid.finite = true;
  p.solenoid.length_ratio = 100.0;
  p.quadrature.force_quadrature = true;
  p.half_width = p.half_height = 1.5 * p.solenoid.radius;
  const auto start = std::chrono::steady_clock::now();
  const auto fin = build_magnetic_preset(p);
  const auto df = phase_difference(fin);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double e_f = rel(df.hamiltonian.delta, fin.reference_delta);
  o.detail << ", finite L/a=100 rel err " << e_f << " in " << secs << " s";
  o.require(e_f <= 1e-3, "finite solenoid within 1e-3");
  o.require(secs <= 120.0, "finite solenoid within 2 minutes");
}

// -- criterion 2 ------------------------------------------------------------

void electric_ab(Outcome& o) {
  for (UnitSystem u : {UnitSystem::si, UnitSystem::reduced}) {
    const auto p = ElectricPresetParams::defaults(u);
    const auto k = PhysicalConstants::for_units(u);
    const double expected = -p.particle.charge * (p.V_a - p.V_b) * p.effective_dwell() / k.hbar;
    const auto d = phase_difference(build_electric_preset(p));
    const double err = std::max(rel(d.hamiltonian.delta, expected), rel(d.energy.delta, expected));
    o.detail << label(u) << " rel err " << err << "; ";
    o.require(err <= 1e-6, std::string(label(u)) + " within 1e-6");
  }
}

// -- criterion 3 ------------------------------------------------------------

void electrodynamic_ab(Outcome& o) {
  for (UnitSystem u : {UnitSystem::reduced, UnitSystem::si}) {
    auto p = ElectrodynamicPresetParams::defaults(u);
    if (u == UnitSystem::si) p.flux = flux_2hbar_over_e();
    const auto k = PhysicalConstants::for_units(u);
    const auto sc = build_electrodynamic_preset(p);

    // Entry segments: the first two legs, up to the cage.
    auto entry = [&](const ParticlePath& path) {
      const auto kn = path.knots();
      return segment_integral(p.flux, kn[0].r, kn[1].r) +
             segment_integral(p.flux, kn[1].r, kn[2].r);
    };
    const double oracle = p.particle.charge / k.hbar * (entry(sc.path_a) - entry(sc.path_b));
    const auto d = phase_difference(sc);
    const double err =
        std::max(std::abs(d.hamiltonian.delta - oracle), std::abs(d.energy.delta - oracle));
    o.detail << label(u) << " dwell ramp err " << err << " rad";
    o.require(err <= 1e-6, std::string(label(u)) + " dwell ramp within 1e-6 rad");

    auto late = p;
    late.ramp_start = p.timeline.t_final() + p.timeline.leg_time;
    late.ramp_end = late.ramp_start + (p.ramp_end - p.ramp_start);
    const auto sl = build_electrodynamic_preset(late);
    const auto dl = phase_difference(sl);
    const double magnetic = p.particle.charge * p.flux / k.hbar;
    const double err_late =
        std::max(rel(dl.hamiltonian.delta, magnetic), rel(dl.energy.delta, magnetic));
    o.detail << ", after-exit rel err " << err_late << "; ";
    o.require(err_late <= 1e-9, std::string(label(u)) + " after-exit ramp gives q flux / hbar");
  }
}

// -- criterion 4 ------------------------------------------------------------

void gauge_invariance(Outcome& o) {
  double worst = 0.0, least_spread = 1e300;
  int presets = 0;
  for (UnitSystem u : {UnitSystem::reduced, UnitSystem::si}) {
    for (const auto& sc : preset_scenarios(u, true)) {
      const auto gauges = random_gauge_family(20260 + presets, 20, family_bounds_for(sc));
      const auto s = gauge_sweep(sc, gauges);
      const double dev = std::max(s.max_delta_deviation_hamiltonian, s.max_delta_deviation_energy);
      worst = std::max(worst, dev);
      least_spread = std::min(least_spread, s.per_path_spread);
      o.require(gauges.size() >= 20, "at least 20 gauges");
      o.require(dev <= 1e-9, std::string(label(u)) + " " + sc.name + " deviation <= 1e-9");
      o.require(s.per_path_spread > 1e-3,
                std::string(label(u)) + " " + sc.name + " per-path spread > 1e-3");
      ++presets;
    }
  }
  o.detail << presets << " preset runs x 20 gauges, max |ddelta| " << worst
           << " rad, min per-path spread " << least_spread << " rad";

  // Information only: the SI default flux puts delta near 6e9 rad.
  const auto big = build_magnetic_preset(MagneticPresetParams::defaults(UnitSystem::si));
  const auto s = gauge_sweep(big, random_gauge_family(1, 20, family_bounds_for(big)));
  o.detail << "; si default flux (info) max |ddelta| "
           << std::max(s.max_delta_deviation_hamiltonian, s.max_delta_deviation_energy)
           << " rad of " << std::abs(s.lorenz.hamiltonian.delta);
}

// -- criterion 5 ------------------------------------------------------------

std::vector<GaugeFunction> identity_gauges(const InterferometerScenario& sc) {
  const auto b = family_bounds_for(sc);
  const double T = b.t1 - b.t0, d = b.feature_size, amp = b.amplitude_scale;
  auto out = random_gauge_family(99, 5, b);
  out.push_back(GaugeFunction::time_modulated_product(
      1.3 * amp, 0.5 * (b.box_min + b.box_max), d / 3, 2 * pi * 2 / T, 0.4));
  out.push_back(GaugeFunction::sinusoidal(0.7 * amp, Vec3(2 * pi / d, 0.5 / d, 0), 2 * pi * 3 / T,
                                          0.1));
  out.push_back(GaugeFunction::linear(Vec3(0.3 * amp / d, 0, 0), 0.9 * amp / T));
  return out;
}

void calculator_identity(Outcome& o) {
  double worst = 0.0;
  int checks = 0;
  for (UnitSystem u : {UnitSystem::reduced, UnitSystem::si}) {
    for (auto sc : preset_scenarios(u, true)) {
      sc.numerics.phase_tol = 1e-11;
      const double T = sc.path_a.tf() - sc.path_a.t0();
      const auto open = sc.open_segment(sc.path_a.t0() + 0.2 * T, sc.path_a.t0() + 0.7 * T);
      for (const InterferometerScenario* s : {&std::as_const(sc), &open})
        for (const auto& g : identity_gauges(sc)) {
          const auto gp = s->potentials().with_gauge(g);
          for (const auto* path : {&s->path_a, &s->path_b}) {
            const double h = accumulate_phase_hamiltonian(*path, gp, s->numerics).phase;
            const double e = accumulate_phase_energy(*path, gp, s->numerics).phase;
            const double t = gauge_time_phase(*path, g, s->constants(), s->numerics);
            worst = std::max(worst, std::abs((h - e) - t));
            ++checks;
          }
        }
    }
  }
  o.detail << checks << " path/gauge pairs, max |phi_H - phi_E - (q/hbar) int dF/dt| " << worst
           << " rad";
  o.require(worst <= 1e-9, "identity within 1e-9 rad");
}

// -- criterion 6 ------------------------------------------------------------

void mode_space(Outcome& o) {
  double worst = 0.0, lambda3 = 0.0;
  int probes = 0;
  const auto sources = cli::modespace_reference_sources(UnitSystem::reduced);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& src = sources[i];
    const FieldModel real(src.config);
    const auto pts = cli::modespace_probe_points(src.config, src.scale, 20, 41 + i);
    for (const auto& r : pts) {
      const auto p = cli::compare_modespace(src.config, real, r, {});
      worst = std::max({worst, p.rel_error_V, p.rel_error_A});
      ++probes;
    }
    if (src.config.has_currents())
      for (auto m : {TransformMethod::analytic, TransformMethod::quadrature})
        lambda3 = std::max(lambda3,
                           cli::max_longitudinal_fraction(src.config, src.scale, 20, 7 + i, m));
  }
  o.detail << sources.size() << " sources x 20 probes (" << probes << "), max rel err " << worst
           << ", max |lambda_3|/|lambda| " << lambda3;
  o.require(worst <= 1e-3, "k-space matches real space within 1e-3");
  o.require(lambda3 <= 1e-10, "lambda_3 <= 1e-10 for closed currents");
}

// -- criterion 7 ------------------------------------------------------------

void energy_constant(Outcome& o) {
  const auto k = PhysicalConstants::reduced();
  const double Q = 1.0, s = 0.25;
  const SourceConfiguration ball({SourceElement::gaussian_ball(Q, Vec3::Zero(), s)}, k);
  // (1/2) int rho V d^3r with V = Q erf(r / (sqrt2 s)) / (4 pi eps0 r).
  auto integrand = [&](double r) {
    const double rho = Q * std::exp(-r * r / (2 * s * s)) / std::pow(2 * pi * s * s, 1.5);
    const double V = r == 0 ? Q * std::sqrt(2 / pi) / (4 * pi * k.eps0 * s)
                            : Q * std::erf(r / (std::sqrt(2.0) * s)) / (4 * pi * k.eps0 * r);
    return 0.5 * rho * V * 4 * pi * r * r;
  };
  const double ball_oracle = quad::composite_gauss_legendre<double>(integrand, 0.0, 12 * s, 64, 16);
  const double ball_C = ground_energy_constant(ball, 0.0).value;
  const double e_ball = rel(ball_C, ball_oracle);
  o.detail << "ball rel err " << e_ball;
  o.require(e_ball <= 1e-3, "ball within 1e-3");

  // Tube loop: -(1/2) int J.A = -(mu0 I^2 / 8 pi) oint oint t.t' erf(d / 2w) / d.
  const double I = 1.0, a = 1.0, w = 0.05;
  auto loop = SourceElement::current_loop(I, Vec3::Zero(), Vec3::UnitZ(), a);
  loop.wire_radius = w;
  const SourceConfiguration tube({loop}, k);
  auto kernel = [&](double u) {
    const double d = 2 * a * std::abs(std::sin(u / 2));
    const double g = d < 1e-12 ? 1.0 / (w * std::sqrt(pi)) : std::erf(d / (2 * w)) / d;
    return std::cos(u) * g;
  };
  const double ring = quad::composite_gauss_legendre<double>(kernel, -pi, pi, 512, 16);
  const double tube_oracle = -(k.mu0 * I * I / (8 * pi)) * 2 * pi * a * a * ring;
  const double tube_C = ground_energy_constant(tube, 0.0).value;
  const double e_tube = rel(tube_C, tube_oracle);
  o.detail << ", tube loop rel err " << e_tube;
  o.require(e_tube <= 1e-3, "tube loop within 1e-3");

  bool threw = false;
  try {
    ground_energy_constant(SourceConfiguration({SourceElement::point_charge(Q, Vec3::Zero())}, k),
                           0.0);
  } catch (const SelfEnergyDivergent&) {
    threw = true;
  }
  o.detail << ", point charge " << (threw ? "raises SelfEnergyDivergent" : "did not raise");
  o.require(threw, "point charge raises SelfEnergyDivergent");
}

// -- criterion 8 ------------------------------------------------------------

void kernel_identity(Outcome& o) {
  double worst = 0.0;
  for (double r : {0.1, 0.316, 1.0, 3.16, 10.0}) {
    const auto kr = kernel_identity_check(r, 10.0 / r, 8);
    worst = std::max(worst, kr.relative_error());
  }
  o.detail << "5 radii 0.1..10, max rel err " << worst;
  o.require(worst <= 1e-3, "kernel identity within 1e-3");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "magnetic AB", magnetic_ab},
      {2, "electric AB", electric_ab},
      {3, "electrodynamic AB", electrodynamic_ab},
      {4, "gauge invariance", gauge_invariance},
      {5, "calculator identity", calculator_identity},
      {6, "mode-space consistency", mode_space},
      {7, "energy constant", energy_constant},
      {8, "kernel identity", kernel_identity},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("criterion %d %-24s %s  %s (%.1f s)\n", c.id, c.name, o.pass ? "PASS" : "FAIL",
                o.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
