#include "abqed/interferometer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "abqed/quadrature.hpp"

namespace abqed {

// ---------------------------------------------------------------------------
// Worldlines

ParticlePath::ParticlePath(std::vector<Waypoint> waypoints, Particle particle,
                           VelocityRule rule)
    : particle_(particle) {
  if (waypoints.size() < 2)
    throw BadScenarioParameters("a path needs at least two waypoints");
  const std::size_t n = waypoints.size();
  knots_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && !(waypoints[i].t > waypoints[i - 1].t))
      throw BadScenarioParameters("waypoint times must increase");
    knots_[i] = {waypoints[i].t, waypoints[i].r, Vec3::Zero()};
  }
  if (rule == VelocityRule::catmull_rom) {
    auto slope = [&](std::size_t i, std::size_t j) {
      return Vec3((knots_[j].r - knots_[i].r) / (knots_[j].t - knots_[i].t));
    };
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t lo = i == 0 ? 0 : i - 1;
      const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
      knots_[i].v = slope(lo, hi);
    }
  }
  for (std::size_t leg = 0; leg + 1 < n; ++leg)
    if (is_dwell(leg)) knots_[leg].v = knots_[leg + 1].v = Vec3::Zero();
}

ParticlePath ParticlePath::from_knots(std::vector<Knot> knots, Particle particle) {
  if (knots.size() < 2) throw BadScenarioParameters("a path needs at least two knots");
  for (std::size_t i = 1; i < knots.size(); ++i)
    if (!(knots[i].t > knots[i - 1].t))
      throw BadScenarioParameters("knot times must increase");
  ParticlePath p;
  p.knots_ = std::move(knots);
  p.particle_ = particle;
  return p;
}

std::size_t ParticlePath::leg_of(double t) const {
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                             [](double x, const Knot& k) { return x < k.t; });
  std::size_t i = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
  return std::min(i, knots_.size() - 2);
}

bool ParticlePath::is_dwell(std::size_t leg) const {
  return (knots_[leg + 1].r - knots_[leg].r).norm() == 0.0;
}

Vec3 ParticlePath::position(double t) const {
  const std::size_t i = leg_of(t);
  const Knot& a = knots_[i];
  const Knot& b = knots_[i + 1];
  const double h = b.t - a.t;
  const double s = (t - a.t) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * a.r + (s3 - 2 * s2 + s) * h * a.v +
         (-2 * s3 + 3 * s2) * b.r + (s3 - s2) * h * b.v;
}

Vec3 ParticlePath::velocity(double t) const {
  const std::size_t i = leg_of(t);
  const Knot& a = knots_[i];
  const Knot& b = knots_[i + 1];
  const double h = b.t - a.t;
  const double s = (t - a.t) / h;
  const double s2 = s * s;
  return (6 * s2 - 6 * s) * (a.r - b.r) / h + (3 * s2 - 4 * s + 1) * a.v +
         (3 * s2 - 2 * s) * b.v;
}

double ParticlePath::max_speed() const {
  double vmax = 0.0;
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
    const double ta = knots_[i].t, tb = knots_[i + 1].t;
    for (int j = 0; j <= 64; ++j)
      vmax = std::max(vmax, velocity(ta + (tb - ta) * j / 64.0).norm());
  }
  return vmax;
}

ParticlePath ParticlePath::restricted(double t_begin, double t_end) const {
  if (!(t_end > t_begin) || t_begin < t0() || t_end > tf())
    throw BadScenarioParameters("restriction window must lie inside the path");
  std::vector<Knot> out;
  out.push_back({t_begin, position(t_begin), velocity(t_begin)});
  for (const auto& k : knots_)
    if (k.t > t_begin && k.t < t_end) out.push_back(k);
  out.push_back({t_end, position(t_end), velocity(t_end)});
  return from_knots(std::move(out), particle_);
}

void ParticlePath::validate(double c) const {
  if (knots_.size() < 2) throw BadScenarioParameters("path has fewer than two knots");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!std::isfinite(knots_[i].t) || !knots_[i].r.allFinite() || !knots_[i].v.allFinite())
      throw BadScenarioParameters("path knots must be finite");
    if (i > 0 && !(knots_[i].t > knots_[i - 1].t))
      throw BadScenarioParameters("path times must increase");
  }
  if (!(particle_.mass > 0)) throw BadScenarioParameters("particle mass must be > 0");
  const double v = max_speed();
  if (!(v < c)) {
    std::ostringstream msg;
    msg << "path speed " << v << " reaches the speed of light " << c;
    throw BadScenarioParameters(msg.str());
  }
}

// ---------------------------------------------------------------------------
// Phase accumulation

std::string to_string(Calculator c) {
  return c == Calculator::hamiltonian ? "hamiltonian" : "energy";
}

namespace {

std::vector<double> path_breakpoints(const ParticlePath& path, const FieldModel* field) {
  std::vector<double> cuts;
  for (const auto& k : path.knots()) cuts.push_back(k.t);
  if (field)
    for (double t : field->schedule_breakpoints()) cuts.push_back(t);
  return cuts;
}

quad::AdaptiveOptions options_of(const PhaseSettings& s) {
  quad::AdaptiveOptions o;
  o.abs_tol = s.phase_tol;
  o.rel_tol = s.rel_tol;
  o.max_depth = s.max_depth;
  o.max_intervals = s.max_intervals;
  return o;
}

}  // namespace

PathPhase accumulate_phase(Calculator calculator, const ParticlePath& path,
                           const GaugedPotentials& potentials,
                           const PhaseSettings& settings) {
  PathPhase out;
  const double q = path.particle().charge;
  if (q == 0.0) return out;
  const double hbar = potentials.base().config().constants.hbar;
  const double scale = q / hbar;

  // (scalar term, vector term, unused) integrands.
  auto f = [&](double t) -> Vec3 {
    const Vec3 r = path.position(t);
    const Vec3 v = path.velocity(t);
    const GaugedSample s = potentials.evaluate(r, t);
    double V;
    Vec3 A;
    if (calculator == Calculator::hamiltonian) {
      V = s.V;
      A = s.A;
    } else {
      V = s.lorenz.V;
      A = s.lorenz.A + s.grad_F;
    }
    return {-scale * V, scale * v.dot(A), 0.0};
  };

  const auto cuts = path_breakpoints(path, &potentials.base());
  const auto r = quad::integrate<Vec3>(f, path.t0(), path.tf(), options_of(settings), cuts);
  if (!r.converged) {
    std::ostringstream msg;
    msg << to_string(calculator) << " phase did not reach " << settings.phase_tol
        << " rad (error estimate " << r.error << " rad)";
    throw PhaseNotConverged(msg.str());
  }
  out.scalar_term = r.value.x();
  out.vector_term = r.value.y();
  out.phase = out.scalar_term + out.vector_term;
  out.est_error = r.error;
  out.evaluations = r.evaluations;
  return out;
}

PathPhase accumulate_phase_hamiltonian(const ParticlePath& path,
                                       const GaugedPotentials& potentials,
                                       const PhaseSettings& settings) {
  return accumulate_phase(Calculator::hamiltonian, path, potentials, settings);
}

PathPhase accumulate_phase_energy(const ParticlePath& path,
                                  const GaugedPotentials& potentials,
                                  const PhaseSettings& settings) {
  return accumulate_phase(Calculator::energy, path, potentials, settings);
}

double gauge_time_phase(const ParticlePath& path, const GaugeFunction& gauge,
                        const PhysicalConstants& k, const PhaseSettings& settings) {
  const double scale = path.particle().charge / k.hbar;
  if (scale == 0.0 || gauge.is_identity()) return 0.0;
  auto f = [&](double t) { return scale * gauge.time_derivative(path.position(t), t); };
  const auto cuts = path_breakpoints(path, nullptr);
  const auto r = quad::integrate<double>(f, path.t0(), path.tf(), options_of(settings), cuts);
  if (!r.converged) throw PhaseNotConverged("gauge time phase did not converge");
  return r.value;
}

// ---------------------------------------------------------------------------
// Scenarios

InterferometerScenario InterferometerScenario::with_gauge(GaugeFunction g) const {
  InterferometerScenario s = *this;
  s.gauge = std::move(g);
  return s;
}

bool InterferometerScenario::is_closed(double tol) const {
  const double scale = std::max(1.0, diameter());
  return (path_a.start() - path_b.start()).norm() <= tol * scale &&
         (path_a.end() - path_b.end()).norm() <= tol * scale &&
         std::abs(path_a.t0() - path_b.t0()) <= tol * std::max(1.0, std::abs(path_a.t0())) &&
         std::abs(path_a.tf() - path_b.tf()) <= tol * std::max(1.0, std::abs(path_a.tf()));
}

InterferometerScenario InterferometerScenario::open_segment(double t_begin,
                                                            double t_end) const {
  InterferometerScenario s = *this;
  s.path_a = path_a.restricted(t_begin, t_end);
  s.path_b = path_b.restricted(t_begin, t_end);
  s.open_mode = true;
  s.reference_delta = std::numeric_limits<double>::quiet_NaN();
  s.name = name + "-open";
  return s;
}

double InterferometerScenario::diameter() const {
  std::vector<Vec3> pts;
  for (const auto* p : {&path_a, &path_b}) {
    for (const auto& k : p->knots()) pts.push_back(k.r);
    const auto ks = p->knots();
    for (std::size_t i = 0; i + 1 < ks.size(); ++i)
      pts.push_back(p->position(0.5 * (ks[i].t + ks[i + 1].t)));
  }
  double d = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) d = std::max(d, (pts[i] - pts[j]).norm());
  return d;
}

void InterferometerScenario::validate() const {
  if (!field) throw BadScenarioParameters("scenario has no field model");
  const double c = constants().c;
  path_a.validate(c);
  path_b.validate(c);
  if (path_a.particle().charge != path_b.particle().charge ||
      path_a.particle().mass != path_b.particle().mass)
    throw BadScenarioParameters("both paths must carry the same particle");
  for (const auto& t : gauge.terms()) t.validate();
  if (!open_mode && !is_closed())
    throw BadScenarioParameters(
        "paths do not share start and end events; use open mode for open paths");
}

PhaseDifference phase_difference(const InterferometerScenario& scenario) {
  scenario.validate();
  const auto gp = scenario.potentials();
  PhaseDifference out;
  for (Calculator c : {Calculator::hamiltonian, Calculator::energy}) {
    PhaseResult r;
    r.calculator = c;
    r.a = accumulate_phase(c, scenario.path_a, gp, scenario.numerics);
    r.b = accumulate_phase(c, scenario.path_b, gp, scenario.numerics);
    r.phi_a = r.a.phase;
    r.phi_b = r.b.phase;
    r.delta = r.phi_a - r.phi_b;
    r.est_error = r.a.est_error + r.b.est_error;
    (c == Calculator::hamiltonian ? out.hamiltonian : out.energy) = r;
  }
  out.calculator_mismatch = std::abs(out.hamiltonian.delta - out.energy.delta);
  out.agreement_required =
      !scenario.open_mode && scenario.is_closed() && scenario.gauge.static_gradient();
  if (out.agreement_required) {
    const double tol = 2 * scenario.numerics.phase_tol + out.hamiltonian.est_error +
                       out.energy.est_error;
    if (out.calculator_mismatch > tol) {
      std::ostringstream msg;
      msg << "closed-loop deltas differ by " << out.calculator_mismatch
          << " rad (hamiltonian " << out.hamiltonian.delta << ", energy "
          << out.energy.delta << ", gauge " << scenario.gauge.label() << ")";
      throw CalculatorMismatchOnClosedLoop(msg.str());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Presets

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw BadScenarioParameters(what);
}

void check_solenoid(const SolenoidParams& s) {
  require(s.radius > 0, "solenoid radius must be > 0");
  require(s.turns_per_meter > 0, "solenoid turns_per_meter must be > 0");
  if (s.finite) {
    require(s.length_ratio > 0, "solenoid length_ratio must be > 0");
    require(s.loops >= 1 && s.segments >= 3, "solenoid needs loops >= 1, segments >= 3");
  }
}

void check_frame(double half_width, double half_height, double inner) {
  require(half_width > 0 && half_height > 0, "path half_width and half_height must be > 0");
  require(half_width > inner && half_height > inner,
          "paths must pass outside the solenoid and cages");
}

// Path through the cage at (0, y): start, corner, cage, dwell, cage, corner, end.
std::pair<ParticlePath, ParticlePath> cage_paths(double half_width, double half_height,
                                                 const CageTimeline& tl,
                                                 const Particle& particle) {
  require(tl.leg_time > 0 && tl.dwell_time > 0, "leg_time and dwell_time must be > 0");
  auto make = [&](double y) {
    const double l = tl.leg_time;
    std::vector<Waypoint> w{{0.0, Vec3(-half_width, 0, 0)},
                            {l, Vec3(-half_width, y, 0)},
                            {2 * l, Vec3(0, y, 0)},
                            {tl.t_leave(), Vec3(0, y, 0)},
                            {tl.t_leave() + l, Vec3(half_width, y, 0)},
                            {tl.t_final(), Vec3(half_width, 0, 0)}};
    return ParticlePath(std::move(w), particle);
  };
  return {make(-half_height), make(half_height)};
}

}  // namespace

SourceElement make_solenoid(double flux, const SolenoidParams& s,
                            const PhysicalConstants& k) {
  check_solenoid(s);
  const double current = flux / (k.mu0 * s.turns_per_meter * pi * s.radius * s.radius);
  if (!s.finite)
    return SourceElement::infinite_solenoid(current, Vec3::Zero(), Vec3::UnitZ(), s.radius,
                                            s.turns_per_meter);
  return SourceElement::finite_solenoid(current, Vec3::Zero(), Vec3::UnitZ(), s.radius,
                                        s.length_ratio * s.radius, s.turns_per_meter,
                                        s.loops, s.segments);
}

MagneticPresetParams MagneticPresetParams::defaults(UnitSystem u) {
  MagneticPresetParams p;
  p.units = u;
  p.particle = Particle::for_units(u);
  if (u == UnitSystem::reduced) {
    p.flux = 1.0;
    p.solenoid.radius = 0.1;
    p.solenoid.turns_per_meter = 10.0;
    p.half_width = 0.3;
    p.half_height = 0.3;
    p.duration = 100.0;
  }
  return p;
}

ElectricPresetParams ElectricPresetParams::defaults(UnitSystem u) {
  ElectricPresetParams p;
  p.units = u;
  p.particle = Particle::for_units(u);
  if (u == UnitSystem::reduced) {
    p.V_a = 0.01;
    p.V_b = 0.0;
    p.pulse_start = 30.0;
    p.pulse_end = 310.0;
    p.ramp_time = 100.0;
    p.cage_radius = 0.05;
    p.half_width = 0.3;
    p.half_height = 0.3;
    p.timeline = {10.0, 300.0};
  }
  return p;
}

ElectrodynamicPresetParams ElectrodynamicPresetParams::defaults(UnitSystem u) {
  ElectrodynamicPresetParams p;
  p.units = u;
  p.particle = Particle::for_units(u);
  if (u == UnitSystem::reduced) {
    p.flux = 1.0;
    p.solenoid.radius = 0.1;
    p.solenoid.turns_per_meter = 10.0;
    p.ramp_start = 50.0;
    p.ramp_end = 250.0;
    p.cage_radius = 0.05;
    p.half_width = 0.3;
    p.half_height = 0.3;
    p.timeline = {10.0, 300.0};
  }
  return p;
}

InterferometerScenario build_magnetic_preset(const MagneticPresetParams& p) {
  const auto k = PhysicalConstants::for_units(p.units);
  require(std::isfinite(p.flux), "flux must be finite");
  require(p.duration > 0, "duration must be > 0");
  check_frame(p.half_width, p.half_height, p.solenoid.radius);
  if (p.solenoid.finite)
    require(p.solenoid.length_ratio * p.solenoid.radius > 2 * p.half_height,
            "finite solenoid must be longer than the path frame");

  const SourceElement sol = make_solenoid(p.flux, p.solenoid, k);
  InterferometerScenario s;
  s.name = "magnetic";
  s.field = std::make_shared<FieldModel>(SourceConfiguration({sol}, k), p.quadrature);
  auto make = [&](double y) {
    const double T = p.duration;
    std::vector<Waypoint> w{{0.0, Vec3(-p.half_width, 0, 0)},
                            {T / 3, Vec3(-p.half_width, y, 0)},
                            {2 * T / 3, Vec3(p.half_width, y, 0)},
                            {T, Vec3(p.half_width, 0, 0)}};
    return ParticlePath(std::move(w), p.particle, p.velocity);
  };
  s.path_a = make(-p.half_height);
  s.path_b = make(p.half_height);
  s.numerics = p.numerics;
  s.reference_delta = p.particle.charge * solenoid_flux(sol, 0.0, k).webers / k.hbar;
  s.validate();
  return s;
}

InterferometerScenario build_electric_preset(const ElectricPresetParams& p) {
  const auto k = PhysicalConstants::for_units(p.units);
  const auto& tl = p.timeline;
  require(std::isfinite(p.V_a) && std::isfinite(p.V_b), "cage potentials must be finite");
  require(p.cage_radius > 0, "cage_radius must be > 0");
  require(p.ramp_time > 0, "ramp_time must be > 0");
  require(p.pulse_start + p.ramp_time <= p.pulse_end - p.ramp_time,
          "pulse must be at least two ramp times long");
  require(p.pulse_start >= tl.t_enter() && p.pulse_end <= tl.t_leave(),
          "potential pulse must lie inside the dwell");
  check_frame(p.half_width, p.half_height, p.cage_radius);
  require(2 * p.half_height > 2 * p.cage_radius, "cages overlap");

  // Shell charges giving exactly V_a, V_b at the cage centers.
  const double coulomb = 1.0 / (4 * pi * k.eps0);
  const double self = coulomb / p.cage_radius;
  const double cross = coulomb / (2 * p.half_height);
  const double det = self * self - cross * cross;
  const double Qa = (self * p.V_a - cross * p.V_b) / det;
  const double Qb = (self * p.V_b - cross * p.V_a) / det;

  const auto up =
      TimeSchedule::linear_ramp(p.pulse_start, p.pulse_start + p.ramp_time, 0.0, 1.0);
  const auto down =
      TimeSchedule::linear_ramp(p.pulse_end - p.ramp_time, p.pulse_end, 0.0, 1.0);
  std::vector<SourceElement> els;
  for (auto [Q, y] : {std::pair{Qa, -p.half_height}, std::pair{Qb, p.half_height}}) {
    if (Q == 0.0) continue;
    els.push_back(SourceElement::charged_shell(Q, Vec3(0, y, 0), p.cage_radius).with_schedule(up));
    els.push_back(
        SourceElement::charged_shell(-Q, Vec3(0, y, 0), p.cage_radius).with_schedule(down));
  }

  InterferometerScenario s;
  s.name = "electric";
  s.field = std::make_shared<FieldModel>(SourceConfiguration(std::move(els), k), p.quadrature);
  std::tie(s.path_a, s.path_b) = cage_paths(p.half_width, p.half_height, tl, p.particle);
  s.numerics = p.numerics;
  s.reference_delta = -p.particle.charge / k.hbar * (p.V_a - p.V_b) * p.effective_dwell();
  s.validate();
  return s;
}

InterferometerScenario build_electrodynamic_preset(const ElectrodynamicPresetParams& p) {
  const auto k = PhysicalConstants::for_units(p.units);
  const auto& tl = p.timeline;
  require(std::isfinite(p.flux) && std::isfinite(p.final_fraction),
          "flux and final_fraction must be finite");
  require(p.ramp_end > p.ramp_start, "ramp_end must exceed ramp_start");
  require(p.cage_radius > 0, "cage_radius must be > 0");
  check_frame(p.half_width, p.half_height, std::max(p.cage_radius, p.solenoid.radius));
  require(p.half_height > p.solenoid.radius + p.cage_radius,
          "cages must not overlap the solenoid");

  SourceElement sol = make_solenoid(p.flux, p.solenoid, k);
  sol.schedule = p.smooth_ramp ? TimeSchedule::smoothstep_ramp(p.ramp_start, p.ramp_end, 1.0,
                                                               p.final_fraction)
                               : TimeSchedule::linear_ramp(p.ramp_start, p.ramp_end, 1.0,
                                                           p.final_fraction);
  std::vector<SourceElement> els{sol};
  if (p.cage_charge_a != 0.0)
    els.push_back(SourceElement::charged_shell(p.cage_charge_a, Vec3(0, -p.half_height, 0),
                                               p.cage_radius));
  if (p.cage_charge_b != 0.0)
    els.push_back(SourceElement::charged_shell(p.cage_charge_b, Vec3(0, p.half_height, 0),
                                               p.cage_radius));

  InterferometerScenario s;
  s.name = "electrodynamic";
  s.field = std::make_shared<FieldModel>(SourceConfiguration(std::move(els), k), p.quadrature);
  std::tie(s.path_a, s.path_b) = cage_paths(p.half_width, p.half_height, tl, p.particle);
  s.numerics = p.numerics;
  const bool uncharged = p.cage_charge_a == 0.0 && p.cage_charge_b == 0.0;
  const double full = p.particle.charge * solenoid_flux(sol, p.ramp_start, k).webers / k.hbar;
  if (uncharged && p.ramp_start >= tl.t_final()) s.reference_delta = full;
  if (uncharged && p.ramp_end <= 0.0) s.reference_delta = full * p.final_fraction;
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Sweeps

std::vector<OpenPathRow> open_path_report(const InterferometerScenario& scenario,
                                          std::span<const GaugeFunction> gauges) {
  std::vector<OpenPathRow> rows;
  for (std::size_t i = 0; i < gauges.size(); ++i) {
    const auto sc = scenario.with_gauge(gauges[i]);
    sc.validate();
    const auto gp = sc.potentials();
    for (Calculator c : {Calculator::hamiltonian, Calculator::energy})
      for (char which : {'a', 'b'}) {
        OpenPathRow row;
        row.gauge_index = i;
        row.gauge_label = gauges[i].label();
        row.calculator = c;
        row.path = which;
        row.phase = accumulate_phase(c, which == 'a' ? sc.path_a : sc.path_b, gp, sc.numerics);
        rows.push_back(row);
      }
  }
  return rows;
}

SweepSummary gauge_sweep(const InterferometerScenario& scenario,
                         std::span<const GaugeFunction> gauges) {
  SweepSummary out;
  out.lorenz = phase_difference(scenario.with_gauge(GaugeFunction::identity()));
  // Per-path extremes over (calculator, path).
  std::array<double, 4> lo, hi;
  auto track = [&](const PhaseDifference& d, bool first) {
    const std::array<double, 4> v{d.hamiltonian.phi_a, d.hamiltonian.phi_b, d.energy.phi_a,
                                  d.energy.phi_b};
    for (int j = 0; j < 4; ++j) {
      lo[j] = first ? v[j] : std::min(lo[j], v[j]);
      hi[j] = first ? v[j] : std::max(hi[j], v[j]);
    }
  };
  track(out.lorenz, true);
  out.max_calculator_mismatch = out.lorenz.calculator_mismatch;
  for (std::size_t i = 0; i < gauges.size(); ++i) {
    SweepRow row;
    row.gauge_index = i;
    row.gauge_label = gauges[i].label();
    row.result = phase_difference(scenario.with_gauge(gauges[i]));
    out.max_delta_deviation_hamiltonian =
        std::max(out.max_delta_deviation_hamiltonian,
                 std::abs(row.result.hamiltonian.delta - out.lorenz.hamiltonian.delta));
    out.max_delta_deviation_energy =
        std::max(out.max_delta_deviation_energy,
                 std::abs(row.result.energy.delta - out.lorenz.energy.delta));
    out.max_calculator_mismatch =
        std::max(out.max_calculator_mismatch, row.result.calculator_mismatch);
    track(row.result, false);
    out.rows.push_back(std::move(row));
  }
  for (int j = 0; j < 4; ++j) out.per_path_spread = std::max(out.per_path_spread, hi[j] - lo[j]);
  return out;
}

GaugeFamilyBounds family_bounds_for(const InterferometerScenario& scenario) {
  GaugeFamilyBounds b;
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto* p : {&scenario.path_a, &scenario.path_b})
    for (const auto& k : p->knots()) {
      lo = lo.cwiseMin(k.r);
      hi = hi.cwiseMax(k.r);
    }
  const double d = std::max(scenario.diameter(), 1e-300);
  const Vec3 pad = Vec3::Constant(0.2 * d);
  b.box_min = lo - pad;
  b.box_max = hi + pad;
  b.feature_size = d;
  const double q = std::abs(scenario.path_a.particle().charge);
  b.amplitude_scale = q > 0 ? scenario.constants().hbar / q : 1.0;
  b.t0 = std::min(scenario.path_a.t0(), scenario.path_b.t0());
  b.t1 = std::max(scenario.path_a.tf(), scenario.path_b.tf());
  return b;
}

}  // namespace abqed
