#pragma once

// Two-path interferometer scenarios and the two phase calculators.
//
//   hamiltonian:  phi = -(1/hbar) int [q V' - q v . A'] dt
//   energy:       phi = -(1/hbar) int [q V  - q v . (A + grad F)] dt
//
// Wave packets are idealized to their centers r(t) with momentum m v(t).

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "abqed/common.hpp"
#include "abqed/gauge.hpp"
#include "abqed/potentials.hpp"

namespace abqed {

struct Waypoint {
  double t;
  Vec3 r;
};

/// Knot velocities of the piecewise-cubic (Hermite) worldline. With
/// stop_at_waypoints every leg is a straight segment traversed with zero
/// end velocities; catmull_rom uses central differences at interior knots.
/// Legs whose endpoints coincide are dwells with v = 0 in both cases.
enum class VelocityRule { stop_at_waypoints, catmull_rom };

class ParticlePath {
 public:
  struct Knot {
    double t;
    Vec3 r;
    Vec3 v;
  };

  ParticlePath() = default;
  ParticlePath(std::vector<Waypoint> waypoints, Particle particle,
               VelocityRule rule = VelocityRule::stop_at_waypoints);
  /// Directly from Hermite knots.
  static ParticlePath from_knots(std::vector<Knot> knots, Particle particle);

  Vec3 position(double t) const;
  Vec3 velocity(double t) const;
  Vec3 momentum(double t) const { return particle_.mass * velocity(t); }

  double t0() const { return knots_.front().t; }
  double tf() const { return knots_.back().t; }
  const Vec3& start() const { return knots_.front().r; }
  const Vec3& end() const { return knots_.back().r; }
  std::span<const Knot> knots() const { return knots_; }
  bool is_dwell(std::size_t leg) const;
  const Particle& particle() const { return particle_; }
  double max_speed() const;

  /// The same worldline restricted to [t_begin, t_end].
  ParticlePath restricted(double t_begin, double t_end) const;

  /// Throws BadScenarioParameters for non-increasing times or |v| >= c.
  void validate(double c) const;

 private:
  std::vector<Knot> knots_;
  Particle particle_;
  std::size_t leg_of(double t) const;
};

enum class Calculator { hamiltonian, energy };
std::string to_string(Calculator c);

struct PhaseSettings {
  double phase_tol = 1e-9;  // radians, absolute
  double rel_tol = 1e-13;   // relative to the accumulated phase
  int max_depth = 40;
  int max_intervals = 20000;
};

struct PathPhase {
  double phase = 0.0;
  double scalar_term = 0.0;  // -(q/hbar) int V dt  (V' or V per calculator)
  double vector_term = 0.0;  // (q/hbar) int v . A dt  (A' or A + grad F)
  double est_error = 0.0;
  long evaluations = 0;
};

PathPhase accumulate_phase_hamiltonian(const ParticlePath& path,
                                       const GaugedPotentials& potentials,
                                       const PhaseSettings& settings = {});
PathPhase accumulate_phase_energy(const ParticlePath& path,
                                  const GaugedPotentials& potentials,
                                  const PhaseSettings& settings = {});
PathPhase accumulate_phase(Calculator calculator, const ParticlePath& path,
                           const GaugedPotentials& potentials,
                           const PhaseSettings& settings = {});

/// (q/hbar) int dF/dt dt along the worldline, integrated on its own. Equals
/// phi_hamiltonian - phi_energy on the same path.
double gauge_time_phase(const ParticlePath& path, const GaugeFunction& gauge,
                        const PhysicalConstants& k, const PhaseSettings& settings = {});

struct PhaseResult {
  Calculator calculator = Calculator::hamiltonian;
  PathPhase a;
  PathPhase b;
  double phi_a = 0.0;
  double phi_b = 0.0;
  double delta = 0.0;  // phi_a - phi_b
  double est_error = 0.0;
};

struct InterferometerScenario {
  std::string name;
  ParticlePath path_a;
  ParticlePath path_b;
  std::shared_ptr<const FieldModel> field;
  GaugeFunction gauge = GaugeFunction::identity();
  PhaseSettings numerics;
  /// Paths need not share endpoints; no invariance checks are made.
  bool open_mode = false;
  /// Ideal phase difference of the preset (NaN when none applies).
  double reference_delta = std::numeric_limits<double>::quiet_NaN();

  const PhysicalConstants& constants() const { return field->config().constants; }
  GaugedPotentials potentials() const { return {field, gauge}; }
  InterferometerScenario with_gauge(GaugeFunction g) const;
  bool is_closed(double tol = 1e-12) const;
  /// Both paths restricted to [t_begin, t_end], flagged open.
  InterferometerScenario open_segment(double t_begin, double t_end) const;
  /// Largest extent of the paths (for the adiabaticity diagnostic).
  double diameter() const;
  void validate() const;
};

struct PhaseDifference {
  PhaseResult hamiltonian;
  PhaseResult energy;
  /// |delta_hamiltonian - delta_energy|.
  double calculator_mismatch = 0.0;
  /// Whether the two deltas are required to agree (closed loop, grad F static).
  bool agreement_required = false;
};

/// Runs both calculators on both paths. For closed scenarios whose gauge has
/// a static gradient the deltas must agree within 2 phase_tol, otherwise
/// CalculatorMismatchOnClosedLoop is thrown.
PhaseDifference phase_difference(const InterferometerScenario& scenario);

// Presets. Geometry is a rectangle in the z = 0 plane spanning
// [-half_width, half_width] x [-half_height, half_height]; both paths start
// at (-half_width, 0) and end at (half_width, 0). Path a runs along
// y = -half_height, path b along y = +half_height, so a solenoid on the z
// axis with flux along +z gives delta = +q Phi0 / hbar.

struct SolenoidParams {
  double radius = 0.01;
  double turns_per_meter = 1e5;
  bool finite = false;
  double length_ratio = 100.0;  // L / a for finite solenoids
  int loops = 200;
  int segments = 256;
};

struct MagneticPresetParams {
  double flux = 3.9478417604357434e-6;
  SolenoidParams solenoid;
  double half_width = 0.03;
  double half_height = 0.03;
  double duration = 1e-7;
  UnitSystem units = UnitSystem::si;
  Particle particle = Particle::for_units(UnitSystem::si);
  QuadratureSettings quadrature;
  PhaseSettings numerics;
  VelocityRule velocity = VelocityRule::stop_at_waypoints;

  static MagneticPresetParams defaults(UnitSystem u);
};

/// Timeline shared by the cage presets: two legs to the cage, a dwell, two
/// legs to the exit. Cage a sits at (0, -half_height), cage b at
/// (0, +half_height).
struct CageTimeline {
  double leg_time = 1e-8;
  double dwell_time = 1e-7;
  double t_enter() const { return 2 * leg_time; }
  double t_leave() const { return 2 * leg_time + dwell_time; }
  double t_final() const { return 4 * leg_time + dwell_time; }
};

struct ElectricPresetParams {
  double V_a = 1e-6;
  double V_b = 0.0;
  /// The cage potentials rise over [pulse_start, pulse_start + ramp_time]
  /// and fall over [pulse_end - ramp_time, pulse_end].
  double pulse_start = 3e-8;
  double pulse_end = 1.1e-7;
  double ramp_time = 3e-8;
  double cage_radius = 0.005;
  double half_width = 0.03;
  double half_height = 0.03;
  CageTimeline timeline;
  UnitSystem units = UnitSystem::si;
  Particle particle = Particle::for_units(UnitSystem::si);
  QuadratureSettings quadrature;
  PhaseSettings numerics;

  /// int (V_a - V_b) dt = (V_a - V_b)(pulse_end - pulse_start - ramp_time).
  double effective_dwell() const { return pulse_end - pulse_start - ramp_time; }
  static ElectricPresetParams defaults(UnitSystem u);
};

struct ElectrodynamicPresetParams {
  double flux = 3.9478417604357434e-6;
  SolenoidParams solenoid;
  /// The flux goes from flux to final_fraction * flux over [ramp_start, ramp_end].
  double ramp_start = 5e-8;
  double ramp_end = 9e-8;
  double final_fraction = 0.0;
  bool smooth_ramp = true;
  double cage_radius = 0.005;
  /// Optional induced charges on the cages (charged_shell elements).
  double cage_charge_a = 0.0;
  double cage_charge_b = 0.0;
  double half_width = 0.03;
  double half_height = 0.03;
  CageTimeline timeline;
  UnitSystem units = UnitSystem::si;
  Particle particle = Particle::for_units(UnitSystem::si);
  QuadratureSettings quadrature;
  PhaseSettings numerics;

  static ElectrodynamicPresetParams defaults(UnitSystem u);
};

InterferometerScenario build_magnetic_preset(const MagneticPresetParams& p);
InterferometerScenario build_electric_preset(const ElectricPresetParams& p);
InterferometerScenario build_electrodynamic_preset(const ElectrodynamicPresetParams& p);

/// Solenoid element carrying the requested ideal flux.
SourceElement make_solenoid(double flux, const SolenoidParams& s,
                            const PhysicalConstants& k);

struct OpenPathRow {
  std::size_t gauge_index = 0;
  std::string gauge_label;
  Calculator calculator = Calculator::hamiltonian;
  char path = 'a';
  PathPhase phase;
};

/// Per-gauge, per-path, per-calculator phases of an open-mode scenario.
std::vector<OpenPathRow> open_path_report(const InterferometerScenario& scenario,
                                          std::span<const GaugeFunction> gauges);

struct SweepRow {
  std::size_t gauge_index = 0;
  std::string gauge_label;
  PhaseDifference result;
};

struct SweepSummary {
  PhaseDifference lorenz;
  std::vector<SweepRow> rows;
  double max_delta_deviation_hamiltonian = 0.0;
  double max_delta_deviation_energy = 0.0;
  double max_calculator_mismatch = 0.0;
  /// max - min of the per-path phases over the family (both calculators).
  double per_path_spread = 0.0;
};

/// Phase differences of a closed scenario under every gauge, compared with
/// its Lorenz-gauge result.
SweepSummary gauge_sweep(const InterferometerScenario& scenario,
                         std::span<const GaugeFunction> gauges);

/// Family bounds matched to a scenario's geometry, time window and particle.
GaugeFamilyBounds family_bounds_for(const InterferometerScenario& scenario);

}  // namespace abqed
