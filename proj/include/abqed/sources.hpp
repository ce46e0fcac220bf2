#pragma once

// Classical charge and current sources of the effective potentials.
//
// Smooth densities (Gaussian balls) are sampled pointwise. Points, shells,
// filaments and the infinite solenoid sheet are singular: they are returned
// as weighted measure descriptors and integrated directly by the potential
// and mode-space calculators.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "abqed/common.hpp"

namespace abqed {

enum class ScheduleKind { constant, linear_ramp, smoothstep_ramp };

/// Dimensionless multiplier applied to a source strength. Ramps hold
/// `initial` before t_start and `final` after t_end and are C^0 (linear) or
/// C^1 (smoothstep) in between.
struct TimeSchedule {
  ScheduleKind kind = ScheduleKind::constant;
  double t_start = 0.0;
  double t_end = 0.0;
  double initial = 1.0;
  double final = 1.0;

  static TimeSchedule constant(double amplitude = 1.0);
  static TimeSchedule linear_ramp(double t_start, double t_end, double initial,
                                  double final);
  static TimeSchedule smoothstep_ramp(double t_start, double t_end, double initial,
                                      double final);

  double value(double t) const;
  double rate(double t) const;
  double max_abs() const;
  /// Times where the schedule is not smooth (empty for constant).
  std::vector<double> breakpoints() const;
  void validate() const;
};

enum class SourceKind {
  point_charge,
  gaussian_charge_ball,
  charged_shell,
  current_loop,
  finite_solenoid,
  infinite_solenoid_analytic
};

std::string to_string(SourceKind kind);
std::optional<SourceKind> source_kind_from_string(const std::string& name);

/// One geometric source. Which fields are meaningful depends on `kind`:
///
///   point_charge                position, strength [C]
///   gaussian_charge_ball        position, width (std. deviation), strength [C]
///   charged_shell               position (center), radius, strength [C]
///   current_loop                position (center), axis, radius, strength [A],
///                               segments_per_loop, wire_radius
///   finite_solenoid             position (center), axis, radius, length,
///                               turns_per_meter, strength [A], loops,
///                               segments_per_loop, wire_radius
///   infinite_solenoid_analytic  position (point on axis), axis, radius,
///                               turns_per_meter, strength [A]
///
/// Loop current circulates counter-clockwise about `axis`. `wire_radius` is
/// the width of a Gaussian tube smearing the filament (0 = thin wire).
struct SourceElement {
  SourceKind kind = SourceKind::point_charge;
  Vec3 position = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();
  double radius = 0.0;
  double width = 0.0;
  double length = 0.0;
  double turns_per_meter = 0.0;
  double strength = 0.0;
  double wire_radius = 0.0;
  int loops = 200;
  int segments_per_loop = 256;
  TimeSchedule schedule;

  static SourceElement point_charge(double q, const Vec3& at);
  static SourceElement gaussian_ball(double q, const Vec3& at, double width);
  static SourceElement charged_shell(double q, const Vec3& center, double radius);
  static SourceElement current_loop(double current, const Vec3& center,
                                    const Vec3& axis, double radius,
                                    int segments = 256);
  static SourceElement finite_solenoid(double current, const Vec3& center,
                                       const Vec3& axis, double radius,
                                       double length, double turns_per_meter,
                                       int loops = 200, int segments = 256);
  static SourceElement infinite_solenoid(double current, const Vec3& axis_point,
                                         const Vec3& axis, double radius,
                                         double turns_per_meter);

  SourceElement& with_schedule(const TimeSchedule& s) {
    schedule = s;
    return *this;
  }

  bool carries_charge() const;
  bool carries_current() const;
  /// Strength times schedule value at t.
  double weight(double t) const { return strength * schedule.value(t); }
  /// Radius of a ball containing the source, about `position`; infinite for
  /// the analytic solenoid. Gaussian balls use 12 widths.
  double extent() const;
  void validate() const;
};

/// A circular arc or straight piece of a filament, parameterized on [0, 1].
struct FilamentSegment {
  enum class Shape { line, arc };
  Shape shape = Shape::line;
  Vec3 origin = Vec3::Zero();  // line start, or arc center
  Vec3 u = Vec3::Zero();       // line: end - start; arc: in-plane unit vector
  Vec3 v = Vec3::Zero();       // arc: second in-plane unit vector
  double radius = 0.0;
  double theta0 = 0.0;
  double theta1 = 0.0;

  static FilamentSegment line(const Vec3& from, const Vec3& to);
  static FilamentSegment arc(const Vec3& center, const Vec3& u, const Vec3& v,
                             double radius, double theta0, double theta1);

  Vec3 point(double tau) const;
  /// d(point)/d(tau).
  Vec3 derivative(double tau) const;
  Vec3 start() const { return point(0.0); }
  Vec3 end() const { return point(1.0); }
  double length() const;
  /// Closest distance from p to the segment (sampled for arcs, exact for lines).
  double distance_to(const Vec3& p) const;
};

/// Line current of strength `current` along a chain of segments.
struct Filament {
  std::vector<FilamentSegment> segments;
  double current = 0.0;
  double tube_width = 0.0;

  /// Consecutive segments join and the last returns to the first within tol.
  bool is_closed(double tol = 1e-12) const;
  double distance_to(const Vec3& p) const;
};

/// Singular charge measure: a point or a uniformly charged sphere surface.
struct ChargeMeasure {
  enum class Shape { point, sphere_surface };
  Shape shape = Shape::point;
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
  double charge = 0.0;
};

/// Surface current K = n I on an infinite cylinder.
struct CylinderSheet {
  Vec3 axis_point = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();
  double radius = 0.0;
  double surface_current = 0.0;
};

struct ChargeDensity {
  double smooth = 0.0;  // C/m^3 at the query point
  std::vector<ChargeMeasure> measures;
};

struct CurrentDensity {
  Vec3 smooth = Vec3::Zero();  // A/m^2 at the query point
  std::vector<Filament> filaments;
  std::vector<CylinderSheet> sheets;
};

struct SourceConfiguration {
  std::vector<SourceElement> elements;
  PhysicalConstants constants;

  SourceConfiguration() = default;
  explicit SourceConfiguration(std::vector<SourceElement> els,
                               PhysicalConstants k = PhysicalConstants::si())
      : elements(std::move(els)), constants(k) {}

  void validate() const;
  bool has_charges() const;
  bool has_currents() const;
};

/// Elements of both configurations; constants of `a`.
SourceConfiguration merge(const SourceConfiguration& a, const SourceConfiguration& b);

/// Default distance below which a singular source refuses evaluation.
inline constexpr double default_exclusion_radius = 1e-9;

/// Distance from r to the support of a singular element (infinity for
/// smooth elements). Elements with zero weight at t are ignored by callers.
double distance_to_singular_support(const SourceElement& e, const Vec3& r);

/// Throws EvaluationInsideSource when r is within `exclusion` of the support
/// of any singular element whose weight at t is nonzero.
void check_exclusion(const SourceConfiguration& config, const Vec3& r, double t,
                     double exclusion = default_exclusion_radius);

ChargeDensity charge_density(const SourceConfiguration& config, const Vec3& r, double t,
                             double exclusion = default_exclusion_radius);

CurrentDensity current_density(const SourceConfiguration& config, const Vec3& r,
                               double t, double exclusion = default_exclusion_radius);

/// Filament discretization of one current-carrying element at time t
/// (strength times schedule). Empty for charges and the infinite solenoid.
std::vector<Filament> filaments_of(const SourceElement& e, double t);

/// All filaments of the configuration at time t.
std::vector<Filament> filaments_of(const SourceConfiguration& config, double t);

struct FluxValue {
  double webers = 0.0;
  /// True when the value is the ideal mu0 n I pi a^2 reference rather than a
  /// field computation (always the case here; finite solenoids are tagged).
  bool ideal = true;
};

/// Ideal solenoid flux mu0 n I(t) pi a^2. WrongElementKind for non-solenoids.
FluxValue solenoid_flux(const SourceElement& element, double t,
                        const PhysicalConstants& k = PhysicalConstants::si());

struct DivergenceSettings {
  double tube_width = 0.0;  // 0 selects 1/4 of the shortest segment length
  double fd_step = 0.0;     // 0 selects tube_width / 20
  double rel_tol = 1e-11;
};

struct DivergenceReport {
  double max_divergence = 0.0;  // A/m^3
  /// max |J| / tube_width over the sample points: natural scale for
  /// divergence of the smeared field.
  double scale = 0.0;
  double relative() const { return scale > 0 ? max_divergence / scale : 0.0; }
};

/// Finite-difference divergence of the Gaussian-tube-smeared current field.
DivergenceReport divergence_j_check(std::span<const Filament> filaments,
                                    std::span<const Vec3> points,
                                    const DivergenceSettings& settings = {});
DivergenceReport divergence_j_check(const SourceConfiguration& config, double t,
                                    std::span<const Vec3> points,
                                    const DivergenceSettings& settings = {});

/// Smeared current field: sum over filaments of I * int t(s) g_w(r - x(s)) ds.
Vec3 smeared_current(std::span<const Filament> filaments, const Vec3& r,
                     double tube_width, double rel_tol = 1e-11);

/// Orthonormal pair (u, v) completing `axis` to a right-handed frame.
std::pair<Vec3, Vec3> transverse_frame(const Vec3& axis);

}  // namespace abqed
