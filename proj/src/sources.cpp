#include "abqed/sources.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "abqed/quadrature.hpp"

namespace abqed {

// ---------------------------------------------------------------------------
// TimeSchedule

TimeSchedule TimeSchedule::constant(double amplitude) {
  return {ScheduleKind::constant, 0.0, 0.0, amplitude, amplitude};
}

TimeSchedule TimeSchedule::linear_ramp(double t_start, double t_end, double initial,
                                       double final) {
  TimeSchedule s{ScheduleKind::linear_ramp, t_start, t_end, initial, final};
  s.validate();
  return s;
}

TimeSchedule TimeSchedule::smoothstep_ramp(double t_start, double t_end, double initial,
                                           double final) {
  TimeSchedule s{ScheduleKind::smoothstep_ramp, t_start, t_end, initial, final};
  s.validate();
  return s;
}

double TimeSchedule::value(double t) const {
  if (kind == ScheduleKind::constant) return initial;
  if (t <= t_start) return initial;
  if (t >= t_end) return final;
  double x = (t - t_start) / (t_end - t_start);
  if (kind == ScheduleKind::smoothstep_ramp) x = x * x * (3.0 - 2.0 * x);
  return initial + (final - initial) * x;
}

double TimeSchedule::rate(double t) const {
  if (kind == ScheduleKind::constant || t <= t_start || t >= t_end) return 0.0;
  const double span = t_end - t_start;
  const double x = (t - t_start) / span;
  const double dx = kind == ScheduleKind::smoothstep_ramp ? 6.0 * x * (1.0 - x) : 1.0;
  return (final - initial) * dx / span;
}

double TimeSchedule::max_abs() const {
  return std::max(std::abs(initial), std::abs(final));
}

std::vector<double> TimeSchedule::breakpoints() const {
  if (kind == ScheduleKind::constant) return {};
  return {t_start, t_end};
}

void TimeSchedule::validate() const {
  if (!std::isfinite(initial) || !std::isfinite(final))
    throw std::invalid_argument("schedule amplitudes must be finite");
  if (kind != ScheduleKind::constant && !(t_end > t_start))
    throw std::invalid_argument("ramp schedule needs t_end > t_start");
}

// ---------------------------------------------------------------------------
// SourceElement

std::string to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::point_charge: return "point_charge";
    case SourceKind::gaussian_charge_ball: return "gaussian_charge_ball";
    case SourceKind::charged_shell: return "charged_shell";
    case SourceKind::current_loop: return "current_loop";
    case SourceKind::finite_solenoid: return "finite_solenoid";
    case SourceKind::infinite_solenoid_analytic: return "infinite_solenoid_analytic";
  }
  return "unknown";
}

std::optional<SourceKind> source_kind_from_string(const std::string& name) {
  for (auto k : {SourceKind::point_charge, SourceKind::gaussian_charge_ball,
                 SourceKind::charged_shell, SourceKind::current_loop,
                 SourceKind::finite_solenoid, SourceKind::infinite_solenoid_analytic})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

SourceElement SourceElement::point_charge(double q, const Vec3& at) {
  SourceElement e;
  e.kind = SourceKind::point_charge;
  e.position = at;
  e.strength = q;
  return e;
}

SourceElement SourceElement::gaussian_ball(double q, const Vec3& at, double width) {
  SourceElement e;
  e.kind = SourceKind::gaussian_charge_ball;
  e.position = at;
  e.width = width;
  e.strength = q;
  e.validate();
  return e;
}

SourceElement SourceElement::charged_shell(double q, const Vec3& center, double radius) {
  SourceElement e;
  e.kind = SourceKind::charged_shell;
  e.position = center;
  e.radius = radius;
  e.strength = q;
  e.validate();
  return e;
}

SourceElement SourceElement::current_loop(double current, const Vec3& center,
                                          const Vec3& axis, double radius, int segments) {
  SourceElement e;
  e.kind = SourceKind::current_loop;
  e.position = center;
  e.axis = axis.normalized();
  e.radius = radius;
  e.strength = current;
  e.loops = 1;
  e.segments_per_loop = segments;
  e.validate();
  return e;
}

SourceElement SourceElement::finite_solenoid(double current, const Vec3& center,
                                             const Vec3& axis, double radius,
                                             double length, double turns_per_meter,
                                             int loops, int segments) {
  SourceElement e;
  e.kind = SourceKind::finite_solenoid;
  e.position = center;
  e.axis = axis.normalized();
  e.radius = radius;
  e.length = length;
  e.turns_per_meter = turns_per_meter;
  e.strength = current;
  e.loops = loops;
  e.segments_per_loop = segments;
  e.validate();
  return e;
}

SourceElement SourceElement::infinite_solenoid(double current, const Vec3& axis_point,
                                               const Vec3& axis, double radius,
                                               double turns_per_meter) {
  SourceElement e;
  e.kind = SourceKind::infinite_solenoid_analytic;
  e.position = axis_point;
  e.axis = axis.normalized();
  e.radius = radius;
  e.turns_per_meter = turns_per_meter;
  e.strength = current;
  e.validate();
  return e;
}

bool SourceElement::carries_charge() const {
  return kind == SourceKind::point_charge || kind == SourceKind::gaussian_charge_ball ||
         kind == SourceKind::charged_shell;
}

bool SourceElement::carries_current() const { return !carries_charge(); }

double SourceElement::extent() const {
  switch (kind) {
    case SourceKind::point_charge: return 0.0;
    case SourceKind::gaussian_charge_ball: return 12.0 * width;
    case SourceKind::charged_shell:
    case SourceKind::current_loop: return radius + 6.0 * wire_radius;
    case SourceKind::finite_solenoid:
      return std::hypot(radius, 0.5 * length) + 6.0 * wire_radius;
    case SourceKind::infinite_solenoid_analytic:
      return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

void SourceElement::validate() const {
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument(to_string(kind) + ": " + what);
  };
  if (!position.allFinite()) fail("position must be finite");
  if (!std::isfinite(strength)) fail("strength must be finite");
  schedule.validate();
  switch (kind) {
    case SourceKind::point_charge: break;
    case SourceKind::gaussian_charge_ball:
      if (!(width > 0)) fail("width must be > 0");
      break;
    case SourceKind::charged_shell:
      if (!(radius > 0)) fail("radius must be > 0");
      break;
    case SourceKind::finite_solenoid:
      if (!(length > 0)) fail("length must be > 0");
      if (!(turns_per_meter > 0)) fail("turns_per_meter must be > 0");
      if (loops < 1) fail("loops must be >= 1");
      [[fallthrough]];
    case SourceKind::current_loop:
      if (!(radius > 0)) fail("radius must be > 0");
      if (segments_per_loop < 3) fail("segments_per_loop must be >= 3");
      if (!(wire_radius >= 0)) fail("wire_radius must be >= 0");
      if (!(axis.norm() > 0)) fail("axis must be nonzero");
      break;
    case SourceKind::infinite_solenoid_analytic:
      if (!(radius > 0)) fail("radius must be > 0");
      if (!(turns_per_meter > 0)) fail("turns_per_meter must be > 0");
      if (!(axis.norm() > 0)) fail("axis must be nonzero");
      break;
  }
}

void SourceConfiguration::validate() const {
  constants.validate();
  for (const auto& e : elements) e.validate();
}

bool SourceConfiguration::has_charges() const {
  return std::any_of(elements.begin(), elements.end(),
                     [](const SourceElement& e) { return e.carries_charge(); });
}

bool SourceConfiguration::has_currents() const {
  return std::any_of(elements.begin(), elements.end(),
                     [](const SourceElement& e) { return e.carries_current(); });
}

SourceConfiguration merge(const SourceConfiguration& a, const SourceConfiguration& b) {
  SourceConfiguration out = a;
  out.elements.insert(out.elements.end(), b.elements.begin(), b.elements.end());
  return out;
}

std::pair<Vec3, Vec3> transverse_frame(const Vec3& axis) {
  const Vec3 n = axis.normalized();
  const Vec3 helper = std::abs(n.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  const Vec3 u = helper.cross(n).normalized();
  const Vec3 v = n.cross(u);
  return {u, v};
}

// ---------------------------------------------------------------------------
// Filaments

FilamentSegment FilamentSegment::line(const Vec3& from, const Vec3& to) {
  FilamentSegment s;
  s.shape = Shape::line;
  s.origin = from;
  s.u = to - from;
  return s;
}

FilamentSegment FilamentSegment::arc(const Vec3& center, const Vec3& u, const Vec3& v,
                                     double radius, double theta0, double theta1) {
  FilamentSegment s;
  s.shape = Shape::arc;
  s.origin = center;
  s.u = u;
  s.v = v;
  s.radius = radius;
  s.theta0 = theta0;
  s.theta1 = theta1;
  return s;
}

Vec3 FilamentSegment::point(double tau) const {
  if (shape == Shape::line) return origin + tau * u;
  const double th = theta0 + tau * (theta1 - theta0);
  return origin + radius * (std::cos(th) * u + std::sin(th) * v);
}

Vec3 FilamentSegment::derivative(double tau) const {
  if (shape == Shape::line) return u;
  const double dth = theta1 - theta0;
  const double th = theta0 + tau * dth;
  return radius * dth * (-std::sin(th) * u + std::cos(th) * v);
}

double FilamentSegment::length() const {
  if (shape == Shape::line) return u.norm();
  return radius * std::abs(theta1 - theta0);
}

double FilamentSegment::distance_to(const Vec3& p) const {
  if (shape == Shape::line) {
    const double len2 = u.squaredNorm();
    const double tau = len2 > 0 ? std::clamp((p - origin).dot(u) / len2, 0.0, 1.0) : 0.0;
    return (p - point(tau)).norm();
  }
  // Closest point on the full circle, clamped to the arc's angular range.
  const Vec3 d = p - origin;
  const Vec3 n = u.cross(v);
  const Vec3 inplane = d - d.dot(n) * n;
  double best = std::min((p - start()).norm(), (p - end()).norm());
  if (inplane.norm() > 0) {
    double th = std::atan2(inplane.dot(v), inplane.dot(u));
    const double lo = std::min(theta0, theta1), hi = std::max(theta0, theta1);
    while (th < lo) th += 2 * pi;
    while (th > hi + 2 * pi) th -= 2 * pi;
    if (th >= lo && th <= hi) {
      const Vec3 q = origin + radius * (std::cos(th) * u + std::sin(th) * v);
      best = std::min(best, (p - q).norm());
    }
  }
  return best;
}

bool Filament::is_closed(double tol) const {
  if (segments.empty()) return false;
  for (std::size_t i = 0; i + 1 < segments.size(); ++i)
    if ((segments[i].end() - segments[i + 1].start()).norm() > tol) return false;
  return (segments.back().end() - segments.front().start()).norm() <= tol;
}

double Filament::distance_to(const Vec3& p) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : segments) best = std::min(best, s.distance_to(p));
  return best;
}

namespace {

Filament ring(const Vec3& center, const Vec3& axis, double radius, int segments,
              double current, double tube) {
  const auto [u, v] = transverse_frame(axis);
  Filament f;
  f.current = current;
  f.tube_width = tube;
  f.segments.reserve(segments);
  for (int i = 0; i < segments; ++i) {
    const double th0 = 2 * pi * i / segments;
    const double th1 = 2 * pi * (i + 1) / segments;
    f.segments.push_back(FilamentSegment::arc(center, u, v, radius, th0, th1));
  }
  return f;
}

// Axial offsets of the stacked loops of a finite solenoid.
std::vector<double> loop_offsets(const SourceElement& e) {
  std::vector<double> z(e.loops);
  for (int i = 0; i < e.loops; ++i) z[i] = -0.5 * e.length + (i + 0.5) * e.length / e.loops;
  return z;
}

double distance_to_circle(const Vec3& center, const Vec3& axis, double radius,
                          const Vec3& r) {
  const Vec3 d = r - center;
  const double z = d.dot(axis);
  const double rho = (d - z * axis).norm();
  return std::hypot(rho - radius, z);
}

}  // namespace

std::vector<Filament> filaments_of(const SourceElement& e, double t) {
  std::vector<Filament> out;
  const double w = e.weight(t);
  if (e.kind == SourceKind::current_loop) {
    out.push_back(ring(e.position, e.axis, e.radius, e.segments_per_loop, w, e.wire_radius));
  } else if (e.kind == SourceKind::finite_solenoid) {
    const double per_loop = w * e.turns_per_meter * e.length / e.loops;
    for (double z : loop_offsets(e))
      out.push_back(ring(e.position + z * e.axis, e.axis, e.radius, e.segments_per_loop,
                         per_loop, e.wire_radius));
  }
  return out;
}

std::vector<Filament> filaments_of(const SourceConfiguration& config, double t) {
  std::vector<Filament> out;
  for (const auto& e : config.elements) {
    auto f = filaments_of(e, t);
    out.insert(out.end(), std::make_move_iterator(f.begin()),
               std::make_move_iterator(f.end()));
  }
  return out;
}

double distance_to_singular_support(const SourceElement& e, const Vec3& r) {
  const Vec3 d = r - e.position;
  switch (e.kind) {
    case SourceKind::point_charge: return d.norm();
    case SourceKind::gaussian_charge_ball: return std::numeric_limits<double>::infinity();
    case SourceKind::charged_shell: return std::abs(d.norm() - e.radius);
    case SourceKind::current_loop:
      if (e.wire_radius > 0) return std::numeric_limits<double>::infinity();
      return distance_to_circle(e.position, e.axis, e.radius, r);
    case SourceKind::finite_solenoid: {
      if (e.wire_radius > 0) return std::numeric_limits<double>::infinity();
      const double z = d.dot(e.axis);
      const double spacing = e.length / e.loops;
      const double idx = std::floor((z + 0.5 * e.length) / spacing);
      double best = std::numeric_limits<double>::infinity();
      for (double k : {idx - 1, idx, idx + 1}) {
        const double kk = std::clamp(k, 0.0, static_cast<double>(e.loops - 1));
        const double zc = -0.5 * e.length + (kk + 0.5) * spacing;
        best = std::min(best, distance_to_circle(e.position + zc * e.axis, e.axis,
                                                 e.radius, r));
      }
      return best;
    }
    case SourceKind::infinite_solenoid_analytic: {
      const double rho = (d - d.dot(e.axis) * e.axis).norm();
      return std::abs(rho - e.radius);
    }
  }
  return std::numeric_limits<double>::infinity();
}

void check_exclusion(const SourceConfiguration& config, const Vec3& r, double t,
                     double exclusion) {
  for (const auto& e : config.elements) {
    if (e.weight(t) == 0.0) continue;
    const double d = distance_to_singular_support(e, r);
    if (d < exclusion) {
      std::ostringstream os;
      os << "evaluation point " << format_vec(r) << " lies within " << exclusion
         << " m of a " << to_string(e.kind) << " (distance " << d << ")";
      throw EvaluationInsideSource(os.str());
    }
  }
}

ChargeDensity charge_density(const SourceConfiguration& config, const Vec3& r, double t,
                             double exclusion) {
  check_exclusion(config, r, t, exclusion);
  ChargeDensity out;
  for (const auto& e : config.elements) {
    const double q = e.weight(t);
    switch (e.kind) {
      case SourceKind::point_charge:
        out.measures.push_back({ChargeMeasure::Shape::point, e.position, 0.0, q});
        break;
      case SourceKind::charged_shell:
        out.measures.push_back({ChargeMeasure::Shape::sphere_surface, e.position, e.radius, q});
        break;
      case SourceKind::gaussian_charge_ball: {
        const double s2 = e.width * e.width;
        const double norm = std::pow(2 * pi * s2, -1.5);
        out.smooth += q * norm * std::exp(-(r - e.position).squaredNorm() / (2 * s2));
        break;
      }
      default: break;
    }
  }
  return out;
}

CurrentDensity current_density(const SourceConfiguration& config, const Vec3& r, double t,
                               double exclusion) {
  check_exclusion(config, r, t, exclusion);
  CurrentDensity out;
  for (const auto& e : config.elements) {
    if (e.kind == SourceKind::infinite_solenoid_analytic) {
      out.sheets.push_back({e.position, e.axis, e.radius, e.turns_per_meter * e.weight(t)});
      continue;
    }
    auto fs = filaments_of(e, t);
    for (auto& f : fs) {
      if (f.tube_width > 0) {
        const Filament single[] = {f};
        out.smooth += smeared_current(single, r, f.tube_width);
      }
      out.filaments.push_back(std::move(f));
    }
  }
  return out;
}

FluxValue solenoid_flux(const SourceElement& element, double t,
                        const PhysicalConstants& k) {
  if (element.kind != SourceKind::finite_solenoid &&
      element.kind != SourceKind::infinite_solenoid_analytic)
    throw WrongElementKind("solenoid_flux needs a solenoid, got " + to_string(element.kind));
  FluxValue f;
  f.webers = k.mu0 * element.turns_per_meter * element.weight(t) * pi * element.radius *
             element.radius;
  f.ideal = true;
  return f;
}

// ---------------------------------------------------------------------------
// Divergence diagnostic

Vec3 smeared_current(std::span<const Filament> filaments, const Vec3& r,
                     double tube_width, double rel_tol) {
  const double w2 = tube_width * tube_width;
  const double norm = std::pow(2 * pi * w2, -1.5);
  const double reach = 10.0 * tube_width;
  Vec3 total = Vec3::Zero();
  for (const auto& f : filaments) {
    for (const auto& seg : f.segments) {
      if (seg.distance_to(r) > reach) continue;
      auto integrand = [&](double tau) -> Vec3 {
        const Vec3 d = r - seg.point(tau);
        return seg.derivative(tau) * (norm * std::exp(-d.squaredNorm() / (2 * w2)));
      };
      quad::AdaptiveOptions opt;
      opt.rel_tol = rel_tol;
      opt.abs_tol = 1e-300;
      auto res = quad::integrate<Vec3>(integrand, 0.0, 1.0, opt);
      total += f.current * res.value;
    }
  }
  return total;
}

DivergenceReport divergence_j_check(std::span<const Filament> filaments,
                                    std::span<const Vec3> points,
                                    const DivergenceSettings& settings) {
  double w = settings.tube_width;
  if (w <= 0) {
    double shortest = std::numeric_limits<double>::infinity();
    for (const auto& f : filaments)
      for (const auto& s : f.segments) shortest = std::min(shortest, s.length());
    w = std::isfinite(shortest) ? 0.25 * shortest : 1.0;
  }
  const double h = settings.fd_step > 0 ? settings.fd_step : w / 20.0;
  DivergenceReport report;
  double max_current = 0.0;
  for (const auto& f : filaments) max_current = std::max(max_current, std::abs(f.current));
  report.scale = max_current * std::pow(2 * pi * w * w, -1.5);

  for (const auto& p : points) {
    double div = 0.0;
    for (int axis = 0; axis < 3; ++axis) {
      // Fourth-order central difference.
      auto comp = [&](double offset) {
        Vec3 q = p;
        q[axis] += offset;
        return smeared_current(filaments, q, w, settings.rel_tol)[axis];
      };
      div += (-comp(2 * h) + 8 * comp(h) - 8 * comp(-h) + comp(-2 * h)) / (12 * h);
    }
    report.max_divergence = std::max(report.max_divergence, std::abs(div));
  }
  return report;
}

DivergenceReport divergence_j_check(const SourceConfiguration& config, double t,
                                    std::span<const Vec3> points,
                                    const DivergenceSettings& settings) {
  const auto fs = filaments_of(config, t);
  return divergence_j_check(fs, points, settings);
}

}  // namespace abqed
