#include "abqed/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "abqed/quadrature.hpp"

namespace abqed {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// erf(d / (sqrt(2) w)) / d, the potential kernel of a Gaussian of width w.
double smeared_kernel(double d, double w) {
  if (w <= 0) return 1.0 / d;
  const double x = d / (std::sqrt(2.0) * w);
  if (x < 1e-4) return std::sqrt(2.0 / pi) / w * (1.0 - x * x / 3.0);
  return std::erf(x) / d;
}

// (1 - m/2) K(m) - E(m) for small parameter m, from the hypergeometric
// series of K and E.
double loop_factor_series(double m) {
  double c_prev = 1.0;  // ((2n-1)!! / (2n)!!)^2 at n - 1
  double sum = 0.0;
  double mn = 1.0;
  for (int n = 1; n <= 18; ++n) {
    const double r = (2.0 * n - 1.0) / (2.0 * n);
    const double c = c_prev * r * r;
    mn *= m;
    sum += (c * 2.0 * n / (2.0 * n - 1.0) - 0.5 * c_prev) * mn;
    c_prev = c;
  }
  return 0.5 * pi * sum;
}

double loop_factor(double m) {
  if (m < 0.05) return loop_factor_series(m);
  const double k = std::sqrt(m);
  return (1.0 - 0.5 * m) * std::comp_ellint_1(k) - std::comp_ellint_2(k);
}

Vec3 azimuthal(const Vec3& axis, const Vec3& d, double* rho_out, double* z_out) {
  const double z = d.dot(axis);
  const Vec3 radial = d - z * axis;
  const double rho = radial.norm();
  if (rho_out) *rho_out = rho;
  if (z_out) *z_out = z;
  if (rho == 0.0) return Vec3::Zero();
  return axis.cross(radial / rho);
}

std::vector<double> loop_offsets(const SourceElement& e, int loops) {
  if (e.kind != SourceKind::finite_solenoid) return {0.0};
  std::vector<double> z(loops);
  for (int i = 0; i < loops; ++i) z[i] = -0.5 * e.length + (i + 0.5) * e.length / loops;
  return z;
}

}  // namespace

void QuadratureSettings::validate() const {
  if (!(rel_tol > 0 && rel_tol < 1))
    throw std::invalid_argument("quadrature rel_tol must lie in (0, 1)");
  if (max_subdivision_depth < 1)
    throw std::invalid_argument("quadrature max_subdivision_depth must be >= 1");
  if (regularization_length != 0.0)
    throw std::invalid_argument(
        "kernel regularization is not supported; keep regularization_length = 0");
  if (!(exclusion_radius >= 0))
    throw std::invalid_argument("exclusion_radius must be >= 0");
}

std::array<double, 4> EffectiveFieldSample::est_error() const {
  const std::array<double, 4> v{V, A.x(), A.y(), A.z()};
  std::array<double, 4> out{};
  for (int i = 0; i < 4; ++i)
    out[i] = v[i] != 0.0 ? abs_error[i] / std::abs(v[i]) : abs_error[i];
  return out;
}

double EffectiveFieldSample::max_est_error() const {
  const auto e = est_error();
  return *std::max_element(e.begin(), e.end());
}

// Kronrod nodes of every segment of one ring centered at the origin. A
// finite solenoid reuses the same ring at each axial offset.
struct FieldModel::RingNodes {
  std::vector<Vec3> pos;         // segments * 15
  std::vector<Vec3> t_kronrod;   // tangent * Kronrod weight * half-width
  std::vector<Vec3> t_gauss;     // tangent * Gauss weight * half-width (0 off-rule)
  std::vector<FilamentSegment> segments;
  std::vector<double> offsets;
  double seg_length = 0.0;
  double per_loop_strength = 0.0;  // current per loop at unit schedule
  double tube = 0.0;
};

FieldModel::FieldModel(SourceConfiguration config, QuadratureSettings settings)
    : config_(std::move(config)), settings_(settings) {
  config_.validate();
  settings_.validate();
  rings_.resize(config_.elements.size());
  for (std::size_t i = 0; i < config_.elements.size(); ++i) {
    const auto& e = config_.elements[i];
    if (e.kind != SourceKind::current_loop && e.kind != SourceKind::finite_solenoid)
      continue;
    const int segs =
        settings_.filament_segments > 0 ? settings_.filament_segments : e.segments_per_loop;
    const int loops = e.kind == SourceKind::finite_solenoid
                          ? (settings_.filament_loops > 0 ? settings_.filament_loops : e.loops)
                          : 1;
    auto ring = std::make_shared<RingNodes>();
    ring->offsets = loop_offsets(e, loops);
    ring->tube = e.wire_radius;
    ring->per_loop_strength =
        e.kind == SourceKind::finite_solenoid ? e.turns_per_meter * e.length / loops : 1.0;
    const auto [u, v] = transverse_frame(e.axis);
    const double half = 0.5;
    ring->segments.reserve(segs);
    for (int s = 0; s < segs; ++s) {
      const auto seg = FilamentSegment::arc(Vec3::Zero(), u, v, e.radius, 2 * pi * s / segs,
                                            2 * pi * (s + 1) / segs);
      ring->segments.push_back(seg);
      auto push = [&](double tau, double wk, double wg) {
        ring->pos.push_back(seg.point(tau));
        ring->t_kronrod.push_back(seg.derivative(tau) * (wk * half));
        ring->t_gauss.push_back(seg.derivative(tau) * (wg * half));
      };
      using namespace quad::detail;
      push(0.5, kronrod_weights[7], gauss_weights[3]);
      for (int j = 0; j < 7; ++j) {
        const double dx = half * kronrod_nodes[j];
        const double wg = j % 2 == 1 ? gauss_weights[j / 2] : 0.0;
        push(0.5 - dx, kronrod_weights[j], wg);
        push(0.5 + dx, kronrod_weights[j], wg);
      }
    }
    ring->seg_length = 2 * pi * e.radius / segs;
    rings_[i] = std::move(ring);
  }
}

std::vector<double> FieldModel::schedule_breakpoints() const {
  std::vector<double> out;
  for (const auto& e : config_.elements)
    for (double t : e.schedule.breakpoints()) out.push_back(t);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void FieldModel::add_scalar(const SourceElement& e, const Vec3& r, double w,
                            EffectiveFieldSample& out) const {
  const double coulomb = 1.0 / (4 * pi * config_.constants.eps0);
  const double d = (r - e.position).norm();
  const bool force = settings_.force_quadrature;
  double value = 0.0;
  double err = 0.0;
  switch (e.kind) {
    case SourceKind::point_charge:
      value = coulomb * w / d;
      err = 4 * kEps * std::abs(value);
      break;
    case SourceKind::charged_shell:
      if (!force) {
        value = coulomb * w / std::max(d, e.radius);
        err = 4 * kEps * std::abs(value);
      } else {
        // Azimuth done analytically; adaptive in u = cos(theta).
        const double R = e.radius;
        auto f = [&](double u) {
          return 0.5 / std::sqrt(std::max(d * d + R * R - 2 * d * R * u, 0.0));
        };
        quad::AdaptiveOptions opt;
        opt.rel_tol = settings_.rel_tol;
        opt.max_depth = settings_.max_subdivision_depth;
        auto res = quad::integrate<double>(f, -1.0, 1.0, opt);
        if (!res.converged)
          throw QuadratureNotConverged("charged shell surface quadrature did not converge");
        value = coulomb * w * res.value;
        err = std::abs(coulomb * w) * res.error;
      }
      break;
    case SourceKind::gaussian_charge_ball:
      if (!force) {
        value = coulomb * w * smeared_kernel(d, e.width);
        err = 8 * kEps * std::abs(value);
      } else {
        // Spherical layers: each shell of radius s contributes q(s) / max(d, s).
        const double s2 = e.width * e.width;
        const double norm = 4 * pi * std::pow(2 * pi * s2, -1.5);
        auto f = [&](double s) {
          return norm * s * s * std::exp(-s * s / (2 * s2)) / std::max(d, s);
        };
        quad::AdaptiveOptions opt;
        opt.rel_tol = settings_.rel_tol;
        opt.max_depth = settings_.max_subdivision_depth;
        const double upper = 40.0 * e.width;
        const double bp[] = {d, e.width, 5 * e.width};
        auto res = quad::integrate<double>(f, 0.0, upper, opt, bp);
        if (!res.converged)
          throw QuadratureNotConverged("Gaussian charge radial quadrature did not converge");
        value = coulomb * w * res.value;
        err = std::abs(coulomb * w) * res.error;
      }
      break;
    default:
      return;
  }
  out.V += value;
  out.abs_error[0] += err;
}

double loop_azimuthal_potential(double current, double a, double rho, double z,
                                double mu0) {
  if (rho == 0.0) return 0.0;
  const double m = 4 * a * rho / ((a + rho) * (a + rho) + z * z);
  return mu0 * current / (pi * std::sqrt(m)) * std::sqrt(a / rho) * loop_factor(m);
}

Vec3 filament_vector_potential(const Filament& filament, const Vec3& r, double mu0,
                               double rel_tol, int max_depth, double* abs_error) {
  Vec3 total = Vec3::Zero();
  double err = 0.0;
  const double w = filament.tube_width;
  for (const auto& seg : filament.segments) {
    const double dist = std::max(seg.distance_to(r), 1e-300);
    auto f = [&](double tau) -> Vec3 {
      return seg.derivative(tau) * smeared_kernel((r - seg.point(tau)).norm(), w);
    };
    quad::AdaptiveOptions opt;
    opt.rel_tol = rel_tol;
    opt.abs_tol = rel_tol * seg.length() / dist;
    opt.max_depth = max_depth;
    auto res = quad::integrate<Vec3>(f, 0.0, 1.0, opt);
    if (!res.converged)
      throw QuadratureNotConverged("filament quadrature did not converge near " +
                                   format_vec(r));
    total += res.value;
    err += res.error;
  }
  const double scale = mu0 * filament.current / (4 * pi);
  if (abs_error) *abs_error = std::abs(scale) * err;
  return scale * total;
}

void FieldModel::add_vector(std::size_t index, const SourceElement& e, const Vec3& r,
                            double w, EffectiveFieldSample& out) const {
  const double mu0 = config_.constants.mu0;
  Vec3 value = Vec3::Zero();
  double err = 0.0;

  if (e.kind == SourceKind::infinite_solenoid_analytic) {
    double rho = 0.0;
    const Vec3 phi = azimuthal(e.axis, r - e.position, &rho, nullptr);
    const double k = mu0 * e.turns_per_meter * w;
    const double a_phi =
        rho < e.radius ? 0.5 * k * rho : k * e.radius * e.radius / (2.0 * rho);
    value = a_phi * phi;
    err = 4 * kEps * std::abs(a_phi);
  } else if (e.kind == SourceKind::current_loop || e.kind == SourceKind::finite_solenoid) {
    const RingNodes& ring = *rings_[index];
    const double current = w * ring.per_loop_strength;
    const double tube = ring.tube;
    if (!settings_.force_quadrature) {
      // Elliptic-integral loops; a tube-smeared wire only deviates from the
      // thin one within a few tube widths of the wire.
      for (double z0 : ring.offsets) {
        const Vec3 center = e.position + z0 * e.axis;
        double rho = 0.0, z = 0.0;
        const Vec3 phi = azimuthal(e.axis, r - center, &rho, &z);
        const double wire_dist = std::hypot(rho - e.radius, z);
        if (tube > 0 && wire_dist < 9.0 * tube) {
          Filament f;
          f.current = current;
          f.tube_width = tube;
          for (const auto& s : ring.segments) {
            FilamentSegment shifted = s;
            shifted.origin = center;
            f.segments.push_back(shifted);
          }
          double fe = 0.0;
          value += filament_vector_potential(f, r, mu0, settings_.rel_tol,
                                             settings_.max_subdivision_depth, &fe);
          err += fe;
          continue;
        }
        const double a_phi = loop_azimuthal_potential(current, e.radius, rho, z, mu0);
        value += a_phi * phi;
        err += 16 * kEps * std::abs(a_phi);
      }
    } else {
      const double scale = mu0 * current / (4 * pi);
      const std::size_t n_seg = ring.segments.size();
      for (double z0 : ring.offsets) {
        const Vec3 center = e.position + z0 * e.axis;
        const Vec3 rl = r - center;
        for (std::size_t s = 0; s < n_seg; ++s) {
          Vec3 kr = Vec3::Zero(), gs = Vec3::Zero();
          double dmin = std::numeric_limits<double>::infinity();
          for (std::size_t j = s * 15; j < s * 15 + 15; ++j) {
            const double d = (rl - ring.pos[j]).norm();
            dmin = std::min(dmin, d);
            const double ker = smeared_kernel(d, tube);
            kr += ring.t_kronrod[j] * ker;
            gs += ring.t_gauss[j] * ker;
          }
          const double seg_err = (kr - gs).norm();
          const double tol = settings_.rel_tol * ring.seg_length / dmin;
          if (seg_err <= tol) {
            value += scale * kr;
            err += std::abs(scale) * seg_err;
            continue;
          }
          // Close to the wire: refine this segment adaptively.
          FilamentSegment shifted = ring.segments[s];
          shifted.origin = center;
          Filament f;
          f.current = current;
          f.tube_width = tube;
          f.segments.push_back(shifted);
          double fe = 0.0;
          value += filament_vector_potential(f, r, mu0, settings_.rel_tol,
                                             settings_.max_subdivision_depth, &fe);
          err += fe;
        }
      }
    }
  } else {
    return;
  }
  out.A += value;
  for (int c = 0; c < 3; ++c) out.abs_error[1 + c] += err;
}

EffectiveFieldSample FieldModel::scalar(const Vec3& r, double t) const {
  check_exclusion(config_, r, t, settings_.exclusion_radius);
  EffectiveFieldSample out;
  out.position = r;
  out.time = t;
  for (const auto& e : config_.elements) {
    if (!e.carries_charge()) continue;
    const double w = e.weight(t);
    if (w != 0.0) add_scalar(e, r, w, out);
  }
  return out;
}

EffectiveFieldSample FieldModel::vector(const Vec3& r, double t) const {
  check_exclusion(config_, r, t, settings_.exclusion_radius);
  EffectiveFieldSample out;
  out.position = r;
  out.time = t;
  for (std::size_t i = 0; i < config_.elements.size(); ++i) {
    const auto& e = config_.elements[i];
    if (!e.carries_current()) continue;
    const double w = e.weight(t);
    if (w != 0.0) add_vector(i, e, r, w, out);
  }
  return out;
}

EffectiveFieldSample FieldModel::both(const Vec3& r, double t) const {
  EffectiveFieldSample out = scalar(r, t);
  const EffectiveFieldSample a = vector(r, t);
  out.A = a.A;
  for (int c = 1; c < 4; ++c) out.abs_error[c] = a.abs_error[c];
  return out;
}

EffectiveFieldSample effective_scalar_potential(const SourceConfiguration& config,
                                                const Vec3& r, double t,
                                                const QuadratureSettings& settings) {
  return FieldModel(config, settings).scalar(r, t);
}

EffectiveFieldSample effective_vector_potential(const SourceConfiguration& config,
                                                const Vec3& r, double t,
                                                const QuadratureSettings& settings) {
  return FieldModel(config, settings).vector(r, t);
}

CirculationResult circulation(const FieldModel& model, std::span<const Vec3> loop,
                              double t) {
  if (loop.size() < 2 || (loop.front() - loop.back()).norm() > 1e-12) {
    std::ostringstream os;
    os << "circulation path is not closed";
    if (loop.size() >= 2) os << ": endpoints differ by " << (loop.front() - loop.back()).norm();
    throw OpenLoop(os.str());
  }
  CirculationResult out;
  quad::AdaptiveOptions opt;
  opt.rel_tol = std::min(model.settings().rel_tol, 1e-12);
  opt.max_depth = model.settings().max_subdivision_depth;
  for (std::size_t i = 0; i + 1 < loop.size(); ++i) {
    const Vec3 p0 = loop[i];
    const Vec3 edge = loop[i + 1] - loop[i];
    if (edge.norm() == 0.0) continue;
    double sample_err = 0.0;
    auto f = [&](double tau) {
      const auto s = model.vector(p0 + tau * edge, t);
      sample_err = std::max(sample_err, std::max({s.abs_error[1], s.abs_error[2],
                                                  s.abs_error[3]}));
      return s.A.dot(edge);
    };
    opt.abs_tol = 1e-300;
    auto res = quad::integrate<double>(f, 0.0, 1.0, opt);
    if (!res.converged)
      throw QuadratureNotConverged("circulation quadrature did not converge on edge " +
                                   std::to_string(i));
    out.value += res.value;
    out.est_error += res.error + sample_err * edge.norm();
  }
  return out;
}

CirculationResult circulation(const SourceConfiguration& config,
                              std::span<const Vec3> loop, double t,
                              const QuadratureSettings& settings) {
  return circulation(FieldModel(config, settings), loop, t);
}

double kernel_truncated(double r, double k_max) {
  if (!(r > 0) || !(k_max > 0))
    throw std::invalid_argument("kernel_truncated needs r > 0 and k_max > 0");
  // In x = k r: (1 / (2 pi^2 r)) int_0^X sinc(x) (1 - x / X) dx, one panel
  // per half period.
  const double X = k_max * r;
  auto f = [X](double x) {
    const double s = x < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
    return s * (1.0 - x / X);
  };
  const int panels = std::max(1, static_cast<int>(std::ceil(X / pi)));
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = p * pi;
    const double b = std::min(X, (p + 1) * pi);
    if (b <= a) break;
    quad::AdaptiveOptions opt;
    opt.rel_tol = 1e-14;
    opt.abs_tol = 1e-17;
    total += quad::integrate<double>(f, a, b, opt).value;
  }
  return total / (2 * pi * pi * r);
}

KernelIdentityResult kernel_identity_check(double r, double k_max, int levels) {
  if (levels < 3) throw std::invalid_argument("kernel identity needs at least 3 levels");
  KernelIdentityResult out;
  out.exact = 1.0 / (4 * pi * r);
  for (int j = 0; j < levels; ++j) {
    const double k = k_max * std::ldexp(1.0, j);
    out.k_values.push_back(k);
    out.sequence.push_back(kernel_truncated(r, k));
  }
  out.truncated = out.sequence.front();
  const auto ex = quad::extrapolate_doubling(out.sequence);
  out.kspace = ex.value;
  out.est_error = ex.error;
  out.observed_order = ex.observed_order;
  return out;
}

}  // namespace abqed
