#include "abqed/modespace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "abqed/quadrature.hpp"

namespace abqed {

using Vec3c = Eigen::Vector3cd;

namespace {

constexpr cplx I_unit{0.0, 1.0};

cplx phase_factor(const Vec3& k, const Vec3& x) { return std::polar(1.0, -k.dot(x)); }

// J . eps without conjugation (Eigen's complex dot conjugates its left side).
cplx project(const Vec3c& J, const Vec3& eps) { return eps.cast<cplx>().dot(J); }

double sinc(double x) { return std::abs(x) < 1e-6 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

// Radial part of an isotropic charge transform (the transform of the
// element centered at the origin), per unit weight.
double charge_radial(const SourceElement& e, double k) {
  switch (e.kind) {
    case SourceKind::point_charge: return 1.0;
    case SourceKind::gaussian_charge_ball: return std::exp(-0.5 * k * k * e.width * e.width);
    case SourceKind::charged_shell: return sinc(k * e.radius);
    default: return 0.0;
  }
}

using WeightFn = std::function<double(const SourceElement&)>;

cplx charge_transform_weighted(const SourceConfiguration& config, const Vec3& k,
                               const WeightFn& weight) {
  cplx total = 0.0;
  const double kn = k.norm();
  for (const auto& e : config.elements) {
    if (!e.carries_charge()) continue;
    const double w = weight(e);
    if (w == 0.0) continue;
    total += w * charge_radial(e, kn) * phase_factor(k, e.position);
  }
  return total;
}

// Bessel form of one circular filament centered at c:
//   -2 pi i I a J1(a k_perp) (-sin psi u + cos psi v) e^{-ik.c}.
Vec3c loop_transform(const Vec3& c, const Vec3& u, const Vec3& v, const Vec3& axis,
                     double a, double current, const Vec3& k) {
  const double ku = k.dot(u), kv = k.dot(v);
  const double kperp = std::hypot(ku, kv);
  (void)axis;
  if (kperp == 0.0) return Vec3c::Zero();
  const double j1 = std::cyl_bessel_j(1.0, a * kperp);
  const Vec3 dir = (-kv * u + ku * v) / kperp;
  const cplx amp = -2.0 * pi * I_unit * current * a * j1 * phase_factor(k, c);
  return dir.cast<cplx>() * amp;
}

Vec3c filament_transform_quadrature(const Filament& f, const Vec3& k) {
  Vec3c total = Vec3c::Zero();
  for (const auto& seg : f.segments) {
    auto g = [&](double tau) -> Vec3c {
      return seg.derivative(tau).cast<cplx>() * phase_factor(k, seg.point(tau));
    };
    quad::AdaptiveOptions opt;
    opt.rel_tol = 1e-13;
    opt.abs_tol = 1e-15 * seg.length();
    auto res = quad::integrate<Vec3c>(g, 0.0, 1.0, opt);
    total += res.value;
  }
  return total * f.current;
}

Vec3c current_transform_weighted(const SourceConfiguration& config, const Vec3& k,
                                 const WeightFn& weight, TransformMethod method) {
  Vec3c total = Vec3c::Zero();
  for (const auto& e : config.elements) {
    if (!e.carries_current()) continue;
    if (e.kind == SourceKind::infinite_solenoid_analytic)
      throw NonCompactSource(
          "infinite_solenoid_analytic has no Fourier transform; use a finite_solenoid");
    const double w = weight(e);
    if (w == 0.0) continue;
    const double tube = std::exp(-0.5 * k.squaredNorm() * e.wire_radius * e.wire_radius);
    if (method == TransformMethod::quadrature) {
      SourceElement unit = e;
      unit.strength = w;
      unit.schedule = TimeSchedule::constant(1.0);
      for (const auto& f : filaments_of(unit, 0.0))
        total += filament_transform_quadrature(f, k) * tube;
      continue;
    }
    const auto [u, v] = transverse_frame(e.axis);
    if (e.kind == SourceKind::current_loop) {
      total += loop_transform(e.position, u, v, e.axis, e.radius, w, k) * tube;
    } else {
      // Stacked loops share the Bessel factor; sum their axial phases.
      const Vec3c one = loop_transform(e.position, u, v, e.axis, e.radius, 1.0, k);
      const double per_loop = w * e.turns_per_meter * e.length / e.loops;
      const double kz = k.dot(e.axis);
      cplx sum = 0.0;
      for (int i = 0; i < e.loops; ++i) {
        const double z = -0.5 * e.length + (i + 0.5) * e.length / e.loops;
        sum += std::polar(1.0, -kz * z);
      }
      total += one * (per_loop * sum * tube);
    }
  }
  return total;
}

WeightFn weight_at(double t) {
  return [t](const SourceElement& e) { return e.weight(t); };
}

WeightFn rate_at(double t) {
  return [t](const SourceElement& e) { return e.strength * e.schedule.rate(t); };
}

// Product cubature on the unit sphere: Gauss-Legendre in cos(theta) about
// `pole`, trapezoid in phi. `symmetry` 2 = isotropic integrand, 1 = axially
// symmetric about the pole, 0 = general.
struct SphereNode {
  Vec3 dir;
  double weight;
};

std::vector<SphereNode> sphere_rule(double kR, const Vec3& pole, int symmetry,
                                    double oversampling) {
  std::vector<SphereNode> nodes;
  if (symmetry == 2) {
    nodes.push_back({pole, 4 * pi});
    return nodes;
  }
  const auto [u, v] = transverse_frame(pole);
  const int n_theta = std::max(4, static_cast<int>(std::ceil((0.55 * kR + 10) * oversampling)));
  const auto rule = quad::gauss_legendre(n_theta);
  for (int i = 0; i < n_theta; ++i) {
    const double ct = rule->nodes[i];
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    if (symmetry == 1) {
      nodes.push_back({ct * pole + st * u, 2 * pi * rule->weights[i]});
      continue;
    }
    const int n_phi =
        std::max(8, static_cast<int>(std::ceil((kR * st + 16) * oversampling)));
    const double wphi = 2 * pi / n_phi;
    for (int j = 0; j < n_phi; ++j) {
      const double ph = (j + 0.5) * wphi;
      nodes.push_back({ct * pole + st * (std::cos(ph) * u + std::sin(ph) * v),
                       rule->weights[i] * wphi});
    }
  }
  return nodes;
}

// Integral over k in [k0, k1] with panels of width ~ 2 pi / R.
template <typename T, typename F>
quad::Result<T> radial_integral(F&& f, double k0, double k1, double R, double rel_tol) {
  std::vector<double> cuts;
  const double h = 2 * pi / std::max(R, 1e-300);
  const int panels = std::min(2000, static_cast<int>(std::ceil((k1 - k0) / h)));
  for (int p = 1; p < panels; ++p) cuts.push_back(k0 + p * (k1 - k0) / panels);
  quad::AdaptiveOptions opt;
  opt.rel_tol = rel_tol;
  opt.max_depth = 20;
  opt.max_intervals = 20000;
  return quad::integrate<T>(f, k0, k1, opt, cuts);
}

double window_value(KWindow w, double k, double K) {
  switch (w) {
    case KWindow::sharp: return k <= K ? 1.0 : 0.0;
    case KWindow::fejer: return k <= K ? 1.0 - k / K : 0.0;
    case KWindow::gaussian: return std::exp(-(k * k) / (K * K));
    case KWindow::super_gaussian: {
      const double x2 = (k * k) / (K * K);
      return std::exp(-(x2 * x2) * (x2 * x2));
    }
  }
  return 0.0;
}

double window_extent(const KSpaceSettings& s, double K) {
  if (s.window == KWindow::gaussian) return s.cutoff_factor * K;
  if (s.window == KWindow::super_gaussian) return 2.0 * K;
  return K;
}

// Distance from r to the geometric support of e, used to pick the starting
// window scale.
double support_distance(const SourceElement& e, const Vec3& r) {
  const Vec3 d = r - e.position;
  switch (e.kind) {
    case SourceKind::point_charge: return d.norm();
    case SourceKind::gaussian_charge_ball: return std::max(d.norm(), e.width);
    case SourceKind::charged_shell: return std::abs(d.norm() - e.radius);
    case SourceKind::current_loop:
    case SourceKind::finite_solenoid: {
      SourceElement thin = e;
      thin.wire_radius = 0.0;
      return std::max(distance_to_singular_support(thin, r), e.wire_radius);
    }
    case SourceKind::infinite_solenoid_analytic: return distance_to_singular_support(e, r);
  }
  return 1.0;
}

// Size of the region over which e^{ik.(r - r')} varies for r' in the sources.
double oscillation_radius(const SourceConfiguration& config, const Vec3& r,
                          bool charges) {
  double R = 0.0;
  for (const auto& e : config.elements) {
    if (e.carries_charge() != charges) continue;
    double ext = e.extent();
    if (e.kind == SourceKind::gaussian_charge_ball) ext = 3.0 * e.width;
    R = std::max(R, (r - e.position).norm() + ext);
  }
  return R;
}

bool coaxial_currents(const SourceConfiguration& config, Vec3* axis_out) {
  const SourceElement* first = nullptr;
  for (const auto& e : config.elements) {
    if (!e.carries_current()) continue;
    if (!first) {
      first = &e;
      continue;
    }
    const Vec3 a = first->axis.normalized();
    if (a.cross(e.axis.normalized()).norm() > 1e-12) return false;
    const Vec3 d = e.position - first->position;
    if ((d - d.dot(a) * a).norm() > 1e-12) return false;
  }
  if (first && axis_out) *axis_out = first->axis.normalized();
  return first != nullptr;
}

bool common_charge_center(const SourceConfiguration& config, Vec3* center) {
  const SourceElement* first = nullptr;
  for (const auto& e : config.elements) {
    if (!e.carries_charge()) continue;
    if (!first) {
      first = &e;
      continue;
    }
    if ((e.position - first->position).norm() > 1e-15) return false;
  }
  if (first && center) *center = first->position;
  return first != nullptr;
}

}  // namespace

// ---------------------------------------------------------------------------

PolarizationBasis PolarizationBasis::for_direction(const Vec3& k, double rotation) {
  const double kn = k.norm();
  if (kn == 0.0) throw ZeroWavevector("polarization basis needs |k| > 0");
  PolarizationBasis b;
  b.khat = k / kn;
  Vec3 e1 = Vec3::UnitZ().cross(b.khat);
  if (e1.norm() < 1e-8) e1 = Vec3::UnitX().cross(b.khat);
  e1.normalize();
  Vec3 e2 = b.khat.cross(e1);
  if (rotation != 0.0) {
    const Vec3 r1 = std::cos(rotation) * e1 + std::sin(rotation) * e2;
    e2 = b.khat.cross(r1);
    e1 = r1;
  }
  b.eps = {e1, e2, b.khat};
  return b;
}

double PolarizationBasis::orthonormality_defect() const {
  double worst = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      worst = std::max(worst, std::abs(eps[i].dot(eps[j]) - (i == j ? 1.0 : 0.0)));
  worst = std::max(worst, (eps[0].cross(eps[1]) - eps[2]).norm());
  return worst;
}

double mode_prefactor(double k, const PhysicalConstants& consts) {
  const double omega = consts.c * k;
  return std::sqrt(consts.hbar / (2 * consts.eps0 * omega * std::pow(2 * pi, 3)));
}

cplx charge_transform(const SourceConfiguration& config, const Vec3& k, double t) {
  return charge_transform_weighted(config, k, weight_at(t));
}

Vec3c current_transform(const SourceConfiguration& config, const Vec3& k, double t,
                        TransformMethod method) {
  return current_transform_weighted(config, k, weight_at(t), method);
}

cplx lambda_scalar(const SourceConfiguration& config, const Vec3& k, double t) {
  const double kn = k.norm();
  if (kn == 0.0) throw ZeroWavevector("lambda_0 is undefined at k = 0");
  const auto& K = config.constants;
  const double omega = K.c * kn;
  return K.c / (K.hbar * omega) * mode_prefactor(kn, K) * charge_transform(config, k, t);
}

std::array<cplx, 3> lambda_current(const SourceConfiguration& config, const Vec3& k,
                                   double t, const PolarizationBasis& basis,
                                   TransformMethod method) {
  const double kn = k.norm();
  if (kn == 0.0) throw ZeroWavevector("lambda_j is undefined at k = 0");
  const auto& K = config.constants;
  const double scale = mode_prefactor(kn, K) / (K.hbar * K.c * kn);
  const Vec3c J = current_transform(config, k, t, method);
  std::array<cplx, 3> out;
  for (int j = 0; j < 3; ++j) out[j] = scale * project(J, basis.eps[j]);
  return out;
}

// ---------------------------------------------------------------------------

KSpaceSample reconstruct_potentials_kspace(const SourceConfiguration& config,
                                           const Vec3& r, double t,
                                           const KSpaceSettings& settings) {
  config.validate();
  check_exclusion(config, r, t);
  const auto& K = config.constants;
  const bool charges = config.has_charges();
  const bool currents = config.has_currents();
  for (const auto& e : config.elements)
    if (e.kind == SourceKind::infinite_solenoid_analytic)
      throw NonCompactSource("k-space reconstruction needs compact sources");

  KSpaceSample out;
  out.field.position = r;
  out.field.time = t;
  if (!charges && !currents) return out;

  double d_min = std::numeric_limits<double>::infinity();
  for (const auto& e : config.elements) d_min = std::min(d_min, support_distance(e, r));
  const double k0 = settings.k_max > 0 ? settings.k_max : 3.0 / d_min;

  Vec3 pole = Vec3::UnitZ();
  coaxial_currents(config, &pole);
  const double R_charge = oscillation_radius(config, r, true);
  const double R_current = oscillation_radius(config, r, false);
  const double inner_tol = std::min(1e-9, 1e-3 * settings.rel_tol);

  // Scalar sector, one window scale. cP lambda_0 e^{ikr} - cP <a_0^dag> e^{-ikr}.
  auto scalar_at = [&](double Kw, double& residue) {
    const double k_hi = window_extent(settings, Kw);
    if (!settings.force_cubature) {
      // Angular-analytic: every charge element has an isotropic transform
      // times e^{-ik.c}, and the solid-angle integral of e^{ik.(r-c)} is
      // 4 pi sinc(k |r - c|).
      double total = 0.0;
      for (const auto& e : config.elements) {
        if (!e.carries_charge()) continue;
        const double w = e.weight(t);
        if (w == 0.0) continue;
        const double dist = (r - e.position).norm();
        auto f = [&](double k) {
          if (k == 0.0) k = 1e-300;
          const double P = mode_prefactor(k, K);
          const double lam = K.c / (K.hbar * K.c * k) * P * w * charge_radial(e, k);
          const cplx a = expect_annihilation(0, lam);
          const cplx ad = expect_creation(0, lam);
          const double ang = 4 * pi * sinc(k * dist);
          const cplx pair = K.c * P * (a - ad) * ang;  // e^{+-ikr} give the same shell average
          residue = std::max(residue, std::abs(pair.imag()));
          return k * k * pair.real() * window_value(settings.window, k, Kw);
        };
        auto res = radial_integral<double>(f, 0.0, k_hi, dist + e.extent(), inner_tol);
        total += res.value;
      }
      return total;
    }
    auto f = [&](double k) {
      if (k == 0.0) return 0.0;
      const double P = mode_prefactor(k, K);
      double shell = 0.0;
      for (const auto& node : sphere_rule(k * R_charge, pole, 0, settings.angular_oversampling)) {
        const Vec3 kv = k * node.dir;
        const cplx lam = lambda_scalar(config, kv, t);
        const cplx e = std::polar(1.0, kv.dot(r));
        const cplx term = K.c * P *
                          (expect_annihilation(0, lam) * e - expect_creation(0, lam) * std::conj(e));
        residue = std::max(residue, std::abs(term.imag()));
        shell += node.weight * term.real();
      }
      return k * k * shell * window_value(settings.window, k, Kw);
    };
    return radial_integral<double>(f, 0.0, k_hi, R_charge, inner_tol).value;
  };

  // Vector sector: P sum_j eps_j (lambda_j e^{ikr} + <a_j^dag> e^{-ikr}).
  auto vector_at = [&](double Kw, double& residue) {
    const double k_hi = window_extent(settings, Kw);
    if (!settings.force_cubature && settings.transform == TransformMethod::analytic) {
      // Azimuth-analytic: with the pole on a loop's axis, the phi integral of
      // J~(k) e^{ik.r} is 4 pi^2 I a J1(a k_perp) J1(rho k_perp) e^{ik_z z} phi_hat,
      // and P lambda_j summed against eps_j gives mu0 J~ / (2 k^2 (2 pi)^3).
      Vec3 total = Vec3::Zero();
      for (const auto& e : config.elements) {
        if (!e.carries_current()) continue;
        const double w = e.weight(t);
        if (w == 0.0) continue;
        double rho = 0.0, z = 0.0;
        const Vec3 d = r - e.position;
        z = d.dot(e.axis);
        const Vec3 radial = d - z * e.axis;
        rho = radial.norm();
        if (rho == 0.0) continue;
        const Vec3 phi_hat = e.axis.cross(radial / rho);
        std::vector<double> dz;
        double per_loop = w;
        if (e.kind == SourceKind::finite_solenoid) {
          per_loop = w * e.turns_per_meter * e.length / e.loops;
          for (int i = 0; i < e.loops; ++i)
            dz.push_back(z - (-0.5 * e.length + (i + 0.5) * e.length / e.loops));
        } else {
          dz.push_back(z);
        }
        double dz_max = 0.0;
        for (double x : dz) dz_max = std::max(dz_max, std::abs(x));
        const double Re = e.radius + rho + dz_max;
        const double a = e.radius;
        const double tube2 = e.wire_radius * e.wire_radius;
        auto g = [&](double k) {
          if (k == 0.0) return 0.0;
          const int n = static_cast<int>(std::ceil((0.55 * k * Re + 10) * settings.angular_oversampling));
          const auto rule = quad::gauss_legendre(std::max(n, 4));
          double sum = 0.0;
          for (std::size_t i = 0; i < rule->nodes.size(); ++i) {
            const double u = rule->nodes[i];
            const double kp = k * std::sqrt(std::max(0.0, 1.0 - u * u));
            const double jj = std::cyl_bessel_j(1.0, a * kp) * std::cyl_bessel_j(1.0, rho * kp);
            double c = 0.0;
            for (double x : dz) c += std::cos(k * u * x);
            sum += rule->weights[i] * jj * c;
          }
          return sum * std::exp(-0.5 * k * k * tube2) * window_value(settings.window, k, Kw);
        };
        const double a_phi = K.mu0 * per_loop * a / (2 * pi) *
                             radial_integral<double>(g, 0.0, k_hi, Re, inner_tol).value;
        total += a_phi * phi_hat;
      }
      return total;
    }
    const int symmetry = 0;
    auto f = [&](double k) -> Vec3 {
      if (k == 0.0) return Vec3::Zero();
      const double P = mode_prefactor(k, K);
      Vec3 shell = Vec3::Zero();
      for (const auto& node :
           sphere_rule(k * R_current, pole, symmetry, settings.angular_oversampling)) {
        const Vec3 kv = k * node.dir;
        const auto basis = PolarizationBasis::for_direction(kv, settings.basis_rotation);
        const auto lam = lambda_current(config, kv, t, basis, settings.transform);
        const cplx e = std::polar(1.0, kv.dot(r));
        Vec3c term = Vec3c::Zero();
        for (int j = 0; j < 3; ++j)
          term += basis.eps[j].cast<cplx>() *
                  (P * (expect_annihilation(j + 1, lam[j]) * e +
                        expect_creation(j + 1, lam[j]) * std::conj(e)));
        residue = std::max(residue, term.imag().norm());
        shell += node.weight * term.real();
      }
      return k * k * shell * window_value(settings.window, k, Kw);
    };
    return radial_integral<Vec3>(f, 0.0, k_hi, R_current, inner_tol).value;
  };

  double v_res = 0.0, a_res = 0.0;
  bool converged = false;
  quad::Extrapolation ex_v;
  std::array<quad::Extrapolation, 3> ex_a;
  for (int level = 0; level < std::max(settings.levels, settings.max_levels); ++level) {
    const double Kw = k0 * std::ldexp(1.0, level);
    out.k_values.push_back(Kw);
    out.v_sequence.push_back(charges ? scalar_at(Kw, v_res) : 0.0);
    out.a_sequence.push_back(currents ? vector_at(Kw, a_res) : Vec3::Zero());
    if (level + 1 < settings.levels) continue;

    ex_v = quad::extrapolate_doubling(out.v_sequence);
    double a_err = 0.0;
    Vec3 a_val;
    for (int c = 0; c < 3; ++c) {
      std::vector<double> comp;
      for (const auto& a : out.a_sequence) comp.push_back(a[c]);
      ex_a[c] = quad::extrapolate_doubling(comp);
      a_val[c] = ex_a[c].value;
      a_err = std::max(a_err, ex_a[c].error);
    }
    const bool v_ok = !charges || ex_v.error <= settings.rel_tol * std::abs(ex_v.value);
    const bool a_ok = !currents || a_err <= settings.rel_tol * a_val.norm();
    if (v_ok && a_ok) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw QuadratureNotConverged("k-space reconstruction at " + format_vec(r) +
                                 " did not reach rel_tol after " +
                                 std::to_string(out.k_values.size()) + " window doublings");

  out.field.V = ex_v.value;
  out.field.abs_error[0] = ex_v.error;
  for (int c = 0; c < 3; ++c) {
    out.field.A[c] = ex_a[c].value;
    out.field.abs_error[1 + c] = ex_a[c].error;
  }
  out.observed_order_v = ex_v.observed_order;
  out.observed_order_a = ex_a[0].observed_order;
  const double scale = std::max(std::abs(out.field.V), out.field.A.norm());
  out.imaginary_residue = scale > 0 ? std::max(v_res, a_res) / scale : 0.0;
  return out;
}

// ---------------------------------------------------------------------------

GroundEnergyResult ground_energy_constant(const SourceConfiguration& config, double t,
                                          const GroundEnergySettings& settings) {
  config.validate();
  const auto& K = config.constants;
  double smallest = std::numeric_limits<double>::infinity();
  for (const auto& e : config.elements) {
    if (e.weight(t) == 0.0) continue;
    switch (e.kind) {
      case SourceKind::infinite_solenoid_analytic:
        throw NonCompactSource("ground-energy constant needs compact sources");
      case SourceKind::point_charge:
        if (!settings.allow_divergent)
          throw SelfEnergyDivergent(
              "point charge: int |lambda_0|^2 hbar omega d^3k diverges linearly in k_max");
        smallest = std::min(smallest, 1.0 / std::max((e.position).norm(), 1.0));
        break;
      case SourceKind::gaussian_charge_ball: smallest = std::min(smallest, e.width); break;
      case SourceKind::charged_shell: smallest = std::min(smallest, e.radius); break;
      case SourceKind::current_loop:
      case SourceKind::finite_solenoid:
        if (e.wire_radius <= 0.0) {
          if (!settings.allow_divergent)
            throw SelfEnergyDivergent(
                "thin filament: magnetic self-energy diverges logarithmically; set "
                "wire_radius > 0");
          smallest = std::min(smallest, e.radius / 10.0);
        } else {
          smallest = std::min(smallest, e.wire_radius);
        }
        break;
    }
  }
  GroundEnergyResult out;
  if (!std::isfinite(smallest)) return out;

  const double k0 = settings.k_max > 0 ? settings.k_max : 1.0 / smallest;

  // Oscillation scale: diameter of the source set.
  double R = 0.0;
  for (const auto& a : config.elements)
    for (const auto& b : config.elements) {
      double ea = a.kind == SourceKind::gaussian_charge_ball ? 3 * a.width : a.extent();
      double eb = b.kind == SourceKind::gaussian_charge_ball ? 3 * b.width : b.extent();
      R = std::max(R, (a.position - b.position).norm() + ea + eb);
    }
  R = std::max(R, smallest);

  Vec3 center = Vec3::Zero();
  const bool isotropic = common_charge_center(config, &center);
  Vec3 pole = Vec3::UnitZ();
  const bool axisymmetric = coaxial_currents(config, &pole);
  const double inner_tol = std::min(1e-9, 1e-3 * settings.rel_tol);

  // k^2 |lambda_0|^2 hbar omega integrated over directions.
  auto scalar_shell = [&](double k) {
    if (k == 0.0) return 0.0;
    const double hw = K.hbar * K.c * k;
    double s = 0.0;
    for (const auto& n : sphere_rule(k * R, Vec3::UnitZ(), isotropic ? 2 : 0,
                                     settings.angular_oversampling)) {
      const cplx lam = lambda_scalar(config, k * n.dir, t);
      s += n.weight * std::norm(lam);
    }
    return k * k * s * hw;
  };
  auto current_shell = [&](double k) {
    if (k == 0.0) return 0.0;
    const double hw = K.hbar * K.c * k;
    double s = 0.0;
    for (const auto& n :
         sphere_rule(k * R, pole, axisymmetric ? 1 : 0, settings.angular_oversampling)) {
      const Vec3 kv = k * n.dir;
      const auto lam = lambda_current(config, kv, t, PolarizationBasis::for_direction(kv));
      s += n.weight * (std::norm(lam[0]) + std::norm(lam[1]) + std::norm(lam[2]));
    }
    return k * k * s * hw;
  };

  const bool charges = config.has_charges();
  const bool currents = config.has_currents();
  std::vector<double> s_seq, c_seq;
  double s_acc = 0.0, c_acc = 0.0, k_prev = 0.0;
  quad::Extrapolation ex_s, ex_c;
  const int levels_cap = std::max(settings.levels, settings.max_levels);
  for (int level = 0; level < levels_cap; ++level) {
    const double Kc = k0 * std::ldexp(1.0, level);
    if (charges) s_acc += radial_integral<double>(scalar_shell, k_prev, Kc, R, inner_tol).value;
    if (currents) c_acc += radial_integral<double>(current_shell, k_prev, Kc, R, inner_tol).value;
    k_prev = Kc;
    out.k_values.push_back(Kc);
    s_seq.push_back(s_acc);
    c_seq.push_back(c_acc);
    out.sequence.push_back(s_acc - c_acc);
    if (settings.allow_divergent) {
      if (level + 1 >= settings.levels) break;
      continue;
    }
    if (level + 1 < settings.levels) continue;
    ex_s = quad::extrapolate_doubling(s_seq);
    ex_c = quad::extrapolate_doubling(c_seq);
    const double err = (charges ? ex_s.error : 0.0) + (currents ? ex_c.error : 0.0);
    if (err <= settings.rel_tol * std::abs(ex_s.value - ex_c.value)) break;
    if (level + 1 == levels_cap) out.converged = false;
  }

  if (settings.allow_divergent) {
    out.scalar_part = s_acc;
    out.current_part = c_acc;
    out.value = s_acc - c_acc;
    out.est_error = std::numeric_limits<double>::infinity();
    out.converged = false;
    return out;
  }
  out.scalar_part = ex_s.value;
  out.current_part = ex_c.value;
  out.value = ex_s.value - ex_c.value;
  out.est_error = (charges ? ex_s.error : 0.0) + (currents ? ex_c.error : 0.0);
  const auto ex_total = quad::extrapolate_doubling(out.sequence);
  out.observed_order = ex_total.observed_order;
  return out;
}

// ---------------------------------------------------------------------------

ModeGaugeValue effective_gauge_from_modes(const ModeGaugeSpec& spec,
                                          const SourceConfiguration& config,
                                          const Vec3& r, double t,
                                          const KSpaceSettings& settings) {
  config.validate();
  ModeGaugeValue out;
  if (!spec.f) return out;
  for (const auto& e : config.elements)
    if (e.kind == SourceKind::infinite_solenoid_analytic)
      throw NonCompactSource("mode gauge needs compact sources");
  if (config.elements.empty()) return out;

  const auto& K = config.constants;
  const bool charges = config.has_charges();
  const bool currents = config.has_currents();

  double d_scale = std::numeric_limits<double>::infinity();
  for (const auto& e : config.elements) d_scale = std::min(d_scale, support_distance(e, r));
  d_scale = std::max(d_scale, 1e-300);
  const double k0 = settings.k_max > 0 ? settings.k_max : 3.0 / d_scale;
  const double R = std::max(oscillation_radius(config, r, true),
                            oscillation_radius(config, r, false));
  const double inner_tol = std::min(1e-9, 1e-3 * settings.rel_tol);

  auto df = [&](int sigma, const Vec3& k) -> cplx {
    if (spec.df_dt) return spec.df_dt(sigma, k, t);
    const double h = spec.fd_step;
    return (spec.f(sigma, k, t + h) - spec.f(sigma, k, t - h)) / (2 * h);
  };

  // Packs (F, grad F, dF/dt) and an imaginary-residue slot.
  using Pack = Eigen::Matrix<double, 6, 1>;
  auto at_window = [&](double Kw) -> Pack {
    const double k_hi = window_extent(settings, Kw);
    auto f = [&](double k) -> Eigen::VectorXd {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(6);
      if (k == 0.0) return acc;
      const double P = mode_prefactor(k, K);
      const double scale_s = K.c / (K.hbar * K.c * k) * P;
      const double scale_j = P / (K.hbar * K.c * k);
      for (const auto& node : sphere_rule(k * R, Vec3::UnitZ(), 0, settings.angular_oversampling)) {
        const Vec3 kv = k * node.dir;
        std::array<cplx, 4> lam{}, dlam{};
        if (charges) {
          lam[0] = scale_s * charge_transform_weighted(config, kv, weight_at(t));
          dlam[0] = scale_s * charge_transform_weighted(config, kv, rate_at(t));
        }
        if (currents) {
          const auto basis = PolarizationBasis::for_direction(kv, settings.basis_rotation);
          const Vec3c J = current_transform_weighted(config, kv, weight_at(t), settings.transform);
          const Vec3c dJ = current_transform_weighted(config, kv, rate_at(t), settings.transform);
          for (int j = 0; j < 3; ++j) {
            lam[j + 1] = scale_j * project(J, basis.eps[j]);
            dlam[j + 1] = scale_j * project(dJ, basis.eps[j]);
          }
        }
        const cplx e = std::polar(1.0, kv.dot(r));
        cplx F = 0.0, Ft = 0.0;
        Vec3c G = Vec3c::Zero();
        for (int s = 0; s < 4; ++s) {
          if (lam[s] == 0.0 && dlam[s] == 0.0) continue;
          const cplx fs = spec.f(s, kv, t);
          const cplx fts = df(s, kv);
          // f a e^{ikr} -/+ f^* <a^dag> e^{-ikr}: minus for the scalar sector.
          const double sgn = s == 0 ? -1.0 : 1.0;
          const cplx term = fs * expect_annihilation(s, lam[s]) * e +
                            sgn * std::conj(fs) * expect_creation(s, lam[s]) * std::conj(e);
          const cplx dterm = (fts * lam[s] + fs * dlam[s]) * e +
                             sgn * std::conj(fts) * expect_creation(s, lam[s]) * std::conj(e) +
                             sgn * std::conj(fs) * expect_creation(s, dlam[s]) * std::conj(e);
          const cplx gterm = I_unit * (fs * lam[s] * e) -
                             I_unit * (sgn * std::conj(fs) * expect_creation(s, lam[s]) *
                                       std::conj(e));
          F += term;
          Ft += dterm;
          G += kv.cast<cplx>() * gterm;
        }
        const double w = node.weight;
        acc[0] += w * F.real();
        acc.segment<3>(1) += w * G.real();
        acc[4] += w * Ft.real();
        acc[5] = std::max(acc[5], std::max({std::abs(F.imag()), std::abs(Ft.imag()),
                                            G.imag().norm()}));
      }
      const double wk = k * k * window_value(settings.window, k, Kw);
      acc.head<5>() *= wk;
      return acc;
    };
    // Component-wise integration with a shared partition.
    std::vector<double> cuts;
    const double h = 2 * pi / std::max(R, 1e-300);
    const int panels = std::min(2000, static_cast<int>(std::ceil(k_hi / h)));
    Pack total = Pack::Zero();
    const auto rule = quad::gauss_legendre(20);
    for (int p = 0; p < panels; ++p) {
      const double a = p * k_hi / panels, b = (p + 1) * k_hi / panels;
      for (std::size_t i = 0; i < rule->nodes.size(); ++i) {
        const double k = 0.5 * (a + b) + 0.5 * (b - a) * rule->nodes[i];
        const Eigen::VectorXd v = f(k);
        total.head<5>() += 0.5 * (b - a) * rule->weights[i] * v.head<5>();
        total[5] = std::max(total[5], v[5]);
      }
    }
    (void)inner_tol;
    return total;
  };

  std::vector<Pack> seq;
  std::array<quad::Extrapolation, 5> ex;
  bool converged = false;
  for (int level = 0; level < std::max(settings.levels, settings.max_levels); ++level) {
    seq.push_back(at_window(k0 * std::ldexp(1.0, level)));
    if (level + 1 < settings.levels) continue;
    double worst = 0.0;
    for (int c = 0; c < 5; ++c) {
      std::vector<double> comp;
      for (const auto& s : seq) comp.push_back(s[c]);
      ex[c] = quad::extrapolate_doubling(comp);
    }
    const double scale = std::max({std::abs(ex[0].value), Vec3(ex[1].value, ex[2].value, ex[3].value).norm() * d_scale,
                                   1e-300});
    for (int c = 0; c < 4; ++c) worst = std::max(worst, ex[c].error * (c == 0 ? 1.0 : d_scale));
    if (worst <= settings.rel_tol * scale) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw QuadratureNotConverged("mode gauge field did not converge at " + format_vec(r));

  out.F = ex[0].value;
  out.grad = Vec3(ex[1].value, ex[2].value, ex[3].value);
  out.dF_dt = ex[4].value;
  out.est_error = ex[0].error;
  const double scale = std::abs(out.F) > 0 ? std::abs(out.F) : 1.0;
  out.imaginary_residue = seq.back()[5] / scale;
  return out;
}

}  // namespace abqed
