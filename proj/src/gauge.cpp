#include "abqed/gauge.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace abqed {

std::string to_string(GaugeKind kind) {
  switch (kind) {
    case GaugeKind::constant: return "constant";
    case GaugeKind::linear: return "linear";
    case GaugeKind::gaussian_bump: return "gaussian_bump";
    case GaugeKind::sinusoidal: return "sinusoidal";
    case GaugeKind::time_modulated_product: return "time_modulated_product";
    case GaugeKind::from_modes: return "from_modes";
  }
  return "unknown";
}

std::optional<GaugeKind> gauge_kind_from_string(const std::string& name) {
  for (auto k : {GaugeKind::constant, GaugeKind::linear, GaugeKind::gaussian_bump,
                 GaugeKind::sinusoidal, GaugeKind::time_modulated_product,
                 GaugeKind::from_modes})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

namespace {

double bump(const GaugeTerm& g, const Vec3& r) {
  return std::exp(-(r - g.center).squaredNorm() / (2 * g.width * g.width));
}

ModeGaugeValue mode_value(const GaugeTerm& g, const Vec3& r, double t) {
  return effective_gauge_from_modes(g.modes->spec, g.modes->config, r, t, g.modes->settings);
}

}  // namespace

double GaugeTerm::value(const Vec3& r, double t) const {
  switch (kind) {
    case GaugeKind::constant: return amplitude;
    case GaugeKind::linear: return vector.dot(r) + rate * t + amplitude;
    case GaugeKind::gaussian_bump: return amplitude * bump(*this, r);
    case GaugeKind::sinusoidal: return amplitude * std::sin(vector.dot(r) - omega * t + phase);
    case GaugeKind::time_modulated_product:
      return amplitude * bump(*this, r) * std::cos(omega * t + phase);
    case GaugeKind::from_modes: return mode_value(*this, r, t).F;
  }
  return 0.0;
}

Vec3 GaugeTerm::gradient(const Vec3& r, double t) const {
  switch (kind) {
    case GaugeKind::constant: return Vec3::Zero();
    case GaugeKind::linear: return vector;
    case GaugeKind::gaussian_bump:
      return -amplitude * bump(*this, r) * (r - center) / (width * width);
    case GaugeKind::sinusoidal:
      return amplitude * std::cos(vector.dot(r) - omega * t + phase) * vector;
    case GaugeKind::time_modulated_product:
      return -amplitude * bump(*this, r) * std::cos(omega * t + phase) * (r - center) /
             (width * width);
    case GaugeKind::from_modes: return mode_value(*this, r, t).grad;
  }
  return Vec3::Zero();
}

double GaugeTerm::time_derivative(const Vec3& r, double t) const {
  switch (kind) {
    case GaugeKind::constant:
    case GaugeKind::gaussian_bump: return 0.0;
    case GaugeKind::linear: return rate;
    case GaugeKind::sinusoidal:
      return -amplitude * omega * std::cos(vector.dot(r) - omega * t + phase);
    case GaugeKind::time_modulated_product:
      return -amplitude * omega * bump(*this, r) * std::sin(omega * t + phase);
    case GaugeKind::from_modes: return mode_value(*this, r, t).dF_dt;
  }
  return 0.0;
}

bool GaugeTerm::static_gradient() const {
  switch (kind) {
    case GaugeKind::constant:
    case GaugeKind::linear:
    case GaugeKind::gaussian_bump: return true;
    case GaugeKind::sinusoidal: return omega == 0.0 || vector.isZero(0.0);
    case GaugeKind::time_modulated_product: return omega == 0.0 || amplitude == 0.0;
    case GaugeKind::from_modes: return false;
  }
  return false;
}

void GaugeTerm::validate() const {
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument("gauge term " + to_string(kind) + ": " + what);
  };
  if (!std::isfinite(amplitude) || !std::isfinite(rate) || !std::isfinite(omega) ||
      !std::isfinite(phase) || !center.allFinite() || !vector.allFinite())
    fail("parameters must be finite");
  if ((kind == GaugeKind::gaussian_bump || kind == GaugeKind::time_modulated_product) &&
      !(width > 0))
    fail("width must be > 0");
  if (kind == GaugeKind::from_modes && (!modes || !modes->spec.f))
    fail("mode functions are missing");
}

// ---------------------------------------------------------------------------

GaugeFunction::GaugeFunction(std::vector<GaugeTerm> terms, std::string label)
    : terms_(std::move(terms)), label_(std::move(label)) {
  for (const auto& t : terms_) t.validate();
}

GaugeFunction GaugeFunction::constant(double value) {
  GaugeTerm t;
  t.kind = GaugeKind::constant;
  t.amplitude = value;
  return GaugeFunction({t}, "constant");
}

GaugeFunction GaugeFunction::linear(const Vec3& gradient, double rate, double offset) {
  GaugeTerm t;
  t.kind = GaugeKind::linear;
  t.vector = gradient;
  t.rate = rate;
  t.amplitude = offset;
  return GaugeFunction({t}, "linear");
}

GaugeFunction GaugeFunction::gaussian_bump(double amplitude, const Vec3& center,
                                           double width) {
  GaugeTerm t;
  t.kind = GaugeKind::gaussian_bump;
  t.amplitude = amplitude;
  t.center = center;
  t.width = width;
  return GaugeFunction({t}, "gaussian_bump");
}

GaugeFunction GaugeFunction::sinusoidal(double amplitude, const Vec3& wavevector,
                                        double omega, double phase) {
  GaugeTerm t;
  t.kind = GaugeKind::sinusoidal;
  t.amplitude = amplitude;
  t.vector = wavevector;
  t.omega = omega;
  t.phase = phase;
  return GaugeFunction({t}, "sinusoidal");
}

GaugeFunction GaugeFunction::time_modulated_product(double amplitude, const Vec3& center,
                                                    double width, double omega,
                                                    double phase) {
  GaugeTerm t;
  t.kind = GaugeKind::time_modulated_product;
  t.amplitude = amplitude;
  t.center = center;
  t.width = width;
  t.omega = omega;
  t.phase = phase;
  return GaugeFunction({t}, "time_modulated_product");
}

GaugeFunction GaugeFunction::from_modes(std::shared_ptr<const ModeGaugeSource> source) {
  GaugeTerm t;
  t.kind = GaugeKind::from_modes;
  t.modes = std::move(source);
  return GaugeFunction({t}, "from_modes");
}

double GaugeFunction::value(const Vec3& r, double t) const {
  double s = 0.0;
  for (const auto& term : terms_) s += term.value(r, t);
  return s;
}

Vec3 GaugeFunction::gradient(const Vec3& r, double t) const {
  Vec3 s = Vec3::Zero();
  for (const auto& term : terms_) s += term.gradient(r, t);
  return s;
}

double GaugeFunction::time_derivative(const Vec3& r, double t) const {
  double s = 0.0;
  for (const auto& term : terms_) s += term.time_derivative(r, t);
  return s;
}

bool GaugeFunction::is_identity() const {
  for (const auto& t : terms_)
    if (t.kind != GaugeKind::constant) return false;
  return true;
}

bool GaugeFunction::static_gradient() const {
  for (const auto& t : terms_)
    if (!t.static_gradient()) return false;
  return true;
}

// ---------------------------------------------------------------------------

GaugedSample GaugedPotentials::evaluate(const Vec3& r, double t) const {
  GaugedSample s;
  s.lorenz = base_->both(r, t);
  s.V = s.lorenz.V;
  s.A = s.lorenz.A;
  if (gauge_.is_identity()) return s;
  s.dF_dt = gauge_.time_derivative(r, t);
  s.grad_F = gauge_.gradient(r, t);
  s.V -= s.dF_dt;
  s.A += s.grad_F;
  return s;
}

double gauged_scalar(const GaugedPotentials& gp, const Vec3& r, double t) {
  return gp.evaluate(r, t).V;
}

Vec3 gauged_vector(const GaugedPotentials& gp, const Vec3& r, double t) {
  return gp.evaluate(r, t).A;
}

double hamiltonian_density(const GaugedPotentials& gp, const Vec3& r, double t, double q,
                           const Vec3& p, double m) {
  if (q == 0.0) return 0.0;
  const auto s = gp.evaluate(r, t);
  return q * s.V - (q / m) * p.dot(s.A);
}

double energy_shift(const GaugedPotentials& gp, const Vec3& r, double t, double q,
                    const Vec3& p, double m) {
  if (q == 0.0) return 0.0;
  const auto s = gp.evaluate(r, t);
  return q * s.lorenz.V - (q / m) * p.dot(s.lorenz.A + s.grad_F);
}

bool is_nonrelativistic(const Vec3& p, double m, double c) {
  return p.norm() / m < 0.01 * c;
}

// ---------------------------------------------------------------------------

namespace {

// Uniform doubles from the raw engine output, so the family does not depend
// on the standard library's distribution implementations.
class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : engine_(seed) {}
  double operator()() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double operator()(double lo, double hi) { return lo + (hi - lo) * (*this)(); }
  int integer(int lo, int hi) {
    return lo + static_cast<int>((*this)() * (hi - lo + 1));
  }
  Vec3 direction() {
    const double z = (*this)(-1.0, 1.0);
    const double ph = (*this)(0.0, 2 * pi);
    const double s = std::sqrt(1.0 - z * z);
    return {s * std::cos(ph), s * std::sin(ph), z};
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace

std::vector<GaugeFunction> random_gauge_family(std::uint64_t seed, int count,
                                               const GaugeFamilyBounds& b) {
  if (count < 0) throw std::invalid_argument("gauge family count must be >= 0");
  if (!(b.feature_size > 0) || !(b.t1 > b.t0))
    throw std::invalid_argument("gauge family needs feature_size > 0 and t1 > t0");
  Uniform rng(seed);
  std::vector<GaugeFunction> family;
  family.reserve(count);
  const double amp = b.max_amplitude * b.amplitude_scale;
  for (int i = 0; i < count; ++i) {
    std::vector<GaugeTerm> terms;
    const int n = rng.integer(1, 3);
    for (int j = 0; j < n; ++j) {
      GaugeTerm t;
      const double L = rng(b.feature_size / 10.0, b.feature_size);
      t.amplitude = rng(-amp, amp);
      if (rng() < 0.5) {
        t.kind = GaugeKind::gaussian_bump;
        t.width = L;
        for (int c = 0; c < 3; ++c) t.center[c] = rng(b.box_min[c], b.box_max[c]);
      } else {
        t.kind = GaugeKind::sinusoidal;
        t.vector = (2 * pi / L) * rng.direction();
        t.phase = rng(0.0, 2 * pi);
      }
      terms.push_back(t);
    }
    if (b.include_time_term) {
      GaugeTerm t;
      t.kind = GaugeKind::sinusoidal;
      t.amplitude = rng(-amp, amp);
      t.omega = 2 * pi * rng(0.5, 3.0) / (b.t1 - b.t0);
      t.phase = rng(0.0, 2 * pi);
      terms.push_back(t);
    }
    std::ostringstream label;
    label << "random-" << seed << "-" << i;
    family.emplace_back(std::move(terms), label.str());
  }
  return family;
}

}  // namespace abqed
