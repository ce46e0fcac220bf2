#pragma once

// Gauge changes of the effective potentials relative to the Lorenz-gauge
// baseline:  V' = V - dF/dt,  A' = A + grad F.
//
// The source-coupled ground state does not depend on the gauge, so every
// gauge is applied on top of the Lorenz-gauge effective potentials computed
// by FieldModel; there is no separate ground-state computation per gauge.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "abqed/common.hpp"
#include "abqed/modespace.hpp"
#include "abqed/potentials.hpp"

namespace abqed {

enum class GaugeKind {
  constant,                // F = amplitude
  linear,                  // F = vector . r + rate * t + amplitude
  gaussian_bump,           // F = amplitude exp(-|r - center|^2 / (2 width^2))
  sinusoidal,              // F = amplitude sin(vector . r - omega t + phase)
  time_modulated_product,  // F = gaussian_bump(r) * cos(omega t + phase)
  from_modes               // F from mode functions f_sigma via the coherent amplitudes
};

std::string to_string(GaugeKind kind);
std::optional<GaugeKind> gauge_kind_from_string(const std::string& name);

struct ModeGaugeSource {
  ModeGaugeSpec spec;
  SourceConfiguration config;
  KSpaceSettings settings;
};

struct GaugeTerm {
  GaugeKind kind = GaugeKind::constant;
  double amplitude = 0.0;
  Vec3 center = Vec3::Zero();
  Vec3 vector = Vec3::Zero();
  double width = 1.0;
  double rate = 0.0;
  double omega = 0.0;
  double phase = 0.0;
  std::shared_ptr<const ModeGaugeSource> modes;

  double value(const Vec3& r, double t) const;
  Vec3 gradient(const Vec3& r, double t) const;
  double time_derivative(const Vec3& r, double t) const;
  /// True when grad F does not depend on t.
  bool static_gradient() const;
  void validate() const;
};

/// Sum of terms. The empty sum is the identity (Lorenz) gauge.
class GaugeFunction {
 public:
  GaugeFunction() = default;
  explicit GaugeFunction(std::vector<GaugeTerm> terms, std::string label = {});

  static GaugeFunction identity() { return GaugeFunction({}, "lorenz"); }
  static GaugeFunction constant(double value);
  static GaugeFunction linear(const Vec3& gradient, double rate, double offset = 0.0);
  static GaugeFunction gaussian_bump(double amplitude, const Vec3& center, double width);
  static GaugeFunction sinusoidal(double amplitude, const Vec3& wavevector, double omega,
                                  double phase);
  static GaugeFunction time_modulated_product(double amplitude, const Vec3& center,
                                              double width, double omega, double phase);
  static GaugeFunction from_modes(std::shared_ptr<const ModeGaugeSource> source);

  double value(const Vec3& r, double t) const;
  Vec3 gradient(const Vec3& r, double t) const;
  double time_derivative(const Vec3& r, double t) const;

  bool is_identity() const;
  bool static_gradient() const;
  const std::vector<GaugeTerm>& terms() const { return terms_; }
  const std::string& label() const { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

 private:
  std::vector<GaugeTerm> terms_;
  std::string label_;
};

struct GaugedSample {
  EffectiveFieldSample lorenz;
  double V = 0.0;  // V - dF/dt
  Vec3 A = Vec3::Zero();  // A + grad F
  double dF_dt = 0.0;
  Vec3 grad_F = Vec3::Zero();
};

/// Lorenz-gauge effective potentials paired with a gauge function.
class GaugedPotentials {
 public:
  GaugedPotentials(std::shared_ptr<const FieldModel> base, GaugeFunction gauge)
      : base_(std::move(base)), gauge_(std::move(gauge)) {}

  const FieldModel& base() const { return *base_; }
  std::shared_ptr<const FieldModel> base_ptr() const { return base_; }
  const GaugeFunction& gauge() const { return gauge_; }
  GaugedPotentials with_gauge(GaugeFunction g) const { return {base_, std::move(g)}; }

  GaugedSample evaluate(const Vec3& r, double t) const;

 private:
  std::shared_ptr<const FieldModel> base_;
  GaugeFunction gauge_;
};

double gauged_scalar(const GaugedPotentials& gp, const Vec3& r, double t);
Vec3 gauged_vector(const GaugedPotentials& gp, const Vec3& r, double t);

/// Effective Hamiltonian q V' - (q/m) p . A'.
double hamiltonian_density(const GaugedPotentials& gp, const Vec3& r, double t,
                           double q, const Vec3& p, double m);

/// Ground-energy shift q V - (q/m) p . (A + grad F): the dF/dt part of the
/// Hamiltonian is not energy.
double energy_shift(const GaugedPotentials& gp, const Vec3& r, double t, double q,
                    const Vec3& p, double m);

/// |p| / m below 1% of c.
bool is_nonrelativistic(const Vec3& p, double m, double c);

struct GaugeFamilyBounds {
  Vec3 box_min = Vec3::Constant(-1.0);
  Vec3 box_max = Vec3::Constant(1.0);
  /// Length scales are drawn from [feature_size / 10, feature_size].
  double feature_size = 1.0;
  /// Amplitudes are drawn in units of this scale (hbar / |q| maps them to
  /// radians of phase).
  double amplitude_scale = 1.0;
  double max_amplitude = 2.0;
  /// Time window of the scenario; sets the time-term frequencies.
  double t0 = 0.0;
  double t1 = 1.0;
  /// Add a spatially uniform time-dependent term to each member.
  bool include_time_term = true;
};

/// Seeded gauge family: each member sums 1-3 gaussian_bump / static
/// sinusoidal terms plus an optional spatially uniform time term. grad F is
/// static for every member.
std::vector<GaugeFunction> random_gauge_family(std::uint64_t seed, int count,
                                               const GaugeFamilyBounds& bounds);

}  // namespace abqed
