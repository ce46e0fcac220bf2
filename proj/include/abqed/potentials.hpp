#pragma once

// Effective (coherent-state expectation) potentials of the classical sources
// in the Lorenz gauge, evaluated quasistatically:
//
//   V(r, t) = int rho(r', t) / (4 pi eps0 |r - r'|) d^3r'
//   A(r, t) = int mu0 J(r', t) / (4 pi |r - r'|) d^3r'
//
// Each element kind has an analytic path (Coulomb, shell theorem, Gaussian
// erf profile, ideal solenoid, elliptic-integral loop) and a quadrature path
// over its measure descriptor. `force_quadrature` selects the latter for
// cross-validation; the infinite solenoid is analytic only.

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "abqed/common.hpp"
#include "abqed/sources.hpp"

namespace abqed {

struct QuadratureSettings {
  int max_subdivision_depth = 30;
  double rel_tol = 1e-10;
  /// Loops/segments used when discretizing filaments; <= 0 keeps the
  /// element's own values.
  int filament_loops = 0;
  int filament_segments = 0;
  /// Kernel regularization length. Must stay 0: evaluation points are kept
  /// off the sources by the exclusion radius instead.
  double regularization_length = 0.0;
  double exclusion_radius = default_exclusion_radius;
  bool force_quadrature = false;

  void validate() const;
};

struct EffectiveFieldSample {
  Vec3 position = Vec3::Zero();
  double time = 0.0;
  double V = 0.0;           // volts
  Vec3 A = Vec3::Zero();    // V s / m
  /// Absolute error estimates for (V, Ax, Ay, Az).
  std::array<double, 4> abs_error{0, 0, 0, 0};

  /// Relative error estimates per component (absolute when the value is 0).
  std::array<double, 4> est_error() const;
  double max_est_error() const;
};

/// Precomputed evaluator for one configuration. Filament node geometry is
/// built once; evaluation is const and thread-safe.
class FieldModel {
 public:
  FieldModel(SourceConfiguration config, QuadratureSettings settings = {});

  const SourceConfiguration& config() const { return config_; }
  const QuadratureSettings& settings() const { return settings_; }

  EffectiveFieldSample scalar(const Vec3& r, double t) const;
  EffectiveFieldSample vector(const Vec3& r, double t) const;
  EffectiveFieldSample both(const Vec3& r, double t) const;

  /// Times at which some source schedule has a kink.
  std::vector<double> schedule_breakpoints() const;

 private:
  struct RingNodes;
  SourceConfiguration config_;
  QuadratureSettings settings_;
  std::vector<std::shared_ptr<const RingNodes>> rings_;  // per element (or null)

  void add_scalar(const SourceElement& e, const Vec3& r, double w,
                  EffectiveFieldSample& out) const;
  void add_vector(std::size_t index, const SourceElement& e, const Vec3& r, double w,
                  EffectiveFieldSample& out) const;
};

EffectiveFieldSample effective_scalar_potential(const SourceConfiguration& config,
                                                const Vec3& r, double t,
                                                const QuadratureSettings& settings = {});
EffectiveFieldSample effective_vector_potential(const SourceConfiguration& config,
                                                const Vec3& r, double t,
                                                const QuadratureSettings& settings = {});

/// Vector potential of a current filament by adaptive Gauss-Kronrod over its
/// segments. Thin filaments use the Coulomb kernel; tube-smeared ones the
/// erf-regularized kernel of a Gaussian line charge.
Vec3 filament_vector_potential(const Filament& filament, const Vec3& r, double mu0,
                               double rel_tol, int max_depth, double* abs_error = nullptr);

/// A_phi of a thin circular loop (radius a, current I) at cylindrical
/// coordinates (rho, z) of its own frame, via complete elliptic integrals.
double loop_azimuthal_potential(double current, double a, double rho, double z,
                                double mu0);

struct CirculationResult {
  double value = 0.0;  // webers
  double est_error = 0.0;
};

/// Line integral of A around a closed polyline (first point == last point
/// within 1e-12 m). OpenLoop otherwise.
CirculationResult circulation(const FieldModel& model, std::span<const Vec3> loop,
                              double t);
CirculationResult circulation(const SourceConfiguration& config,
                              std::span<const Vec3> loop, double t,
                              const QuadratureSettings& settings = {});

/// Regulating window applied to truncated k-space integrals. `sharp` is the
/// plain truncation, `fejer` multiplies by (1 - k/K) on [0, K], `gaussian`
/// by exp(-(k/K)^2) on [0, cutoff K], `super_gaussian` by exp(-(k/K)^8) on
/// [0, 2K].
enum class KWindow { sharp, fejer, gaussian, super_gaussian };

/// (1 / 2 pi^2) int_0^inf sinc(k r) w(k / K) dk: the k-space form of
/// int d^3k e^{ik.r} / ((2 pi)^3 k^2), truncated at K with a Fejer window.
double kernel_truncated(double r, double k_max);

struct KernelIdentityResult {
  double kspace = 0.0;     // extrapolated k-space value
  double exact = 0.0;      // 1 / (4 pi r)
  double truncated = 0.0;  // value at the requested k_max
  std::vector<double> k_values;
  std::vector<double> sequence;
  double observed_order = 0.0;
  double est_error = 0.0;
  double relative_error() const { return std::abs(kspace - exact) / exact; }
};

/// Evaluates the truncated identity at k_max * 2^j (j < levels) and
/// Richardson-extrapolates the sequence.
KernelIdentityResult kernel_identity_check(double r, double k_max, int levels = 8);

}  // namespace abqed
