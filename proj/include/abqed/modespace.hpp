#pragma once

// Covariant mode space at expectation-value level.
//
// The source-coupled ground state is a coherent state with
//   a_sigma(k)|0~> = lambda_sigma(k)|0~>,
//   <0~|a_0^dag(k) = -lambda_0^*(k)<0~|,   <0~|a_j^dag(k) = lambda_j^*(k)<0~|,
// so every expectation value of an operator linear in a, a^dag is obtained
// by substituting those c-numbers. No operator algebra is represented.

#include <array>
#include <functional>
#include <optional>

#include "abqed/common.hpp"
#include "abqed/potentials.hpp"
#include "abqed/sources.hpp"

namespace abqed {

/// Polarization triad for direction k: eps1 ~ z x k (x x k when k || z),
/// eps2 = k x eps1, eps3 = k. `rotation` turns (eps1, eps2) about k.
struct PolarizationBasis {
  Vec3 khat;
  std::array<Vec3, 3> eps;

  static PolarizationBasis for_direction(const Vec3& k, double rotation = 0.0);
  /// Largest deviation from orthonormality and right-handedness.
  double orthonormality_defect() const;
};

struct ModeAmplitude {
  Vec3 k;
  int sigma;  // 0 scalar, 1-2 transverse, 3 longitudinal
  cplx value;
};

/// sqrt(hbar / (2 eps0 omega (2 pi)^3)), omega = c |k|.
double mode_prefactor(double k, const PhysicalConstants& consts);

/// Coherent-state substitution for <0~| a_sigma |0~> and <0~| a_sigma^dag |0~>.
inline cplx expect_annihilation(int /*sigma*/, cplx lambda) { return lambda; }
inline cplx expect_creation(int sigma, cplx lambda) {
  return sigma == 0 ? -std::conj(lambda) : std::conj(lambda);
}

enum class TransformMethod { analytic, quadrature };

/// int rho(r, t) e^{-ik.r} d^3r over the configuration's charge measures.
cplx charge_transform(const SourceConfiguration& config, const Vec3& k, double t);

/// int J(r, t) e^{-ik.r} d^3r over the filament measures. Analytic uses the
/// Bessel form of a circular loop; quadrature integrates the discretized
/// filaments segment by segment. NonCompactSource for the infinite solenoid.
Eigen::Vector3cd current_transform(const SourceConfiguration& config, const Vec3& k,
                                   double t,
                                   TransformMethod method = TransformMethod::analytic);

/// lambda_0(k). ZeroWavevector if |k| == 0.
cplx lambda_scalar(const SourceConfiguration& config, const Vec3& k, double t);

/// (lambda_1, lambda_2, lambda_3)(k) in the given basis.
std::array<cplx, 3> lambda_current(const SourceConfiguration& config, const Vec3& k,
                                   double t, const PolarizationBasis& basis,
                                   TransformMethod method = TransformMethod::analytic);

struct KSpaceSettings {
  /// Starting window scale; 0 chooses 3 / (distance to nearest source).
  double k_max = 0.0;
  int levels = 3;      // at least 3 doublings of k_max are evaluated
  int max_levels = 6;
  double rel_tol = 1e-6;
  KWindow window = KWindow::super_gaussian;
  double cutoff_factor = 4.0;  // gaussian window only: integrate to cutoff * k_max
  double angular_oversampling = 1.0;
  /// Use shell cubature through lambda_sigma and the polarization basis even
  /// where the angular integral is analytic.
  bool force_cubature = false;
  /// Rotation of the transverse basis about k (observables must not care).
  double basis_rotation = 0.0;
  TransformMethod transform = TransformMethod::analytic;
};

struct KSpaceSample {
  EffectiveFieldSample field;
  std::vector<double> k_values;
  std::vector<double> v_sequence;
  std::vector<Vec3> a_sequence;
  /// Largest imaginary part left after assembling the Hermitian pairs,
  /// relative to the real part.
  double imaginary_residue = 0.0;
  double observed_order_v = 0.0;
  double observed_order_a = 0.0;
};

/// <0~|V(r)|0~> and <0~|A(r)|0~> from the mode expansions with coherent
/// amplitudes, as window-truncated k integrals extrapolated in k_max.
KSpaceSample reconstruct_potentials_kspace(const SourceConfiguration& config,
                                           const Vec3& r, double t,
                                           const KSpaceSettings& settings = {});

struct GroundEnergyResult {
  double value = 0.0;  // joules
  double scalar_part = 0.0;
  double current_part = 0.0;  // enters C with a minus sign
  std::vector<double> k_values;
  std::vector<double> sequence;
  double est_error = 0.0;
  double observed_order = 0.0;
  /// False when rel_tol was not met within max_levels doublings; value and
  /// est_error are still the best available.
  bool converged = true;
};

struct GroundEnergySettings {
  double k_max = 0.0;  // 0 chooses 1 / (smallest source scale)
  int levels = 4;
  int max_levels = 12;
  double rel_tol = 1e-6;
  /// Permit point charges / thin wires and return the cutoff-dependent value.
  bool allow_divergent = false;
  double angular_oversampling = 1.0;
};

/// C = int d^3k [|lambda_0|^2 - sum_j |lambda_j|^2] hbar omega, sharply
/// truncated at k_max and extrapolated. SelfEnergyDivergent when a point
/// charge or thin (wire_radius == 0) filament is present
/// unless allow_divergent is set.
GroundEnergyResult ground_energy_constant(const SourceConfiguration& config, double t,
                                          const GroundEnergySettings& settings = {});

/// f_sigma(k, t) for sigma = 0..3.
using ModeFunction = std::function<cplx(int sigma, const Vec3& k, double t)>;

struct ModeGaugeSpec {
  ModeFunction f;
  /// d f_sigma / dt; central differences of `f` when empty.
  ModeFunction df_dt;
  double fd_step = 1e-4;
};

struct ModeGaugeValue {
  double F = 0.0;
  Vec3 grad = Vec3::Zero();
  double dF_dt = 0.0;
  double imaginary_residue = 0.0;
  double est_error = 0.0;
};

/// F = sum_sigma int d^3k f_sigma lambda_sigma e^{ik.r} + c.c., with the
/// conjugate term assembled through the creation-operator substitution.
/// Gradient and time derivative are taken inside the k integral.
ModeGaugeValue effective_gauge_from_modes(const ModeGaugeSpec& spec,
                                          const SourceConfiguration& config,
                                          const Vec3& r, double t,
                                          const KSpaceSettings& settings = {});

}  // namespace abqed
