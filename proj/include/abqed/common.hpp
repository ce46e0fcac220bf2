#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace abqed {

using Vec3 = Eigen::Vector3d;
using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

enum class UnitSystem { si, reduced };

/// Field constants used by every module. SI by default; reduced units set
/// eps0 = c = hbar = 1 (hence mu0 = 1).
struct PhysicalConstants {
  double eps0 = 8.8541878128e-12;
  double mu0 = 1.25663706212e-6;
  double c = 299792458.0;
  double hbar = 1.054571817e-34;

  static PhysicalConstants si() { return {}; }
  static PhysicalConstants reduced() { return {1.0, 1.0, 1.0, 1.0}; }
  static PhysicalConstants for_units(UnitSystem u) {
    return u == UnitSystem::si ? si() : reduced();
  }

  /// Throws std::invalid_argument unless c^2 mu0 eps0 = 1 to 1e-12.
  void validate() const;
};

/// Default particle: electron in SI, unit charge and mass in reduced units.
struct Particle {
  double charge = -1.602176634e-19;
  double mass = 9.1093837015e-31;

  static Particle electron() { return {}; }
  static Particle for_units(UnitSystem u) {
    return u == UnitSystem::si ? Particle{} : Particle{1.0, 1.0};
  }
};

// Error hierarchy. Every failure raised by the library derives from Error.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EvaluationInsideSource : public Error {
 public:
  using Error::Error;
};

class QuadratureNotConverged : public Error {
 public:
  using Error::Error;
};

class WrongElementKind : public Error {
 public:
  using Error::Error;
};

class OpenLoop : public Error {
 public:
  using Error::Error;
};

class ZeroWavevector : public Error {
 public:
  using Error::Error;
};

class SelfEnergyDivergent : public Error {
 public:
  using Error::Error;
};

class NonCompactSource : public Error {
 public:
  using Error::Error;
};

class PhaseNotConverged : public Error {
 public:
  using Error::Error;
};

class CalculatorMismatchOnClosedLoop : public Error {
 public:
  using Error::Error;
};

class BadScenarioParameters : public Error {
 public:
  using Error::Error;
};

class ConfigParseError : public Error {
 public:
  using Error::Error;
};

std::string format_vec(const Vec3& v);

}  // namespace abqed
