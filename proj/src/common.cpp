#include "abqed/common.hpp"

#include <cmath>
#include <sstream>

namespace abqed {

void PhysicalConstants::validate() const {
  if (!(eps0 > 0 && mu0 > 0 && c > 0 && hbar > 0))
    throw std::invalid_argument("physical constants must be positive");
  const double defect = c * c * mu0 * eps0 - 1.0;
  if (std::abs(defect) > 1e-12) {
    std::ostringstream os;
    os << "inconsistent constants: c^2 mu0 eps0 - 1 = " << defect;
    throw std::invalid_argument(os.str());
  }
}

std::string format_vec(const Vec3& v) {
  std::ostringstream os;
  os.precision(6);
  os << "(" << v.x() << ", " << v.y() << ", " << v.z() << ")";
  return os.str();
}

}  // namespace abqed
