#pragma once

// Numerical integration helpers shared by the field, mode-space and phase
// calculators: adaptive Gauss-Kronrod (7/15) on intervals, Gauss-Legendre
// rules for product cubature, and doubling-sequence extrapolation.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "abqed/common.hpp"

namespace abqed::quad {

inline double magnitude(double x) { return std::abs(x); }
inline double magnitude(const cplx& x) { return std::abs(x); }
template <typename Derived>
double magnitude(const Eigen::MatrixBase<Derived>& x) {
  return x.norm();
}

template <typename T>
T zero_like();
template <>
inline double zero_like<double>() {
  return 0.0;
}
template <>
inline cplx zero_like<cplx>() {
  return {0.0, 0.0};
}
template <>
inline Vec3 zero_like<Vec3>() {
  return Vec3::Zero();
}
template <>
inline Eigen::Vector3cd zero_like<Eigen::Vector3cd>() {
  return Eigen::Vector3cd::Zero();
}

template <typename T>
struct Result {
  T value;
  double error = 0.0;
  long evaluations = 0;
  bool converged = true;
};

namespace detail {
inline constexpr std::array<double, 8> kronrod_nodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kronrod_weights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd-indexed Kronrod nodes (7-point rule).
inline constexpr std::array<double, 4> gauss_weights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
}  // namespace detail

/// One G7/K15 panel on [a, b]. Error is |K15 - G7|.
template <typename T, typename F>
Result<T> gauss_kronrod15(F&& f, double a, double b) {
  using namespace detail;
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const T fc = f(center);
  T kronrod = fc * kronrod_weights[7];
  T gauss = fc * gauss_weights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kronrod_nodes[j];
    const T f1 = f(center - dx);
    const T f2 = f(center + dx);
    const T sum = f1 + f2;
    kronrod += sum * kronrod_weights[j];
    if (j % 2 == 1) gauss += sum * gauss_weights[j / 2];
  }
  Result<T> r{kronrod * half};
  r.error = magnitude((kronrod - gauss) * half);
  r.evaluations = 15;
  return r;
}

struct AdaptiveOptions {
  double abs_tol = 0.0;
  double rel_tol = 1e-10;
  int max_depth = 30;
  int max_intervals = 4000;
};

/// Global adaptive bisection: the panel with the largest error estimate is
/// split until the summed estimate meets max(abs_tol, rel_tol * |value|).
/// `breakpoints` (interior, sorted or not) seed the initial partition.
template <typename T, typename F>
Result<T> integrate(F&& f, double a, double b, const AdaptiveOptions& opt,
                    std::span<const double> breakpoints = {}) {
  struct Panel {
    double a, b;
    int depth;
    Result<T> r;
  };
  std::vector<double> cuts{a};
  for (double x : breakpoints)
    if (x > a && x < b) cuts.push_back(x);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<Panel> panels;
  panels.reserve(64);
  long evaluations = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    auto r = gauss_kronrod15<T>(f, cuts[i], cuts[i + 1]);
    evaluations += r.evaluations;
    panels.push_back({cuts[i], cuts[i + 1], 0, r});
  }

  auto totals = [&]() {
    T value = zero_like<T>();
    double err = 0.0;
    for (const auto& p : panels) {
      value += p.r.value;
      err += p.r.error;
    }
    return std::pair<T, double>{value, err};
  };

  auto [value, err] = totals();
  bool converged = true;
  while (err > std::max(opt.abs_tol, opt.rel_tol * magnitude(value))) {
    auto worst = std::max_element(panels.begin(), panels.end(),
                                  [](const Panel& x, const Panel& y) {
                                    if (x.depth >= 0 && y.depth < 0) return false;
                                    if (x.depth < 0 && y.depth >= 0) return true;
                                    return x.r.error < y.r.error;
                                  });
    if (worst->depth < 0 || worst->depth >= opt.max_depth ||
        static_cast<int>(panels.size()) >= opt.max_intervals) {
      converged = false;
      break;
    }
    const Panel p = *worst;
    const double mid = 0.5 * (p.a + p.b);
    auto left = gauss_kronrod15<T>(f, p.a, mid);
    auto right = gauss_kronrod15<T>(f, mid, p.b);
    evaluations += 30;
    const int depth = p.depth + 1;
    *worst = Panel{p.a, mid, depth >= opt.max_depth ? -1 : depth, left};
    panels.push_back({mid, p.b, depth >= opt.max_depth ? -1 : depth, right});
    // Panels flagged -1 are exhausted; they keep their estimate but are
    // never split again.
    std::tie(value, err) = totals();
  }
  Result<T> out{value};
  out.error = err;
  out.evaluations = evaluations;
  out.converged = converged;
  return out;
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached per n; safe to call concurrently.
std::shared_ptr<const GaussLegendreRule> gauss_legendre(int n);

/// Fixed composite Gauss-Legendre over `panels` equal panels.
template <typename T, typename F>
T composite_gauss_legendre(F&& f, double a, double b, int panels, int order) {
  const auto rule = gauss_legendre(order);
  const double h = (b - a) / panels;
  T total = zero_like<T>();
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    const double c = lo + 0.5 * h;
    T panel = zero_like<T>();
    for (std::size_t i = 0; i < rule->nodes.size(); ++i)
      panel += f(c + 0.5 * h * rule->nodes[i]) * rule->weights[i];
    total += panel * (0.5 * h);
  }
  return total;
}

/// Estimate of the limit of a sequence computed at geometrically growing
/// resolution (k_max, 2 k_max, 4 k_max, ...).
struct Extrapolation {
  double value = 0.0;
  double error = std::numeric_limits<double>::infinity();
  /// Observed order p, from the last difference ratio 2^-p. NaN if < 3 terms.
  double observed_order = std::numeric_limits<double>::quiet_NaN();
  bool richardson_applied = false;
};

/// Richardson extrapolation with the observed order. The correction is only
/// applied when the last two difference ratios agree (steady algebraic
/// convergence); otherwise the last term is returned, with the tail of a
/// geometric series of the last ratio as its error (the last difference when
/// the ratio is >= 1).
Extrapolation extrapolate_doubling(std::span<const double> sequence);

}  // namespace abqed::quad
