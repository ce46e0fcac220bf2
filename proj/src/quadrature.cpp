#include "abqed/quadrature.hpp"

#include <map>
#include <mutex>

namespace abqed::quad {

namespace {

// Legendre P_n(x) and P_{n-1}(x), n >= 2.
std::pair<double, double> legendre_pair(int n, double x) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  return {p1, p0};
}

GaussLegendreRule compute_rule(int n) {
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [pn, pn1] = legendre_pair(n, x);
      const double dp = n * (x * pn - pn1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const auto [pn, pn1] = legendre_pair(n, x);
    const double dp = n * (x * pn - pn1) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

}  // namespace

std::shared_ptr<const GaussLegendreRule> gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("Gauss-Legendre order must be >= 1");
  static std::mutex mutex;
  static std::map<int, std::shared_ptr<const GaussLegendreRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) {
    if (n == 1)
      slot = std::make_shared<GaussLegendreRule>(GaussLegendreRule{{0.0}, {2.0}});
    else
      slot = std::make_shared<GaussLegendreRule>(compute_rule(n));
  }
  return slot;
}

Extrapolation extrapolate_doubling(std::span<const double> s) {
  Extrapolation out;
  const std::size_t n = s.size();
  if (n == 0) return out;
  out.value = s[n - 1];
  if (n == 1) return out;
  const double d_last = s[n - 1] - s[n - 2];
  out.error = std::abs(d_last);
  if (n < 3 || d_last == 0.0) {
    if (d_last == 0.0) out.error = 0.0;
    return out;
  }
  const double d_prev = s[n - 2] - s[n - 3];
  if (d_prev == 0.0) return out;
  const double ratio = d_last / d_prev;
  out.observed_order = -std::log2(std::abs(ratio));

  bool steady = ratio > 0.0 && ratio < 0.9;
  if (n >= 4 && steady) {
    const double d_prev2 = s[n - 3] - s[n - 4];
    const double ratio_prev = d_prev2 != 0.0 ? d_prev / d_prev2 : 0.0;
    steady = ratio_prev > 0.0 && std::abs(ratio - ratio_prev) <= 0.25 * ratio_prev;
  } else {
    steady = false;
  }

  if (steady) {
    const double correction = d_last * ratio / (1.0 - ratio);
    out.value = s[n - 1] + correction;
    out.richardson_applied = true;
    out.error = std::abs(correction) * std::max(ratio, 0.1);
  } else if (std::abs(ratio) < 1.0) {
    // Accelerating or oscillating: the next difference is predicted by the
    // last ratio.
    out.error = std::abs(d_last) * std::abs(ratio) / (1.0 - std::abs(ratio));
  }
  return out;
}

}  // namespace abqed::quad
