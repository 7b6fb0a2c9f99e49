#include "sflplan/cubic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sflplan/error.hpp"

namespace sflplan {

std::vector<double> cubic_real_roots(double a, double b, double c, double d) {
  if (a == 0.0 || !std::isfinite(a)) throw DomainError("leading cubic coefficient must be nonzero");
  // Monic form x^3 + B x^2 + C x + D, then x = t - B/3 gives t^3 + p t + q.
  const double B = b / a;
  const double C = c / a;
  const double D = d / a;
  const double shift = B / 3.0;
  const double p = C - B * B / 3.0;
  const double q = 2.0 * B * B * B / 27.0 - B * C / 3.0 + D;
  const double half_q = q / 2.0;
  const double third_p = p / 3.0;
  const double disc = half_q * half_q + third_p * third_p * third_p;

  std::vector<double> roots;
  if (p == 0.0 && q == 0.0) {
    roots.push_back(-shift);
  } else if (disc > 0.0) {
    const double s = std::sqrt(disc);
    // Pick the sign that avoids cancellation, recover the second cube root from p.
    const double u = std::cbrt(-half_q + (half_q < 0.0 ? s : -s));
    const double v = u != 0.0 ? -third_p / u : 0.0;
    roots.push_back(u + v - shift);
  } else if (disc == 0.0) {
    const double u = std::cbrt(-half_q);
    roots.push_back(2.0 * u - shift);
    roots.push_back(-u - shift);
  } else {
    const double m = 2.0 * std::sqrt(-third_p);
    const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
    const double phi = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) {
      roots.push_back(m * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0) - shift);
    }
  }
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  return roots;
}

}  // namespace sflplan
