#pragma once

#include <vector>

namespace sflplan {

/// Real roots of a x^3 + b x^2 + c x + d = 0 (a != 0) by Cardano's
/// formula, using the trigonometric form when all three roots are real.
/// Roots are returned in ascending order; a repeated root appears once.
std::vector<double> cubic_real_roots(double a, double b, double c, double d);

}  // namespace sflplan
