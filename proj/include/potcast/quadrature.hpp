#pragma once

#include <cstddef>
#include <functional>

namespace potcast {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;  // achieved absolute-error estimate
};

// Adaptive Gauss-Kronrod integration of f over [lo, hi]. The interval is cut
// into `initial_panels` panels which are bisected until each panel's
// Gauss-Kronrod error estimate is below its share of the tolerance budget or
// below rel_tol relative to the running total. hi may be +inf (mapped through
// x = lo + u/(1-u)). Throws numerical_error if the budget cannot be met
// before the depth limit.
QuadratureResult integrate(const std::function<double(double)>& f, double lo,
                           double hi, std::size_t initial_panels,
                           double abs_tol, double rel_tol);

}  // namespace potcast
