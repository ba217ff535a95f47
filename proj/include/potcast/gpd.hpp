#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "potcast/errors.hpp"

namespace potcast {

// Shape magnitude below which all generalized Pareto formulas switch to their
// series-expanded exponential-limit forms.
inline constexpr double kGammaSwitch = 1e-6;

// Generalized Pareto parameter pair theta = (sigma, gamma) restricted to the
// parameter space (0, inf) x (-1/2, inf). Construction outside the space is
// rejected, so a GpParams value is always usable.
class GpParams {
 public:
  GpParams(double sigma, double gamma);

  double sigma() const noexcept { return sigma_; }
  double gamma() const noexcept { return gamma_; }

 private:
  double sigma_;
  double gamma_;
};

// Support of the excess distribution: (0, inf) for gamma >= 0, otherwise
// (0, -sigma/gamma).
struct SupportInterval {
  double lower;  // always 0
  double upper;  // +inf iff gamma >= 0

  bool contains(double x) const noexcept { return x > lower && x < upper; }
};

SupportInterval support_interval(const GpParams& params) noexcept;

// Density h_theta(x) = h_gamma(x/sigma)/sigma with
// h_gamma(z) = (1+gamma z)^(-(1/gamma+1)). Exactly 0 outside the support;
// the left limit 1/sigma at x=0; 0 at a finite upper endpoint.
double gp_density(double x, const GpParams& params) noexcept;

// Distribution function H_theta(x); 0 for x <= 0, 1 at/past a finite upper
// endpoint; exponential limit 1-exp(-x/sigma) near gamma = 0.
double gp_cdf(double x, const GpParams& params) noexcept;

// Analytic inverse of gp_cdf: sigma*((1-q)^(-gamma)-1)/gamma, with the limit
// -sigma*log(1-q) near gamma = 0. Requires 0 <= q < 1.
double gp_quantile(double q, const GpParams& params);

// m i.i.d. draws by inverse-CDF sampling from a seeded stream. Identical
// seeds give identical output. Requires m >= 1.
std::vector<double> gp_sample(const GpParams& params, std::size_t m,
                              std::uint64_t seed);

// Sum of log gp_density over the excesses; -inf if any excess lies outside
// the support. Requires a nonempty sequence of nonnegative values.
double gp_loglik(const GpParams& params, std::span<const double> excesses);

// Law of Y-u | Y>u for Y ~ H_theta: the pair (sigma + gamma*u, gamma).
// Requires sigma + gamma*u > 0 and u strictly below the upper endpoint.
GpParams threshold_stability_transform(const GpParams& params, double u);

}  // namespace potcast
