#include "potcast/gpd.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "potcast/rng.hpp"

namespace potcast {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log h_gamma(z) for z inside the support. For |gamma| below the switch the
// direct form -(1/gamma+1)*log1p(gamma z) loses all precision, so use its
// expansion in gamma: -z + gamma (z^2/2 - z) + gamma^2 (z^2/2 - z^3/3).
double log_standard_density(double z, double gamma) {
  if (std::abs(gamma) < kGammaSwitch) {
    return -z + gamma * (0.5 * z * z - z) +
           gamma * gamma * (0.5 * z * z - z * z * z / 3.0);
  }
  return -(1.0 / gamma + 1.0) * std::log1p(gamma * z);
}

// log(1 - H_gamma(z)) = -(1/gamma) log1p(gamma z); expansion near gamma = 0:
// -z + gamma z^2/2 - gamma^2 z^3/3.
double log_survival(double z, double gamma) {
  if (std::abs(gamma) < kGammaSwitch) {
    return -z + gamma * 0.5 * z * z - gamma * gamma * z * z * z / 3.0;
  }
  return -std::log1p(gamma * z) / gamma;
}

}  // namespace

GpParams::GpParams(double sigma, double gamma) : sigma_(sigma), gamma_(gamma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    std::ostringstream msg;
    msg << "GpParams: sigma must be positive and finite, got " << sigma;
    throw domain_error(msg.str());
  }
  if (!(gamma > -0.5) || !std::isfinite(gamma)) {
    std::ostringstream msg;
    msg << "GpParams: gamma must exceed -1/2 and be finite, got " << gamma;
    throw domain_error(msg.str());
  }
}

SupportInterval support_interval(const GpParams& params) noexcept {
  const double upper =
      params.gamma() < 0.0 ? -params.sigma() / params.gamma() : kInf;
  return SupportInterval{0.0, upper};
}

double gp_density(double x, const GpParams& params) noexcept {
  const double sigma = params.sigma();
  const double gamma = params.gamma();
  if (x < 0.0) return 0.0;
  if (x == 0.0) return 1.0 / sigma;  // left limit at the lower edge
  if (gamma < 0.0 && x >= -sigma / gamma) return 0.0;
  const double z = x / sigma;
  return std::exp(log_standard_density(z, gamma)) / sigma;
}

double gp_cdf(double x, const GpParams& params) noexcept {
  const double sigma = params.sigma();
  const double gamma = params.gamma();
  if (x <= 0.0) return 0.0;
  if (gamma < 0.0 && x >= -sigma / gamma) return 1.0;
  const double z = x / sigma;
  return -std::expm1(log_survival(z, gamma));
}

double gp_quantile(double q, const GpParams& params) {
  if (!(q >= 0.0 && q < 1.0)) {
    std::ostringstream msg;
    msg << "gp_quantile: q must lie in [0, 1), got " << q;
    throw domain_error(msg.str());
  }
  const double sigma = params.sigma();
  const double gamma = params.gamma();
  const double L = std::log1p(-q);  // log(1-q) <= 0
  if (std::abs(gamma) < kGammaSwitch) {
    // sigma*(expm1(-gamma L)/gamma) expanded in gamma.
    return sigma * (-L + gamma * 0.5 * L * L - gamma * gamma * L * L * L / 6.0);
  }
  return sigma * std::expm1(-gamma * L) / gamma;
}

std::vector<double> gp_sample(const GpParams& params, std::size_t m,
                              std::uint64_t seed) {
  if (m == 0) throw domain_error("gp_sample: m must be at least 1");
  RandomStream stream(seed);
  std::vector<double> draws;
  draws.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    draws.push_back(gp_quantile(stream.uniform(), params));
  }
  return draws;
}

double gp_loglik(const GpParams& params, std::span<const double> excesses) {
  if (excesses.empty()) {
    throw domain_error("gp_loglik: excesses must be nonempty");
  }
  const double sigma = params.sigma();
  const double gamma = params.gamma();
  const double upper = gamma < 0.0 ? -sigma / gamma : kInf;
  const double log_sigma = std::log(sigma);
  double total = 0.0;
  for (double x : excesses) {
    if (x < 0.0) {
      throw domain_error("gp_loglik: excesses must be nonnegative");
    }
    if (x >= upper) return -kInf;
    total += log_standard_density(x / sigma, gamma) - log_sigma;
  }
  return total;
}

GpParams threshold_stability_transform(const GpParams& params, double u) {
  if (!(u >= 0.0)) {
    throw domain_error("threshold_stability_transform: u must be nonnegative");
  }
  const double new_scale = params.sigma() + params.gamma() * u;
  if (!(new_scale > 0.0)) {
    throw domain_error(
        "threshold_stability_transform: sigma + gamma*u must stay positive");
  }
  if (params.gamma() < 0.0 && u >= -params.sigma() / params.gamma()) {
    throw domain_error(
        "threshold_stability_transform: u is at or past the upper endpoint");
  }
  return GpParams(new_scale, params.gamma());
}

}  // namespace potcast
