#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "potcast/estimators.hpp"
#include "potcast/gpd.hpp"

namespace potcast {

// A fully known sampling distribution used to verify the method empirically:
// analytic quantile/cdf/density, the second-order rate function A(v), the
// scaling function s(t) = (1-F(t))/F'(t), and the true extreme value index
// and second-order index.
struct DistributionOracle {
  std::string name;
  double gamma = 0.0;
  double rho = 0.0;  // NaN where undefined (A identically zero)
  std::function<double(double)> quantile;  // F^{-1}(q), q in [0,1)
  std::function<double(double)> cdf;
  std::function<double(double)> density;
  std::function<double(double)> A;  // second-order rate, v > 1
  std::function<double(double)> s;  // scaling, t below endpoint
  double endpoint = std::numeric_limits<double>::infinity();
};

// Exact GP law: A identically 0 (the approximation is exact at every
// threshold), s(t) = sigma + gamma*t.
DistributionOracle make_exact_gp(double sigma, double gamma);

// Burr law F(x) = 1 - (1 + x^tau)^(-lambda) on x > 0:
// gamma = 1/(tau*lambda) > 0, rho = -1/lambda,
// A(v) = (gamma + rho)/(v^(-rho) - 1).
DistributionOracle make_burr(double tau, double lambda);

// Finite-endpoint power law (reversed Burr) with right endpoint x*:
// 1 - F(x) = (1 + (x* - x)^(-tau))^(-lambda) for x < x*,
// gamma = -1/(tau*lambda) < 0, rho = -1/lambda,
// A(v) = (gamma + rho)/(v^(-rho) - 1).
DistributionOracle make_finite_endpoint_power(double tau, double lambda,
                                              double endpoint);

// Exponential(rate): gamma = 0, A identically 0, s(t) = 1/rate.
DistributionOracle make_exponential(double rate);

// Hellinger distance sqrt(1 - integral sqrt(f g)) between densities on
// [lo, hi] (hi may be +inf), clamped to [0, 1]. Computed through the
// algebraically identical stable form (1/2) integral (sqrt f - sqrt g)^2 so
// that distances near 0 are resolved to relative accuracy instead of being
// swamped by the absolute tolerance. grid_size (>= 64) sets the initial
// panel count of the adaptive quadrature; a numerical_error carries the
// achieved tolerance if refinement fails.
double hellinger(const std::function<double(double)>& f,
                 const std::function<double(double)>& g, double lo, double hi,
                 std::size_t grid_size = 64);

// l_t(x) = F'(t + s(t) x) s(t) / (1 - F(t)): the density of the normalized
// excess (Y - t)/s(t) given Y > t. Throws numerical_error when the survival
// probability at t underflows (below 1e-300).
std::function<double(double)> normalized_excess_density(
    const DistributionOracle& oracle, double t);

struct ContractionRow {
  double v = 0.0;     // threshold index: t = Q(1 - 1/v)
  double H = 0.0;     // Hellinger distance between l_t and the standard GP
  double absA = 0.0;  // |A(v)|
  double ratio = 0.0; // H / |A(v)|; NaN when A(v) = 0
};

// For each v in v_grid: set t = quantile(1 - 1/v), measure the Hellinger
// distance between the normalized excess density and the standard GP density
// with the oracle's gamma, and report it against |A(v)|.
std::vector<ContractionRow> contraction_experiment(
    const DistributionOracle& oracle, std::span<const double> v_grid);

// Rate functions: w_gamma(x) = log x (gamma>0), log^2 x (gamma=0),
// x^(-gamma) (gamma<0); z_gamma(x) = w_gamma(x) for gamma >= 0 and
// log(x) * w_gamma(x) for gamma < 0. Require x > 1.
double rate_w(double gamma, double x);
double rate_z(double gamma, double x);

enum class LevelKind { Direct, FromC };

struct CoverageSettings {
  std::string oracle;
  std::size_t n = 0;
  std::size_t k = 0;
  LevelKind level_kind = LevelKind::Direct;
  double level_value = 0.0;  // p for Direct, c for FromC
  InferenceMethod method = InferenceMethod::ML;
};

struct CoverageReport {
  std::size_t replicates = 0;  // replicates included in the mean
  double nominal = 0.0;        // 1 - alpha
  double empirical = 0.0;      // mean true coverage over replicates
  double mc_stderr = 0.0;      // sqrt(empirical (1-empirical) / replicates)
  std::size_t failures = 0;    // excluded replicates (fit/level failures)
  CoverageSettings settings;
};

// Per replicate: draw n points from the oracle, extract the top-k excesses,
// fit by the requested method, build the equal-tailed peak predictive
// interval at level p (p = c^(1/gamma-hat) k/n when the level comes from c),
// and score the TRUE conditional probability
// (F(upper) - F(max(lower, Q(p)))) / (1 - F(Q(p))) at the oracle's true
// (1-p)-quantile. empirical is the mean of these true coverages. Failures
// (non-convergence, gamma-hat >= 0 under FromC) are counted and excluded;
// more than 10% failures aborts with numerical_error. Deterministic under
// seed. Requires replicates >= 100.
CoverageReport simulate_coverage(const DistributionOracle& oracle,
                                 std::size_t n, std::size_t k,
                                 LevelKind level_kind, double c_or_p,
                                 double alpha, InferenceMethod method,
                                 std::size_t replicates, std::uint64_t seed,
                                 std::size_t bayes_chain_length = 2000,
                                 std::size_t bayes_burn_in = 1000);

}  // namespace potcast
