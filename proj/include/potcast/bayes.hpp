#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <vector>

#include "potcast/estimators.hpp"
#include "potcast/gpd.hpp"

namespace potcast {

enum class ShapePrior { TruncatedGaussian, Flat };
enum class ScalePrior { DataDependent, LogFlat };

// Factorized prior pi(theta) = pi_sh(gamma) * pi_sc(sigma).
//  - TruncatedGaussian: Gaussian(shape_mean, shape_sd) truncated to
//    gamma > -1/2 (integrable near the boundary, bounded above).
//  - Flat: improper constant on gamma > -1/2.
//  - DataDependent: half-Cauchy scaled by an anchor (typically the GPWM
//    sigma-hat), density (1/anchor) * g(sigma/anchor) with
//    g(x) = 2/(pi (1+x^2)); satisfies sigma * pi_sc(sigma) bounded.
//  - LogFlat: improper 1/sigma on [log_lo, log_hi].
struct PriorSpec {
  ShapePrior shape = ShapePrior::TruncatedGaussian;
  double shape_mean = 0.0;
  double shape_sd = 10.0;
  ScalePrior scale = ScalePrior::DataDependent;
  double anchor = 1.0;
  double log_lo = 1e-12;
  double log_hi = 1e12;
};

// Log prior density (up to the truncation constant for the Gaussian shape
// prior); -inf outside sigma > 0, gamma > -1/2, or the LogFlat bounds. The
// raw-double overload exists so that points outside the parameter space can
// be queried (they return -inf rather than failing to construct).
double log_prior(double sigma, double gamma, const PriorSpec& prior);
double log_prior(const GpParams& params, const PriorSpec& prior);

// gp_loglik + log_prior: the unnormalized log posterior.
double log_posterior_unnorm(double sigma, double gamma, const ExcessData& data,
                            const PriorSpec& prior);
double log_posterior_unnorm(const GpParams& params, const ExcessData& data,
                            const PriorSpec& prior);

struct PosteriorChain {
  std::vector<GpParams> draws;     // M retained draws, all inside Theta
  std::vector<double> log_posts;   // unnormalized log posterior per draw
  double acceptance_rate = 0.0;    // over the retained (post-burn-in) phase
  std::size_t burn_in = 0;
  std::uint64_t seed = 0;
};

// Adaptive Gaussian random-walk Metropolis on (log sigma, gamma). Proposal
// scales adapt toward 0.234 acceptance during burn-in only; they are frozen
// afterwards so the retained draws form a valid Markov chain. Deterministic
// under seed. Requires M >= 100. Throws numerical_error if the post-burn-in
// acceptance rate leaves (0.01, 0.99).
PosteriorChain sample_posterior(const ExcessData& data, const PriorSpec& prior,
                                std::size_t M, std::size_t burn_in,
                                std::uint64_t seed);

// Metropolis acceptance decision for a log-target difference and a uniform
// draw; exposed so the kernel can be tested against its analytic transition
// probabilities.
bool metropolis_accept(double log_target_diff, double u);

// Empirical quantile with linear interpolation between order statistics
// (h = (n-1)q + 1 on the ascending sorted values; the convention used for all
// credible intervals and chain summaries). values need not be sorted.
double empirical_quantile(std::span<const double> values, double q);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

// Equal-tailed credible interval of transform(draw) at the given level.
Interval credible_interval(const PosteriorChain& chain,
                           const std::function<double(const GpParams&)>& transform,
                           double level);

// CSV export: header "sigma,gamma,log_post", one draw per row, 17 significant
// digits.
void write_chain_csv(const PosteriorChain& chain, std::ostream& out);

}  // namespace potcast
