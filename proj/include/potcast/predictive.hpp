#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "potcast/bayes.hpp"
#include "potcast/gpd.hpp"

namespace potcast {

enum class PredictiveKind { Excess, Peak };

// Inputs of a predictive law: either a single plug-in theta or a posterior
// chain, plus the threshold t = X_{n-k,n}, the counts (k, n), and the target
// exceedance level p with 0 < p <= k/n.
struct PredictiveSpec {
  std::optional<GpParams> theta;          // plug-in source
  const PosteriorChain* chain = nullptr;  // Bayesian source (non-owning)
  double threshold = 0.0;
  std::size_t k = 0;
  std::size_t n = 0;
  double p = 0.0;
};

// Factories validate 0 < p <= k/n and k < n (and a nonempty chain).
PredictiveSpec make_plugin_spec(const GpParams& theta, double threshold,
                                std::size_t k, std::size_t n, double p);
PredictiveSpec make_chain_spec(const PosteriorChain& chain, double threshold,
                               std::size_t k, std::size_t n, double p);

struct PredictiveInterval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.0;  // 1 - alpha
  PredictiveKind kind = PredictiveKind::Peak;
};

// p = c^(1/gamma) * k/n for scaling factors c >= 1; requires gamma < 0 (the
// construction divides the gap to a finite endpoint). For heavy tails supply
// p directly instead.
double extreme_level(double c, double gamma, std::size_t k, std::size_t n);

// Q-hat(p) = threshold + sigma*((np/k)^(-gamma) - 1)/gamma, with the
// gamma -> 0 limit threshold + sigma*log(k/(np)). Requires 0 < p <= k/n.
double extreme_quantile(const GpParams& params, double threshold,
                        std::size_t k, std::size_t n, double p);

// One generalized Pareto component of a predictive law: a GP(scale, gamma)
// excess law shifted to start at `location`.
struct PredictiveComponent {
  double location = 0.0;
  double scale = 0.0;
  double gamma = 0.0;
};

// The component(s) of the predictive law described by spec: one for plug-in
// sources, one per chain draw for Bayesian sources. Excess kind has location
// 0 and scale (np/k)^(-gamma) sigma; Peak kind locates each component at the
// source's own extreme quantile at level p.
std::vector<PredictiveComponent> predictive_components(const PredictiveSpec& spec,
                                                       PredictiveKind kind);

// Components of the Bayesian peak predictive law for a c-based level, where
// each draw i uses its own level p_i = c^(1/gamma_i) k/n (so each component
// is GP(sigma_i/c, gamma_i) located at that draw's extreme quantile). Draws
// with gamma_i >= 0 have no finite endpoint and are skipped; their count is
// returned through n_excluded.
std::vector<PredictiveComponent> posterior_components_scaled(
    const PosteriorChain& chain, double threshold, double c, std::size_t k,
    std::size_t n, std::size_t* n_excluded);

// Equally weighted mixture evaluations over components.
double mixture_density(double x, std::span<const PredictiveComponent> comps);
double mixture_cdf(double x, std::span<const PredictiveComponent> comps);
// Monotone bisection on mixture_cdf, absolute tolerance 1e-6 in probability.
double mixture_quantile(double q, std::span<const PredictiveComponent> comps);

// f*_{theta,p}(x): the GP density with rescaled scale (np/k)^(-gamma) sigma.
// Requires a plug-in spec.
double excess_predictive_density(double x, const PredictiveSpec& spec);

// g*_{theta,p}(x): the excess predictive density shifted so its support
// starts at extreme_quantile(theta, t, k, n, p). Requires a plug-in spec.
double peak_predictive_density(double x, const PredictiveSpec& spec);

// Equally weighted average of the per-draw predictive densities over the
// chain. Requires a chain spec.
double posterior_predictive_density(double x, const PredictiveSpec& spec,
                                    PredictiveKind kind = PredictiveKind::Peak);

// Equal-tailed interval [q_{alpha/2}, q_{1-alpha/2}] of the predictive law:
// analytic for plug-in specs, mixture bisection for chain specs.
PredictiveInterval predictive_interval(const PredictiveSpec& spec, double alpha,
                                       PredictiveKind kind);

}  // namespace potcast
