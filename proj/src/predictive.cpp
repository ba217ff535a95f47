#include "potcast/predictive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace potcast {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_counts(std::size_t k, std::size_t n, double p) {
  if (k == 0 || n == 0 || k >= n) {
    std::ostringstream msg;
    msg << "predictive spec: need 0 < k < n, got k=" << k << " n=" << n;
    throw domain_error(msg.str());
  }
  const double ratio = static_cast<double>(k) / static_cast<double>(n);
  if (!(p > 0.0) || p > ratio * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "predictive spec: need 0 < p <= k/n, got p=" << p
        << " with k/n=" << ratio;
    throw domain_error(msg.str());
  }
}

// (np/k)^(-gamma): the scale inflation factor of the extrapolated law.
double scale_factor(double gamma, std::size_t k, std::size_t n, double p) {
  const double r = static_cast<double>(n) * p / static_cast<double>(k);
  return std::exp(-gamma * std::log(r));
}

GpParams component_params(const PredictiveComponent& comp) {
  return GpParams(comp.scale, comp.gamma);
}

}  // namespace

PredictiveSpec make_plugin_spec(const GpParams& theta, double threshold,
                                std::size_t k, std::size_t n, double p) {
  validate_counts(k, n, p);
  PredictiveSpec spec;
  spec.theta = theta;
  spec.threshold = threshold;
  spec.k = k;
  spec.n = n;
  spec.p = p;
  return spec;
}

PredictiveSpec make_chain_spec(const PosteriorChain& chain, double threshold,
                               std::size_t k, std::size_t n, double p) {
  validate_counts(k, n, p);
  if (chain.draws.empty()) {
    throw domain_error("predictive spec: chain is empty");
  }
  PredictiveSpec spec;
  spec.chain = &chain;
  spec.threshold = threshold;
  spec.k = k;
  spec.n = n;
  spec.p = p;
  return spec;
}

double extreme_level(double c, double gamma, std::size_t k, std::size_t n) {
  if (!(c >= 1.0)) {
    std::ostringstream msg;
    msg << "extreme_level: need c >= 1, got " << c;
    throw domain_error(msg.str());
  }
  if (!(gamma < 0.0)) {
    std::ostringstream msg;
    msg << "extreme_level: the c-construction needs gamma < 0 (finite "
           "endpoint), got gamma="
        << gamma << "; supply p directly for heavy tails";
    throw domain_error(msg.str());
  }
  if (k == 0 || n == 0 || k >= n) {
    throw domain_error("extreme_level: need 0 < k < n");
  }
  return std::exp(std::log(c) / gamma) * static_cast<double>(k) /
         static_cast<double>(n);
}

double extreme_quantile(const GpParams& params, double threshold,
                        std::size_t k, std::size_t n, double p) {
  validate_counts(k, n, p);
  const double gamma = params.gamma();
  const double sigma = params.sigma();
  const double log_r =
      std::log(static_cast<double>(n) * p / static_cast<double>(k));
  if (std::abs(gamma) < kGammaSwitch) {
    // limit: threshold + sigma * log(k/(np)), with the next-order term.
    return threshold + sigma * (-log_r + 0.5 * gamma * log_r * log_r);
  }
  return threshold + sigma * std::expm1(-gamma * log_r) / gamma;
}

std::vector<PredictiveComponent> predictive_components(const PredictiveSpec& spec,
                                                       PredictiveKind kind) {
  std::vector<PredictiveComponent> comps;
  const auto push = [&](const GpParams& theta) {
    PredictiveComponent comp;
    comp.scale = scale_factor(theta.gamma(), spec.k, spec.n, spec.p) *
                 theta.sigma();
    comp.gamma = theta.gamma();
    comp.location = kind == PredictiveKind::Peak
                        ? extreme_quantile(theta, spec.threshold, spec.k,
                                           spec.n, spec.p)
                        : 0.0;
    comps.push_back(comp);
  };
  if (spec.theta.has_value()) {
    push(*spec.theta);
  } else if (spec.chain != nullptr) {
    comps.reserve(spec.chain->draws.size());
    for (const GpParams& draw : spec.chain->draws) push(draw);
  } else {
    throw domain_error("predictive spec: no theta source");
  }
  return comps;
}

std::vector<PredictiveComponent> posterior_components_scaled(
    const PosteriorChain& chain, double threshold, double c, std::size_t k,
    std::size_t n, std::size_t* n_excluded) {
  if (chain.draws.empty()) {
    throw domain_error("posterior_components_scaled: chain is empty");
  }
  if (!(c >= 1.0)) {
    throw domain_error("posterior_components_scaled: need c >= 1");
  }
  std::vector<PredictiveComponent> comps;
  comps.reserve(chain.draws.size());
  std::size_t excluded = 0;
  for (const GpParams& draw : chain.draws) {
    if (!(draw.gamma() < 0.0)) {
      ++excluded;
      continue;
    }
    const double p_i = extreme_level(c, draw.gamma(), k, n);
    PredictiveComponent comp;
    comp.scale = draw.sigma() / c;  // (n p_i / k)^(-gamma_i) = 1/c exactly
    comp.gamma = draw.gamma();
    comp.location = extreme_quantile(draw, threshold, k, n, p_i);
    comps.push_back(comp);
  }
  if (n_excluded != nullptr) *n_excluded = excluded;
  return comps;
}

double mixture_density(double x, std::span<const PredictiveComponent> comps) {
  if (comps.empty()) throw domain_error("mixture_density: no components");
  double total = 0.0;
  for (const PredictiveComponent& comp : comps) {
    total += gp_density(x - comp.location, component_params(comp));
  }
  return total / static_cast<double>(comps.size());
}

double mixture_cdf(double x, std::span<const PredictiveComponent> comps) {
  if (comps.empty()) throw domain_error("mixture_cdf: no components");
  double total = 0.0;
  for (const PredictiveComponent& comp : comps) {
    total += gp_cdf(x - comp.location, component_params(comp));
  }
  return total / static_cast<double>(comps.size());
}

double mixture_quantile(double q, std::span<const PredictiveComponent> comps) {
  if (comps.empty()) throw domain_error("mixture_quantile: no components");
  if (!(q > 0.0 && q < 1.0)) {
    throw domain_error("mixture_quantile: q must lie in (0, 1)");
  }
  // Bracket from component quantiles at q, then bisect the averaged CDF to
  // 1e-6 in probability.
  double lo = kInf;
  double hi = -kInf;
  for (const PredictiveComponent& comp : comps) {
    const double cq = comp.location + gp_quantile(q, component_params(comp));
    lo = std::min(lo, cq);
    hi = std::max(hi, cq);
  }
  if (lo == hi) return lo;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double cdf_mid = mixture_cdf(mid, comps);
    if (std::abs(cdf_mid - q) < 1e-6 * 0.5) return mid;
    if (cdf_mid < q) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-14 * (1.0 + std::abs(hi))) break;
  }
  return 0.5 * (lo + hi);
}

double excess_predictive_density(double x, const PredictiveSpec& spec) {
  if (!spec.theta.has_value()) {
    throw domain_error("excess_predictive_density: needs a plug-in spec");
  }
  const GpParams& theta = *spec.theta;
  const double s = scale_factor(theta.gamma(), spec.k, spec.n, spec.p) *
                   theta.sigma();
  return gp_density(x, GpParams(s, theta.gamma()));
}

double peak_predictive_density(double x, const PredictiveSpec& spec) {
  if (!spec.theta.has_value()) {
    throw domain_error("peak_predictive_density: needs a plug-in spec");
  }
  const double shift = extreme_quantile(*spec.theta, spec.threshold, spec.k,
                                        spec.n, spec.p);
  return excess_predictive_density(x - shift, spec);
}

double posterior_predictive_density(double x, const PredictiveSpec& spec,
                                    PredictiveKind kind) {
  if (spec.chain == nullptr) {
    throw domain_error("posterior_predictive_density: needs a chain spec");
  }
  const std::vector<PredictiveComponent> comps =
      predictive_components(spec, kind);
  return mixture_density(x, comps);
}

PredictiveInterval predictive_interval(const PredictiveSpec& spec, double alpha,
                                       PredictiveKind kind) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw domain_error("predictive_interval: alpha must lie in (0, 1)");
  }
  PredictiveInterval interval;
  interval.level = 1.0 - alpha;
  interval.kind = kind;
  if (spec.theta.has_value()) {
    const std::vector<PredictiveComponent> comps =
        predictive_components(spec, kind);
    const GpParams params = component_params(comps.front());
    interval.lower = comps.front().location + gp_quantile(0.5 * alpha, params);
    interval.upper =
        comps.front().location + gp_quantile(1.0 - 0.5 * alpha, params);
    return interval;
  }
  const std::vector<PredictiveComponent> comps =
      predictive_components(spec, kind);
  interval.lower = mixture_quantile(0.5 * alpha, comps);
  interval.upper = mixture_quantile(1.0 - 0.5 * alpha, comps);
  return interval;
}

}  // namespace potcast
