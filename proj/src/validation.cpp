#include "potcast/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "potcast/bayes.hpp"
#include "potcast/predictive.hpp"
#include "potcast/quadrature.hpp"
#include "potcast/rng.hpp"

namespace potcast {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Second-order rate shared by the Burr and reversed-Burr families:
// A(v) = (gamma + rho) / (v^(-rho) - 1).
std::function<double(double)> burr_rate(double gamma, double rho) {
  return [gamma, rho](double v) {
    return (gamma + rho) / std::expm1(-rho * std::log(v));
  };
}

}  // namespace

DistributionOracle make_exact_gp(double sigma, double gamma) {
  GpParams params(sigma, gamma);
  DistributionOracle oracle;
  std::ostringstream name;
  name << "exact-gp(sigma=" << sigma << ",gamma=" << gamma << ")";
  oracle.name = name.str();
  oracle.gamma = gamma;
  oracle.rho = kNaN;  // A vanishes identically; no second-order index
  oracle.quantile = [params](double q) { return gp_quantile(q, params); };
  oracle.cdf = [params](double x) { return gp_cdf(x, params); };
  oracle.density = [params](double x) { return gp_density(x, params); };
  oracle.A = [](double) { return 0.0; };
  oracle.s = [sigma, gamma](double t) { return sigma + gamma * t; };
  oracle.endpoint = gamma < 0.0 ? -sigma / gamma : kInf;
  return oracle;
}

DistributionOracle make_burr(double tau, double lambda) {
  if (!(tau > 0.0) || !(lambda > 0.0)) {
    throw domain_error("make_burr: need tau > 0 and lambda > 0");
  }
  DistributionOracle oracle;
  std::ostringstream name;
  name << "burr(tau=" << tau << ",lambda=" << lambda << ")";
  oracle.name = name.str();
  oracle.gamma = 1.0 / (tau * lambda);
  oracle.rho = -1.0 / lambda;
  // F(x) = 1 - (1 + x^tau)^(-lambda), x > 0.
  oracle.cdf = [tau, lambda](double x) {
    if (x <= 0.0) return 0.0;
    return -std::expm1(-lambda * std::log1p(std::pow(x, tau)));
  };
  oracle.density = [tau, lambda](double x) {
    if (x <= 0.0) return 0.0;
    const double xt = std::pow(x, tau);
    return lambda * tau * std::pow(x, tau - 1.0) *
           std::exp(-(lambda + 1.0) * std::log1p(xt));
  };
  oracle.quantile = [tau, lambda](double q) {
    if (q <= 0.0) return 0.0;
    // x = ((1-q)^(-1/lambda) - 1)^(1/tau)
    return std::pow(std::expm1(-std::log1p(-q) / lambda), 1.0 / tau);
  };
  oracle.A = burr_rate(oracle.gamma, oracle.rho);
  // s(t) = (1 - F(t))/F'(t) = (1 + t^tau) / (lambda tau t^(tau-1)).
  oracle.s = [tau, lambda](double t) {
    return (1.0 + std::pow(t, tau)) / (lambda * tau * std::pow(t, tau - 1.0));
  };
  oracle.endpoint = kInf;
  return oracle;
}

DistributionOracle make_finite_endpoint_power(double tau, double lambda,
                                              double endpoint) {
  if (!(tau > 0.0) || !(lambda > 0.0)) {
    throw domain_error(
        "make_finite_endpoint_power: need tau > 0 and lambda > 0");
  }
  DistributionOracle oracle;
  std::ostringstream name;
  name << "fep(tau=" << tau << ",lambda=" << lambda << ",endpoint=" << endpoint
       << ")";
  oracle.name = name.str();
  oracle.gamma = -1.0 / (tau * lambda);
  oracle.rho = -1.0 / lambda;
  // 1 - F(x) = (1 + (endpoint - x)^(-tau))^(-lambda), x < endpoint.
  oracle.cdf = [tau, lambda, endpoint](double x) {
    if (x >= endpoint) return 1.0;
    const double d = endpoint - x;
    return -std::expm1(-lambda * std::log1p(std::pow(d, -tau)));
  };
  oracle.density = [tau, lambda, endpoint](double x) {
    if (x >= endpoint) return 0.0;
    const double d = endpoint - x;
    return lambda * tau * std::pow(d, -tau - 1.0) *
           std::exp(-(lambda + 1.0) * std::log1p(std::pow(d, -tau)));
  };
  oracle.quantile = [tau, lambda, endpoint](double q) {
    // x = endpoint - ((1-q)^(-1/lambda) - 1)^(-1/tau)
    if (q <= 0.0) return -kInf;
    return endpoint -
           std::pow(std::expm1(-std::log1p(-q) / lambda), -1.0 / tau);
  };
  oracle.A = burr_rate(oracle.gamma, oracle.rho);
  // s(t) = (1 + (endpoint-t)^(-tau)) (endpoint-t)^(tau+1) / (lambda tau).
  oracle.s = [tau, lambda, endpoint](double t) {
    const double d = endpoint - t;
    return (1.0 + std::pow(d, -tau)) * std::pow(d, tau + 1.0) / (lambda * tau);
  };
  oracle.endpoint = endpoint;
  return oracle;
}

DistributionOracle make_exponential(double rate) {
  if (!(rate > 0.0)) throw domain_error("make_exponential: need rate > 0");
  DistributionOracle oracle;
  std::ostringstream name;
  name << "exponential(rate=" << rate << ")";
  oracle.name = name.str();
  oracle.gamma = 0.0;
  oracle.rho = kNaN;
  oracle.cdf = [rate](double x) {
    return x <= 0.0 ? 0.0 : -std::expm1(-rate * x);
  };
  oracle.density = [rate](double x) {
    return x <= 0.0 ? 0.0 : rate * std::exp(-rate * x);
  };
  oracle.quantile = [rate](double q) { return -std::log1p(-q) / rate; };
  oracle.A = [](double) { return 0.0; };
  oracle.s = [rate](double) { return 1.0 / rate; };
  oracle.endpoint = kInf;
  return oracle;
}

double hellinger(const std::function<double(double)>& f,
                 const std::function<double(double)>& g, double lo, double hi,
                 std::size_t grid_size) {
  if (grid_size < 64) {
    throw domain_error("hellinger: grid_size must be at least 64");
  }
  // (1/2) integral (sqrt f - sqrt g)^2 = 1 - integral sqrt(f g) for
  // normalized densities, but the difference form resolves small distances
  // that the Bhattacharyya form loses to cancellation.
  const auto integrand = [&f, &g](double x) {
    const double fx = std::max(f(x), 0.0);
    const double gx = std::max(g(x), 0.0);
    const double d = std::sqrt(fx) - std::sqrt(gx);
    return 0.5 * d * d;
  };
  QuadratureResult result;
  try {
    result = integrate(integrand, lo, hi, grid_size, 1e-9, 1e-8);
  } catch (const numerical_error& e) {
    std::ostringstream msg;
    msg << "hellinger: " << e.what();
    throw numerical_error(msg.str());
  }
  const double h2 = std::clamp(result.value, 0.0, 1.0);
  return std::sqrt(h2);
}

std::function<double(double)> normalized_excess_density(
    const DistributionOracle& oracle, double t) {
  const double survival = 1.0 - oracle.cdf(t);
  if (!(survival >= 1e-300)) {
    std::ostringstream msg;
    msg << "normalized_excess_density: survival probability underflows at t="
        << t;
    throw numerical_error(msg.str());
  }
  const double scale = oracle.s(t);
  if (!(scale > 0.0)) {
    throw numerical_error("normalized_excess_density: s(t) must be positive");
  }
  auto density = oracle.density;
  return [density, t, scale, survival](double x) {
    if (x < 0.0) return 0.0;
    return density(t + scale * x) * scale / survival;
  };
}

std::vector<ContractionRow> contraction_experiment(
    const DistributionOracle& oracle, std::span<const double> v_grid) {
  GpParams standard(1.0, oracle.gamma);
  const auto gp_ref = [standard](double x) {
    return gp_density(x, standard);
  };
  std::vector<ContractionRow> rows;
  rows.reserve(v_grid.size());
  for (double v : v_grid) {
    if (!(v > 1.0)) {
      throw domain_error("contraction_experiment: v must exceed 1");
    }
    const double t = oracle.quantile(1.0 - 1.0 / v);
    const auto l_t = normalized_excess_density(oracle, t);
    // Union of supports: the normalized excess lives on
    // [0, (endpoint - t)/s(t)); the reference GP on [0, -1/gamma) or [0, inf).
    double hi = kInf;
    if (std::isfinite(oracle.endpoint)) {
      hi = (oracle.endpoint - t) / oracle.s(t);
    }
    if (standard.gamma() < 0.0) {
      hi = std::isfinite(hi) ? std::max(hi, -1.0 / standard.gamma())
                             : -1.0 / standard.gamma();
    }
    ContractionRow row;
    row.v = v;
    row.H = hellinger(l_t, gp_ref, 0.0, hi, 256);
    row.absA = std::abs(oracle.A(v));
    row.ratio = row.absA > 0.0 ? row.H / row.absA : kNaN;
    rows.push_back(row);
  }
  return rows;
}

double rate_w(double gamma, double x) {
  if (!(x > 1.0)) throw domain_error("rate_w: x must exceed 1");
  if (gamma > 0.0) return std::log(x);
  if (gamma == 0.0) {
    const double l = std::log(x);
    return l * l;
  }
  return std::pow(x, -gamma);
}

double rate_z(double gamma, double x) {
  if (!(x > 1.0)) throw domain_error("rate_z: x must exceed 1");
  if (gamma >= 0.0) return rate_w(gamma, x);
  return std::log(x) * rate_w(gamma, x);
}

CoverageReport simulate_coverage(const DistributionOracle& oracle,
                                 std::size_t n, std::size_t k,
                                 LevelKind level_kind, double c_or_p,
                                 double alpha, InferenceMethod method,
                                 std::size_t replicates, std::uint64_t seed,
                                 std::size_t bayes_chain_length,
                                 std::size_t bayes_burn_in) {
  if (replicates < 100) {
    throw domain_error("simulate_coverage: need replicates >= 100");
  }
  if (k < 2 || k >= n) {
    throw domain_error("simulate_coverage: need 2 <= k < n");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw domain_error("simulate_coverage: alpha must lie in (0, 1)");
  }
  if (level_kind == LevelKind::Direct) {
    const double ratio = static_cast<double>(k) / static_cast<double>(n);
    if (!(c_or_p > 0.0) || c_or_p > ratio * (1.0 + 1e-12)) {
      throw domain_error("simulate_coverage: need 0 < p <= k/n");
    }
  } else if (!(c_or_p >= 1.0)) {
    throw domain_error("simulate_coverage: need c >= 1");
  }

  std::vector<double> sample(n);
  double sum = 0.0;
  double compensation = 0.0;  // Kahan-compensated mean of true coverages
  std::size_t included = 0;
  std::size_t failures = 0;

  for (std::size_t rep = 0; rep < replicates; ++rep) {
    RandomStream stream(split_seed(seed, rep));
    for (std::size_t i = 0; i < n; ++i) {
      // Open uniforms: oracle quantiles may be -inf at exactly 0.
      sample[i] = oracle.quantile(stream.uniform_open());
    }
    ExcessData data = extract_excesses(sample, k);

    double sigma_hat = 0.0;
    double gamma_hat = 0.0;
    const PosteriorChain* chain_ptr = nullptr;
    PosteriorChain chain;
    bool ok = true;
    try {
      switch (method) {
        case InferenceMethod::ML: {
          const FitResult fit = fit_mle(data);
          ok = fit.converged && fit.in_theta;
          sigma_hat = fit.sigma;
          gamma_hat = fit.gamma;
          break;
        }
        case InferenceMethod::GPWM: {
          const FitResult fit = fit_gpwm(data);
          ok = fit.in_theta;
          sigma_hat = fit.sigma;
          gamma_hat = fit.gamma;
          break;
        }
        case InferenceMethod::Bayes: {
          PriorSpec prior;
          try {
            const FitResult wm = fit_gpwm(data);
            prior.anchor = wm.sigma > 0.0
                               ? wm.sigma
                               : std::max(1e-12, data.excesses.back());
          } catch (const error&) {
            prior.anchor = 1.0;
          }
          chain = sample_posterior(data, prior, bayes_chain_length,
                                   bayes_burn_in,
                                   split_seed(seed, replicates + rep));
          chain_ptr = &chain;
          // Posterior-mean point summary steers the c-based level.
          double mean_gamma = 0.0;
          for (const GpParams& draw : chain.draws) mean_gamma += draw.gamma();
          mean_gamma /= static_cast<double>(chain.draws.size());
          gamma_hat = mean_gamma;
          break;
        }
      }
    } catch (const error&) {
      ok = false;
    }
    if (!ok) {
      ++failures;
      continue;
    }

    double lower = 0.0;
    double upper = 0.0;
    double p = c_or_p;
    try {
      if (chain_ptr == nullptr) {
        const GpParams theta(sigma_hat, gamma_hat);
        if (level_kind == LevelKind::FromC) {
          p = extreme_level(c_or_p, gamma_hat, k, n);  // throws if gamma >= 0
        }
        const PredictiveSpec spec =
            make_plugin_spec(theta, data.threshold, k, n, p);
        const PredictiveInterval interval =
            predictive_interval(spec, alpha, PredictiveKind::Peak);
        lower = interval.lower;
        upper = interval.upper;
      } else if (level_kind == LevelKind::Direct) {
        const PredictiveSpec spec =
            make_chain_spec(*chain_ptr, data.threshold, k, n, p);
        const PredictiveInterval interval =
            predictive_interval(spec, alpha, PredictiveKind::Peak);
        lower = interval.lower;
        upper = interval.upper;
      } else {
        // c-based Bayesian level: per-draw p_i, mixture over the transformed
        // components; the scored level is the plug-in one from the posterior
        // mean gamma.
        std::size_t excluded = 0;
        const std::vector<PredictiveComponent> comps =
            posterior_components_scaled(*chain_ptr, data.threshold, c_or_p, k,
                                        n, &excluded);
        if (comps.empty() ||
            excluded * 100 >= chain_ptr->draws.size()) {  // >= 1% excluded
          ++failures;
          continue;
        }
        p = extreme_level(c_or_p, gamma_hat, k, n);
        lower = mixture_quantile(0.5 * alpha, comps);
        upper = mixture_quantile(1.0 - 0.5 * alpha, comps);
      }
    } catch (const error&) {
      ++failures;
      continue;
    }

    // True conditional coverage at the oracle's own (1-p)-quantile.
    const double q_true = oracle.quantile(1.0 - p);
    const double denom = 1.0 - oracle.cdf(q_true);
    if (!(denom > 0.0)) {
      ++failures;
      continue;
    }
    const double mass =
        oracle.cdf(upper) - oracle.cdf(std::max(lower, q_true));
    const double coverage = std::clamp(mass / denom, 0.0, 1.0);
    const double y = coverage - compensation;
    const double t_sum = sum + y;
    compensation = (t_sum - sum) - y;
    sum = t_sum;
    ++included;
  }

  if (failures * 10 > replicates) {
    std::ostringstream msg;
    msg << "simulate_coverage: " << failures << " of " << replicates
        << " replicates failed (more than 10%)";
    throw numerical_error(msg.str());
  }

  CoverageReport report;
  report.replicates = included;
  report.nominal = 1.0 - alpha;
  report.empirical = included > 0 ? sum / static_cast<double>(included) : 0.0;
  report.mc_stderr =
      included > 0
          ? std::sqrt(report.empirical * (1.0 - report.empirical) /
                      static_cast<double>(included))
          : 0.0;
  report.failures = failures;
  report.settings.oracle = oracle.name;
  report.settings.n = n;
  report.settings.k = k;
  report.settings.level_kind = level_kind;
  report.settings.level_value = c_or_p;
  report.settings.method = method;
  return report;
}

}  // namespace potcast
