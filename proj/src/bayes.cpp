#include "potcast/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "potcast/io.hpp"
#include "potcast/rng.hpp"

namespace potcast {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;

double raw_loglik(double sigma, double gamma,
                  const std::vector<double>& excesses) {
  if (!(sigma > 0.0)) return -kInf;
  const double upper = gamma < 0.0 ? -sigma / gamma : kInf;
  const double log_sigma = std::log(sigma);
  double total = 0.0;
  for (double x : excesses) {
    if (x >= upper) return -kInf;
    const double z = x / sigma;
    if (std::abs(gamma) < kGammaSwitch) {
      total += -z + gamma * (0.5 * z * z - z) - log_sigma;
    } else {
      total += -(1.0 / gamma + 1.0) * std::log1p(gamma * z) - log_sigma;
    }
  }
  return total;
}

}  // namespace

double log_prior(double sigma, double gamma, const PriorSpec& prior) {
  if (!(sigma > 0.0) || !(gamma > -0.5)) return -kInf;
  double lp = 0.0;
  switch (prior.shape) {
    case ShapePrior::TruncatedGaussian: {
      const double z = (gamma - prior.shape_mean) / prior.shape_sd;
      lp += -0.5 * z * z;  // truncation constant omitted (cancels in MCMC)
      break;
    }
    case ShapePrior::Flat:
      break;
  }
  switch (prior.scale) {
    case ScalePrior::DataDependent: {
      // (1/anchor) g(sigma/anchor) with half-Cauchy g(x) = 2/(pi(1+x^2)).
      const double x = sigma / prior.anchor;
      lp += std::log(2.0 / (kPi * (1.0 + x * x))) - std::log(prior.anchor);
      break;
    }
    case ScalePrior::LogFlat: {
      if (sigma < prior.log_lo || sigma > prior.log_hi) return -kInf;
      lp += -std::log(sigma);
      break;
    }
  }
  return lp;
}

double log_prior(const GpParams& params, const PriorSpec& prior) {
  return log_prior(params.sigma(), params.gamma(), prior);
}

double log_posterior_unnorm(double sigma, double gamma, const ExcessData& data,
                            const PriorSpec& prior) {
  const double lp = log_prior(sigma, gamma, prior);
  if (lp == -kInf) return -kInf;
  return raw_loglik(sigma, gamma, data.excesses) + lp;
}

double log_posterior_unnorm(const GpParams& params, const ExcessData& data,
                            const PriorSpec& prior) {
  return log_posterior_unnorm(params.sigma(), params.gamma(), data, prior);
}

bool metropolis_accept(double log_target_diff, double u) {
  if (log_target_diff >= 0.0) return true;
  return std::log(u) < log_target_diff;
}

PosteriorChain sample_posterior(const ExcessData& data, const PriorSpec& prior,
                                std::size_t M, std::size_t burn_in,
                                std::uint64_t seed) {
  if (M < 100) throw domain_error("sample_posterior: need M >= 100");

  // Target in (ls, g) = (log sigma, gamma) coordinates; the change of
  // variables contributes the Jacobian term +ls.
  const auto log_target = [&](double ls, double g) {
    const double sigma = std::exp(ls);
    const double lp = log_prior(sigma, g, prior);
    if (lp == -kInf) return -kInf;
    return raw_loglik(sigma, g, data.excesses) + lp + ls;
  };

  // Start at the data-anchored scale and a mildly heavy shape.
  double mean = 0.0;
  for (double x : data.excesses) mean += x;
  mean /= static_cast<double>(data.excesses.size());
  double ls = std::log(mean > 0.0 ? mean : 1.0);
  double g = 0.05;
  double lt = log_target(ls, g);
  if (lt == -kInf) {
    ls = std::log(prior.anchor > 0.0 ? prior.anchor : 1.0);
    lt = log_target(ls, g);
  }

  RandomStream stream(seed);
  double sd_ls = 0.2;
  double sd_g = 0.2;
  PosteriorChain chain;
  chain.draws.reserve(M);
  chain.log_posts.reserve(M);
  chain.burn_in = burn_in;
  chain.seed = seed;

  std::size_t accepted_kept = 0;
  const std::size_t total = burn_in + M;
  for (std::size_t it = 0; it < total; ++it) {
    const double prop_ls = ls + sd_ls * stream.normal();
    const double prop_g = g + sd_g * stream.normal();
    const double prop_lt = log_target(prop_ls, prop_g);
    bool accept = false;
    if (prop_lt > -kInf) {
      accept = metropolis_accept(prop_lt - lt, stream.uniform_open());
    } else {
      stream.uniform_open();  // keep the stream aligned across branches
    }
    if (accept) {
      ls = prop_ls;
      g = prop_g;
      lt = prop_lt;
    }
    if (it < burn_in) {
      // Robbins-Monro step toward 0.234 acceptance; frozen after burn-in.
      const double eta =
          0.05 * std::pow(1.0 / (1.0 + static_cast<double>(it) / 50.0), 0.6);
      const double factor =
          std::exp(eta * ((accept ? 1.0 : 0.0) - 0.234));
      sd_ls = std::clamp(sd_ls * factor, 1e-4, 10.0);
      sd_g = std::clamp(sd_g * factor, 1e-4, 10.0);
    } else {
      accepted_kept += accept ? 1 : 0;
      // lt includes the Jacobian; store the posterior value itself.
      chain.draws.emplace_back(std::exp(ls), g);
      chain.log_posts.push_back(lt - ls);
    }
  }
  chain.acceptance_rate =
      static_cast<double>(accepted_kept) / static_cast<double>(M);
  if (chain.acceptance_rate <= 0.01 || chain.acceptance_rate >= 0.99) {
    std::ostringstream msg;
    msg << "sample_posterior: chain degeneracy, acceptance rate "
        << chain.acceptance_rate << " outside (0.01, 0.99)";
    throw numerical_error(msg.str());
  }
  return chain;
}

double empirical_quantile(std::span<const double> values, double q) {
  if (values.empty()) {
    throw domain_error("empirical_quantile: values must be nonempty");
  }
  if (!(q >= 0.0 && q <= 1.0)) {
    throw domain_error("empirical_quantile: q must lie in [0, 1]");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = (static_cast<double>(n) - 1.0) * q;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0 || sorted[lo] == sorted[lo + 1]) return sorted[lo];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

Interval credible_interval(const PosteriorChain& chain,
                           const std::function<double(const GpParams&)>& transform,
                           double level) {
  if (chain.draws.empty()) {
    throw domain_error("credible_interval: chain is empty");
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw domain_error("credible_interval: level must lie in (0, 1)");
  }
  std::vector<double> values;
  values.reserve(chain.draws.size());
  for (const GpParams& draw : chain.draws) {
    values.push_back(transform(draw));
  }
  const double tail = 0.5 * (1.0 - level);
  return Interval{empirical_quantile(values, tail),
                  empirical_quantile(values, 1.0 - tail)};
}

void write_chain_csv(const PosteriorChain& chain, std::ostream& out) {
  out << "sigma,gamma,log_post\n";
  for (std::size_t i = 0; i < chain.draws.size(); ++i) {
    out << format_double(chain.draws[i].sigma()) << ','
        << format_double(chain.draws[i].gamma()) << ','
        << format_double(chain.log_posts[i]) << '\n';
  }
}

}  // namespace potcast
