#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "potcast/gpd.hpp"

namespace potcast {

// Threshold and sorted excesses extracted from a sample: the threshold is the
// (n-k)th ascending order statistic and the excesses are the top-k values
// minus the threshold, sorted ascending (ties with the threshold are kept as
// zero excesses).
struct ExcessData {
  std::size_t n = 0;
  std::size_t k = 0;
  double threshold = 0.0;
  std::vector<double> excesses;  // ascending, size k
};

// Requires 1 <= k < n and finite sample values.
ExcessData extract_excesses(std::span<const double> sample, std::size_t k);

enum class FitMethod { ML, GPWM };

// Inference method selector shared by the validation experiments and the CLI
// (FitMethod plus the Bayesian posterior route).
enum class InferenceMethod { ML, GPWM, Bayes };

// Point estimate of theta. The raw (sigma, gamma) values are stored even when
// they fall outside the parameter space: GPWM's closed form can legally
// produce e.g. sigma < 0 on degenerate data, and such results are reported
// with flags rather than discarded. Use params() when a validated pair is
// needed.
struct FitResult {
  double sigma = 0.0;
  double gamma = 0.0;
  FitMethod method = FitMethod::ML;
  double loglik = 0.0;  // NaN for GPWM
  bool converged = false;
  std::size_t iterations = 0;
  // sigma > 0 and gamma > -1/2 (the parameter space).
  bool in_theta = false;
  // Method-specific asymptotic-validity region: for GPWM additionally
  // gamma < 1/2; for ML identical to in_theta.
  bool in_validity_region = false;

  // Validated pair; throws domain_error when in_theta is false.
  GpParams params() const;
};

// Constrained maximum likelihood over (0, inf) x (-1/2, inf): profile-grid
// initialization followed by quasi-Newton polish on (log sigma, gamma) with
// barrier rejection of infeasible steps. converged means the gradient
// sup-norm fell below 1e-8 within 500 iterations.
// Requires k >= 2 and at least one strictly positive excess.
FitResult fit_mle(const ExcessData& data);

// Generalized probability-weighted moments: P = mean excess, Q = mean of
// (i/k)-weighted excesses with weight i/k on the i-th largest, then
// gamma = 1 - (P/(2Q) - 1)^(-1) and sigma = P*(P/(2Q) - 1)^(-1).
// Estimates outside (-1/2, 1/2) are flagged, not rejected.
// Requires k >= 2 and a strictly positive mean excess.
FitResult fit_gpwm(const ExcessData& data);

// Right endpoint of the fitted law: threshold - sigma/gamma for gamma < 0,
// +inf otherwise.
double endpoint_estimate(const GpParams& params, double threshold);

}  // namespace potcast
