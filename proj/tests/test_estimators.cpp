#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"

#include "potcast/estimators.hpp"
#include "potcast/gpd.hpp"

using namespace potcast;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Test-local GP sampler written from the quantile formula, independent of the
// library's sampling path.
std::vector<double> draw_gp(double sigma, double gamma, std::size_t m,
                            std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> xs(m);
  for (double& x : xs) {
    const double u = unif(engine);
    if (gamma == 0.0) {
      x = -sigma * std::log1p(-u);
    } else {
      x = sigma * std::expm1(-gamma * std::log1p(-u)) / gamma;
    }
  }
  return xs;
}

ExcessData as_excess_data(std::vector<double> excesses) {
  ExcessData data;
  data.n = excesses.size() * 10;
  data.k = excesses.size();
  data.threshold = 0.0;
  std::sort(excesses.begin(), excesses.end());
  data.excesses = std::move(excesses);
  return data;
}

// Mean negative log likelihood gradient by central differences, used to
// verify stationarity of the ML fit independently of its internal gradient.
std::pair<double, double> numeric_nll_gradient(const ExcessData& data,
                                               double sigma, double gamma) {
  const auto nll = [&](double s, double g) {
    return -gp_loglik(GpParams(s, g), data.excesses);
  };
  const double hs = 1e-6 * sigma;
  const double hg = 1e-7;
  const double ds = (nll(sigma + hs, gamma) - nll(sigma - hs, gamma)) /
                    (2.0 * hs);
  const double dg = (nll(sigma, gamma + hg) - nll(sigma, gamma - hg)) /
                    (2.0 * hg);
  return {ds, dg};
}

double fit_gamma_error(const std::vector<double>& sample, std::size_t k,
                       double gamma_true, bool use_ml) {
  const ExcessData data = extract_excesses(sample, k);
  const FitResult fit = use_ml ? fit_mle(data) : fit_gpwm(data);
  return std::abs(fit.gamma - gamma_true);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double slope_through(const std::vector<double>& xs,
                     const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  return num / den;
}

}  // namespace

TEST_SUITE("estimators") {

TEST_CASE("excess extraction from a known vector") {
  const std::vector<double> sample = {5, 1, 9, 3, 7, 2, 8, 4, 6, 0};
  const ExcessData data = extract_excesses(sample, 3);
  CHECK(data.n == 10);
  CHECK(data.k == 3);
  CHECK(data.threshold == 6.0);
  CHECK(data.excesses == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("excess extraction keeps threshold ties as zero excesses") {
  const std::vector<double> sample = {1, 2, 2, 2, 3};
  const ExcessData data = extract_excesses(sample, 2);
  CHECK(data.threshold == 2.0);
  CHECK(data.excesses == std::vector<double>{0.0, 1.0});
}

TEST_CASE("excess extraction rejects bad input") {
  const std::vector<double> ok = {1, 2, 3, 4};
  CHECK_THROWS_AS(extract_excesses(ok, 0), domain_error);
  CHECK_THROWS_AS(extract_excesses(ok, 4), domain_error);
  CHECK_THROWS_AS(extract_excesses(ok, 9), domain_error);
  const std::vector<double> with_nan = {
      1, 2, std::numeric_limits<double>::quiet_NaN(), 4};
  CHECK_THROWS_AS(extract_excesses(with_nan, 2), input_error);
  const std::vector<double> with_inf = {1, 2, kInf, 4};
  CHECK_THROWS_AS(extract_excesses(with_inf, 2), input_error);
}

TEST_CASE("GPWM closed-form arithmetic on frozen vectors") {
  // All-ones excesses, k = 10: P = 1, Q = 0.55, so the moment ratio gives
  // gamma = 12 and sigma = -11 (flagged, not rejected).
  const ExcessData ones = as_excess_data(std::vector<double>(10, 1.0));
  const FitResult fit1 = fit_gpwm(ones);
  CHECK(fit1.gamma == doctest::Approx(12.0).epsilon(1e-12));
  CHECK(fit1.sigma == doctest::Approx(-11.0).epsilon(1e-12));
  CHECK_FALSE(fit1.in_theta);
  CHECK_FALSE(fit1.in_validity_region);
  CHECK(std::isnan(fit1.loglik));
  CHECK(fit1.method == FitMethod::GPWM);
  CHECK_THROWS_AS(fit1.params(), domain_error);

  // Excesses 0.1..1.0: P = 0.55, Q = 0.22 -> gamma = -3, sigma = 2.2.
  std::vector<double> ramp(10);
  for (int i = 0; i < 10; ++i) ramp[i] = 0.1 * (i + 1);
  const FitResult fit2 = fit_gpwm(as_excess_data(ramp));
  CHECK(fit2.gamma == doctest::Approx(-3.0).epsilon(1e-12));
  CHECK(fit2.sigma == doctest::Approx(2.2).epsilon(1e-12));
  CHECK_FALSE(fit2.in_theta);  // gamma <= -1/2
}

TEST_CASE("GPWM is exactly scale equivariant") {
  const std::vector<double> xs = draw_gp(1.4, 0.25, 400, 2024);
  const FitResult base = fit_gpwm(as_excess_data(xs));
  std::vector<double> scaled(xs);
  for (double& x : scaled) x *= 3.0;
  const FitResult big = fit_gpwm(as_excess_data(scaled));
  CHECK(big.gamma == doctest::Approx(base.gamma).epsilon(1e-12));
  CHECK(big.sigma == doctest::Approx(3.0 * base.sigma).epsilon(1e-12));
}

TEST_CASE("GPWM recovers known parameters") {
  for (double gamma : {-0.35, -0.1, 0.0, 0.2}) {
    const std::vector<double> xs = draw_gp(2.0, gamma, 5000, 31u + gamma * 10);
    const FitResult fit = fit_gpwm(as_excess_data(xs));
    CHECK(fit.in_theta);
    CHECK(fit.in_validity_region);
    CHECK(std::abs(fit.gamma - gamma) < 0.05);
    CHECK(fit.sigma == doctest::Approx(2.0).epsilon(0.06));
  }
}

TEST_CASE("GPWM rejects degenerate data") {
  CHECK_THROWS_AS(fit_gpwm(as_excess_data(std::vector<double>(10, 0.0))),
                  input_error);
}

TEST_CASE("ML fit is a maximum: beats the truth and the moment estimate") {
  const double sigma_true = 1.5, gamma_true = -0.25;
  const std::vector<double> xs = draw_gp(sigma_true, gamma_true, 1000, 555);
  const ExcessData data = as_excess_data(xs);
  const FitResult fit = fit_mle(data);
  CHECK(fit.converged);
  CHECK(fit.in_theta);
  CHECK(fit.method == FitMethod::ML);
  CHECK(std::abs(fit.gamma - gamma_true) < 0.08);
  CHECK(fit.sigma == doctest::Approx(sigma_true).epsilon(0.1));
  CHECK(fit.loglik ==
        doctest::Approx(gp_loglik(fit.params(), data.excesses))
            .epsilon(1e-12));
  CHECK(fit.loglik >=
        gp_loglik(GpParams(sigma_true, gamma_true), data.excesses));
  const FitResult wm = fit_gpwm(data);
  if (wm.in_theta) {
    CHECK(fit.loglik >= gp_loglik(wm.params(), data.excesses) - 1e-9);
  }
}

TEST_CASE("ML fit is stationary under a numeric gradient check") {
  for (double gamma : {-0.3, 0.0, 0.4}) {
    const std::vector<double> xs = draw_gp(2.5, gamma, 800, 808);
    const ExcessData data = as_excess_data(xs);
    const FitResult fit = fit_mle(data);
    REQUIRE(fit.converged);
    const auto [ds, dg] = numeric_nll_gradient(data, fit.sigma, fit.gamma);
    CHECK(std::abs(ds) < 5e-4);
    CHECK(std::abs(dg) < 5e-4);
  }
}

TEST_CASE("ML fit is approximately scale equivariant") {
  const std::vector<double> xs = draw_gp(1.2, 0.15, 600, 4242);
  const FitResult base = fit_mle(as_excess_data(xs));
  std::vector<double> scaled(xs);
  for (double& x : scaled) x *= 7.0;
  const FitResult big = fit_mle(as_excess_data(scaled));
  CHECK(std::abs(big.gamma - base.gamma) < 1e-6);
  CHECK(big.sigma == doctest::Approx(7.0 * base.sigma).epsilon(1e-6));
}

TEST_CASE("ML fit pins at the shape floor for super-steep data") {
  // Data generated well outside the estimable range (gamma = -0.7): the
  // unconstrained optimum falls below the parameter-space floor, so the fit
  // must report the constrained optimum at the floor as converged.
  const std::vector<double> xs = draw_gp(1.0, -0.7, 500, 321);
  const FitResult fit = fit_mle(as_excess_data(xs));
  CHECK(fit.converged);
  CHECK(fit.in_theta);
  CHECK(std::abs(fit.gamma - (-0.5)) < 1e-4);
  CHECK(fit.gamma > -0.5);
}

TEST_CASE("ML handles exponential-tailed data near the shape switch") {
  const std::vector<double> xs = draw_gp(3.0, 0.0, 4000, 6060);
  const FitResult fit = fit_mle(as_excess_data(xs));
  CHECK(fit.converged);
  CHECK(std::abs(fit.gamma) < 0.04);
  CHECK(fit.sigma == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("fit preconditions") {
  CHECK_THROWS_AS(fit_mle(as_excess_data({1.0})), domain_error);
  CHECK_THROWS_AS(fit_gpwm(as_excess_data({1.0})), domain_error);
  CHECK_THROWS_AS(fit_mle(as_excess_data(std::vector<double>(5, 0.0))),
                  input_error);
}

TEST_CASE("endpoint estimate") {
  CHECK(endpoint_estimate(GpParams(1.65, -0.34), 34.0) ==
        doctest::Approx(38.852941176470587).epsilon(1e-15));
  CHECK(endpoint_estimate(GpParams(1.59, -0.29), 34.0) ==
        doctest::Approx(39.482758620689655).epsilon(1e-15));
  CHECK(endpoint_estimate(GpParams(2.0, 0.0), 10.0) == kInf);
  CHECK(endpoint_estimate(GpParams(2.0, 0.7), 10.0) == kInf);
}

TEST_CASE("estimation error contracts at the square-root rate across shapes") {
  // Median absolute shape error over replicated fits of the top-k excesses
  // of exact GP samples (n = 2k) must decay like k^(-1/2): log-log slope
  // within -0.5 +/- 0.15 for both estimators.
  const std::vector<std::size_t> ks = {500, 2000, 8000};
  std::vector<double> log_k;
  for (std::size_t k : ks) log_k.push_back(std::log(static_cast<double>(k)));
  const std::size_t reps = 200;
  for (double gamma : {-0.4, -0.2, 0.0, 0.3}) {
    std::vector<double> med_ml, med_wm;
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
      const std::size_t k = ks[ki];
      const std::size_t n = 2 * k;
      std::vector<double> err_ml, err_wm;
      err_ml.reserve(reps);
      err_wm.reserve(reps);
      for (std::size_t rep = 0; rep < reps; ++rep) {
        const std::uint64_t seed =
            1000003u * (ki + 1) + 17u * rep +
            static_cast<std::uint64_t>((gamma + 1.0) * 1e6);
        const std::vector<double> sample = draw_gp(1.0, gamma, n, seed);
        err_ml.push_back(fit_gamma_error(sample, k, gamma, true));
        err_wm.push_back(fit_gamma_error(sample, k, gamma, false));
      }
      med_ml.push_back(std::log(median(err_ml)));
      med_wm.push_back(std::log(median(err_wm)));
    }
    const double slope_ml = slope_through(log_k, med_ml);
    const double slope_wm = slope_through(log_k, med_wm);
    INFO("gamma = ", gamma, " slope_ml = ", slope_ml,
         " slope_wm = ", slope_wm);
    CHECK(std::abs(slope_ml - (-0.5)) < 0.15);
    CHECK(std::abs(slope_wm - (-0.5)) < 0.15);
  }
}

}  // TEST_SUITE
