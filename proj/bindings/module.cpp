#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <vector>

#include "potcast/bayes.hpp"
#include "potcast/errors.hpp"
#include "potcast/estimators.hpp"
#include "potcast/gpd.hpp"
#include "potcast/predictive.hpp"
#include "potcast/validation.hpp"

namespace py = pybind11;
using namespace potcast;

namespace {

FitResult fit_values(const std::vector<double>& values, std::size_t k,
                     const std::string& method) {
  const ExcessData data = extract_excesses(values, k);
  if (method == "ML") return fit_mle(data);
  if (method == "GPWM") return fit_gpwm(data);
  throw domain_error("fit: method must be ML or GPWM");
}

py::dict fit_result_dict(const FitResult& fit) {
  py::dict d;
  d["sigma"] = fit.sigma;
  d["gamma"] = fit.gamma;
  d["loglik"] = fit.loglik;
  d["converged"] = fit.converged;
  d["iterations"] = fit.iterations;
  d["in_theta"] = fit.in_theta;
  d["in_validity_region"] = fit.in_validity_region;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Peaks-over-threshold forecasting core";

  py::register_exception<domain_error>(m, "DomainError");
  py::register_exception<input_error>(m, "InputError");
  py::register_exception<numerical_error>(m, "NumericalError");

  m.def(
      "gp_density",
      [](double x, double sigma, double gamma) {
        return gp_density(x, GpParams(sigma, gamma));
      },
      py::arg("x"), py::arg("sigma"), py::arg("gamma"));
  m.def(
      "gp_cdf",
      [](double x, double sigma, double gamma) {
        return gp_cdf(x, GpParams(sigma, gamma));
      },
      py::arg("x"), py::arg("sigma"), py::arg("gamma"));
  m.def(
      "gp_quantile",
      [](double q, double sigma, double gamma) {
        return gp_quantile(q, GpParams(sigma, gamma));
      },
      py::arg("q"), py::arg("sigma"), py::arg("gamma"));
  m.def(
      "gp_sample",
      [](double sigma, double gamma, std::size_t m_draws, std::uint64_t seed) {
        return gp_sample(GpParams(sigma, gamma), m_draws, seed);
      },
      py::arg("sigma"), py::arg("gamma"), py::arg("m"), py::arg("seed"));
  m.def(
      "gp_loglik",
      [](double sigma, double gamma, const std::vector<double>& xs) {
        return gp_loglik(GpParams(sigma, gamma), xs);
      },
      py::arg("sigma"), py::arg("gamma"), py::arg("excesses"));

  m.def(
      "extract_excesses",
      [](const std::vector<double>& values, std::size_t k) {
        const ExcessData data = extract_excesses(values, k);
        return py::make_tuple(data.threshold, data.excesses);
      },
      py::arg("values"), py::arg("k"),
      "Returns (threshold, ascending excesses of the top k values).");

  m.def(
      "fit",
      [](const std::vector<double>& values, std::size_t k,
         const std::string& method) {
        return fit_result_dict(fit_values(values, k, method));
      },
      py::arg("values"), py::arg("k"), py::arg("method") = "ML");

  m.def(
      "sample_posterior",
      [](const std::vector<double>& values, std::size_t k,
         std::size_t chain_length, std::size_t burn_in, std::uint64_t seed) {
        const ExcessData data = extract_excesses(values, k);
        const PosteriorChain chain =
            sample_posterior(data, PriorSpec{}, chain_length, burn_in, seed);
        std::vector<double> sigmas, gammas;
        sigmas.reserve(chain.draws.size());
        gammas.reserve(chain.draws.size());
        for (const GpParams& t : chain.draws) {
          sigmas.push_back(t.sigma());
          gammas.push_back(t.gamma());
        }
        py::dict d;
        d["sigma"] = sigmas;
        d["gamma"] = gammas;
        d["log_post"] = chain.log_posts;
        d["acceptance_rate"] = chain.acceptance_rate;
        return d;
      },
      py::arg("values"), py::arg("k"), py::arg("chain_length") = 20000,
      py::arg("burn_in") = 4000, py::arg("seed") = 1);

  m.def("extreme_level", &extreme_level, py::arg("c"), py::arg("gamma"),
        py::arg("k"), py::arg("n"));
  m.def(
      "extreme_quantile",
      [](double sigma, double gamma, double threshold, std::size_t k,
         std::size_t n, double p) {
        return extreme_quantile(GpParams(sigma, gamma), threshold, k, n, p);
      },
      py::arg("sigma"), py::arg("gamma"), py::arg("threshold"), py::arg("k"),
      py::arg("n"), py::arg("p"));
  m.def(
      "predictive_interval",
      [](double sigma, double gamma, double threshold, std::size_t k,
         std::size_t n, double p, double alpha) {
        const PredictiveSpec spec =
            make_plugin_spec(GpParams(sigma, gamma), threshold, k, n, p);
        const PredictiveInterval iv =
            predictive_interval(spec, alpha, PredictiveKind::Peak);
        return py::make_tuple(iv.lower, iv.upper);
      },
      py::arg("sigma"), py::arg("gamma"), py::arg("threshold"), py::arg("k"),
      py::arg("n"), py::arg("p"), py::arg("alpha") = 0.05);
  m.def(
      "peak_density",
      [](double x, double sigma, double gamma, double threshold, std::size_t k,
         std::size_t n, double p) {
        const PredictiveSpec spec =
            make_plugin_spec(GpParams(sigma, gamma), threshold, k, n, p);
        return peak_predictive_density(x, spec);
      },
      py::arg("x"), py::arg("sigma"), py::arg("gamma"), py::arg("threshold"),
      py::arg("k"), py::arg("n"), py::arg("p"));

  m.def(
      "hellinger_gp",
      [](double sigma_a, double gamma_a, double sigma_b, double gamma_b) {
        const GpParams a(sigma_a, gamma_a);
        const GpParams b(sigma_b, gamma_b);
        double hi = std::numeric_limits<double>::infinity();
        const SupportInterval sa = support_interval(a);
        const SupportInterval sb = support_interval(b);
        if (std::isfinite(sa.upper) && std::isfinite(sb.upper)) {
          hi = std::max(sa.upper, sb.upper);
        }
        return hellinger([&](double x) { return gp_density(x, a); },
                         [&](double x) { return gp_density(x, b); }, 0.0, hi,
                         256);
      },
      py::arg("sigma_a"), py::arg("gamma_a"), py::arg("sigma_b"),
      py::arg("gamma_b"));
}
