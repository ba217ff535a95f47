#include "potcast/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "CLI11.hpp"

#include "potcast/bayes.hpp"
#include "potcast/estimators.hpp"
#include "potcast/gpd.hpp"
#include "potcast/io.hpp"
#include "potcast/predictive.hpp"
#include "potcast/validation.hpp"

namespace potcast::cli {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Shared helpers

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw input_error("cannot write output file: " + path.string());
  }
  out << text;
}

json interval_json(double lower, double upper) {
  return json::array({lower, upper});
}

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Flat key = value config file; '#' starts a comment. Returns key -> value.
std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw input_error("cannot open config file: " + path);
  }
  std::map<std::string, std::string> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      std::ostringstream msg;
      msg << "config file " << path << " line " << lineno
          << ": expected key = value";
      throw domain_error(msg.str());
    }
    entries[trim(stripped.substr(0, eq))] = trim(stripped.substr(eq + 1));
  }
  return entries;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts;
  std::string current;
  for (char ch : value) {
    if (ch == ',') {
      parts.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  parts.push_back(trim(current));
  return parts;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw domain_error("config key '" + key + "': cannot parse number '" +
                       value + "'");
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw domain_error("config key '" + key + "': cannot parse integer '" +
                       value + "'");
  }
}

// A registry tying config keys to setters, used to apply config-file values
// for options the command line did not set (flags win).
struct ConfigBinding {
  CLI::Option* option = nullptr;
  std::function<void(const std::string&, const std::string&)> apply;
};

class ConfigApplier {
 public:
  void bind(CLI::Option* option, const std::string& key,
            std::function<void(const std::string&, const std::string&)> apply) {
    bindings_[key] = ConfigBinding{option, std::move(apply)};
  }

  void apply(const std::map<std::string, std::string>& entries) const {
    for (const auto& [key, value] : entries) {
      const auto it = bindings_.find(key);
      if (it == bindings_.end()) {
        throw domain_error("config file: unknown key '" + key + "'");
      }
      if (it->second.option != nullptr && it->second.option->count() > 0) {
        continue;  // command line wins
      }
      it->second.apply(key, value);
    }
  }

 private:
  std::map<std::string, ConfigBinding> bindings_;
};

InferenceMethod parse_method(const std::string& name) {
  if (name == "ML") return InferenceMethod::ML;
  if (name == "GPWM") return InferenceMethod::GPWM;
  if (name == "Bayes") return InferenceMethod::Bayes;
  throw domain_error("unknown method '" + name +
                     "' (expected ML, GPWM, or Bayes)");
}

DistributionOracle make_named_oracle(const std::string& name) {
  if (name == "exact-gp") return make_exact_gp(1.0, -0.3);
  if (name == "burr") return make_burr(2.0, 2.0);
  if (name == "fep") return make_finite_endpoint_power(5.0 / 3.0, 2.0, 5.0);
  if (name == "fep-fast")
    return make_finite_endpoint_power(100.0 / 23.0, 0.5, 5.0);
  if (name == "exponential") return make_exponential(1.0);
  throw domain_error(
      "unknown oracle '" + name +
      "' (expected exact-gp, burr, fep, fep-fast, or exponential)");
}

void validate_config(const RunConfig& cfg, bool needs_data) {
  if (cfg.k < 2) throw domain_error("need k >= 2");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
    throw domain_error("alpha must lie in (0, 1)");
  }
  if (cfg.methods.empty()) throw domain_error("methods must be nonempty");
  for (const std::string& m : cfg.methods) parse_method(m);
  for (double c : cfg.c_list) {
    if (!(c >= 1.0)) throw domain_error("every c must be >= 1");
  }
  if (cfg.grid_points < 2) throw domain_error("grid-points must be >= 2");
  if (cfg.chain_length < 100) throw domain_error("chain-length must be >= 100");
  if (needs_data && cfg.data_path.empty()) {
    throw domain_error("--data is required (or --theta for test mode)");
  }
}

std::size_t effective_burn_in(const RunConfig& cfg) {
  return cfg.burn_in > 0 ? cfg.burn_in : cfg.chain_length / 5;
}

// Load the sample, check row count, and extract excesses.
struct LoadedData {
  ExcessData data;
  std::size_t dropped = 0;
};

LoadedData load_data(const RunConfig& cfg) {
  const ColumnData column = read_single_column_csv(cfg.data_path);
  if (column.values.size() < cfg.k + 1) {
    std::ostringstream msg;
    msg << "data file " << cfg.data_path << " holds "
        << column.values.size() << " numeric values; need at least k+1 = "
        << cfg.k + 1;
    throw input_error(msg.str());
  }
  LoadedData loaded;
  loaded.data = extract_excesses(column.values, cfg.k);
  loaded.dropped = column.dropped;
  return loaded;
}

PriorSpec default_prior(const ExcessData& data) {
  PriorSpec prior;
  double anchor = 0.0;
  try {
    const FitResult wm = fit_gpwm(data);
    anchor = wm.sigma;
  } catch (const error&) {
    anchor = 0.0;
  }
  if (!(anchor > 0.0)) {
    double mean = 0.0;
    for (double x : data.excesses) mean += x;
    mean /= static_cast<double>(data.excesses.size());
    anchor = mean > 0.0 ? mean : 1.0;
  }
  prior.anchor = anchor;
  return prior;
}

// ---------------------------------------------------------------------------
// fit

double kNaNValue() { return std::numeric_limits<double>::quiet_NaN(); }

json fit_point_json(const FitResult& fit, double threshold) {
  json entry;
  entry["sigma"] = fit.sigma;
  entry["gamma"] = fit.gamma;
  if (fit.method == FitMethod::ML) entry["loglik"] = fit.loglik;
  entry["converged"] = fit.converged;
  entry["iterations"] = fit.iterations;
  entry["in_theta"] = fit.in_theta;
  entry["in_validity_region"] = fit.in_validity_region;
  entry["endpoint"] =
      fit.in_theta ? endpoint_estimate(fit.params(), threshold) : kNaNValue();
  return entry;
}

struct BayesRun {
  PosteriorChain chain;
  PriorSpec prior;
};

BayesRun run_bayes(const ExcessData& data, const RunConfig& cfg) {
  BayesRun run;
  run.prior = default_prior(data);
  run.chain = sample_posterior(data, run.prior, cfg.chain_length,
                               effective_burn_in(cfg), cfg.seed);
  return run;
}

json bayes_summary_json(const PosteriorChain& chain, double threshold) {
  json entry;
  double mean_sigma = 0.0;
  double mean_gamma = 0.0;
  for (const GpParams& draw : chain.draws) {
    mean_sigma += draw.sigma();
    mean_gamma += draw.gamma();
  }
  const double m = static_cast<double>(chain.draws.size());
  mean_sigma /= m;
  mean_gamma /= m;
  entry["posterior_mean_sigma"] = mean_sigma;
  entry["posterior_mean_gamma"] = mean_gamma;
  const Interval ci_sigma = credible_interval(
      chain, [](const GpParams& t) { return t.sigma(); }, 0.95);
  const Interval ci_gamma = credible_interval(
      chain, [](const GpParams& t) { return t.gamma(); }, 0.95);
  entry["ci_sigma"] = interval_json(ci_sigma.lower, ci_sigma.upper);
  entry["ci_gamma"] = interval_json(ci_gamma.lower, ci_gamma.upper);
  double mean_endpoint = 0.0;
  std::vector<double> endpoints;
  endpoints.reserve(chain.draws.size());
  for (const GpParams& draw : chain.draws) {
    const double e = endpoint_estimate(draw, threshold);
    endpoints.push_back(e);
    mean_endpoint += e;
  }
  entry["posterior_mean_endpoint"] = mean_endpoint / m;
  entry["ci_endpoint"] =
      interval_json(empirical_quantile(endpoints, 0.025),
                    empirical_quantile(endpoints, 0.975));
  entry["acceptance_rate"] = chain.acceptance_rate;
  entry["chain_length"] = chain.draws.size();
  entry["burn_in"] = chain.burn_in;
  entry["seed"] = chain.seed;
  return entry;
}

int cmd_fit(const RunConfig& cfg, bool save_chain, std::ostream& out,
            std::ostream& err) {
  validate_config(cfg, /*needs_data=*/true);
  const LoadedData loaded = load_data(cfg);
  const ExcessData& data = loaded.data;
  std::filesystem::create_directories(cfg.output_dir);

  json report;
  report["input"] = {{"path", cfg.data_path},
                     {"rows_used", data.n},
                     {"rows_dropped", loaded.dropped}};
  report["n"] = data.n;
  report["k"] = data.k;
  report["threshold"] = data.threshold;
  report["methods"] = json::object();
  report["errors"] = json::object();

  std::size_t succeeded = 0;
  for (const std::string& name : cfg.methods) {
    try {
      switch (parse_method(name)) {
        case InferenceMethod::ML: {
          report["methods"]["ML"] = fit_point_json(fit_mle(data),
                                                   data.threshold);
          break;
        }
        case InferenceMethod::GPWM: {
          report["methods"]["GPWM"] = fit_point_json(fit_gpwm(data),
                                                     data.threshold);
          break;
        }
        case InferenceMethod::Bayes: {
          const BayesRun run = run_bayes(data, cfg);
          report["methods"]["Bayes"] =
              bayes_summary_json(run.chain, data.threshold);
          if (save_chain) {
            std::ofstream chain_out(
                std::filesystem::path(cfg.output_dir) / "chain_bayes.csv",
                std::ios::binary);
            write_chain_csv(run.chain, chain_out);
          }
          break;
        }
      }
      ++succeeded;
    } catch (const error& e) {
      report["errors"][name] = e.what();
      err << "fit: method " << name << " failed: " << e.what() << "\n";
    }
  }

  const auto path = std::filesystem::path(cfg.output_dir) / "fit.json";
  write_text_file(path, to_json_text(report));
  out << "wrote " << path.string() << "\n";
  if (succeeded == 0) {
    err << "fit: all methods failed\n";
    return kExitNumerical;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// forecast

struct ForecastSource {
  std::string label;
  std::optional<GpParams> theta;             // plug-in methods
  const PosteriorChain* chain = nullptr;     // Bayes
};

// One forecast row (base row c=1 at p=k/n, then each c of c_list).
json forecast_row(const ForecastSource& source, double c, double threshold,
                  std::size_t k, std::size_t n, double alpha,
                  std::size_t grid_points,
                  const std::filesystem::path& out_dir) {
  json row;
  row["c"] = c;
  const double base_p = static_cast<double>(k) / static_cast<double>(n);

  std::vector<PredictiveComponent> comps;
  double p_point = 0.0;
  double q_point = 0.0;
  if (source.theta.has_value()) {
    const GpParams& theta = *source.theta;
    p_point = c == 1.0 ? base_p : extreme_level(c, theta.gamma(), k, n);
    const PredictiveSpec spec =
        make_plugin_spec(theta, threshold, k, n, p_point);
    comps = predictive_components(spec, PredictiveKind::Peak);
    q_point = extreme_quantile(theta, threshold, k, n, p_point);
  } else {
    const PosteriorChain& chain = *source.chain;
    if (c == 1.0) {
      const PredictiveSpec spec =
          make_chain_spec(chain, threshold, k, n, base_p);
      comps = predictive_components(spec, PredictiveKind::Peak);
      p_point = base_p;
      q_point = threshold;
      row["ci_p"] = interval_json(base_p, base_p);
      row["ci_q"] = interval_json(threshold, threshold);
    } else {
      std::size_t excluded = 0;
      comps = posterior_components_scaled(chain, threshold, c, k, n,
                                          &excluded);
      if (comps.empty() || excluded * 100 >= chain.draws.size()) {
        std::ostringstream msg;
        msg << excluded << " of " << chain.draws.size()
            << " posterior draws have gamma >= 0 (no finite endpoint); "
               "supply p directly";
        throw numerical_error(msg.str());
      }
      row["draws_excluded"] = excluded;
      // Per-draw transformed levels and quantiles.
      std::vector<double> levels;
      std::vector<double> quantiles;
      levels.reserve(comps.size());
      quantiles.reserve(comps.size());
      for (const GpParams& draw : chain.draws) {
        if (!(draw.gamma() < 0.0)) continue;
        const double p_i = extreme_level(c, draw.gamma(), k, n);
        levels.push_back(p_i);
        quantiles.push_back(extreme_quantile(draw, threshold, k, n, p_i));
      }
      for (std::size_t i = 0; i < levels.size(); ++i) {
        p_point += levels[i];
        q_point += quantiles[i];
      }
      p_point /= static_cast<double>(levels.size());
      q_point /= static_cast<double>(quantiles.size());
      row["ci_p"] = interval_json(empirical_quantile(levels, 0.025),
                                  empirical_quantile(levels, 0.975));
      row["ci_q"] = interval_json(empirical_quantile(quantiles, 0.025),
                                  empirical_quantile(quantiles, 0.975));
    }
  }

  row["p"] = p_point;
  row["q"] = q_point;
  const double lo = mixture_quantile(0.5 * alpha, comps);
  const double hi = mixture_quantile(1.0 - 0.5 * alpha, comps);
  row["interval"] = interval_json(lo, hi);

  // Density grid spanning the 0.1%..99.9% predictive quantiles.
  const double grid_lo = mixture_quantile(0.001, comps);
  const double grid_hi = mixture_quantile(0.999, comps);
  std::ostringstream csv_name;
  csv_name << "density_" << source.label << "_" << format_double(c) << ".csv";
  std::ostringstream csv;
  csv << "x,density\n";
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double frac = static_cast<double>(i) /
                        static_cast<double>(grid_points - 1);
    const double x = grid_lo + frac * (grid_hi - grid_lo);
    csv << format_double(x) << ',' << format_double(mixture_density(x, comps))
        << '\n';
  }
  write_text_file(out_dir / csv_name.str(), csv.str());
  row["density_csv"] = csv_name.str();
  return row;
}

int cmd_forecast(const RunConfig& cfg, bool save_chain, std::ostream& out,
                 std::ostream& err) {
  const bool test_mode = cfg.has_theta;
  validate_config(cfg, /*needs_data=*/!test_mode);

  ExcessData data;
  std::size_t dropped = 0;
  if (test_mode) {
    if (cfg.n_override <= cfg.k) {
      throw domain_error("test mode needs --n greater than --k");
    }
    data.n = cfg.n_override;
    data.k = cfg.k;
    data.threshold = cfg.threshold;
  } else {
    LoadedData loaded = load_data(cfg);
    data = std::move(loaded.data);
    dropped = loaded.dropped;
  }
  std::filesystem::create_directories(cfg.output_dir);
  const std::filesystem::path out_dir(cfg.output_dir);

  json report;
  report["n"] = data.n;
  report["k"] = data.k;
  report["threshold"] = data.threshold;
  report["alpha"] = cfg.alpha;
  if (!test_mode) {
    report["input"] = {{"path", cfg.data_path},
                       {"rows_used", data.n},
                       {"rows_dropped", dropped}};
  }
  report["methods"] = json::array();
  report["errors"] = json::object();

  // Assemble the theta sources.
  std::vector<ForecastSource> sources;
  std::optional<BayesRun> bayes_run;
  if (test_mode) {
    ForecastSource source;
    source.label = "plugin";
    source.theta = GpParams(cfg.theta_sigma, cfg.theta_gamma);
    sources.push_back(source);
  } else {
    for (const std::string& name : cfg.methods) {
      try {
        switch (parse_method(name)) {
          case InferenceMethod::ML: {
            const FitResult fit = fit_mle(data);
            if (!fit.in_theta) {
              throw numerical_error("estimate left the parameter space");
            }
            sources.push_back({"ML", fit.params(), nullptr});
            break;
          }
          case InferenceMethod::GPWM: {
            const FitResult fit = fit_gpwm(data);
            if (!fit.in_theta) {
              throw numerical_error("estimate left the parameter space");
            }
            sources.push_back({"GPWM", fit.params(), nullptr});
            break;
          }
          case InferenceMethod::Bayes: {
            bayes_run = run_bayes(data, cfg);
            if (save_chain) {
              std::ofstream chain_out(out_dir / "chain_bayes.csv",
                                      std::ios::binary);
              write_chain_csv(bayes_run->chain, chain_out);
            }
            sources.push_back({"Bayes", std::nullopt, &bayes_run->chain});
            break;
          }
        }
      } catch (const error& e) {
        report["errors"][name] = e.what();
        err << "forecast: method " << name << " failed: " << e.what() << "\n";
      }
    }
  }

  out << "method        c         p%        Q(p)     interval\n";
  std::vector<double> c_values;
  c_values.push_back(1.0);
  for (double c : cfg.c_list) c_values.push_back(c);

  for (const ForecastSource& source : sources) {
    json entry;
    entry["method"] = source.label;
    if (source.theta.has_value()) {
      entry["sigma"] = source.theta->sigma();
      entry["gamma"] = source.theta->gamma();
      entry["endpoint"] = endpoint_estimate(*source.theta, data.threshold);
    } else {
      entry["summary"] = bayes_summary_json(*source.chain, data.threshold);
    }
    entry["rows"] = json::array();
    for (double c : c_values) {
      try {
        const json row = forecast_row(source, c, data.threshold, data.k,
                                      data.n, cfg.alpha, cfg.grid_points,
                                      out_dir);
        char line[160];
        std::snprintf(line, sizeof(line),
                      "%-8s %6.3g %10.3f %11.3f   [%.3f, %.3f]\n",
                      source.label.c_str(), c, row["p"].get<double>() * 100.0,
                      row["q"].get<double>(),
                      row["interval"][0].get<double>(),
                      row["interval"][1].get<double>());
        out << line;
        entry["rows"].push_back(row);
      } catch (const error& e) {
        json row;
        row["c"] = c;
        row["error"] = e.what();
        entry["rows"].push_back(row);
        err << "forecast: method " << source.label << " c=" << c
            << " failed: " << e.what() << "\n";
      }
    }
    report["methods"].push_back(entry);
  }

  const auto path = out_dir / "forecast.json";
  write_text_file(path, to_json_text(report));
  out << "wrote " << path.string() << "\n";
  if (sources.empty()) {
    err << "forecast: no method produced a usable fit\n";
    return kExitNumerical;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate_contraction(const std::string& oracle_name,
                             const std::vector<double>& v_grid,
                             const std::string& output_dir,
                             std::ostream& out) {
  const DistributionOracle oracle = make_named_oracle(oracle_name);
  const std::vector<ContractionRow> rows =
      contraction_experiment(oracle, v_grid);
  std::filesystem::create_directories(output_dir);
  std::ostringstream csv;
  csv << "v,H,absA,ratio\n";
  for (const ContractionRow& row : rows) {
    csv << format_double(row.v) << ',' << format_double(row.H) << ','
        << format_double(row.absA) << ',' << format_double(row.ratio) << '\n';
  }
  const auto path = std::filesystem::path(output_dir) / "contraction.csv";
  write_text_file(path, csv.str());
  out << "wrote " << path.string() << "\n";
  return kExitOk;
}

int cmd_simulate_coverage(const std::string& oracle_name, std::size_t n,
                          std::size_t k, bool use_c, double c_or_p,
                          double alpha, const std::string& method,
                          std::size_t replicates, std::uint64_t seed,
                          std::size_t chain_length, std::size_t burn_in,
                          const std::string& output_dir, std::ostream& out) {
  const DistributionOracle oracle = make_named_oracle(oracle_name);
  const CoverageReport report = simulate_coverage(
      oracle, n, k, use_c ? LevelKind::FromC : LevelKind::Direct, c_or_p,
      alpha, parse_method(method), replicates, seed, chain_length, burn_in);
  std::filesystem::create_directories(output_dir);
  std::ostringstream csv;
  csv << "oracle,n,k,level_kind,level_value,method,nominal,replicates,"
         "failures,empirical,mc_stderr\n";
  csv << report.settings.oracle << ',' << report.settings.n << ','
      << report.settings.k << ','
      << (report.settings.level_kind == LevelKind::FromC ? "c" : "p") << ','
      << format_double(report.settings.level_value) << ',' << method << ','
      << format_double(report.nominal) << ',' << report.replicates << ','
      << report.failures << ',' << format_double(report.empirical) << ','
      << format_double(report.mc_stderr) << '\n';
  const auto path = std::filesystem::path(output_dir) / "coverage.csv";
  write_text_file(path, csv.str());
  out << "wrote " << path.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// hellinger

int cmd_hellinger(double sigma_a, double gamma_a, double sigma_b,
                  double gamma_b, std::size_t grid_size, std::ostream& out) {
  const GpParams a(sigma_a, gamma_a);
  const GpParams b(sigma_b, gamma_b);
  double hi = kInf;
  const SupportInterval sa = support_interval(a);
  const SupportInterval sb = support_interval(b);
  if (std::isfinite(sa.upper) && std::isfinite(sb.upper)) {
    hi = std::max(sa.upper, sb.upper);
  }
  const double h = hellinger(
      [&a](double x) { return gp_density(x, a); },
      [&b](double x) { return gp_density(x, b); }, 0.0, hi, grid_size);
  out << format_double(h) << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Peaks-over-threshold forecasting toolkit"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;
  bool save_chain = false;
  std::string theta_arg;

  const auto add_common = [&](CLI::App* sub, ConfigApplier* applier,
                              bool with_forecast_opts) {
    CLI::Option* o_data = sub->add_option("--data", cfg.data_path,
                                          "Single-column CSV data file");
    CLI::Option* o_k =
        sub->add_option("--k", cfg.k, "Number of upper order statistics");
    CLI::Option* o_methods =
        sub->add_option("--methods", cfg.methods,
                        "Comma-separated subset of ML,GPWM,Bayes")
            ->delimiter(',');
    CLI::Option* o_chain = sub->add_option("--chain-length", cfg.chain_length,
                                           "Posterior chain length");
    CLI::Option* o_burn = sub->add_option(
        "--burn-in", cfg.burn_in, "Burn-in iterations (default chain/5)");
    CLI::Option* o_seed = sub->add_option("--seed", cfg.seed, "Random seed");
    CLI::Option* o_out =
        sub->add_option("--out", cfg.output_dir, "Output directory");
    sub->add_flag("--save-chain", save_chain,
                  "Also write the posterior chain CSV");
    sub->set_help_flag("--help", "Show help");
    sub->add_option("--config", config_path,
                    "Flat key = value config file (flags win)");

    applier->bind(o_data, "data", [&](const std::string&, const std::string& v) {
      cfg.data_path = v;
    });
    applier->bind(o_k, "k", [&](const std::string& key, const std::string& v) {
      cfg.k = static_cast<std::size_t>(parse_uint(key, v));
    });
    applier->bind(o_methods, "methods",
                  [&](const std::string&, const std::string& v) {
                    cfg.methods = split_list(v);
                  });
    applier->bind(o_chain, "chain-length",
                  [&](const std::string& key, const std::string& v) {
                    cfg.chain_length =
                        static_cast<std::size_t>(parse_uint(key, v));
                  });
    applier->bind(o_burn, "burn-in",
                  [&](const std::string& key, const std::string& v) {
                    cfg.burn_in = static_cast<std::size_t>(parse_uint(key, v));
                  });
    applier->bind(o_seed, "seed",
                  [&](const std::string& key, const std::string& v) {
                    cfg.seed = parse_uint(key, v);
                  });
    applier->bind(o_out, "out", [&](const std::string&, const std::string& v) {
      cfg.output_dir = v;
    });

    if (with_forecast_opts) {
      CLI::Option* o_c =
          sub->add_option("--c", cfg.c_list,
                          "Comma-separated scaling factors (c >= 1)")
              ->delimiter(',');
      CLI::Option* o_alpha =
          sub->add_option("--alpha", cfg.alpha, "Interval tail mass");
      CLI::Option* o_grid = sub->add_option("--grid-points", cfg.grid_points,
                                            "Density grid resolution");
      CLI::Option* o_theta = sub->add_option(
          "--theta", theta_arg, "Test mode: inject SIGMA,GAMMA (skips fitting)");
      CLI::Option* o_thresh = sub->add_option(
          "--threshold", cfg.threshold, "Test mode: threshold value");
      CLI::Option* o_n =
          sub->add_option("--n", cfg.n_override, "Test mode: sample size");
      applier->bind(o_c, "c", [&](const std::string& key, const std::string& v) {
        cfg.c_list.clear();
        for (const std::string& part : split_list(v)) {
          cfg.c_list.push_back(parse_double(key, part));
        }
      });
      applier->bind(o_alpha, "alpha",
                    [&](const std::string& key, const std::string& v) {
                      cfg.alpha = parse_double(key, v);
                    });
      applier->bind(o_grid, "grid-points",
                    [&](const std::string& key, const std::string& v) {
                      cfg.grid_points =
                          static_cast<std::size_t>(parse_uint(key, v));
                    });
      applier->bind(o_theta, "theta",
                    [&](const std::string&, const std::string& v) {
                      theta_arg = v;
                    });
      applier->bind(o_thresh, "threshold",
                    [&](const std::string& key, const std::string& v) {
                      cfg.threshold = parse_double(key, v);
                    });
      applier->bind(o_n, "n", [&](const std::string& key, const std::string& v) {
        cfg.n_override = static_cast<std::size_t>(parse_uint(key, v));
      });
    }
  };

  const auto finalize_theta = [&]() {
    if (theta_arg.empty()) return;
    const std::vector<std::string> parts = split_list(theta_arg);
    if (parts.size() != 2) {
      throw domain_error("--theta expects SIGMA,GAMMA");
    }
    cfg.has_theta = true;
    cfg.theta_sigma = parse_double("theta", parts[0]);
    cfg.theta_gamma = parse_double("theta", parts[1]);
  };

  // fit ---------------------------------------------------------------------
  ConfigApplier fit_applier;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit excesses over a threshold");
  add_common(fit_cmd, &fit_applier, /*with_forecast_opts=*/false);

  // forecast ----------------------------------------------------------------
  ConfigApplier forecast_applier;
  CLI::App* forecast_cmd =
      app.add_subcommand("forecast", "Predictive densities and intervals");
  add_common(forecast_cmd, &forecast_applier, /*with_forecast_opts=*/true);

  // simulate ----------------------------------------------------------------
  CLI::App* simulate_cmd =
      app.add_subcommand("simulate", "Validation experiments");
  simulate_cmd->require_subcommand(1);

  std::string oracle_name = "exact-gp";
  std::vector<double> v_grid = {1e2, 1e3, 1e4, 1e5};
  std::string sim_out = ".";

  CLI::App* contraction_cmd = simulate_cmd->add_subcommand(
      "contraction", "Hellinger contraction across thresholds");
  contraction_cmd->add_option("--oracle", oracle_name, "Oracle name");
  contraction_cmd->add_option("--v-grid", v_grid, "Threshold indices v")
      ->delimiter(',');
  contraction_cmd->add_option("--out", sim_out, "Output directory");

  CLI::App* coverage_cmd = simulate_cmd->add_subcommand(
      "coverage", "True-coverage simulation of predictive intervals");
  std::size_t cov_n = 5000;
  std::size_t cov_k = 500;
  double cov_c = 0.0;
  double cov_p = 0.0;
  double cov_alpha = 0.05;
  std::string cov_method = "ML";
  std::size_t cov_reps = 500;
  std::uint64_t cov_seed = 1;
  std::size_t cov_chain = 2000;
  std::size_t cov_burn = 1000;
  coverage_cmd->add_option("--oracle", oracle_name, "Oracle name");
  coverage_cmd->add_option("--n", cov_n, "Sample size per replicate");
  coverage_cmd->add_option("--k", cov_k, "Upper order statistics");
  CLI::Option* o_cov_c =
      coverage_cmd->add_option("--c", cov_c, "Scaling factor (c >= 1)");
  CLI::Option* o_cov_p =
      coverage_cmd->add_option("--p", cov_p, "Direct exceedance level");
  o_cov_c->excludes(o_cov_p);
  coverage_cmd->add_option("--alpha", cov_alpha, "Interval tail mass");
  coverage_cmd->add_option("--method", cov_method, "ML, GPWM, or Bayes");
  coverage_cmd->add_option("--replicates", cov_reps, "Replicates (>= 100)");
  coverage_cmd->add_option("--seed", cov_seed, "Master seed");
  coverage_cmd->add_option("--chain-length", cov_chain,
                           "Bayes: posterior chain length");
  coverage_cmd->add_option("--burn-in", cov_burn, "Bayes: burn-in iterations");
  coverage_cmd->add_option("--out", sim_out, "Output directory");

  // hellinger ---------------------------------------------------------------
  CLI::App* hellinger_cmd = app.add_subcommand(
      "hellinger", "Hellinger distance between two GP densities");
  std::string theta_a;
  std::string theta_b;
  std::size_t grid_size = 256;
  hellinger_cmd->add_option("--theta-a", theta_a, "First SIGMA,GAMMA")
      ->required();
  hellinger_cmd->add_option("--theta-b", theta_b, "Second SIGMA,GAMMA")
      ->required();
  hellinger_cmd->add_option("--grid-size", grid_size,
                            "Initial quadrature panels (>= 64)");

  // Parse and dispatch ------------------------------------------------------
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("potcast");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (!config_path.empty()) {
      const auto entries = read_config_file(config_path);
      if (fit_cmd->parsed()) {
        fit_applier.apply(entries);
      } else if (forecast_cmd->parsed()) {
        forecast_applier.apply(entries);
      } else {
        throw domain_error("--config applies to fit and forecast only");
      }
    }
    finalize_theta();

    if (fit_cmd->parsed()) {
      return cmd_fit(cfg, save_chain, out, err);
    }
    if (forecast_cmd->parsed()) {
      return cmd_forecast(cfg, save_chain, out, err);
    }
    if (simulate_cmd->parsed()) {
      if (contraction_cmd->parsed()) {
        return cmd_simulate_contraction(oracle_name, v_grid, sim_out, out);
      }
      if (coverage_cmd->parsed()) {
        const bool use_c = o_cov_c->count() > 0;
        if (!use_c && o_cov_p->count() == 0) {
          throw domain_error("coverage needs --c or --p");
        }
        return cmd_simulate_coverage(oracle_name, cov_n, cov_k, use_c,
                                     use_c ? cov_c : cov_p, cov_alpha,
                                     cov_method, cov_reps, cov_seed, cov_chain,
                                     cov_burn, sim_out, out);
      }
    }
    if (hellinger_cmd->parsed()) {
      const std::vector<std::string> pa = split_list(theta_a);
      const std::vector<std::string> pb = split_list(theta_b);
      if (pa.size() != 2 || pb.size() != 2) {
        throw domain_error("--theta-a/--theta-b expect SIGMA,GAMMA");
      }
      return cmd_hellinger(parse_double("theta-a", pa[0]),
                           parse_double("theta-a", pa[1]),
                           parse_double("theta-b", pb[0]),
                           parse_double("theta-b", pb[1]), grid_size, out);
    }
    err << "usage error: no subcommand\n";
    return kExitUsage;
  } catch (const domain_error& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const input_error& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const numerical_error& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace potcast::cli
