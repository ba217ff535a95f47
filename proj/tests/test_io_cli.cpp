// Serialization, CSV ingestion, and end-to-end command-line behavior.
//
// The JSON artifacts are checked against the schemas shipped in schemas/
// using a small validator that understands the subset of JSON Schema those
// files use ($ref into $defs, type, properties, required, items,
// additionalProperties).

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "potcast/cli.hpp"
#include "potcast/errors.hpp"
#include "potcast/gpd.hpp"
#include "potcast/io.hpp"

namespace {

using potcast::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

std::filesystem::path make_temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("potcast_cli_" + tag + "_" + std::to_string(::getpid()) +
                    "_" + std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (char ch : text) {
    if (ch == '\n') ++n;
  }
  return n;
}

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  CliResult result;
  result.code = potcast::cli::run(args, out, err);
  result.out = out.str();
  result.err = err.str();
  return result;
}

json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return json::parse(in);
}

// Reads a double out of a JSON value that may carry non-finite numbers as
// quoted strings ("nan", "inf", "-inf").
double as_double(const json& v) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "nan") return kNaN;
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    return std::stod(s);
  }
  return v.get<double>();
}

// --- Minimal JSON Schema subset validator ---------------------------------

const json& resolve_ref(const json& root, const std::string& ref) {
  REQUIRE(ref.rfind("#/", 0) == 0);
  const json* node = &root;
  std::size_t pos = 2;
  while (pos < ref.size()) {
    const std::size_t next = ref.find('/', pos);
    const std::string key =
        ref.substr(pos, next == std::string::npos ? std::string::npos
                                                  : next - pos);
    REQUIRE(node->contains(key));
    node = &node->at(key);
    pos = next == std::string::npos ? ref.size() : next + 1;
  }
  return *node;
}

bool type_matches(const std::string& t, const json& v) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "boolean") return v.is_boolean();
  if (t == "integer") return v.is_number_integer() || v.is_number_unsigned();
  if (t == "number") return v.is_number();
  if (t == "null") return v.is_null();
  return false;
}

void validate_node(const json& root, const json& schema, const json& value,
                   const std::string& path, std::vector<std::string>* errs) {
  if (schema.contains("$ref")) {
    validate_node(root, resolve_ref(root, schema["$ref"].get<std::string>()),
                  value, path, errs);
    return;
  }
  if (schema.contains("type")) {
    const json& t = schema["type"];
    bool ok = false;
    if (t.is_string()) {
      ok = type_matches(t.get<std::string>(), value);
    } else {
      for (const auto& alt : t) {
        if (type_matches(alt.get<std::string>(), value)) ok = true;
      }
    }
    if (!ok) {
      errs->push_back(path + ": type mismatch (got " +
                      std::string(value.type_name()) + ")");
      return;
    }
  }
  if (value.is_object()) {
    if (schema.contains("required")) {
      for (const auto& name : schema["required"]) {
        if (!value.contains(name.get<std::string>())) {
          errs->push_back(path + ": missing required key '" +
                          name.get<std::string>() + "'");
        }
      }
    }
    const json props =
        schema.contains("properties") ? schema["properties"] : json::object();
    for (auto it = value.begin(); it != value.end(); ++it) {
      const std::string child = path + "." + it.key();
      if (props.contains(it.key())) {
        validate_node(root, props[it.key()], it.value(), child, errs);
      } else if (schema.contains("additionalProperties")) {
        validate_node(root, schema["additionalProperties"], it.value(), child,
                      errs);
      }
    }
  }
  if (value.is_array() && schema.contains("items")) {
    std::size_t i = 0;
    for (const auto& item : value) {
      validate_node(root, schema["items"], item,
                    path + "[" + std::to_string(i) + "]", errs);
      ++i;
    }
  }
}

std::vector<std::string> schema_errors(const std::string& schema_file,
                                       const json& value) {
  const auto path =
      std::filesystem::path(POTCAST_SOURCE_DIR) / "schemas" / schema_file;
  const json schema = parse_json_file(path);
  std::vector<std::string> errs;
  validate_node(schema, schema, value, "$", &errs);
  return errs;
}

std::string join_errors(const std::vector<std::string>& errs) {
  std::string out;
  for (const auto& e : errs) out += e + "; ";
  return out;
}

std::string sample_csv(double sigma, double gamma, std::size_t n,
                       std::uint64_t seed) {
  const std::vector<double> values =
      potcast::gp_sample(potcast::GpParams(sigma, gamma), n, seed);
  std::string text;
  for (double v : values) text += potcast::format_double(v) + "\n";
  return text;
}

}  // namespace

TEST_SUITE("io_cli") {

TEST_CASE("format_double emits round-trippable decimal text") {
  CHECK(potcast::format_double(2.0) == "2");
  CHECK(potcast::format_double(0.1) == "0.10000000000000001");
  CHECK(potcast::format_double(kNaN) == "nan");
  CHECK(potcast::format_double(kInf) == "inf");
  CHECK(potcast::format_double(-kInf) == "-inf");

  const double cases[] = {0.1,     1.0 / 3.0, 1e300,      5e-324,
                          -3.75,   6.02e23,   34.041623,  -0.49999999,
                          1.0,     0.0,       2.2250738585072014e-308};
  for (double v : cases) {
    const std::string text = potcast::format_double(v);
    char* end = nullptr;
    const double back = std::strtod(text.c_str(), &end);
    CHECK(*end == '\0');
    CHECK(back == v);  // bit-exact round trip
  }
}

TEST_CASE("to_json_text layout is stable") {
  json j;
  j["a"] = 1;
  j["b"] = json::array({1.5, "x"});
  j["c"]["d"] = true;
  j["e"] = kNaN;
  j["f"] = json::object();
  j["g"] = "line\nq";
  const std::string expected = R"({
  "a": 1,
  "b": [
    1.5,
    "x"
  ],
  "c": {
    "d": true
  },
  "e": "nan",
  "f": {},
  "g": "line\nq"
})" "\n";
  CHECK(potcast::to_json_text(j) == expected);
}

TEST_CASE("single-column reader keeps numbers and counts dropped rows") {
  const auto dir = make_temp_dir("csv");
  const auto path = dir / "data.csv";
  write_file(path,
             "value\n"
             "1.5\n"
             "\n"
             "2.5,\n"
             "  3.5  \n"
             "not-a-number\n"
             "inf\n"
             "7\n");
  const potcast::ColumnData data =
      potcast::read_single_column_csv(path.string());
  REQUIRE(data.values.size() == 4);
  CHECK(data.values[0] == 1.5);
  CHECK(data.values[1] == 2.5);
  CHECK(data.values[2] == 3.5);
  CHECK(data.values[3] == 7.0);
  CHECK(data.dropped == 4);  // header, blank, junk, non-finite

  CHECK_THROWS_AS(potcast::read_single_column_csv((dir / "nope.csv").string()),
                  potcast::input_error);
}

TEST_CASE("run configuration defaults") {
  const potcast::cli::RunConfig cfg;
  CHECK(cfg.k == 0);
  REQUIRE(cfg.c_list.size() == 3);
  CHECK(cfg.c_list[0] == 2.0);
  CHECK(cfg.c_list[1] == 3.0);
  CHECK(cfg.c_list[2] == 4.0);
  CHECK(cfg.alpha == 0.05);
  REQUIRE(cfg.methods.size() == 3);
  CHECK(cfg.methods[0] == "ML");
  CHECK(cfg.methods[1] == "GPWM");
  CHECK(cfg.methods[2] == "Bayes");
  CHECK(cfg.chain_length == 20000);
  CHECK(cfg.burn_in == 0);  // resolved to chain_length / 5 at run time
  CHECK(cfg.seed == 1);
  CHECK(cfg.grid_points == 512);
  CHECK(cfg.output_dir == ".");
}

TEST_CASE("usage problems exit with code 2") {
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"frobnicate"}).code == 2);
  CHECK(run_cli({"fit", "--bogus"}).code == 2);
  CHECK(run_cli({"hellinger", "--theta-a", "1", "--theta-b", "1,0"}).code == 2);
  CHECK(run_cli({"simulate"}).code == 2);
  // Unknown oracle name.
  CHECK(run_cli({"simulate", "contraction", "--oracle", "nonesuch"}).code == 2);
  // Coverage needs a level.
  CHECK(run_cli({"simulate", "coverage", "--oracle", "exact-gp"}).code == 2);
  // Too few replicates.
  CHECK(run_cli({"simulate", "coverage", "--oracle", "exact-gp", "--n", "500",
                 "--k", "50", "--p", "0.05", "--replicates", "50"})
            .code == 2);
  // c below one.
  CHECK(run_cli({"simulate", "coverage", "--oracle", "fep", "--n", "500",
                 "--k", "50", "--c", "0.5", "--replicates", "100"})
            .code == 2);

  const CliResult help = run_cli({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("fit") != std::string::npos);
  CHECK(help.out.find("forecast") != std::string::npos);
}

TEST_CASE("input problems exit with code 3") {
  CHECK(run_cli({"fit", "--data", "/nonexistent/x.csv", "--k", "10"}).code ==
        3);

  const auto dir = make_temp_dir("short");
  write_file(dir / "tiny.csv", "1\n2\n3\n");
  CHECK(run_cli({"fit", "--data", (dir / "tiny.csv").string(), "--k", "10",
                 "--out", dir.string()})
            .code == 3);
}

TEST_CASE("hellinger subcommand is deterministic") {
  const std::vector<std::string> args = {"hellinger", "--theta-a", "1,0",
                                         "--theta-b", "0.25,0"};
  const CliResult first = run_cli(args);
  const CliResult second = run_cli(args);
  REQUIRE(first.code == 0);
  CHECK(first.out == second.out);
  const double h = std::strtod(first.out.c_str(), nullptr);
  // Closed form for two exponentials: H^2 = 1 - 2*sqrt(ab)/(a+b) with scales
  // a=1, b=0.25, hence H = sqrt(1 - 0.8) = sqrt(0.2).
  CHECK(std::abs(h - std::sqrt(0.2)) < 1e-9);
}

TEST_CASE("forecast test mode writes schema-valid artifacts") {
  const auto dir = make_temp_dir("forecast");
  const CliResult res =
      run_cli({"forecast", "--theta", "1.65,-0.34", "--k", "169", "--n",
               "3140", "--threshold", "34", "--out", dir.string()});
  REQUIRE(res.code == 0);
  CHECK(res.out.find("method") != std::string::npos);
  CHECK(res.out.find("plugin") != std::string::npos);

  const json report = parse_json_file(dir / "forecast.json");
  const auto errs = schema_errors("forecast.schema.json", report);
  CHECK_MESSAGE(errs.empty(), join_errors(errs));

  CHECK(report["n"].get<std::size_t>() == 3140);
  CHECK(report["k"].get<std::size_t>() == 169);
  CHECK(report["threshold"].get<double>() == 34.0);
  REQUIRE(report["methods"].size() == 1);
  const json& entry = report["methods"][0];
  CHECK(entry["method"].get<std::string>() == "plugin");
  CHECK(entry["sigma"].get<double>() == 1.65);
  CHECK(entry["gamma"].get<double>() == -0.34);
  CHECK(std::abs(as_double(entry["endpoint"]) - (34.0 + 1.65 / 0.34)) < 1e-9);

  REQUIRE(entry["rows"].size() == 4);  // c = 1 plus the default 2,3,4
  const json& base = entry["rows"][0];
  CHECK(base["c"].get<double>() == 1.0);
  CHECK(std::abs(base["p"].get<double>() - 169.0 / 3140.0) < 1e-15);
  CHECK(base["q"].get<double>() == 34.0);

  const json& row2 = entry["rows"][1];
  CHECK(row2["c"].get<double>() == 2.0);
  CHECK(std::abs(row2["p"].get<double>() - 0.0070076873328005062) < 1e-12);
  CHECK(std::abs(row2["q"].get<double>() - 36.426470588235297) < 1e-9);
  const double lo = as_double(row2["interval"][0]);
  const double hi = as_double(row2["interval"][1]);
  CHECK(lo >= row2["q"].get<double>() - 1e-9);
  CHECK(hi > lo);

  for (const char* name :
       {"density_plugin_1.csv", "density_plugin_2.csv", "density_plugin_3.csv",
        "density_plugin_4.csv"}) {
    const std::string text = read_file(dir / name);
    CHECK(count_lines(text) == 513);  // header + default 512 grid points
    CHECK(text.rfind("x,density\n", 0) == 0);
  }

  // Test mode needs n > k.
  CHECK(run_cli({"forecast", "--theta", "1,0.1", "--k", "169", "--n", "100",
                 "--threshold", "34", "--out", dir.string()})
            .code == 2);
}

TEST_CASE("fit writes schema-valid output and flags beat config values") {
  const auto dir = make_temp_dir("fit");
  write_file(dir / "data.csv", sample_csv(1.0, 0.2, 400, 7));
  write_file(dir / "run.cfg",
             "# run settings\n"
             "k = 40\n"
             "seed = 9\n"
             "chain-length = 1000\n");

  const CliResult res = run_cli(
      {"fit", "--data", (dir / "data.csv").string(), "--k", "60", "--config",
       (dir / "run.cfg").string(), "--methods", "ML,GPWM,Bayes", "--burn-in",
       "200", "--save-chain", "--out", dir.string()});
  REQUIRE(res.code == 0);

  const json report = parse_json_file(dir / "fit.json");
  const auto errs = schema_errors("fit.schema.json", report);
  CHECK_MESSAGE(errs.empty(), join_errors(errs));

  CHECK(report["k"].get<std::size_t>() == 60);  // flag wins over config
  CHECK(report["n"].get<std::size_t>() == 400);
  CHECK(report["input"]["rows_dropped"].get<std::size_t>() == 0);
  REQUIRE(report["methods"].contains("ML"));
  REQUIRE(report["methods"].contains("GPWM"));
  REQUIRE(report["methods"].contains("Bayes"));
  CHECK(report["errors"].empty());

  const json& ml = report["methods"]["ML"];
  CHECK(ml["converged"].get<bool>());
  CHECK(ml["in_theta"].get<bool>());
  CHECK(ml["sigma"].get<double>() > 0.0);
  CHECK(std::isfinite(as_double(ml["loglik"])));

  const json& bayes = report["methods"]["Bayes"];
  CHECK(bayes["seed"].get<std::uint64_t>() == 9);  // config value applied
  CHECK(bayes["chain_length"].get<std::size_t>() == 1000);
  CHECK(bayes["burn_in"].get<std::size_t>() == 200);
  CHECK(as_double(bayes["ci_gamma"][0]) <= as_double(bayes["ci_gamma"][1]));

  const std::string chain = read_file(dir / "chain_bayes.csv");
  CHECK(chain.rfind("sigma,gamma,log_post\n", 0) == 0);
  CHECK(count_lines(chain) == 1001);  // header + one row per retained draw

  // Unknown config keys are rejected.
  write_file(dir / "bad.cfg", "bogus = 1\n");
  CHECK(run_cli({"fit", "--data", (dir / "data.csv").string(), "--k", "60",
                 "--config", (dir / "bad.cfg").string(), "--out",
                 dir.string()})
            .code == 2);
}

TEST_CASE("fit exits with code 4 when every method fails") {
  const auto dir = make_temp_dir("allfail");
  std::string constant;
  for (int i = 0; i < 200; ++i) constant += "1.0\n";
  write_file(dir / "flat.csv", constant);

  const CliResult res =
      run_cli({"fit", "--data", (dir / "flat.csv").string(), "--k", "50",
               "--methods", "ML,GPWM", "--out", dir.string()});
  CHECK(res.code == 4);

  const json report = parse_json_file(dir / "fit.json");
  CHECK(report["methods"].empty());
  REQUIRE(report["errors"].size() == 2);
  CHECK(report["errors"]["ML"].is_string());
  CHECK(report["errors"]["GPWM"].is_string());
}

TEST_CASE("simulate subcommands write the expected CSV artifacts") {
  const auto dir = make_temp_dir("simulate");

  const CliResult contraction =
      run_cli({"simulate", "contraction", "--oracle", "burr", "--v-grid",
               "50,500", "--out", dir.string()});
  REQUIRE(contraction.code == 0);
  const std::string ctext = read_file(dir / "contraction.csv");
  CHECK(ctext.rfind("v,H,absA,ratio\n", 0) == 0);
  REQUIRE(count_lines(ctext) == 3);
  {
    std::istringstream rows(ctext);
    std::string line;
    std::getline(rows, line);  // header
    double v1 = 0, h1 = 0, a1 = 0, r1 = 0, v2 = 0, h2 = 0, a2 = 0, r2 = 0;
    std::getline(rows, line);
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &v1, &h1, &a1, &r1) ==
            4);
    std::getline(rows, line);
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &v2, &h2, &a2, &r2) ==
            4);
    CHECK(v1 == 50.0);
    CHECK(v2 == 500.0);
    CHECK(h2 < h1);  // distance shrinks as the threshold grows
    CHECK(a2 < a1);
    CHECK(r1 > 0.0);
    CHECK(r2 > 0.0);
  }

  const CliResult coverage =
      run_cli({"simulate", "coverage", "--oracle", "exact-gp", "--n", "500",
               "--k", "50", "--p", "0.05", "--method", "ML", "--replicates",
               "100", "--seed", "3", "--out", dir.string()});
  REQUIRE(coverage.code == 0);
  const std::string text = read_file(dir / "coverage.csv");
  CHECK(text.rfind(
            "oracle,n,k,level_kind,level_value,method,nominal,replicates,"
            "failures,empirical,mc_stderr\n",
            0) == 0);
  REQUIRE(count_lines(text) == 2);
  const std::string row = text.substr(text.find('\n') + 1);
  CHECK(row.rfind("exact-gp", 0) == 0);
  CHECK(row.find(",500,50,p,") != std::string::npos);
  const std::size_t tail = row.rfind(",ML,");
  REQUIRE(tail != std::string::npos);
  double nominal = 0, empirical = 0, stderr_v = 0;
  long reps = 0, failures = 0;
  REQUIRE(std::sscanf(row.c_str() + tail, ",ML,%lf,%ld,%ld,%lf,%lf", &nominal,
                      &reps, &failures, &empirical, &stderr_v) == 5);
  CHECK(nominal == 0.95);
  CHECK(reps + failures == 100);
  CHECK(empirical > 0.8);
  CHECK(empirical < 1.0);
  CHECK(stderr_v > 0.0);
}

}  // TEST_SUITE
