#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace potcast::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInput = 3;
inline constexpr int kExitNumerical = 4;

// Run configuration assembled from the config file (if any) and flags; flags
// win over file keys.
struct RunConfig {
  std::string data_path;
  std::size_t k = 0;
  std::vector<double> c_list = {2.0, 3.0, 4.0};
  double alpha = 0.05;
  std::vector<std::string> methods = {"ML", "GPWM", "Bayes"};
  std::size_t chain_length = 20000;
  std::size_t burn_in = 0;  // 0 means the default chain_length/5
  std::uint64_t seed = 1;
  std::size_t grid_points = 512;
  std::string output_dir = ".";
  // Test-mode bypass: inject theta directly instead of fitting.
  bool has_theta = false;
  double theta_sigma = 0.0;
  double theta_gamma = 0.0;
  double threshold = 0.0;
  std::size_t n_override = 0;
};

// Entry point used by the binary: full argv dispatch. Streams are injected
// so tests can capture output.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace potcast::cli
