#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "so3net/data_io.hpp"

namespace so3net::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumeric = 4;
inline constexpr int kExitShape = 5;

/// Line-based key=value run configuration. Unknown keys are rejected; '#'
/// starts a comment line. Paths are validated before any work starts.
struct RunConfig {
  int band_limit = 8;
  int depth = 3;
  std::vector<int> channels = {8, 16, 32, 64};
  std::string task = "wind2wind";
  int epochs = 30;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::string augment = "none";  // none | rotate
  int samples = 200;
  int val_samples = 32;
  double noise = 0.0;
  std::string dataset;     // optional directory with train/ and val/ field pairs
  std::string output_dir;  // required

  static RunConfig parse_file(const std::string& path);
  void validate() const;
};

int cmd_selftest(int band_limit, std::uint64_t seed, bool corrupt_delta, std::ostream& out);
int cmd_train(const std::string& config_path, std::ostream& out);
int cmd_predict(const std::string& model_path, const std::string& input_path,
                const std::string& output_path, std::ostream& out);
int cmd_equivariance(const std::string& model_path, int trials, std::uint64_t seed,
                     std::ostream& out);
int cmd_rotate(const std::string& input_path, double alpha, double beta, double gamma,
               const std::string& output_path, std::ostream& out);

/// Argument parsing, dispatch and exception-to-exit-code mapping.
int run_main(int argc, char** argv);

}  // namespace so3net::cli
