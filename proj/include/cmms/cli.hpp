#pragma once

#include <string>
#include <vector>

namespace cmms {

/** Parsed command-line request. Field groups are shared across subcommands;
 * each command reads the ones it documents and ignores the rest.
 */
struct RunConfig {
  std::string subcommand;

  // inputs
  std::string space_path;  // space JSON; empty when a preset is used
  std::string w_path;      // weight field file (overrides preset weight)
  std::string v_path;      // measure-weight field file
  std::string preset;      // flat | stereographic-sphere | fractal-default

  std::vector<int> resolutions;  // preset grid sizes; commands document which entry they use
  unsigned seed = 1;
  std::string out_dir = ".";

  // tolerances
  double rel_tol = 5e-2;       // relative error gate at the finest grid
  double singular_tol = 1e-6;  // near-singular N == dim_loc acceptance threshold
  double tol = 0.0;            // explicit --tol; 0 means per-command default

  // verify
  std::string identity;

  // curvature
  double w_const = 0.0;
  bool has_w_const = false;
  double K = 0.0;
  double N = 2.0;

  // fractal
  double eps = 0.1;
  double gamma_exp = 0.5;
  int depth = 3;
  int pairs = 10;

  // oracle / angle sampling
  int samples = 100;

  void validate() const;  // throws std::invalid_argument on bad values
};

// Each command writes its report files under out_dir and prints a one-line
// outcome; the return value is the overall pass flag.
bool cmd_transform(const RunConfig& config);
bool cmd_verify(const RunConfig& config);
bool cmd_curvature(const RunConfig& config);
bool cmd_fractal(const RunConfig& config);
bool cmd_oracle(const RunConfig& config);

// Full argv entry point: parse, dispatch, map pass/fail to exit status
// (0 pass, 1 fail, 2 usage or runtime error).
int run_cli(int argc, char** argv);

}  // namespace cmms
