#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "dgpe/minimizer.hpp"
#include "dgpe/params.hpp"
#include "dgpe/spectral.hpp"

namespace dgpe::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kNonConvergence = 2, kIo = 3 };

struct RunConfig {
  std::string command;  // constants, wp, groundstate, sweep, evolve, stability
  ModelParams instance;
  int n = 64;
  double box = 0.0;     // 0 selects a box from the intrinsic length scale
  SolverConfig solver;
  std::string init = "vc";  // vc, file or random
  std::string init_file;
  std::uint64_t seed = 1;
  std::string out = "out";
  std::vector<std::string> formats{"json", "csv", "bin"};
  bool repro = false;
  int jobs = 1;
  // sweep
  std::vector<double> masses;  // empty: c*/2, c*/4, c*/8, c*/16
  // evolve / stability (v frame)
  double T = 0.0;   // 0 selects 10 for evolve, 20 for stability
  double dt = 0.01;
  int sample_every = 50;
  std::vector<double> eps;  // empty: 0.04 c in the v frame
  int trials = 1;
};

struct RunOutcome {
  int exit_code = kOk;
  nlohmann::json manifest;
};

/// Executes one command, writes its artifacts and the manifest into
/// config.out. Errors are reported as JSON on stderr and mapped to exit codes.
RunOutcome run(const RunConfig& config);

/// Full command line entry point (CLI11 parsing, then run or report).
int main_entry(int argc, char** argv);

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

}  // namespace dgpe::cli
