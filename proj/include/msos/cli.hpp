// Command dispatch behind the command-line tool: parse a problem file, run
// the matching solver pipeline, and produce both a human-readable summary
// and a lossless machine-readable report.
#pragma once

#include <string>

#include "json.hpp"

namespace msos::cli {

struct RunConfig {
  std::string command;  // solve-mrf | solve-nash | solve-minmax |
                        // solve-loomis | solve-absorbing-finite |
                        // solve-zerosum-poly | solve-absorbing-poly
  std::string input_path;
  int order = 0;      // starting relaxation order; 0 = automatic
  int max_order = 0;  // 0 = automatic
  double tol = 1e-8;
  double rank_tol = 1e-6;
  double perturb = 0.0;  // 0 disables the objective perturbation
  std::string format = "text";
  std::uint64_t seed = 0;
  int player = 1;  // solve-minmax target (1-based)
  std::string export_sdp;  // path of the SDPA-like dump; empty = none
};

struct RunResult {
  int exit_code = 3;  // 0 optimal/certified, 2 converged w/o certificate,
                      // 3 solver failure, 4 input error
  nlohmann::ordered_json machine;
  std::string text;
};

RunResult run(const RunConfig& cfg);

}  // namespace msos::cli
