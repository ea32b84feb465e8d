#pragma once

#include <string>
#include <vector>

#include "core/mixed_solver.hpp"

namespace negproj {

// Space-free skeleton of a persisted solution: coefficients plus metadata,
// re-attachable to a test space rebuilt from the matching mesh file.
struct SolutionData {
  int version = 1;
  double p = 2.0;
  double q = 2.0;
  int n_trial = 0;
  int n_test = 0;
  std::vector<double> f_coeffs;
  std::vector<double> r_coeffs;
  double estimator_global = 0.0;
  std::vector<double> estimator_local;
  int newton_iters = 0;
  std::vector<double> continuation_path;
  double final_residual = 0.0;
};

SolutionData to_data(const MixedSolution& sol);

// JSON with a version field; doubles round-trip bit-exactly. Writes are
// atomic (temp file + rename).
void save_solution(const MixedSolution& sol, const std::string& path);
void save_solution_data(const SolutionData& data, const std::string& path);
SolutionData load_solution(const std::string& path);

}  // namespace negproj
