#pragma once

#include <memory>
#include <string>
#include <vector>

#include "core/mixed_solver.hpp"

namespace negproj {

struct AdaptConfig {
  double tol = 1e-3;
  double alpha = 0.5;       // maximum-strategy marking fraction
  int max_iterations = 30;  // solve/mark/refine rounds
  // Stop once dim(G)+dim(V) reaches this bound (0 disables). Lets studies
  // compare adaptive and uniform meshes at matched workload.
  int max_total_dofs = 0;
};

// Maximum-strategy marking: { i : eta[i] > alpha * max_j eta[j] }, strict.
std::vector<int> mark_elements(const std::vector<double>& eta_local, double alpha);

struct AdaptIteration {
  int level = 0;
  int n_elements = 0;
  int total_dofs = 0;  // dim(G) + dim(V)
  double estimator = 0.0;
  int marked = 0;  // elements marked at this level, 0 on the terminal row
};

struct AdaptHistory {
  std::vector<AdaptIteration> iterations;
  bool reached_tol = false;
  bool budget_exhausted = false;  // iteration or dof budget ran out first
};

// The result owns the final mesh and spaces; solution.r_m points into them.
struct AdaptiveResult {
  std::unique_ptr<SimplicialMesh> mesh;
  std::unique_ptr<TrialActionSpace> trial;
  std::unique_ptr<TestSpace> test;
  MixedSolution solution;
  AdaptHistory history;
};

// Solve / estimate / mark / refine until estimator_global <= tol or a budget
// runs out. The estimator is recorded before each refinement; reruns on the
// same inputs reproduce the history exactly.
AdaptiveResult adaptive_project(const RoughFunctional& f, const SimplicialMesh& mesh0,
                                PairingKind pairing, double p, const AdaptConfig& config,
                                const SolverOptions& opts = {});

// CSV with header level,n_elements,ndofs,estimator,marked.
void write_history_csv(const AdaptHistory& history, const std::string& path);

}  // namespace negproj
