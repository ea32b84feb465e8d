#pragma once

#include <memory>
#include <vector>

#include "core/assemble.hpp"
#include "core/duality.hpp"
#include "core/functional.hpp"

namespace negproj {

struct SolverOptions {
  double newton_tol = 1e-10;  // algebraic sup-norm residual, relative to load
  int max_newton = 50;
  double continuation_step = 0.1;      // decrement in p, halved on failure
  double min_continuation_step = 1e-4;
  int max_damping = 20;  // line-search halvings per Newton step
  double eps_reg = 1e-12;
};

// Solution of the mixed problem: the residual representative r_m and the
// coefficients of the projected functional in the trial generators.
struct MixedSolution {
  double p = 2.0;
  double q = 2.0;
  FemFunction r_m;
  Eigen::VectorXd f_coeffs;
  double estimator_global = 0.0;        // ‖r_m‖^{q-1}
  std::vector<double> estimator_local;  // element seminorm^{q-1}
  int newton_iters = 0;
  std::vector<double> continuation_path;  // solved p stages, 2.0 first
  double final_residual = 0.0;            // absolute sup-norm
};

// Thrown when Newton stagnates after damping and continuation-step halving;
// carries the iterate of the last stage that did converge.
class NonconvergenceError : public Error {
 public:
  NonconvergenceError(const std::string& msg, MixedSolution best)
      : Error(ErrorCode::Nonconvergence, msg),
        best_(std::make_shared<MixedSolution>(std::move(best))) {}
  const MixedSolution& best() const { return *best_; }

 private:
  std::shared_ptr<MixedSolution> best_;
};

// Projects f onto span(G) in the discrete dual norm of V: solves the mixed
// system with duality form on V and coupling to G. p_target in (1, 2];
// p_target < 2 runs Newton with continuation from p = 2.
MixedSolution solve_projection(const RoughFunctional& f, const TrialActionSpace& G,
                               const TestSpace& V, double p_target,
                               const SolverOptions& opts = {});

// ‖load‖_{(V_m)*}: solves J(v) = load on V and returns ‖v‖^{q-1}. For q = 2
// this equals sqrt(loadᵀ K⁻¹ load).
double discrete_dual_norm(const Eigen::VectorXd& load, const TestSpace& V,
                          double p_target, const SolverOptions& opts = {});

}  // namespace negproj
