#pragma once

#include <memory>

#include "core/adapt.hpp"

namespace negproj {

enum class PdeKind { Ode1d, Poisson2d };

// -u'' + a² u = f on (0,1), or -Δu = f on a 2D domain, with homogeneous
// Dirichlet conditions. gamma is the stability constant of the operator
// (1 for both instances), used to split tolerances between regularization
// and discretization stages.
struct PdeProblem {
  PdeKind kind = PdeKind::Ode1d;
  double a = 0.0;
  Point x0{0.0, 0.0};  // singular-source location for exact comparisons
  double gamma = 1.0;

  static PdeProblem ode1d(double a, double x0);
  static PdeProblem poisson2d(const Point& x0 = {0.0, 0.0});
};

// Exact solution of -u'' + a²u = δ_{x0} on (0,1): two sinh/exponential
// branches meeting at x0; for a < 1e-8 the a→0 limit ramp x(1-x0) / x0(1-x).
double exact_ode(double x, double x0, double a);
double exact_ode_derivative(double x, double x0, double a);  // kink at x0

// Exact solution of -Δu = δ_0 on the unit disk: -ln|x|/(2π); the origin is
// a singular point.
double exact_poisson2d(const Point& x);

// Projected functional as an element-wise polynomial density on its
// projection mesh: P0 coefficients per element, or interior hat expansion.
// Evaluable on refinements of that mesh (parent found by point location).
class RegularizedDensity {
 public:
  RegularizedDensity() = default;
  RegularizedDensity(const TrialActionSpace& G, const Eigen::VectorXd& coeffs);

  double value(const Point& x) const;
  double value_in_parent(int parent, const Point& x) const;
  int parent_of(const Point& x) const;
  const SimplicialMesh* mesh() const { return mesh_; }
  TrialKind kind() const { return kind_; }
  const Eigen::VectorXd& coeffs() const { return coeffs_; }

 private:
  const SimplicialMesh* mesh_ = nullptr;
  TrialKind kind_ = TrialKind::P0Actions;
  std::vector<int> vertex_of_generator_;
  std::vector<int> generator_of_vertex_;
  Eigen::VectorXd coeffs_;
  std::shared_ptr<ElementLocator> locator_;
};

struct PdeSolution {
  FemFunction u_h;
  std::vector<double> eta_local;  // classical residual indicators, if computed
  double h1_error = -1.0;         // vs the exact singular solution; <0 = unset
};

// Conforming Galerkin solve of the regularized problem: P2 in 1D, P1 in 2D,
// Dirichlet DOFs eliminated by the space. The Galerkin mesh must be the
// density's projection mesh or a refinement of it so loads integrate exactly.
PdeSolution galerkin_solve(const PdeProblem& problem, const RegularizedDensity& f_n,
                           const TestSpace& space);

// η_T² = h_T²‖f_n + Δu_h - a²u_h‖²_{L²(T)} + ½ Σ_e h_e‖[∇u_h·n]‖²_{L²(e)}
// over interior edges (in 1D: squared flux jumps at interior nodes times h).
std::vector<double> residual_estimator(const PdeProblem& problem,
                                       const FemFunction& u_h,
                                       const RegularizedDensity& f_n);

// ‖u - u_h‖_{H¹ seminorm} against the exact ODE solution, splitting the
// integration at the kink x0.
double ode_h1_error(const FemFunction& u_h, double x0, double a);

// ‖u - u_h‖_{L²} against -ln|x-x0|/(2π) (u ∉ H¹, so L² is the comparison).
double poisson2d_l2_error(const FemFunction& u_h, const Point& x0);

struct Algorithm1Params {
  double tol = 1e-3;
  double alpha = 0.5;
  int max_iterations = 30;  // per stage
  PairingKind pairing = PairingKind::P0_PdPlus1;
  double p = 2.0;
  SolverOptions solver;
};

// Two-stage driver: adaptive projection of the rough source down to
// gamma·tol/2, then Galerkin + residual-estimator adaptation from the
// projection mesh until sqrt(Ση²) ≤ tol/2.
struct Algorithm1Result {
  std::unique_ptr<SimplicialMesh> projection_mesh;
  std::unique_ptr<TrialActionSpace> trial;
  Eigen::VectorXd f_coeffs;
  double stage1_estimator = 0.0;
  AdaptHistory stage1_history;

  std::unique_ptr<SimplicialMesh> pde_mesh;
  std::unique_ptr<TestSpace> pde_space;
  PdeSolution solution;
  AdaptHistory stage2_history;  // estimator column holds sqrt(Ση²)
};

Algorithm1Result run_algorithm1(const RoughFunctional& f, const PdeProblem& problem,
                                const SimplicialMesh& mesh0,
                                const Algorithm1Params& params);

}  // namespace negproj
