#include "core/pde.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <cmath>
#include <map>

#include "core/quadrature.hpp"

namespace negproj {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kPdeQuadOrder = 6;  // exact for every integrand assembled here

Point centroid_ref(int dim) {
  return dim == 1 ? Point{0.5, 0.0} : Point{1.0 / 3.0, 1.0 / 3.0};
}

void check_pde_space(const PdeProblem& problem, const TestSpace& space) {
  if (space.mesh == nullptr)
    fail(ErrorCode::InvalidArgument, "galerkin space has no mesh");
  const int dim = space.mesh->dim;
  if (problem.kind == PdeKind::Ode1d) {
    if (dim != 1) fail(ErrorCode::InvalidArgument, "Ode1d requires a 1D mesh");
    if (space.degree != 2 || space.has_bubble)
      fail(ErrorCode::IncompatiblePair, "1D Galerkin space must be quadratic");
    if (problem.a < 0.0)
      fail(ErrorCode::InvalidArgument, "reaction coefficient must be >= 0");
  } else {
    if (dim != 2) fail(ErrorCode::InvalidArgument, "Poisson2d requires a 2D mesh");
    if (space.degree != 1 || space.has_bubble)
      fail(ErrorCode::IncompatiblePair, "2D Galerkin space must be piecewise linear");
  }
}

// Parent element of a (nested) fine element in the density's mesh.
int parent_element(const RegularizedDensity& f_n, const SimplicialMesh& mesh, int e,
                   const ElementMap& emap) {
  if (f_n.mesh() == &mesh) return e;
  return f_n.parent_of(emap.to_physical(centroid_ref(mesh.dim)));
}

// u_h'' on an interval element; constant for quadratics. Reference second
// derivatives of [v0, v1, midpoint] are {4, 4, -8}, mapped by 1/h^2.
double second_derivative_p2(const FemFunction& u_h, int e, double h) {
  const auto& dofs = u_h.space->dof_map[e];
  double c[3] = {0.0, 0.0, 0.0};
  for (int k = 0; k < 3; ++k)
    if (dofs[k] >= 0) c[k] = u_h.coeffs[dofs[k]];
  return (4.0 * c[0] + 4.0 * c[1] - 8.0 * c[2]) / (h * h);
}

}  // namespace

PdeProblem PdeProblem::ode1d(double a, double x0) {
  if (a < 0.0) fail(ErrorCode::InvalidArgument, "ode1d: a must be >= 0");
  if (!(x0 > 0.0 && x0 < 1.0))
    fail(ErrorCode::InvalidArgument, "ode1d: x0 must lie inside (0,1)");
  PdeProblem pr;
  pr.kind = PdeKind::Ode1d;
  pr.a = a;
  pr.x0 = {x0, 0.0};
  return pr;
}

PdeProblem PdeProblem::poisson2d(const Point& x0) {
  PdeProblem pr;
  pr.kind = PdeKind::Poisson2d;
  pr.x0 = x0;
  return pr;
}

double exact_ode(double x, double x0, double a) {
  if (!(x0 > 0.0 && x0 < 1.0))
    fail(ErrorCode::InvalidArgument, "exact_ode: x0 must lie inside (0,1)");
  if (a < 0.0) fail(ErrorCode::InvalidArgument, "exact_ode: a must be >= 0");
  if (x < -1e-12 || x > 1.0 + 1e-12)
    fail(ErrorCode::OutOfDomain, "exact_ode: x outside [0,1]");
  if (a < 1e-8) return x <= x0 ? x * (1.0 - x0) : x0 * (1.0 - x);
  const double denom = 1.0 - std::exp(2.0 * a);
  if (x <= x0) {
    const double c = (std::exp(a * x0) - std::exp(a * (2.0 - x0))) / denom;
    return c * std::sinh(a * x) / a;
  }
  const double s = std::sinh(a * x0) / a;
  return s * (std::exp(a * x) - std::exp(a * (2.0 - x))) / denom;
}

double exact_ode_derivative(double x, double x0, double a) {
  if (!(x0 > 0.0 && x0 < 1.0))
    fail(ErrorCode::InvalidArgument, "exact_ode: x0 must lie inside (0,1)");
  if (a < 0.0) fail(ErrorCode::InvalidArgument, "exact_ode: a must be >= 0");
  if (a < 1e-8) return x <= x0 ? 1.0 - x0 : -x0;
  const double denom = 1.0 - std::exp(2.0 * a);
  if (x <= x0) {
    const double c = (std::exp(a * x0) - std::exp(a * (2.0 - x0))) / denom;
    return c * std::cosh(a * x);
  }
  const double s = std::sinh(a * x0) / a;
  return s * a * (std::exp(a * x) + std::exp(a * (2.0 - x))) / denom;
}

double exact_poisson2d(const Point& x) {
  const double r = std::hypot(x[0], x[1]);
  if (!(r > 0.0))
    fail(ErrorCode::OutOfDomain, "exact_poisson2d: singular at the origin");
  return -std::log(r) / (2.0 * kPi);
}

RegularizedDensity::RegularizedDensity(const TrialActionSpace& G,
                                       const Eigen::VectorXd& coeffs)
    : mesh_(G.mesh),
      kind_(G.kind),
      vertex_of_generator_(G.vertex_of_generator),
      generator_of_vertex_(G.generator_of_vertex),
      coeffs_(coeffs) {
  if (mesh_ == nullptr)
    fail(ErrorCode::InvalidArgument, "RegularizedDensity: trial space has no mesh");
  if (coeffs_.size() != G.n_generators)
    fail(ErrorCode::InvalidArgument, "RegularizedDensity: coefficient count mismatch");
  locator_ = std::make_shared<ElementLocator>(*mesh_);
}

double RegularizedDensity::value_in_parent(int parent, const Point& x) const {
  if (kind_ == TrialKind::P0Actions) return coeffs_[parent];
  const ElementMap map = mesh_->element_map(parent);
  const Point ref = map.to_reference(x);
  const double l[3] = {1.0 - ref[0] - ref[1], ref[0], ref[1]};
  const auto& el = mesh_->elements[parent];
  double v = 0.0;
  for (int k = 0; k < mesh_->vertices_per_element(); ++k) {
    const int gen = generator_of_vertex_[el[k]];
    if (gen >= 0) v += coeffs_[gen] * l[k];
  }
  return v;
}

int RegularizedDensity::parent_of(const Point& x) const {
  if (mesh_ == nullptr)
    fail(ErrorCode::InvalidArgument, "RegularizedDensity: not initialized");
  const int e = locator_->locate(x);
  if (e < 0) fail(ErrorCode::OutOfDomain, "RegularizedDensity: point outside the mesh");
  return e;
}

double RegularizedDensity::value(const Point& x) const {
  return value_in_parent(parent_of(x), x);
}

PdeSolution galerkin_solve(const PdeProblem& problem, const RegularizedDensity& f_n,
                           const TestSpace& space) {
  check_pde_space(problem, space);
  const SimplicialMesh& mesh = *space.mesh;
  if (f_n.mesh() == nullptr || f_n.mesh()->dim != mesh.dim)
    fail(ErrorCode::InvalidArgument, "galerkin_solve: density mesh mismatch");
  const double a2 = problem.kind == PdeKind::Ode1d ? problem.a * problem.a : 0.0;
  const auto& rule = quadrature_rule(mesh.dim, kPdeQuadOrder);

  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd load = Eigen::VectorXd::Zero(space.n_dofs);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementMap emap = mesh.element_map(e);
    const int parent = parent_element(f_n, mesh, e, emap);
    const auto& dofs = space.dof_map[e];
    for (const auto& qp : rule) {
      const BasisEval be = eval_basis(space, e, qp.xref);
      const double w = qp.weight * emap.det_abs;
      const double fx = f_n.value_in_parent(parent, emap.to_physical(qp.xref));
      for (int i = 0; i < be.n; ++i) {
        if (dofs[i] < 0) continue;
        load[dofs[i]] += w * be.value[i] * fx;
        for (int j = 0; j < be.n; ++j) {
          if (dofs[j] < 0) continue;
          double kij = be.grad[i][0] * be.grad[j][0] + be.grad[i][1] * be.grad[j][1];
          if (a2 > 0.0) kij += a2 * be.value[i] * be.value[j];
          trips.emplace_back(dofs[i], dofs[j], w * kij);
        }
      }
    }
  }

  PdeSolution out;
  if (space.n_dofs == 0) {
    out.u_h = FemFunction(space);
  } else {
    Eigen::SparseMatrix<double> K(space.n_dofs, space.n_dofs);
    K.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(K);
    if (solver.info() != Eigen::Success)
      fail(ErrorCode::Internal, "galerkin_solve: factorization failed");
    out.u_h = FemFunction(space, solver.solve(load));
  }
  out.eta_local = residual_estimator(problem, out.u_h, f_n);
  return out;
}

std::vector<double> residual_estimator(const PdeProblem& problem,
                                       const FemFunction& u_h,
                                       const RegularizedDensity& f_n) {
  const TestSpace& space = *u_h.space;
  check_pde_space(problem, space);
  const SimplicialMesh& mesh = *space.mesh;
  if (f_n.mesh() == nullptr || f_n.mesh()->dim != mesh.dim)
    fail(ErrorCode::InvalidArgument, "residual_estimator: density mesh mismatch");
  const double a2 = problem.kind == PdeKind::Ode1d ? problem.a * problem.a : 0.0;
  const auto& rule = quadrature_rule(mesh.dim, kPdeQuadOrder);

  // Interior residual: h_T^2 ||f_n + u'' - a^2 u||^2; Laplacian vanishes for
  // piecewise linears in 2D.
  std::vector<double> eta2(mesh.num_elements(), 0.0);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementMap emap = mesh.element_map(e);
    const int parent = parent_element(f_n, mesh, e, emap);
    const double upp =
        mesh.dim == 1 ? second_derivative_p2(u_h, e, emap.det_abs) : 0.0;
    double acc = 0.0;
    for (const auto& qp : rule) {
      double res = f_n.value_in_parent(parent, emap.to_physical(qp.xref)) + upp;
      if (a2 > 0.0) res -= a2 * u_h.value_in(e, qp.xref);
      acc += qp.weight * emap.det_abs * res * res;
    }
    eta2[e] += emap.h * emap.h * acc;
  }

  if (mesh.dim == 1) {
    // Flux jumps at interior nodes; each neighbour takes half with its own h.
    const int nv = mesh.num_vertices();
    std::vector<std::array<int, 2>> adj_e(nv, {-1, -1}), adj_k(nv, {-1, -1});
    std::vector<int> cnt(nv, 0);
    for (int e = 0; e < mesh.num_elements(); ++e)
      for (int k = 0; k < 2; ++k) {
        const int v = mesh.elements[e][k];
        if (cnt[v] < 2) {
          adj_e[v][cnt[v]] = e;
          adj_k[v][cnt[v]] = k;
        }
        ++cnt[v];
      }
    for (int v = 0; v < nv; ++v) {
      if (mesh.is_boundary_vertex(v) || cnt[v] != 2) continue;
      double flux[2];
      for (int s = 0; s < 2; ++s) {
        const Point ref{adj_k[v][s] == 0 ? 0.0 : 1.0, 0.0};
        flux[s] = u_h.gradient_in(adj_e[v][s], ref)[0];
      }
      const double j2 = (flux[0] - flux[1]) * (flux[0] - flux[1]);
      for (int s = 0; s < 2; ++s)
        eta2[adj_e[v][s]] += 0.5 * mesh.element_diameter(adj_e[v][s]) * j2;
    }
  } else {
    // Normal-flux jumps over interior edges: 1/2 h_e |e| (jump)^2 per side.
    static const int kEdge[3][2] = {{0, 1}, {1, 2}, {0, 2}};
    std::map<std::pair<int, int>, std::array<int, 3>> edges;  // e0, e1, count
    for (int e = 0; e < mesh.num_elements(); ++e)
      for (const auto& le : kEdge) {
        int a = mesh.elements[e][le[0]], b = mesh.elements[e][le[1]];
        if (a > b) std::swap(a, b);
        auto [it, fresh] = edges.try_emplace({a, b}, std::array<int, 3>{-1, -1, 0});
        if (it->second[2] < 2) it->second[it->second[2]] = e;
        ++it->second[2];
      }
    const Point cref = centroid_ref(2);
    for (const auto& [key, own] : edges) {
      if (own[2] != 2) continue;
      const Point g0 = u_h.gradient_in(own[0], cref);
      const Point g1 = u_h.gradient_in(own[1], cref);
      const Point& va = mesh.vertices[key.first];
      const Point& vb = mesh.vertices[key.second];
      const double tx = vb[0] - va[0], ty = vb[1] - va[1];
      const double len = std::hypot(tx, ty);
      const double jump = ((g0[0] - g1[0]) * ty - (g0[1] - g1[1]) * tx) / len;
      const double contrib = 0.5 * len * len * jump * jump;
      eta2[own[0]] += contrib;
      eta2[own[1]] += contrib;
    }
  }

  std::vector<double> eta(eta2.size());
  for (size_t i = 0; i < eta2.size(); ++i) eta[i] = std::sqrt(eta2[i]);
  return eta;
}

double ode_h1_error(const FemFunction& u_h, double x0, double a) {
  const SimplicialMesh& mesh = *u_h.space->mesh;
  if (mesh.dim != 1) fail(ErrorCode::InvalidArgument, "ode_h1_error: 1D only");
  const auto [gx, gw] = gauss_legendre_01(16);
  double acc = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementMap emap = mesh.element_map(e);
    const double xa = std::min(mesh.vertices[mesh.elements[e][0]][0],
                               mesh.vertices[mesh.elements[e][1]][0]);
    const double xb = std::max(mesh.vertices[mesh.elements[e][0]][0],
                               mesh.vertices[mesh.elements[e][1]][0]);
    // Split at the kink so every panel sees a smooth integrand.
    double cuts[3] = {xa, xb, xb};
    int nseg = 1;
    if (xa < x0 && x0 < xb) {
      cuts[1] = x0;
      cuts[2] = xb;
      nseg = 2;
    }
    for (int s = 0; s < nseg; ++s) {
      const double len = cuts[s + 1] - cuts[s];
      for (size_t k = 0; k < gx.size(); ++k) {
        const double x = cuts[s] + gx[k] * len;
        const double duh = u_h.gradient_in(e, emap.to_reference({x, 0.0}))[0];
        const double d = exact_ode_derivative(x, x0, a) - duh;
        acc += gw[k] * len * d * d;
      }
    }
  }
  return std::sqrt(acc);
}

double poisson2d_l2_error(const FemFunction& u_h, const Point& x0) {
  const SimplicialMesh& mesh = *u_h.space->mesh;
  if (mesh.dim != 2) fail(ErrorCode::InvalidArgument, "poisson2d_l2_error: 2D only");
  const auto& rule = quadrature_rule(2, 10);
  double acc = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementMap emap = mesh.element_map(e);
    for (const auto& qp : rule) {
      const Point x = emap.to_physical(qp.xref);
      const Point rel{x[0] - x0[0], x[1] - x0[1]};
      if (!(std::hypot(rel[0], rel[1]) > 0.0)) continue;  // measure-zero hit
      const double d = u_h.value_in(e, qp.xref) - exact_poisson2d(rel);
      acc += qp.weight * emap.det_abs * d * d;
    }
  }
  return std::sqrt(acc);
}

Algorithm1Result run_algorithm1(const RoughFunctional& f, const PdeProblem& problem,
                                const SimplicialMesh& mesh0,
                                const Algorithm1Params& params) {
  if (!(params.tol > 0.0)) fail(ErrorCode::InvalidArgument, "run_algorithm1: tol > 0");
  if (!(params.alpha >= 0.0 && params.alpha <= 1.0))
    fail(ErrorCode::InvalidArgument, "run_algorithm1: alpha in [0,1]");
  if (params.max_iterations < 1)
    fail(ErrorCode::InvalidArgument, "run_algorithm1: max_iterations >= 1");
  if (!(problem.gamma > 0.0))
    fail(ErrorCode::InvalidArgument, "run_algorithm1: gamma > 0");
  const int want_dim = problem.kind == PdeKind::Ode1d ? 1 : 2;
  if (mesh0.dim != want_dim)
    fail(ErrorCode::InvalidArgument, "run_algorithm1: mesh dimension mismatch");

  Algorithm1Result result;

  // Stage 1: regularize the source down to gamma*tol/2 in the dual norm.
  AdaptConfig cfg1;
  cfg1.tol = 0.5 * params.tol * problem.gamma;
  cfg1.alpha = params.alpha;
  cfg1.max_iterations = params.max_iterations;
  AdaptiveResult ar =
      adaptive_project(f, mesh0, params.pairing, params.p, cfg1, params.solver);
  result.projection_mesh = std::move(ar.mesh);
  result.trial = std::move(ar.trial);
  result.f_coeffs = std::move(ar.solution.f_coeffs);
  result.stage1_estimator = ar.solution.estimator_global;
  result.stage1_history = std::move(ar.history);

  // Stage 2: Galerkin solves with residual-driven refinement, starting from
  // the projection mesh so the density stays element-wise polynomial.
  const RegularizedDensity density(*result.trial, result.f_coeffs);
  const double stage2_tol = 0.5 * params.tol;
  const TestSpaceKind vkind =
      problem.kind == PdeKind::Ode1d ? TestSpaceKind::P2 : TestSpaceKind::P1;
  auto cur_mesh = std::make_unique<SimplicialMesh>(*result.projection_mesh);
  AdaptHistory& h2 = result.stage2_history;
  for (int level = 0;; ++level) {
    auto space = std::make_unique<TestSpace>(TestSpace::make(*cur_mesh, vkind));
    PdeSolution sol = galerkin_solve(problem, density, *space);
    if (problem.kind == PdeKind::Ode1d && f.kind == RoughFunctional::Kind::DiracDelta)
      sol.h1_error = ode_h1_error(sol.u_h, f.x0[0], problem.a);
    double sum2 = 0.0;
    for (double eta : sol.eta_local) sum2 += eta * eta;
    const double est = std::sqrt(sum2);

    AdaptIteration row;
    row.level = level;
    row.n_elements = cur_mesh->num_elements();
    row.total_dofs = space->n_dofs;
    row.estimator = est;
    const bool converged = est <= stage2_tol;
    const bool out_of_iterations = level + 1 >= params.max_iterations;
    std::vector<int> marked;
    if (!converged && !out_of_iterations) marked = mark_elements(sol.eta_local, params.alpha);
    row.marked = static_cast<int>(marked.size());
    h2.iterations.push_back(row);

    if (converged || out_of_iterations || marked.empty()) {
      h2.reached_tol = converged;
      h2.budget_exhausted = !converged;
      result.pde_mesh = std::move(cur_mesh);
      result.pde_space = std::move(space);
      result.solution = std::move(sol);
      break;
    }
    cur_mesh = std::make_unique<SimplicialMesh>(refine(*cur_mesh, marked));
  }
  return result;
}

}  // namespace negproj
