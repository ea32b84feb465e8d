#include "core/mixed_solver.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace negproj {

namespace {

struct DriverState {
  Eigen::VectorXd r;     // test-space coefficients
  Eigen::VectorXd beta;  // trial coefficients
};

struct Diagnostics {
  int newton_iters = 0;
  std::vector<double> path;
  double final_residual = 0.0;
};

double residual_sup(const Eigen::VectorXd& r1, const Eigen::VectorXd& r2) {
  double s = r1.size() ? r1.lpNorm<Eigen::Infinity>() : 0.0;
  if (r2.size()) s = std::max(s, r2.lpNorm<Eigen::Infinity>());
  return s;
}

// One Newton solve of the mixed system at fixed q, warm-started from state.
// Returns false on stagnation (state left at the best accepted iterate).
bool newton_stage(const Eigen::VectorXd& load, const SparseMat& B, const TestSpace& V,
                  double q, const SolverOptions& opts, double scale,
                  DriverState& state, Diagnostics& diag) {
  const int m = V.n_dofs;
  const int n = static_cast<int>(B.cols());
  const DualityParams params{q, opts.eps_reg};
  FemFunction r_fem(V);
  r_fem.coeffs = state.r;

  auto residual = [&](const Eigen::VectorXd& r, const Eigen::VectorXd& beta,
                      Eigen::VectorXd& R1, Eigen::VectorXd& R2) {
    r_fem.coeffs = r;
    R1 = duality_form_vector(r_fem, params) - load;
    if (n > 0) {
      R1 += B * beta;
      R2 = B.transpose() * r;
    } else {
      R2.resize(0);
    }
  };

  Eigen::VectorXd R1, R2;
  residual(state.r, state.beta, R1, R2);
  double res = residual_sup(R1, R2);

  for (int iter = 0; iter < opts.max_newton; ++iter) {
    if (res <= opts.newton_tol * scale) {
      diag.final_residual = res;
      return true;
    }
    r_fem.coeffs = state.r;
    const SparseMat D = duality_jacobian_matrix(r_fem, params);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(D.nonZeros() + 2 * B.nonZeros());
    for (int c = 0; c < D.outerSize(); ++c)
      for (SparseMat::InnerIterator it(D, c); it; ++it)
        trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                           it.value());
    for (int c = 0; c < B.outerSize(); ++c)
      for (SparseMat::InnerIterator it(B, c); it; ++it) {
        const int j = static_cast<int>(it.row());
        const int i = static_cast<int>(it.col());
        trips.emplace_back(j, m + i, it.value());
        trips.emplace_back(m + i, j, it.value());
      }
    SparseMat KKT(m + n, m + n);
    KKT.setFromTriplets(trips.begin(), trips.end());
    KKT.makeCompressed();

    Eigen::SparseLU<SparseMat> lu;
    lu.compute(KKT);
    if (lu.info() != Eigen::Success)
      fail(ErrorCode::IncompatiblePair,
           "singular saddle-point factorization; the pair is likely incompatible");

    Eigen::VectorXd rhs(m + n);
    rhs.head(m) = -R1;
    if (n > 0) rhs.tail(n) = -R2;
    const Eigen::VectorXd step = lu.solve(rhs);

    // residual-decrease line search with halving
    double lambda = 1.0;
    bool accepted = false;
    for (int cut = 0; cut <= opts.max_damping; ++cut, lambda *= 0.5) {
      const Eigen::VectorXd r_try = state.r + lambda * step.head(m);
      const Eigen::VectorXd b_try =
          n > 0 ? Eigen::VectorXd(state.beta + lambda * step.tail(n))
                : Eigen::VectorXd();
      Eigen::VectorXd T1, T2;
      residual(r_try, b_try, T1, T2);
      const double res_try = residual_sup(T1, T2);
      if (res_try < res) {
        state.r = r_try;
        state.beta = b_try;
        R1.swap(T1);
        R2.swap(T2);
        res = res_try;
        accepted = true;
        break;
      }
    }
    ++diag.newton_iters;
    if (!accepted) {
      diag.final_residual = res;
      return false;
    }
  }
  diag.final_residual = res;
  return res <= opts.newton_tol * scale;
}

MixedSolution package(const TestSpace& V, const DriverState& state, double p,
                      const Diagnostics& diag) {
  MixedSolution sol;
  sol.p = p;
  sol.q = conjugate_exponent(p);
  sol.r_m = FemFunction(V);
  sol.r_m.coeffs = state.r;
  sol.f_coeffs = state.beta;
  const auto locals = wq_seminorm_local(sol.r_m, sol.q);
  sol.estimator_local.resize(locals.size());
  double acc = 0.0;
  for (size_t i = 0; i < locals.size(); ++i) {
    sol.estimator_local[i] = std::pow(locals[i], sol.q - 1.0);
    acc += std::pow(locals[i], sol.q);
  }
  sol.estimator_global = std::pow(std::pow(acc, 1.0 / sol.q), sol.q - 1.0);
  sol.newton_iters = diag.newton_iters;
  sol.continuation_path = diag.path;
  sol.final_residual = diag.final_residual;
  return sol;
}

// Continuation in p from 2 down to p_target with adaptive step halving.
MixedSolution solve_mixed(const Eigen::VectorXd& load, const SparseMat& B,
                          const TestSpace& V, double p_target,
                          const SolverOptions& opts) {
  if (!(p_target > 1.0 && p_target <= 2.0))
    fail(ErrorCode::InvalidArgument, "p must lie in (1, 2]");
  if (B.cols() > V.n_dofs)
    fail(ErrorCode::IncompatiblePair, "dim(G) exceeds dim(V)");

  const double scale = std::max(load.lpNorm<Eigen::Infinity>(), 1e-300);
  DriverState state;
  state.r = Eigen::VectorXd::Zero(V.n_dofs);
  state.beta = Eigen::VectorXd::Zero(B.cols());
  Diagnostics diag;

  if (!newton_stage(load, B, V, 2.0, opts, scale, state, diag)) {
    std::ostringstream os;
    os << "Newton failed at the initial p=2 stage (residual " << diag.final_residual
       << ")";
    throw NonconvergenceError(os.str(), package(V, state, 2.0, diag));
  }
  diag.path.push_back(2.0);

  double p_cur = 2.0;
  double step = opts.continuation_step;
  while (p_cur > p_target + 1e-12) {
    const double p_next = std::max(p_target, p_cur - step);
    DriverState trial = state;
    Diagnostics stage_diag;
    const bool ok = newton_stage(load, B, V, conjugate_exponent(p_next), opts, scale,
                                 trial, stage_diag);
    diag.newton_iters += stage_diag.newton_iters;
    diag.final_residual = stage_diag.final_residual;
    if (ok) {
      state = std::move(trial);
      p_cur = p_next;
      diag.path.push_back(p_cur);
      continue;
    }
    step *= 0.5;
    if (step < opts.min_continuation_step) {
      std::ostringstream os;
      os << "continuation stalled between p=" << p_cur << " and p=" << p_next
         << " (step underflow)";
      throw NonconvergenceError(os.str(), package(V, state, p_cur, diag));
    }
  }
  return package(V, state, p_target, diag);
}

}  // namespace

MixedSolution solve_projection(const RoughFunctional& f, const TrialActionSpace& G,
                               const TestSpace& V, double p_target,
                               const SolverOptions& opts) {
  if (G.mesh != V.mesh)
    fail(ErrorCode::InvalidArgument, "trial and test spaces must share a mesh");
  const double q = conjugate_exponent(p_target);
  if (f.kind == RoughFunctional::Kind::DiracDelta &&
      !delta_pairing_continuous(V.mesh->dim, q))
    std::fprintf(stderr,
                 "warning: Dirac delta pairing needs q > d (q=%g, d=%d); "
                 "proceeding anyway\n",
                 q, V.mesh->dim);
  const SparseMat B = assemble_coupling(G, V);
  const Eigen::VectorXd load = assemble_load(f, V);
  return solve_mixed(load, B, V, p_target, opts);
}

double discrete_dual_norm(const Eigen::VectorXd& load, const TestSpace& V,
                          double p_target, const SolverOptions& opts) {
  if (load.size() != V.n_dofs)
    fail(ErrorCode::InvalidArgument, "load length does not match n_dofs");
  const SparseMat B(V.n_dofs, 0);
  const MixedSolution sol = solve_mixed(load, B, V, p_target, opts);
  return sol.estimator_global;  // ‖v‖^{q-1} with J(v) = load
}

}  // namespace negproj
