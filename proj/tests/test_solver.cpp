#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "core/mesh.hpp"
#include "core/mixed_solver.hpp"

using namespace negproj;

namespace {

// Dense KKT solve used as an independent oracle for small q=2 problems.
std::pair<Eigen::VectorXd, Eigen::VectorXd> dense_saddle(const SparseMat& K,
                                                         const SparseMat& B,
                                                         const Eigen::VectorXd& load) {
  const int m = static_cast<int>(K.rows());
  const int n = static_cast<int>(B.cols());
  Eigen::MatrixXd KKT = Eigen::MatrixXd::Zero(m + n, m + n);
  KKT.topLeftCorner(m, m) = Eigen::MatrixXd(K);
  KKT.topRightCorner(m, n) = Eigen::MatrixXd(B);
  KKT.bottomLeftCorner(n, m) = Eigen::MatrixXd(B).transpose();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + n);
  rhs.head(m) = load;
  const Eigen::VectorXd x = KKT.fullPivLu().solve(rhs);
  return {x.head(m), x.tail(n)};
}

double orthogonality_defect(const MixedSolution& sol, const TrialActionSpace& G,
                            const TestSpace& V) {
  const auto B = assemble_coupling(G, V);
  return (B.transpose() * sol.r_m.coeffs).lpNorm<Eigen::Infinity>();
}

}  // namespace

TEST_SUITE("mixed_solver") {

TEST_CASE("midpoint delta on two elements, hand-solved") {
  const auto line = build_interval_mesh(2, 0.0, 1.0);
  auto [G, V] = make_pair_spaces(line, PairingKind::P0_PdPlus1);
  const auto f = RoughFunctional::dirac({0.5, 0.0});
  const auto sol = solve_projection(f, G, V, 2.0);

  // exact solution of the 5x5 saddle system
  REQUIRE(sol.r_m.coeffs.size() == 3);
  CHECK(sol.r_m.coeffs[0] == doctest::Approx(1.0 / 16.0).epsilon(1e-10));
  CHECK(sol.r_m.coeffs[1] == doctest::Approx(-1.0 / 64.0).epsilon(1e-10));
  CHECK(sol.r_m.coeffs[2] == doctest::Approx(-1.0 / 64.0).epsilon(1e-10));
  REQUIRE(sol.f_coeffs.size() == 2);
  CHECK(sol.f_coeffs[0] == doctest::Approx(1.5).epsilon(1e-10));
  CHECK(sol.f_coeffs[1] == doctest::Approx(1.5).epsilon(1e-10));
  CHECK(sol.estimator_global == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(sol.newton_iters >= 1);
  CHECK(sol.continuation_path == std::vector<double>{2.0});
  CHECK(orthogonality_defect(sol, G, V) <= 1e-9);
}

TEST_CASE("solver matches a dense solve on an asymmetric problem") {
  const auto line = build_interval_mesh(4, 0.0, 1.0);
  for (auto pairing : {PairingKind::P0_PdPlus1, PairingKind::P1_P2}) {
    auto [G, V] = make_pair_spaces(line, pairing);
    const auto f = RoughFunctional::dirac({0.3, 0.0});
    const auto sol = solve_projection(f, G, V, 2.0);
    const auto K = assemble_stiffness(V);
    const auto B = assemble_coupling(G, V);
    const auto load = assemble_load(f, V);
    const auto [r, beta] = dense_saddle(K, B, load);
    CHECK((sol.r_m.coeffs - r).lpNorm<Eigen::Infinity>() <= 1e-10);
    CHECK((sol.f_coeffs - beta).lpNorm<Eigen::Infinity>() <= 1e-9);
  }
}

TEST_CASE("piecewise constant densities are reproduced exactly") {
  const auto line = build_interval_mesh(4, 0.0, 1.0);
  std::vector<double> cvals{2.0, -1.0, 0.5, 3.25};
  auto g = [&, line](Point x) {
    const int e = line.locate(x);
    return e >= 0 ? cvals[static_cast<size_t>(e)] : 0.0;
  };
  auto [G, V] = make_pair_spaces(line, PairingKind::P0_P1Bubble);
  for (double p : {2.0, 1.5}) {
    const auto sol = solve_projection(RoughFunctional::density(g, 4), G, V, p);
    CHECK(sol.estimator_global <= 1e-9);
    for (int i = 0; i < 4; ++i)
      CHECK(sol.f_coeffs[i] == doctest::Approx(cvals[static_cast<size_t>(i)])
                                   .epsilon(1e-8));
  }
}

TEST_CASE("continuation path for p=1.5") {
  const auto line = build_interval_mesh(4, 0.0, 1.0);
  auto [G, V] = make_pair_spaces(line, PairingKind::P0_PdPlus1);
  const auto sol =
      solve_projection(RoughFunctional::dirac({std::sqrt(2.0) / 2.0, 0.0}), G, V, 1.5);
  REQUIRE(sol.continuation_path.size() == 6);
  CHECK(sol.continuation_path.front() == 2.0);
  CHECK(sol.continuation_path.back() == doctest::Approx(1.5));
  for (size_t i = 1; i < sol.continuation_path.size(); ++i) {
    CHECK(sol.continuation_path[i] ==
          doctest::Approx(2.0 - 0.1 * static_cast<double>(i)).epsilon(1e-12));
  }
  CHECK(sol.p == doctest::Approx(1.5));
  CHECK(sol.q == doctest::Approx(3.0));
  CHECK(orthogonality_defect(sol, G, V) <= 1e-9);
  // estimator consistency with the seminorm
  CHECK(sol.estimator_global ==
        doctest::Approx(std::pow(wq_seminorm(sol.r_m, 3.0), 2.0)).epsilon(1e-12));
}

TEST_CASE("best approximation in the discrete dual norm, q=2") {
  const auto line = build_interval_mesh(8, 0.0, 1.0);
  auto [G, V] = make_pair_spaces(line, PairingKind::P0_PdPlus1);
  const auto f = RoughFunctional::dirac({std::sqrt(2.0) / 2.0, 0.0});
  const auto sol = solve_projection(f, G, V, 2.0);
  const auto K = assemble_stiffness(V);
  const auto B = assemble_coupling(G, V);
  const auto load = assemble_load(f, V);
  Eigen::SimplicialLDLT<SparseMat> ldlt(K);
  auto dual_norm = [&](const Eigen::VectorXd& ell) {
    return std::sqrt(ell.dot(ldlt.solve(ell)));
  };
  const double method_err = dual_norm(load - B * sol.f_coeffs);
  CHECK(method_err == doctest::Approx(sol.estimator_global).epsilon(1e-9));

  std::mt19937 rng(77);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd g(G.n_generators);
    for (int i = 0; i < g.size(); ++i)
      g[i] = sol.f_coeffs[i] + gauss(rng) * (trial % 2 ? 0.1 : 2.0);
    REQUIRE(dual_norm(load - B * g) >= method_err - 1e-12);
  }
  // zero-gradient condition of the quadratic objective at the minimizer
  const Eigen::VectorXd grad = -2.0 * B.transpose() * ldlt.solve(load - B * sol.f_coeffs);
  CHECK(grad.lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("discrete dual norm closed forms at q=2") {
  const auto line = build_interval_mesh(6, 0.0, 1.0);
  const auto V = TestSpace::make(line, TestSpaceKind::P2);
  const auto K = assemble_stiffness(V);
  CHECK(discrete_dual_norm(Eigen::VectorXd::Zero(V.n_dofs), V, 2.0) == 0.0);

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd c(V.n_dofs);
  for (int i = 0; i < c.size(); ++i) c[i] = u(rng);
  const Eigen::VectorXd ell = K * c;
  CHECK(discrete_dual_norm(ell, V, 2.0) ==
        doctest::Approx(std::sqrt(c.dot(K * c))).epsilon(1e-9));
}

TEST_CASE("a priori and quasi-optimality bounds") {
  const auto line = build_interval_mesh(8, 0.0, 1.0);
  auto [G, V] = make_pair_spaces(line, PairingKind::P0_PdPlus1);
  const auto f = RoughFunctional::dirac({std::sqrt(2.0) / 2.0, 0.0});
  const auto B = assemble_coupling(G, V);
  const auto load = assemble_load(f, V);
  std::mt19937 rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (double p : {2.0, 1.5}) {
    const auto sol = solve_projection(f, G, V, p);
    // estimator equals the discrete dual error and is bounded by ‖f‖
    CHECK(sol.estimator_global <= discrete_dual_norm(load, V, p) + 1e-10);
    for (int trial = 0; trial < 5; ++trial) {
      Eigen::VectorXd g(G.n_generators);
      for (int i = 0; i < g.size(); ++i) g[i] = sol.f_coeffs[i] + 0.5 * gauss(rng);
      const Eigen::VectorXd res = load - B * g;
      REQUIRE(sol.estimator_global <= discrete_dual_norm(res, V, p) + 1e-9);
    }
  }
}

TEST_CASE("nonconvergence carries the best iterate") {
  const auto line = build_interval_mesh(4, 0.0, 1.0);
  auto [G, V] = make_pair_spaces(line, PairingKind::P0_PdPlus1);
  SolverOptions opts;
  opts.max_newton = 0;  // forces failure at the initial stage
  try {
    solve_projection(RoughFunctional::dirac({0.5, 0.0}), G, V, 2.0, opts);
    FAIL("expected nonconvergence");
  } catch (const NonconvergenceError& e) {
    CHECK(e.code() == ErrorCode::Nonconvergence);
    CHECK(e.best().r_m.coeffs.size() == V.n_dofs);
    CHECK(e.best().p == doctest::Approx(2.0));
  }
}

TEST_CASE("invalid exponents are rejected") {
  const auto line = build_interval_mesh(2, 0.0, 1.0);
  auto [G, V] = make_pair_spaces(line, PairingKind::P0_P1Bubble);
  const auto f = RoughFunctional::dirac({0.5, 0.0});
  CHECK_THROWS_AS(solve_projection(f, G, V, 2.5), Error);
  CHECK_THROWS_AS(solve_projection(f, G, V, 1.0), Error);
}

}  // TEST_SUITE
