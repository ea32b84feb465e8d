#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "core/mesh.hpp"
#include "core/mixed_solver.hpp"
#include "core/solution_io.hpp"

using namespace negproj;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_SUITE("solution_io") {

TEST_CASE("round trip preserves every decimal") {
  const auto line = build_interval_mesh(4, 0.0, 1.0);
  auto [G, V] = make_pair_spaces(line, PairingKind::P0_PdPlus1);
  const auto sol =
      solve_projection(RoughFunctional::dirac({std::sqrt(2.0) / 2.0, 0.0}), G, V, 1.5);
  const auto path = temp_file("negproj_sol.json");
  save_solution(sol, path.string());
  const auto back = load_solution(path.string());

  CHECK(back.version == 1);
  CHECK(back.p == sol.p);
  CHECK(back.q == sol.q);
  REQUIRE(back.f_coeffs.size() == static_cast<size_t>(sol.f_coeffs.size()));
  for (size_t i = 0; i < back.f_coeffs.size(); ++i)
    CHECK(back.f_coeffs[i] == sol.f_coeffs[static_cast<int>(i)]);  // bitwise
  REQUIRE(back.r_coeffs.size() == static_cast<size_t>(sol.r_m.coeffs.size()));
  for (size_t i = 0; i < back.r_coeffs.size(); ++i)
    CHECK(back.r_coeffs[i] == sol.r_m.coeffs[static_cast<int>(i)]);
  CHECK(back.estimator_global == sol.estimator_global);
  CHECK(back.estimator_local == sol.estimator_local);
  CHECK(back.continuation_path == sol.continuation_path);
  CHECK(back.newton_iters == sol.newton_iters);
  CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));

  // estimator recomputed from the loaded coefficients matches the stored one
  FemFunction r(V);
  for (int i = 0; i < V.n_dofs; ++i) r.coeffs[i] = back.r_coeffs[static_cast<size_t>(i)];
  const double recomputed = std::pow(wq_seminorm(r, back.q), back.q - 1.0);
  CHECK(recomputed == doctest::Approx(back.estimator_global).epsilon(1e-12));
  std::filesystem::remove(path);
}

TEST_CASE("version mismatch is an explicit error") {
  const auto path = temp_file("negproj_badver.json");
  std::ofstream out(path);
  out << R"({"version": 99, "p": 2.0, "q": 2.0,
             "dims": {"n_trial": 0, "n_test": 0},
             "f_coeffs": [], "r_coeffs": [],
             "estimator_global": 0.0, "estimator_local": [],
             "newton": {"iters": 0, "continuation_path": [], "final_residual": 0.0}})";
  out.close();
  try {
    load_solution(path.string());
    FAIL("expected version mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::VersionMismatch);
  }
  std::filesystem::remove(path);
}

TEST_CASE("malformed and missing files") {
  const auto path = temp_file("negproj_badjson.json");
  std::ofstream out(path);
  out << "{ not json";
  out.close();
  try {
    load_solution(path.string());
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
  }
  std::filesystem::remove(path);

  try {
    load_solution("/nonexistent/sol.json");
    FAIL("expected io error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
}

}  // TEST_SUITE
