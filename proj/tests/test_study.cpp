#include "core/study.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "core/mesh_io.hpp"
#include "doctest.h"

using namespace negproj;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(static_cast<bool>(in));
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

std::string fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("negproj_study_" + name);
  std::filesystem::remove_all(dir);
  return dir.string();
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  REQUIRE(false);
  return ErrorCode::Internal;
}

}  // namespace

TEST_CASE("study config parses flat text and round trips") {
  const std::string text =
      "# projection sweep\n"
      "experiment = delta2d\n"
      "p = 1.5, 1.2   # two exponents\n"
      "mode = adaptive\n"
      "levels = 2..6\n"
      "tol = 5e-3\n"
      "tols = 0.4, 0.2\n"
      "alpha = 0.4\n"
      "mesh_n = 8\n"
      "a = 2\n"
      "x0 = 0.25\n"
      "max_iterations = 12\n"
      "max_total_dofs = 900\n"
      "snapshots = true\n"
      "out = results/run1\n";
  const StudyConfig cfg = StudyConfig::parse_text(text);
  CHECK(cfg.experiment == ExperimentKind::Delta2d);
  REQUIRE(cfg.p_values.size() == 2);
  CHECK(cfg.p_values[0] == doctest::Approx(1.5));
  CHECK(cfg.p_values[1] == doctest::Approx(1.2));
  CHECK(cfg.mode == StudyMode::Adaptive);
  CHECK(cfg.level_min == 2);
  CHECK(cfg.level_max == 6);
  CHECK(cfg.tol == doctest::Approx(5e-3));
  REQUIRE(cfg.tols.size() == 2);
  CHECK(cfg.alpha == doctest::Approx(0.4));
  CHECK(cfg.mesh_n == 8);
  CHECK(cfg.a == doctest::Approx(2.0));
  CHECK(cfg.x0 == doctest::Approx(0.25));
  CHECK(cfg.max_iterations == 12);
  CHECK(cfg.max_total_dofs == 900);
  CHECK(cfg.snapshots);
  CHECK(cfg.out_dir == "results/run1");

  const StudyConfig again = StudyConfig::parse_text(cfg.to_text());
  CHECK(again.to_text() == cfg.to_text());
  CHECK(again.experiment == cfg.experiment);
  CHECK(again.level_min == cfg.level_min);
  CHECK(again.level_max == cfg.level_max);
  CHECK(again.p_values == cfg.p_values);
  CHECK(again.tols == cfg.tols);
  CHECK(again.snapshots == cfg.snapshots);
}

TEST_CASE("study config parses json with the same keys") {
  const std::string text = R"({
    "experiment": "linesource",
    "p": [2.0, 1.5],
    "mode": "uniform",
    "levels": "1..3",
    "tol": 0.01,
    "mesh_n": 4,
    "snapshots": false,
    "out": "ls_out"
  })";
  const StudyConfig cfg = StudyConfig::parse_text(text);
  CHECK(cfg.experiment == ExperimentKind::LineSource);
  REQUIRE(cfg.p_values.size() == 2);
  CHECK(cfg.level_min == 1);
  CHECK(cfg.level_max == 3);
  CHECK(cfg.tol == doctest::Approx(0.01));
  CHECK(cfg.out_dir == "ls_out");

  const StudyConfig arr = StudyConfig::parse_text(R"({"levels": [2, 5], "p": 1.8})");
  CHECK(arr.level_min == 2);
  CHECK(arr.level_max == 5);
  REQUIRE(arr.p_values.size() == 1);
  CHECK(arr.p_values[0] == doctest::Approx(1.8));

  const StudyConfig count = StudyConfig::parse_text(R"({"levels": 5})");
  CHECK(count.level_min == 0);
  CHECK(count.level_max == 4);
}

TEST_CASE("study config rejects malformed input") {
  CHECK(code_of([] { StudyConfig::parse_text("bogus_key=1\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { StudyConfig::parse_text("p=1.0\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { StudyConfig::parse_text("p=2.5\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { StudyConfig::parse_text("tol=0\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { StudyConfig::parse_text("alpha=1.5\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { StudyConfig::parse_text("x0=1\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { StudyConfig::parse_text("levels=5..2\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { StudyConfig::parse_text("levels=-1..2\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { StudyConfig::parse_text("mesh_n=zero\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { StudyConfig::parse_text("just a line\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { StudyConfig::parse_text("epsilons=0.1,2\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { StudyConfig::parse_text("{\"p\": [2.0,"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { StudyConfig::parse_text("{\"levels\": true}"); }) ==
        ErrorCode::ParseError);
  CHECK(code_of([] { StudyConfig::parse_file("/nonexistent/config.txt"); }) ==
        ErrorCode::IoError);
  CHECK_NOTHROW(StudyConfig::parse_text(""));
}

TEST_CASE("fit_rate_loglog recovers a power law from the tail") {
  std::vector<double> x, est;
  for (double v : {10.0, 20.0, 40.0, 80.0, 160.0}) {
    x.push_back(v);
    est.push_back(7.0 * std::pow(v, -0.73));
  }
  CHECK(fit_rate_loglog(x, est) == doctest::Approx(0.73).epsilon(1e-12));

  // Only the last four points enter: corrupting the first changes nothing.
  est[0] *= 50.0;
  CHECK(fit_rate_loglog(x, est) == doctest::Approx(0.73).epsilon(1e-12));

  // Nonpositive entries are skipped, degenerate data reports zero.
  CHECK(fit_rate_loglog({10.0}, {1.0}) == 0.0);
  CHECK(fit_rate_loglog({10.0, 20.0}, {0.0, 0.0}) == 0.0);
  CHECK(fit_rate_loglog({10.0, 10.0, 20.0}, {-1.0, 1.0, 0.5}) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("write_convergence_csv emits the exact header and 17 digit rows") {
  const std::string dir = fresh_dir("csv");
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/records.csv";
  std::vector<ConvergenceRecord> recs(2);
  recs[0] = {3, 23, 23.0, 0.125, 0.5, 0.5};
  recs[1] = {4, 47, 47.0, 1.0 / 3.0, 0.5, 0.5};
  write_convergence_csv(recs, path);
  const std::string text = read_file(path);
  std::stringstream ss(text);
  std::string line;
  REQUIRE(std::getline(ss, line));
  CHECK(line == "level,ndofs,dofs_metric,estimator,fitted_rate,expected_rate");
  REQUIRE(std::getline(ss, line));
  CHECK(line == "3,23,23,0.125,0.5,0.5");
  REQUIRE(std::getline(ss, line));
  CHECK(line == "4,47,47,0.33333333333333331,0.5,0.5");
  CHECK_FALSE(std::getline(ss, line));
}

TEST_CASE("instability study matches the closed form L2 column") {
  StudyConfig cfg;
  cfg.experiment = ExperimentKind::Instability;
  cfg.epsilons = {1e-2, 1e-3};
  cfg.out_dir = fresh_dir("inst_small");
  const InstabilityResult res = run_instability_study(cfg);
  REQUIRE(res.rows.size() == 2);
  const double s3 = std::sqrt(3.0) / 3.0;
  for (const auto& row : res.rows) {
    const double eps = row.epsilon;
    const double alpha =
        4.0 * (std::pow(eps, -0.25) - (1.0 - std::pow(eps, 0.75)) / (1.0 - eps));
    CHECK(row.l2_proj_norm == doctest::Approx(std::abs(alpha) * s3).epsilon(1e-13));
    CHECK(row.h1neg_proj_l2norm > 0.1);
    CHECK(row.h1neg_proj_l2norm < 10.0);
  }
  // The L2 norm of the projection grows as the mass concentrates.
  CHECK(res.rows[1].l2_proj_norm > res.rows[0].l2_proj_norm);

  const std::string text = read_file(cfg.out_dir + "/instability.csv");
  CHECK(text.rfind("epsilon,l2_proj_norm,h1neg_proj_l2norm\n", 0) == 0);
  CHECK(count_lines(text) == 3);
}

TEST_CASE("instability default sweep blows up in L2 but not in the dual norm") {
  StudyConfig cfg;
  cfg.experiment = ExperimentKind::Instability;
  cfg.out_dir = fresh_dir("inst_full");
  const InstabilityResult res = run_instability_study(cfg);
  REQUIRE(res.rows.size() == 9);
  for (size_t i = 1; i < res.rows.size(); ++i) {
    CHECK(res.rows[i].epsilon < res.rows[i - 1].epsilon);
    CHECK(res.rows[i].l2_proj_norm > res.rows[i - 1].l2_proj_norm);
  }
  // eps^{-1/4} growth of the L2 column, read off the tail.
  CHECK(res.l2_tail_slope == doctest::Approx(-0.25).epsilon(0.08));
  CHECK(std::abs(res.l2_tail_slope + 0.25) < 0.02);
  // The dual-norm projection stays essentially constant over eight decades.
  CHECK(res.h1neg_max_ratio < 10.0);
  CHECK(res.h1neg_max_ratio >= 1.0);
}

TEST_CASE("delta1d uniform study reproduces the 1/p rate") {
  StudyConfig cfg;
  cfg.experiment = ExperimentKind::Delta1d;
  cfg.p_values = {2.0};
  cfg.level_min = 3;
  cfg.level_max = 7;
  cfg.out_dir = fresh_dir("d1_uniform");
  const StudyResult res = run_project_study(cfg);
  REQUIRE(res.series.size() == 1);
  const StudySeries& s = res.series.front();
  CHECK(s.expected_rate == doctest::Approx(0.5));
  CHECK(std::abs(s.fitted_rate - 0.5) < 0.08);
  REQUIRE(s.records.size() == 5);
  for (size_t i = 0; i < s.records.size(); ++i) {
    CHECK(s.records[i].level == 3 + static_cast<int>(i));
    CHECK(s.records[i].estimator > 0.0);
    CHECK(s.records[i].fitted_rate == doctest::Approx(s.fitted_rate));
    if (i) CHECK(s.records[i].ndofs > s.records[i - 1].ndofs);
  }
  // 1D metric is the raw dof count.
  CHECK(s.records[0].dofs_metric == doctest::Approx(s.records[0].ndofs));

  const std::string text = read_file(cfg.out_dir + "/delta1d_p2_uniform.csv");
  CHECK(count_lines(text) == 6);
  CHECK(read_file(cfg.out_dir + "/config.txt") == cfg.to_text());
}

TEST_CASE("delta1d adaptive study records the marking history") {
  StudyConfig cfg;
  cfg.experiment = ExperimentKind::Delta1d;
  cfg.p_values = {2.0};
  cfg.mode = StudyMode::Adaptive;
  cfg.tol = 2e-2;
  cfg.mesh_n = 4;
  cfg.out_dir = fresh_dir("d1_adaptive");
  const StudyResult res = run_project_study(cfg);
  REQUIRE(res.series.size() == 1);
  const StudySeries& s = res.series.front();
  CHECK(s.history.reached_tol);
  REQUIRE_FALSE(s.records.empty());
  CHECK(s.records.back().estimator <= 2e-2);
  CHECK(s.records.size() == s.history.iterations.size());
  CHECK(std::filesystem::exists(cfg.out_dir + "/delta1d_p2_adaptive.csv"));
  CHECK(std::filesystem::exists(cfg.out_dir + "/delta1d_p2_history.csv"));
}

TEST_CASE("ode study rates for the estimator and the H1 error coincide") {
  StudyConfig cfg;
  cfg.experiment = ExperimentKind::Ode1d;
  cfg.a = 0.0;
  cfg.mesh_n = 4;
  cfg.level_min = 0;
  cfg.level_max = 4;
  cfg.out_dir = fresh_dir("ode");
  const OdeStudyResult res = run_ode_study(cfg);
  REQUIRE(res.levels.size() == 5);
  CHECK(res.levels.front().n_elements == 4);
  CHECK(res.levels.back().n_elements == 64);
  for (size_t i = 1; i < res.levels.size(); ++i)
    CHECK(res.levels[i].h1_error < res.levels[i - 1].h1_error);
  CHECK(res.rate_estimator > 0.2);
  CHECK(res.rate_h1_error > 0.2);
  CHECK(std::abs(res.rate_estimator - res.rate_h1_error) <= 0.05);

  const std::string errors = read_file(cfg.out_dir + "/ode_errors.csv");
  CHECK(errors.rfind("level,n_elements,ndofs,estimator,h1_error\n", 0) == 0);
  CHECK(count_lines(errors) == 6);
  const std::string samples = read_file(cfg.out_dir + "/ode_samples_level0.csv");
  CHECK(samples.rfind("x,u_nh,u_exact\n", 0) == 0);
  CHECK(count_lines(samples) == 202);

  const auto summary = nlohmann::json::parse(read_file(cfg.out_dir + "/ode_summary.json"));
  CHECK(summary["rate_estimator"].get<double>() == doctest::Approx(res.rate_estimator));
  CHECK(summary["rate_h1_error"].get<double>() == doctest::Approx(res.rate_h1_error));
  CHECK(summary["levels"].size() == 5);
}

TEST_CASE("algorithm1 study sweeps tolerances and archives each run") {
  StudyConfig cfg;
  cfg.experiment = ExperimentKind::Ode1d;
  cfg.mode = StudyMode::Adaptive;
  cfg.a = 2.0;
  cfg.tols = {1e-1, 1e-2};
  cfg.mesh_n = 4;
  cfg.out_dir = fresh_dir("alg1");
  const Algorithm1StudyResult res = run_algorithm1_study(cfg);
  REQUIRE(res.runs.size() == 2);
  for (const auto& run : res.runs) {
    CHECK(run.result.solution.h1_error > 0.0);
    CHECK(run.result.solution.h1_error <= 10.0 * run.tol);
    CHECK(run.result.stage1_history.reached_tol);
    CHECK(run.result.stage2_history.reached_tol);
  }
  CHECK(res.runs[1].result.solution.h1_error < res.runs[0].result.solution.h1_error);

  const std::string csv = read_file(cfg.out_dir + "/algorithm1.csv");
  CHECK(csv.rfind(
            "tol,h1_error,stage1_estimator,stage2_estimator,stage1_levels,"
            "stage2_levels,pde_ndofs\n",
            0) == 0);
  CHECK(count_lines(csv) == 3);

  const auto j = nlohmann::json::parse(read_file(cfg.out_dir + "/algorithm1_tol0.1.json"));
  CHECK(j["tol"].get<double>() == doctest::Approx(0.1));
  CHECK(j["stage1"]["iterations"].size() ==
        res.runs[0].result.stage1_history.iterations.size());

  const SimplicialMesh proj =
      load_mesh(cfg.out_dir + "/algorithm1_tol0.01_projection_mesh.txt");
  const SimplicialMesh pde = load_mesh(cfg.out_dir + "/algorithm1_tol0.01_pde_mesh.txt");
  CHECK(pde.num_elements() >= proj.num_elements());
  CHECK(proj.num_elements() ==
        res.runs[1].result.projection_mesh->num_elements());
}

TEST_CASE("delta2d snapshot ladder drives estimator and L2 error down") {
  StudyConfig cfg;
  cfg.experiment = ExperimentKind::Delta2d;
  cfg.p_values = {1.9};
  cfg.snapshots = true;
  cfg.tols = {0.4, 0.2};
  cfg.max_iterations = 40;
  cfg.out_dir = fresh_dir("snap");
  const SnapshotResult res = run_delta2d_snapshots(cfg);
  for (int k = 1; k <= 2; ++k) {
    const std::string tag = cfg.out_dir + "/delta2d_stage" + std::to_string(k);
    CHECK(std::filesystem::exists(tag + "_mesh.txt"));
    CHECK(std::filesystem::exists(tag + "_solution.json"));
    const std::string samples = read_file(tag + "_samples.csv");
    CHECK(samples.rfind("x,y,u\n", 0) == 0);
    CHECK(count_lines(samples) > 100);
  }
  const std::string stages = read_file(cfg.out_dir + "/delta2d_stages.csv");
  CHECK(stages.rfind("stage,tol,n_elements,ndofs,estimator,l2_error\n", 0) == 0);
  CHECK(count_lines(stages) == 3);

  std::stringstream ss(stages);
  std::string line;
  std::getline(ss, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(ss, line)) {
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    REQUIRE(row.size() == 6);
    rows.push_back(row);
  }
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][4] <= 0.4);
  CHECK(rows[1][4] <= 0.2);
  CHECK(rows[1][5] < rows[0][5]);
}

TEST_CASE("run_study dispatches on experiment kind") {
  auto has_file = [](const std::vector<std::string>& files, const std::string& suffix) {
    for (const auto& f : files)
      if (f.size() >= suffix.size() && f.compare(f.size() - suffix.size(),
                                                 suffix.size(), suffix) == 0)
        return true;
    return false;
  };

  StudyConfig inst;
  inst.experiment = ExperimentKind::Instability;
  inst.epsilons = {1e-2};
  inst.out_dir = fresh_dir("disp_inst");
  CHECK(has_file(run_study(inst), "instability.csv"));

  StudyConfig d1;
  d1.experiment = ExperimentKind::Delta1d;
  d1.level_min = 2;
  d1.level_max = 4;
  d1.out_dir = fresh_dir("disp_d1");
  CHECK(has_file(run_study(d1), "delta1d_p2_uniform.csv"));

  StudyConfig ode;
  ode.experiment = ExperimentKind::Ode1d;
  ode.level_min = 0;
  ode.level_max = 1;
  ode.out_dir = fresh_dir("disp_ode");
  CHECK(has_file(run_study(ode), "ode_errors.csv"));

  StudyConfig alg;
  alg.experiment = ExperimentKind::Ode1d;
  alg.mode = StudyMode::Adaptive;
  alg.tol = 0.5;
  alg.out_dir = fresh_dir("disp_alg");
  CHECK(has_file(run_study(alg), "algorithm1.csv"));

  StudyConfig snap;
  snap.experiment = ExperimentKind::Delta2d;
  snap.snapshots = true;
  snap.p_values = {1.9};
  snap.tols = {0.5};
  snap.out_dir = fresh_dir("disp_snap");
  CHECK(has_file(run_study(snap), "delta2d_stages.csv"));
}

TEST_CASE("study reruns produce byte-identical csv output") {
  StudyConfig cfg;
  cfg.experiment = ExperimentKind::Delta1d;
  cfg.p_values = {1.5};
  cfg.level_min = 2;
  cfg.level_max = 5;
  cfg.out_dir = fresh_dir("repro_a");
  run_project_study(cfg);
  const std::string first = read_file(cfg.out_dir + "/delta1d_p1.5_uniform.csv");

  StudyConfig cfg2 = cfg;
  cfg2.out_dir = fresh_dir("repro_b");
  run_project_study(cfg2);
  const std::string second = read_file(cfg2.out_dir + "/delta1d_p1.5_uniform.csv");
  CHECK(first == second);

  StudyConfig inst;
  inst.experiment = ExperimentKind::Instability;
  inst.epsilons = {1e-1, 1e-4};
  inst.out_dir = fresh_dir("repro_inst_a");
  run_instability_study(inst);
  StudyConfig inst2 = inst;
  inst2.out_dir = fresh_dir("repro_inst_b");
  run_instability_study(inst2);
  CHECK(read_file(inst.out_dir + "/instability.csv") ==
        read_file(inst2.out_dir + "/instability.csv"));
}
