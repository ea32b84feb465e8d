#pragma once

#include <string>
#include <vector>

#include "core/pde.hpp"

namespace negproj {

enum class ExperimentKind { Delta1d, Ode1d, Delta2d, LineSource, Instability };
enum class StudyMode { Uniform, Adaptive };

// One experiment description, parsed from flat key=value text or JSON with
// the same keys. Uniform studies sweep dyadic levels [level_min, level_max];
// adaptive studies run to tol (or a DOF budget) from a coarse start mesh.
struct StudyConfig {
  ExperimentKind experiment = ExperimentKind::Delta1d;
  std::vector<double> p_values{2.0};
  StudyMode mode = StudyMode::Uniform;
  int level_min = 0;
  int level_max = 4;
  double tol = 1e-3;
  std::vector<double> tols;  // tolerance sweeps; empty means {tol}
  double alpha = 0.5;
  int mesh_n = 4;  // start mesh resolution (1D intervals, 2D grid)
  double a = 0.0;
  double x0 = 0.70710678118654752440;
  std::vector<double> epsilons;  // instability sweep; empty means 1e-1..1e-9
  int max_iterations = 30;
  int max_total_dofs = 0;
  bool snapshots = false;  // per-stage mesh/solution/sample dumps
  std::string out_dir = "out";

  static StudyConfig parse_text(const std::string& text);
  static StudyConfig parse_file(const std::string& path);
  std::string to_text() const;  // canonical key=value form, archived with runs
};

struct ConvergenceRecord {
  int level = 0;
  int ndofs = 0;          // dim(G) + dim(V)
  double dofs_metric = 0.0;  // ndofs in 1D, sqrt(ndofs) in 2D
  double estimator = 0.0;
  double fitted_rate = 0.0;    // tail fit, repeated on every row
  double expected_rate = 0.0;  // 1/p, 1-2/q, or 1-1/q
};

// Least-squares slope of log(est) vs log(x) over the last (up to) 4 points,
// sign-flipped so decaying data reports a positive rate.
double fit_rate_loglog(const std::vector<double>& x, const std::vector<double>& est);

// Header: level,ndofs,dofs_metric,estimator,fitted_rate,expected_rate
void write_convergence_csv(const std::vector<ConvergenceRecord>& records,
                           const std::string& path);

struct StudySeries {
  double p = 2.0;
  std::vector<ConvergenceRecord> records;
  AdaptHistory history;  // filled for adaptive runs
  double fitted_rate = 0.0;
  double expected_rate = 0.0;
};

struct StudyResult {
  std::vector<StudySeries> series;  // one per p value
  std::vector<std::string> files;
};

// delta1d / delta2d / linesource projection studies, uniform or adaptive.
StudyResult run_project_study(const StudyConfig& cfg);

// Uniform ODE study: project the delta, solve the regularized problem on the
// same mesh, and compare the decay of the H1 error with the estimator.
struct OdeStudyLevel {
  int level = 0;
  int n_elements = 0;
  int ndofs = 0;
  double estimator = 0.0;
  double h1_error = 0.0;
};
struct OdeStudyResult {
  std::vector<OdeStudyLevel> levels;
  double rate_estimator = 0.0;
  double rate_h1_error = 0.0;
  std::vector<std::string> files;
};
OdeStudyResult run_ode_study(const StudyConfig& cfg);

// The L2-vs-dual-norm instability demo: exact L2 projection coefficient
// against the discrete dual-norm projection onto span{phi_eps}.
struct InstabilityRow {
  double epsilon = 0.0;
  double l2_proj_norm = 0.0;
  double h1neg_proj_l2norm = 0.0;
};
struct InstabilityResult {
  std::vector<InstabilityRow> rows;
  double l2_tail_slope = 0.0;  // log-log tail fit, expected near -1/4
  double h1neg_max_ratio = 0.0;
  std::vector<std::string> files;
};
InstabilityResult run_instability_study(const StudyConfig& cfg);

// Tolerance sweep of the two-stage driver; one JSON per run plus a summary.
struct Algorithm1StudyRun {
  double tol = 0.0;
  Algorithm1Result result;
};
struct Algorithm1StudyResult {
  std::vector<Algorithm1StudyRun> runs;
  std::vector<std::string> files;
};
Algorithm1StudyResult run_algorithm1_study(const StudyConfig& cfg);

// Adaptive 2D snapshots: a tolerance ladder of projections of the disk
// delta, each with mesh, solution, and sampled Galerkin solve on a grid.
struct SnapshotResult {
  std::vector<std::string> files;
};
SnapshotResult run_delta2d_snapshots(const StudyConfig& cfg);

// Dispatcher used by the study subcommand; returns every file written.
std::vector<std::string> run_study(const StudyConfig& cfg);

}  // namespace negproj
