#include "core/adapt.hpp"

#include <algorithm>
#include <sstream>

#include "core/mesh_io.hpp"

namespace negproj {

std::vector<int> mark_elements(const std::vector<double>& eta_local, double alpha) {
  double max_eta = 0.0;
  for (double e : eta_local) max_eta = std::max(max_eta, e);
  std::vector<int> marked;
  for (size_t i = 0; i < eta_local.size(); ++i)
    if (eta_local[i] > alpha * max_eta) marked.push_back(static_cast<int>(i));
  return marked;
}

AdaptiveResult adaptive_project(const RoughFunctional& f, const SimplicialMesh& mesh0,
                                PairingKind pairing, double p, const AdaptConfig& config,
                                const SolverOptions& opts) {
  if (!(config.tol > 0.0))
    fail(ErrorCode::InvalidArgument, "adaptive_project: tol must be positive");
  if (!(config.alpha >= 0.0 && config.alpha <= 1.0))
    fail(ErrorCode::InvalidArgument, "adaptive_project: alpha must lie in [0,1]");
  if (config.max_iterations < 1)
    fail(ErrorCode::InvalidArgument, "adaptive_project: need max_iterations >= 1");

  AdaptiveResult result;
  auto mesh = std::make_unique<SimplicialMesh>(mesh0);
  AdaptHistory history;

  for (int level = 0;; ++level) {
    auto trial = std::make_unique<TrialActionSpace>();
    auto test = std::make_unique<TestSpace>();
    std::tie(*trial, *test) = make_pair_spaces(*mesh, pairing);
    MixedSolution sol = solve_projection(f, *trial, *test, p, opts);

    AdaptIteration row;
    row.level = level;
    row.n_elements = mesh->num_elements();
    row.total_dofs = trial->n_generators + test->n_dofs;
    row.estimator = sol.estimator_global;

    const bool converged = sol.estimator_global <= config.tol;
    const bool out_of_iterations = level + 1 >= config.max_iterations;
    const bool out_of_dofs =
        config.max_total_dofs > 0 && row.total_dofs >= config.max_total_dofs;

    std::vector<int> marked;
    if (!converged && !out_of_iterations && !out_of_dofs)
      marked = mark_elements(sol.estimator_local, config.alpha);
    row.marked = static_cast<int>(marked.size());
    history.iterations.push_back(row);

    if (converged || out_of_iterations || out_of_dofs || marked.empty()) {
      history.reached_tol = converged;
      history.budget_exhausted = !converged && (out_of_iterations || out_of_dofs);
      result.mesh = std::move(mesh);
      result.trial = std::move(trial);
      result.test = std::move(test);
      result.solution = std::move(sol);
      result.history = std::move(history);
      return result;
    }

    mesh = std::make_unique<SimplicialMesh>(refine(*mesh, marked));
  }
}

void write_history_csv(const AdaptHistory& history, const std::string& path) {
  std::ostringstream out;
  out << "level,n_elements,ndofs,estimator,marked\n";
  for (const AdaptIteration& it : history.iterations)
    out << it.level << ',' << it.n_elements << ',' << it.total_dofs << ','
        << format_double_17(it.estimator) << ',' << it.marked << '\n';
  atomic_write_file(path, out.str());
}

}  // namespace negproj
