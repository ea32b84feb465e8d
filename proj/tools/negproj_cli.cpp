// Command-line front end for the projection experiments. Every subcommand
// assembles a flat key=value config and hands it to run_study, so the CLI,
// config files, and the C API all share one validation path.
//
// Exit codes: 0 success, 2 usage or config error, 1 solver or I/O failure.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "core/study.hpp"
#include "core/types.hpp"

namespace {

struct CliOptions {
  std::string experiment;
  std::string p;
  std::string mode;
  std::string levels;
  std::string tol;
  std::string tols;
  std::string alpha;
  std::string mesh_n;
  std::string a;
  std::string x0;
  std::string epsilons;
  std::string max_iterations;
  std::string max_total_dofs;
  std::string out;
  std::string config;
  bool snapshots = false;
};

void add_sweep_options(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--p", o.p, "exponent(s) in (1,2], comma separated");
  cmd->add_option("--mode", o.mode, "refinement mode")
      ->check(CLI::IsMember({"uniform", "adaptive"}));
  cmd->add_option("--levels", o.levels, "dyadic levels, `a..b` or a count");
  cmd->add_option("--tol", o.tol, "adaptive stopping tolerance");
  cmd->add_option("--alpha", o.alpha, "bulk marking fraction in [0,1]");
  cmd->add_option("--mesh-n", o.mesh_n, "start mesh resolution");
  cmd->add_option("--x0", o.x0, "delta location in (0,1)");
  cmd->add_option("--max-iterations", o.max_iterations,
                  "adaptive iteration cap");
  cmd->add_option("--max-total-dofs", o.max_total_dofs,
                  "adaptive DOF budget, 0 = unlimited");
}

// count() throws for options a subcommand never registered; probe first.
bool given(const CLI::App* cmd, const std::string& name) {
  const CLI::Option* opt = cmd->get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

// Later key=value lines win, so flags override the config file.
std::string build_config_text(const CLI::App* cmd, const CliOptions& o) {
  std::string text;
  if (given(cmd, "--config")) {
    text = negproj::StudyConfig::parse_file(o.config).to_text();
    if (!text.empty() && text.back() != '\n') text += '\n';
  }
  auto put = [&text](const char* key, const std::string& value) {
    text += std::string(key) + "=" + value + "\n";
  };
  if (given(cmd, "--experiment")) put("experiment", o.experiment);
  if (given(cmd, "--p")) put("p", o.p);
  if (given(cmd, "--mode")) put("mode", o.mode);
  if (given(cmd, "--levels")) put("levels", o.levels);
  if (given(cmd, "--tol")) put("tol", o.tol);
  if (given(cmd, "--tols")) put("tols", o.tols);
  if (given(cmd, "--alpha")) put("alpha", o.alpha);
  if (given(cmd, "--mesh-n")) put("mesh_n", o.mesh_n);
  if (given(cmd, "--a")) put("a", o.a);
  if (given(cmd, "--x0")) put("x0", o.x0);
  if (given(cmd, "--epsilons")) put("epsilons", o.epsilons);
  if (given(cmd, "--max-iterations")) put("max_iterations", o.max_iterations);
  if (given(cmd, "--max-total-dofs")) put("max_total_dofs", o.max_total_dofs);
  if (given(cmd, "--snapshots")) put("snapshots", o.snapshots ? "true" : "false");
  if (given(cmd, "--out")) put("out", o.out);
  return text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"negative-norm projection experiments"};
  app.require_subcommand(1);

  CliOptions o;

  CLI::App* project = app.add_subcommand(
      "project", "convergence study for a projected rough functional");
  project->add_option("--experiment", o.experiment, "functional to project")
      ->required()
      ->check(CLI::IsMember({"delta1d", "delta2d", "linesource"}));
  add_sweep_options(project, o);
  project->add_option("--out", o.out, "output directory")->required();

  CLI::App* instability = app.add_subcommand(
      "instability", "L2 vs dual-norm projection of a mollified singular load");
  instability->add_option("--epsilons", o.epsilons,
                          "mollifier widths, comma separated");
  instability->add_option("--out", o.out, "output directory")->required();

  CLI::App* pde = app.add_subcommand(
      "pde", "projection followed by a PDE solve with the regularized load");
  pde->add_option("--experiment", o.experiment,
                  "ode1d: refinement study, or the two-stage adaptive "
                  "algorithm with --mode adaptive or --tols; "
                  "delta2d: adaptive tolerance ladder with field snapshots")
      ->required()
      ->check(CLI::IsMember({"ode1d", "delta2d"}));
  add_sweep_options(pde, o);
  pde->add_option("--tols", o.tols, "tolerance ladder, comma separated");
  pde->add_option("--a", o.a, "reaction coefficient a >= 0");
  pde->add_option("--out", o.out, "output directory")->required();

  CLI::App* study = app.add_subcommand(
      "study", "run any experiment from a config file, flags override");
  study->add_option("--config", o.config, "key=value or JSON config file")
      ->check(CLI::ExistingFile);
  study->add_option("--experiment", o.experiment, "experiment name")
      ->check(CLI::IsMember(
          {"delta1d", "ode1d", "delta2d", "linesource", "instability"}));
  add_sweep_options(study, o);
  study->add_option("--tols", o.tols, "tolerance ladder, comma separated");
  study->add_option("--a", o.a, "reaction coefficient a >= 0");
  study->add_option("--epsilons", o.epsilons, "mollifier widths");
  study->add_flag("--snapshots", o.snapshots, "dump per-stage meshes/fields");
  study->add_option("--out", o.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  CLI::App* cmd = app.get_subcommands().front();
  std::string text;
  if (cmd == instability) text += "experiment=instability\n";

  try {
    text += build_config_text(cmd, o);
    if (cmd == pde && o.experiment == "delta2d") text += "snapshots=true\n";
    auto cfg = negproj::StudyConfig::parse_text(text);
    for (const auto& file : negproj::run_study(cfg)) std::cout << file << "\n";
    return 0;
  } catch (const negproj::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return (e.code() == negproj::ErrorCode::ParseError ||
            e.code() == negproj::ErrorCode::InvalidArgument)
               ? 2
               : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
