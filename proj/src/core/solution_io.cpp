#include "core/solution_io.hpp"

#include <fstream>
#include <json.hpp>

#include "core/mesh_io.hpp"

namespace negproj {

using nlohmann::json;

namespace {
constexpr int kSolutionVersion = 1;
}

SolutionData to_data(const MixedSolution& sol) {
  SolutionData d;
  d.version = kSolutionVersion;
  d.p = sol.p;
  d.q = sol.q;
  d.n_trial = static_cast<int>(sol.f_coeffs.size());
  d.n_test = static_cast<int>(sol.r_m.coeffs.size());
  d.f_coeffs.assign(sol.f_coeffs.data(), sol.f_coeffs.data() + sol.f_coeffs.size());
  d.r_coeffs.assign(sol.r_m.coeffs.data(), sol.r_m.coeffs.data() + sol.r_m.coeffs.size());
  d.estimator_global = sol.estimator_global;
  d.estimator_local = sol.estimator_local;
  d.newton_iters = sol.newton_iters;
  d.continuation_path = sol.continuation_path;
  d.final_residual = sol.final_residual;
  return d;
}

void save_solution_data(const SolutionData& data, const std::string& path) {
  json j;
  j["version"] = kSolutionVersion;
  j["p"] = data.p;
  j["q"] = data.q;
  j["dims"] = {{"n_trial", data.n_trial}, {"n_test", data.n_test}};
  j["f_coeffs"] = data.f_coeffs;
  j["r_coeffs"] = data.r_coeffs;
  j["estimator_global"] = data.estimator_global;
  j["estimator_local"] = data.estimator_local;
  j["newton"] = {{"iters", data.newton_iters},
                 {"continuation_path", data.continuation_path},
                 {"final_residual", data.final_residual}};
  atomic_write_file(path, j.dump(2) + "\n");
}

void save_solution(const MixedSolution& sol, const std::string& path) {
  save_solution_data(to_data(sol), path);
}

SolutionData load_solution(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open solution file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, "malformed solution file " + path + ": " + e.what());
  }
  SolutionData d;
  try {
    d.version = j.at("version").get<int>();
    if (d.version != kSolutionVersion)
      fail(ErrorCode::VersionMismatch,
           "solution file version " + std::to_string(d.version) +
               " is incompatible with supported version " +
               std::to_string(kSolutionVersion));
    d.p = j.at("p").get<double>();
    d.q = j.at("q").get<double>();
    d.n_trial = j.at("dims").at("n_trial").get<int>();
    d.n_test = j.at("dims").at("n_test").get<int>();
    d.f_coeffs = j.at("f_coeffs").get<std::vector<double>>();
    d.r_coeffs = j.at("r_coeffs").get<std::vector<double>>();
    d.estimator_global = j.at("estimator_global").get<double>();
    d.estimator_local = j.at("estimator_local").get<std::vector<double>>();
    d.newton_iters = j.at("newton").at("iters").get<int>();
    d.continuation_path = j.at("newton").at("continuation_path").get<std::vector<double>>();
    d.final_residual = j.at("newton").at("final_residual").get<double>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, "invalid solution file " + path + ": " + e.what());
  }
  if (static_cast<int>(d.f_coeffs.size()) != d.n_trial ||
      static_cast<int>(d.r_coeffs.size()) != d.n_test)
    fail(ErrorCode::ParseError,
         "solution file " + path + ": coefficient lengths disagree with dims");
  return d;
}

}  // namespace negproj
