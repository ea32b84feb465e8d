#include "negproj.h"

#include <cstring>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "core/functional.hpp"
#include "core/mesh.hpp"
#include "core/mesh_io.hpp"
#include "core/mixed_solver.hpp"
#include "core/solution_io.hpp"
#include "core/study.hpp"
#include "core/types.hpp"

struct npj_mesh {
  negproj::SimplicialMesh m;
};

// Owns the mesh so the solution's space pointers stay valid for the handle's
// whole lifetime, independent of the npj_mesh it was built from.
struct npj_projection {
  negproj::SimplicialMesh mesh;
  negproj::TrialActionSpace trial;
  negproj::TestSpace test;
  negproj::MixedSolution sol;
};

namespace {

thread_local std::string t_last_error;

void set_error(const std::string& msg) { t_last_error = msg; }

npj_status map_code(negproj::ErrorCode code) {
  using negproj::ErrorCode;
  switch (code) {
    case ErrorCode::OutOfDomain:
      return NPJ_OUT_OF_DOMAIN;
    case ErrorCode::Nonconvergence:
      return NPJ_NONCONVERGENCE;
    case ErrorCode::ParseError:
    case ErrorCode::VersionMismatch:
      return NPJ_PARSE_ERROR;
    case ErrorCode::IoError:
      return NPJ_IO_ERROR;
    case ErrorCode::Internal:
      return NPJ_INTERNAL;
    default:
      return NPJ_INVALID_ARGUMENT;
  }
}

template <class Fn>
npj_status guarded(Fn&& fn) {
  try {
    fn();
    return NPJ_OK;
  } catch (const negproj::Error& e) {
    set_error(e.what());
    return map_code(e.code());
  } catch (const std::exception& e) {
    set_error(e.what());
    return NPJ_INTERNAL;
  }
}

npj_status null_argument(const char* what) {
  set_error(std::string(what) + " must not be null");
  return NPJ_INVALID_ARGUMENT;
}

negproj::PairingKind pairing_from_int(int pairing) {
  switch (pairing) {
    case 0:
      return negproj::PairingKind::P0_P1Bubble;
    case 1:
      return negproj::PairingKind::P0_PdPlus1;
    case 2:
      return negproj::PairingKind::P1_P2;
    default:
      negproj::fail(negproj::ErrorCode::InvalidArgument,
                    "pairing must be 0, 1, or 2");
  }
}

npj_projection* project(const negproj::SimplicialMesh& mesh,
                        const negproj::RoughFunctional& f, int pairing,
                        double p) {
  auto kind = pairing_from_int(pairing);
  if (!(p > 1.0 && p <= 2.0))
    negproj::fail(negproj::ErrorCode::InvalidArgument, "p must lie in (1, 2]");
  auto h = std::make_unique<npj_projection>();
  h->mesh = mesh;
  auto pair = negproj::make_pair_spaces(h->mesh, kind);
  h->trial = std::move(pair.first);
  h->test = std::move(pair.second);
  h->sol = negproj::solve_projection(f, h->trial, h->test, p);
  return h.release();
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string join_lines(const std::vector<std::string>& items) {
  std::string all;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) all += '\n';
    all += items[i];
  }
  return all;
}

}  // namespace

extern "C" {

const char* npj_last_error(void) { return t_last_error.c_str(); }

npj_status npj_mesh_interval(int n, double a, double b, npj_mesh** out) {
  if (!out) return null_argument("out");
  return guarded([&] {
    *out = new npj_mesh{negproj::build_interval_mesh(n, a, b)};
  });
}

npj_status npj_mesh_square(int n, npj_mesh** out) {
  if (!out) return null_argument("out");
  return guarded([&] { *out = new npj_mesh{negproj::build_square_mesh(n)}; });
}

npj_status npj_mesh_disk(int levels, npj_mesh** out) {
  if (!out) return null_argument("out");
  return guarded([&] { *out = new npj_mesh{negproj::build_disk_mesh(levels)}; });
}

npj_status npj_mesh_load(const char* path, npj_mesh** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  return guarded([&] { *out = new npj_mesh{negproj::load_mesh(path)}; });
}

npj_status npj_mesh_save(const npj_mesh* mesh, const char* path) {
  if (!mesh) return null_argument("mesh");
  if (!path) return null_argument("path");
  return guarded([&] { negproj::save_mesh(mesh->m, path); });
}

npj_status npj_mesh_refine_uniform(npj_mesh* mesh) {
  if (!mesh) return null_argument("mesh");
  return guarded([&] { mesh->m = negproj::refine_all(mesh->m); });
}

int npj_mesh_dim(const npj_mesh* mesh) { return mesh ? mesh->m.dim : -1; }

int npj_mesh_num_elements(const npj_mesh* mesh) {
  return mesh ? mesh->m.num_elements() : -1;
}

int npj_mesh_num_vertices(const npj_mesh* mesh) {
  return mesh ? mesh->m.num_vertices() : -1;
}

void npj_mesh_free(npj_mesh* mesh) { delete mesh; }

npj_status npj_project_dirac(const npj_mesh* mesh, double x, double y,
                             int pairing, double p, npj_projection** out) {
  if (!mesh) return null_argument("mesh");
  if (!out) return null_argument("out");
  return guarded([&] {
    auto f = negproj::RoughFunctional::dirac(negproj::Point{x, y});
    *out = project(mesh->m, f, pairing, p);
  });
}

npj_status npj_project_parabola_line_source(const npj_mesh* mesh, double t0,
                                            double t1, int pairing, double p,
                                            npj_projection** out) {
  if (!mesh) return null_argument("mesh");
  if (!out) return null_argument("out");
  return guarded([&] {
    if (mesh->m.dim != 2)
      negproj::fail(negproj::ErrorCode::InvalidArgument,
                    "line sources require a 2D mesh");
    auto f = negproj::RoughFunctional::line_source(
        negproj::Curve::parabola(t0, t1), [](negproj::Point) { return 1.0; });
    *out = project(mesh->m, f, pairing, p);
  });
}

double npj_projection_estimator(const npj_projection* proj) {
  return proj ? proj->sol.estimator_global : -1.0;
}

int npj_projection_num_coeffs(const npj_projection* proj) {
  return proj ? static_cast<int>(proj->sol.f_coeffs.size()) : -1;
}

npj_status npj_projection_coeffs(const npj_projection* proj, double* buf,
                                 int len) {
  if (!proj) return null_argument("proj");
  if (!buf) return null_argument("buf");
  const int n = static_cast<int>(proj->sol.f_coeffs.size());
  if (len < n) {
    set_error("buffer too small for coefficient vector");
    return NPJ_INVALID_ARGUMENT;
  }
  for (int i = 0; i < n; ++i) buf[i] = proj->sol.f_coeffs[i];
  return NPJ_OK;
}

npj_status npj_projection_save(const npj_projection* proj, const char* path) {
  if (!proj) return null_argument("proj");
  if (!path) return null_argument("path");
  return guarded([&] { negproj::save_solution(proj->sol, path); });
}

void npj_projection_free(npj_projection* proj) { delete proj; }

npj_status npj_run_study_text(const char* config_text, char** files_out) {
  if (!config_text) return null_argument("config_text");
  if (!files_out) return null_argument("files_out");
  return guarded([&] {
    auto cfg = negproj::StudyConfig::parse_text(config_text);
    auto files = negproj::run_study(cfg);
    *files_out = copy_string(join_lines(files));
  });
}

npj_status npj_run_study_file(const char* config_path, char** files_out) {
  if (!config_path) return null_argument("config_path");
  if (!files_out) return null_argument("files_out");
  return guarded([&] {
    auto cfg = negproj::StudyConfig::parse_file(config_path);
    auto files = negproj::run_study(cfg);
    *files_out = copy_string(join_lines(files));
  });
}

void npj_string_free(char* s) { delete[] s; }

}  // extern "C"
