#ifndef NEGPROJ_H
#define NEGPROJ_H

/* C interface to the negative-norm projection library: mesh construction,
 * dual-norm projections of rough functionals, and whole-experiment studies.
 * All functions returning npj_status leave outputs untouched on failure;
 * npj_last_error() describes the most recent failure on this thread. */

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  NPJ_OK = 0,
  NPJ_INVALID_ARGUMENT = 1,
  NPJ_OUT_OF_DOMAIN = 2,
  NPJ_NONCONVERGENCE = 3,
  NPJ_PARSE_ERROR = 4,
  NPJ_IO_ERROR = 5,
  NPJ_INTERNAL = 6
} npj_status;

typedef struct npj_mesh npj_mesh;
typedef struct npj_projection npj_projection;

/* Message for the last failure on the calling thread; "" if none. The
 * pointer stays valid until the next failing call on the same thread. */
const char* npj_last_error(void);

/* --- meshes --- */

npj_status npj_mesh_interval(int n, double a, double b, npj_mesh** out);
npj_status npj_mesh_square(int n, npj_mesh** out);
npj_status npj_mesh_disk(int levels, npj_mesh** out);
npj_status npj_mesh_load(const char* path, npj_mesh** out);
npj_status npj_mesh_save(const npj_mesh* mesh, const char* path);
npj_status npj_mesh_refine_uniform(npj_mesh* mesh);
int npj_mesh_dim(const npj_mesh* mesh);
int npj_mesh_num_elements(const npj_mesh* mesh);
int npj_mesh_num_vertices(const npj_mesh* mesh);
void npj_mesh_free(npj_mesh* mesh);

/* --- projections ---
 * pairing: 0 = P0 trial / P1-bubble test, 1 = P0 / P(d+1), 2 = P1 / P2.
 * p must lie in (1, 2]. The projection owns a private copy of the mesh. */

npj_status npj_project_dirac(const npj_mesh* mesh, double x, double y,
                             int pairing, double p, npj_projection** out);
/* Line source along the built-in parabolic arc restricted to [t0, t1],
 * with unit density. 2D meshes only. */
npj_status npj_project_parabola_line_source(const npj_mesh* mesh, double t0,
                                            double t1, int pairing, double p,
                                            npj_projection** out);

double npj_projection_estimator(const npj_projection* proj);
int npj_projection_num_coeffs(const npj_projection* proj);
/* Copies the trial coefficients into buf (len >= num_coeffs). */
npj_status npj_projection_coeffs(const npj_projection* proj, double* buf, int len);
npj_status npj_projection_save(const npj_projection* proj, const char* path);
void npj_projection_free(npj_projection* proj);

/* --- studies ---
 * Runs a full experiment from config text (flat key=value or JSON) or a
 * config file. On success *files_out is a newline-joined list of the files
 * written; release it with npj_string_free. */

npj_status npj_run_study_text(const char* config_text, char** files_out);
npj_status npj_run_study_file(const char* config_path, char** files_out);
void npj_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* NEGPROJ_H */
