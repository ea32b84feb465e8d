#include "core/study.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <Eigen/SparseCholesky>
#include <json.hpp>

#include "core/adapt.hpp"
#include "core/duality.hpp"
#include "core/mesh_io.hpp"
#include "core/quadrature.hpp"
#include "core/solution_io.hpp"

namespace negproj {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& s, const std::string& key) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::ParseError, "bad number '" + s + "' for key '" + key + "'");
  }
}

int parse_int(const std::string& s, const std::string& key) {
  try {
    size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::ParseError, "bad integer '" + s + "' for key '" + key + "'");
  }
}

std::vector<double> parse_double_list(const std::string& s, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) fail(ErrorCode::ParseError, "empty entry in list for key '" + key + "'");
    out.push_back(parse_double(item, key));
  }
  if (out.empty()) fail(ErrorCode::ParseError, "empty list for key '" + key + "'");
  return out;
}

bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  fail(ErrorCode::ParseError, "bad boolean '" + s + "' for key '" + key + "'");
}

const char* experiment_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Delta1d: return "delta1d";
    case ExperimentKind::Ode1d: return "ode1d";
    case ExperimentKind::Delta2d: return "delta2d";
    case ExperimentKind::LineSource: return "linesource";
    case ExperimentKind::Instability: return "instability";
  }
  return "delta1d";
}

ExperimentKind parse_experiment(const std::string& s) {
  if (s == "delta1d") return ExperimentKind::Delta1d;
  if (s == "ode1d") return ExperimentKind::Ode1d;
  if (s == "delta2d") return ExperimentKind::Delta2d;
  if (s == "linesource") return ExperimentKind::LineSource;
  if (s == "instability") return ExperimentKind::Instability;
  fail(ErrorCode::ParseError, "unknown experiment '" + s + "'");
}

const char* mode_name(StudyMode m) {
  return m == StudyMode::Uniform ? "uniform" : "adaptive";
}

StudyMode parse_mode(const std::string& s) {
  if (s == "uniform") return StudyMode::Uniform;
  if (s == "adaptive") return StudyMode::Adaptive;
  fail(ErrorCode::ParseError, "unknown mode '" + s + "'");
}

// "a..b" inclusive range; a bare integer N means levels 0..N-1.
void parse_levels(const std::string& s, StudyConfig& cfg) {
  const size_t dots = s.find("..");
  if (dots == std::string::npos) {
    const int n = parse_int(s, "levels");
    if (n < 1) fail(ErrorCode::ParseError, "levels count must be >= 1");
    cfg.level_min = 0;
    cfg.level_max = n - 1;
    return;
  }
  cfg.level_min = parse_int(trim(s.substr(0, dots)), "levels");
  cfg.level_max = parse_int(trim(s.substr(dots + 2)), "levels");
}

// Shortest clean decimal, used in output filenames (p and tol tags).
std::string number_tag(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string join_list(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double_17(v[i]);
  }
  return out;
}

void apply_key(StudyConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "experiment") cfg.experiment = parse_experiment(value);
  else if (key == "p") cfg.p_values = parse_double_list(value, key);
  else if (key == "mode") cfg.mode = parse_mode(value);
  else if (key == "levels") parse_levels(value, cfg);
  else if (key == "tol") cfg.tol = parse_double(value, key);
  else if (key == "tols") cfg.tols = parse_double_list(value, key);
  else if (key == "alpha") cfg.alpha = parse_double(value, key);
  else if (key == "mesh_n") cfg.mesh_n = parse_int(value, key);
  else if (key == "a") cfg.a = parse_double(value, key);
  else if (key == "x0") cfg.x0 = parse_double(value, key);
  else if (key == "epsilons") cfg.epsilons = parse_double_list(value, key);
  else if (key == "max_iterations") cfg.max_iterations = parse_int(value, key);
  else if (key == "max_total_dofs") cfg.max_total_dofs = parse_int(value, key);
  else if (key == "snapshots") cfg.snapshots = parse_bool(value, key);
  else if (key == "out") cfg.out_dir = value;
  else fail(ErrorCode::ParseError, "unknown key '" + key + "'");
}

void validate_config(const StudyConfig& cfg) {
  if (cfg.p_values.empty()) fail(ErrorCode::ParseError, "at least one p value required");
  for (double p : cfg.p_values)
    if (!(p > 1.0 && p <= 2.0))
      fail(ErrorCode::ParseError, "p must lie in (1, 2], got " + number_tag(p));
  if (cfg.level_min < 0 || cfg.level_min > cfg.level_max)
    fail(ErrorCode::ParseError, "levels range must satisfy 0 <= min <= max");
  if (!(cfg.tol > 0.0)) fail(ErrorCode::ParseError, "tol must be positive");
  for (double t : cfg.tols)
    if (!(t > 0.0)) fail(ErrorCode::ParseError, "tols entries must be positive");
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0))
    fail(ErrorCode::ParseError, "alpha must lie in [0, 1]");
  if (cfg.mesh_n < 1) fail(ErrorCode::ParseError, "mesh_n must be >= 1");
  if (cfg.a < 0.0) fail(ErrorCode::ParseError, "a must be >= 0");
  if (!(cfg.x0 > 0.0 && cfg.x0 < 1.0))
    fail(ErrorCode::ParseError, "x0 must lie in (0, 1)");
  for (double e : cfg.epsilons)
    if (!(e > 0.0 && e < 1.0))
      fail(ErrorCode::ParseError, "epsilons must lie in (0, 1)");
  if (cfg.max_iterations < 1) fail(ErrorCode::ParseError, "max_iterations must be >= 1");
  if (cfg.max_total_dofs < 0) fail(ErrorCode::ParseError, "max_total_dofs must be >= 0");
  if (cfg.out_dir.empty()) fail(ErrorCode::ParseError, "out must be non-empty");
}

StudyConfig parse_json_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad JSON config: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::ParseError, "JSON config must be an object");
  StudyConfig cfg;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      const nlohmann::json& v = it.value();
      if (key == "p" || key == "tols" || key == "epsilons") {
        std::vector<double> vals;
        if (v.is_array()) vals = v.get<std::vector<double>>();
        else if (v.is_number()) vals.push_back(v.get<double>());
        else fail(ErrorCode::ParseError, "key '" + key + "' needs a number or array");
        if (key == "p") cfg.p_values = vals;
        else if (key == "tols") cfg.tols = vals;
        else cfg.epsilons = vals;
      } else if (key == "levels") {
        if (v.is_number_integer()) parse_levels(std::to_string(v.get<int>()), cfg);
        else if (v.is_string()) parse_levels(v.get<std::string>(), cfg);
        else if (v.is_array() && v.size() == 2) {
          cfg.level_min = v[0].get<int>();
          cfg.level_max = v[1].get<int>();
        } else fail(ErrorCode::ParseError, "key 'levels' needs an int, \"a..b\", or [a, b]");
      } else if (key == "snapshots") {
        if (v.is_boolean()) cfg.snapshots = v.get<bool>();
        else apply_key(cfg, key, v.get<std::string>());
      } else if (v.is_string()) {
        apply_key(cfg, key, v.get<std::string>());
      } else if (v.is_number_integer()) {
        apply_key(cfg, key, std::to_string(v.get<long long>()));
      } else if (v.is_number()) {
        apply_key(cfg, key, format_double_17(v.get<double>()));
      } else {
        fail(ErrorCode::ParseError, "unsupported JSON value for key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad JSON config: ") + e.what());
  }
  validate_config(cfg);
  return cfg;
}

// Creates the output directory and archives the canonical config next to the
// run's files so every CSV is reproducible from its directory alone.
std::string prepare_out(const StudyConfig& cfg, std::vector<std::string>& files) {
  std::filesystem::create_directories(cfg.out_dir);
  const std::string path = (std::filesystem::path(cfg.out_dir) / "config.txt").string();
  atomic_write_file(path, cfg.to_text());
  files.push_back(path);
  return cfg.out_dir;
}

std::string out_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  if (n < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < n; ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return den > 0.0 ? num / den : 0.0;
}

double expected_project_rate(ExperimentKind kind, double p) {
  const double q = p / (p - 1.0);
  switch (kind) {
    case ExperimentKind::Delta1d: return 1.0 / p;
    case ExperimentKind::Delta2d: return 1.0 - 2.0 / q;
    case ExperimentKind::LineSource: return 1.0 - 1.0 / q;
    default: return 0.0;
  }
}

std::function<double(Point)> unit_psi() {
  return [](Point) { return 1.0; };
}

// Samples u_h on an n x n grid over [-1,1]^2, skipping points outside the
// mesh, and writes x,y,u rows.
void write_grid_samples(const FemFunction& u_h, int n, const std::string& path) {
  const SimplicialMesh& mesh = *u_h.space->mesh;
  std::string csv = "x,y,u\n";
  for (int i = 0; i < n; ++i) {
    const double x = -1.0 + 2.0 * i / (n - 1);
    for (int j = 0; j < n; ++j) {
      const double y = -1.0 + 2.0 * j / (n - 1);
      const Point pt{x, y};
      const int e = mesh.locate(pt);
      if (e < 0) continue;
      const double u = u_h.value_in(e, mesh.element_map(e).to_reference(pt));
      csv += format_double_17(x) + "," + format_double_17(y) + "," +
             format_double_17(u) + "\n";
    }
  }
  atomic_write_file(path, csv);
}

nlohmann::json history_to_json(const AdaptHistory& h) {
  nlohmann::json j;
  j["reached_tol"] = h.reached_tol;
  j["budget_exhausted"] = h.budget_exhausted;
  j["iterations"] = nlohmann::json::array();
  for (const auto& it : h.iterations) {
    j["iterations"].push_back({{"level", it.level},
                               {"n_elements", it.n_elements},
                               {"total_dofs", it.total_dofs},
                               {"estimator", it.estimator},
                               {"marked", it.marked}});
  }
  return j;
}

}  // namespace

StudyConfig StudyConfig::parse_text(const std::string& text) {
  const std::string body = trim(text);
  if (!body.empty() && body[0] == '{') return parse_json_config(body);
  StudyConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::ParseError,
           "expected key=value on line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(ErrorCode::ParseError, "empty key on line " + std::to_string(lineno));
    apply_key(cfg, key, value);
  }
  validate_config(cfg);
  return cfg;
}

StudyConfig StudyConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open config file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_text(os.str());
}

std::string StudyConfig::to_text() const {
  std::ostringstream os;
  os << "experiment=" << experiment_name(experiment) << "\n";
  os << "p=" << join_list(p_values) << "\n";
  os << "mode=" << mode_name(mode) << "\n";
  os << "levels=" << level_min << ".." << level_max << "\n";
  os << "tol=" << format_double_17(tol) << "\n";
  if (!tols.empty()) os << "tols=" << join_list(tols) << "\n";
  os << "alpha=" << format_double_17(alpha) << "\n";
  os << "mesh_n=" << mesh_n << "\n";
  os << "a=" << format_double_17(a) << "\n";
  os << "x0=" << format_double_17(x0) << "\n";
  if (!epsilons.empty()) os << "epsilons=" << join_list(epsilons) << "\n";
  os << "max_iterations=" << max_iterations << "\n";
  os << "max_total_dofs=" << max_total_dofs << "\n";
  os << "snapshots=" << (snapshots ? "true" : "false") << "\n";
  os << "out=" << out_dir << "\n";
  return os.str();
}

double fit_rate_loglog(const std::vector<double>& x, const std::vector<double>& est) {
  std::vector<double> lx, ly;
  const size_t n = std::min(x.size(), est.size());
  for (size_t i = 0; i < n; ++i) {
    if (x[i] > 0.0 && est[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(est[i]));
    }
  }
  const size_t tail = std::min<size_t>(4, lx.size());
  if (tail < 2) return 0.0;
  std::vector<double> tx(lx.end() - tail, lx.end());
  std::vector<double> ty(ly.end() - tail, ly.end());
  return -ls_slope(tx, ty);
}

void write_convergence_csv(const std::vector<ConvergenceRecord>& records,
                           const std::string& path) {
  std::string csv = "level,ndofs,dofs_metric,estimator,fitted_rate,expected_rate\n";
  for (const auto& r : records) {
    csv += std::to_string(r.level) + "," + std::to_string(r.ndofs) + "," +
           format_double_17(r.dofs_metric) + "," + format_double_17(r.estimator) + "," +
           format_double_17(r.fitted_rate) + "," + format_double_17(r.expected_rate) + "\n";
  }
  atomic_write_file(path, csv);
}

StudyResult run_project_study(const StudyConfig& cfg) {
  if (cfg.experiment != ExperimentKind::Delta1d &&
      cfg.experiment != ExperimentKind::Delta2d &&
      cfg.experiment != ExperimentKind::LineSource)
    fail(ErrorCode::InvalidArgument, "projection study needs delta1d, delta2d, or linesource");

  StudyResult result;
  const std::string dir = prepare_out(cfg, result.files);
  const int dim = cfg.experiment == ExperimentKind::Delta1d ? 1 : 2;
  const PairingKind pairing = dim == 1 ? PairingKind::P0_PdPlus1 : PairingKind::P1_P2;

  RoughFunctional f = RoughFunctional::dirac({cfg.x0, 0.0});
  if (cfg.experiment == ExperimentKind::Delta2d) f = RoughFunctional::dirac({0.0, 0.0});
  if (cfg.experiment == ExperimentKind::LineSource)
    f = RoughFunctional::line_source(Curve::parabola(0.15, 0.85), unit_psi());

  for (double p : cfg.p_values) {
    StudySeries series;
    series.p = p;
    series.expected_rate = expected_project_rate(cfg.experiment, p);

    if (cfg.mode == StudyMode::Uniform) {
      for (int level = cfg.level_min; level <= cfg.level_max; ++level) {
        SimplicialMesh mesh =
            cfg.experiment == ExperimentKind::Delta1d
                ? build_interval_mesh(1 << level, 0.0, 1.0)
                : (cfg.experiment == ExperimentKind::Delta2d
                       ? build_disk_mesh(level)
                       : build_square_mesh(cfg.mesh_n << level));
        auto [G, V] = make_pair_spaces(mesh, pairing);
        const MixedSolution sol = solve_projection(f, G, V, p);
        ConvergenceRecord rec;
        rec.level = level;
        rec.ndofs = G.n_generators + V.n_dofs;
        rec.dofs_metric = dim == 1 ? rec.ndofs : std::sqrt(static_cast<double>(rec.ndofs));
        rec.estimator = sol.estimator_global;
        rec.expected_rate = series.expected_rate;
        series.records.push_back(rec);
      }
    } else {
      SimplicialMesh mesh0 =
          cfg.experiment == ExperimentKind::Delta1d
              ? build_interval_mesh(cfg.mesh_n, 0.0, 1.0)
              : (cfg.experiment == ExperimentKind::Delta2d ? build_disk_mesh(1)
                                                           : build_square_mesh(cfg.mesh_n));
      AdaptConfig ac;
      ac.tol = cfg.tol;
      ac.alpha = cfg.alpha;
      ac.max_iterations = cfg.max_iterations;
      ac.max_total_dofs = cfg.max_total_dofs;
      AdaptiveResult ar = adaptive_project(f, mesh0, pairing, p, ac);
      for (const auto& it : ar.history.iterations) {
        ConvergenceRecord rec;
        rec.level = it.level;
        rec.ndofs = it.total_dofs;
        rec.dofs_metric = dim == 1 ? rec.ndofs : std::sqrt(static_cast<double>(rec.ndofs));
        rec.estimator = it.estimator;
        rec.expected_rate = series.expected_rate;
        series.records.push_back(rec);
      }
      const std::string tag =
          std::string(experiment_name(cfg.experiment)) + "_p" + number_tag(p);
      const std::string hist_path = out_path(dir, tag + "_history.csv");
      write_history_csv(ar.history, hist_path);
      result.files.push_back(hist_path);
      if (cfg.snapshots) {
        const std::string mesh_path = out_path(dir, tag + "_mesh.txt");
        const std::string sol_path = out_path(dir, tag + "_solution.json");
        save_mesh(*ar.mesh, mesh_path);
        save_solution(ar.solution, sol_path);
        result.files.push_back(mesh_path);
        result.files.push_back(sol_path);
      }
      series.history = std::move(ar.history);
    }

    std::vector<double> xs, es;
    for (const auto& r : series.records) {
      xs.push_back(r.dofs_metric);
      es.push_back(r.estimator);
    }
    series.fitted_rate = fit_rate_loglog(xs, es);
    for (auto& r : series.records) r.fitted_rate = series.fitted_rate;

    const std::string csv_path =
        out_path(dir, std::string(experiment_name(cfg.experiment)) + "_p" + number_tag(p) +
                          "_" + mode_name(cfg.mode) + ".csv");
    write_convergence_csv(series.records, csv_path);
    result.files.push_back(csv_path);
    result.series.push_back(std::move(series));
  }
  return result;
}

OdeStudyResult run_ode_study(const StudyConfig& cfg) {
  if (cfg.experiment != ExperimentKind::Ode1d)
    fail(ErrorCode::InvalidArgument, "ODE study needs experiment=ode1d");

  OdeStudyResult result;
  const std::string dir = prepare_out(cfg, result.files);
  const RoughFunctional f = RoughFunctional::dirac({cfg.x0, 0.0});
  const PdeProblem problem = PdeProblem::ode1d(cfg.a, cfg.x0);
  const double p = cfg.p_values.front();

  for (int level = cfg.level_min; level <= cfg.level_max; ++level) {
    const int n = cfg.mesh_n << level;
    const SimplicialMesh mesh = build_interval_mesh(n, 0.0, 1.0);
    auto [G, V] = make_pair_spaces(mesh, PairingKind::P0_PdPlus1);
    const MixedSolution sol = solve_projection(f, G, V, p);
    const RegularizedDensity density(G, sol.f_coeffs);
    const PdeSolution pde = galerkin_solve(problem, density, V);

    OdeStudyLevel row;
    row.level = level;
    row.n_elements = n;
    row.ndofs = G.n_generators + V.n_dofs;
    row.estimator = sol.estimator_global;
    row.h1_error = ode_h1_error(pde.u_h, cfg.x0, cfg.a);
    result.levels.push_back(row);

    std::string samples = "x,u_nh,u_exact\n";
    for (int i = 0; i <= 200; ++i) {
      const double x = static_cast<double>(i) / 200.0;
      samples += format_double_17(x) + "," + format_double_17(pde.u_h.value_at({x, 0.0})) +
                 "," + format_double_17(exact_ode(x, cfg.x0, cfg.a)) + "\n";
    }
    const std::string sample_path =
        out_path(dir, "ode_samples_level" + std::to_string(level) + ".csv");
    atomic_write_file(sample_path, samples);
    result.files.push_back(sample_path);
  }

  std::vector<double> xs, est, h1;
  for (const auto& row : result.levels) {
    xs.push_back(row.ndofs);
    est.push_back(row.estimator);
    h1.push_back(row.h1_error);
  }
  result.rate_estimator = fit_rate_loglog(xs, est);
  result.rate_h1_error = fit_rate_loglog(xs, h1);

  std::string csv = "level,n_elements,ndofs,estimator,h1_error\n";
  for (const auto& row : result.levels) {
    csv += std::to_string(row.level) + "," + std::to_string(row.n_elements) + "," +
           std::to_string(row.ndofs) + "," + format_double_17(row.estimator) + "," +
           format_double_17(row.h1_error) + "\n";
  }
  const std::string csv_path = out_path(dir, "ode_errors.csv");
  atomic_write_file(csv_path, csv);
  result.files.push_back(csv_path);

  nlohmann::json j;
  j["rate_estimator"] = result.rate_estimator;
  j["rate_h1_error"] = result.rate_h1_error;
  j["a"] = cfg.a;
  j["x0"] = cfg.x0;
  j["levels"] = nlohmann::json::array();
  for (const auto& row : result.levels) {
    j["levels"].push_back({{"level", row.level},
                           {"n_elements", row.n_elements},
                           {"ndofs", row.ndofs},
                           {"estimator", row.estimator},
                           {"h1_error", row.h1_error}});
  }
  const std::string json_path = out_path(dir, "ode_summary.json");
  atomic_write_file(json_path, j.dump(2) + "\n");
  result.files.push_back(json_path);
  return result;
}

namespace {

// Geometric dyadic mesh on [0,1] with a vertex exactly at eps: levels
// eps/2^k down to a scale floor near 1e-13 on the left, uniform on the
// right. The singular weight x^{-1/4} is then integrated exactly per
// element, and no antiderivative evaluation suffers cancellation since
// every left element spans a factor of 2.
SimplicialMesh instability_mesh(double eps) {
  constexpr double kFloor = 1e-13;
  constexpr int kMaxLevels = 40;
  int levels = 1;
  while (levels < kMaxLevels && eps * std::pow(2.0, -levels) > kFloor) ++levels;
  std::vector<double> xs;
  xs.push_back(0.0);
  for (int k = levels; k >= 0; --k) xs.push_back(eps * std::pow(2.0, -k));
  constexpr int kRight = 16;
  for (int i = 1; i <= kRight; ++i)
    xs.push_back(eps + (1.0 - eps) * static_cast<double>(i) / kRight);
  xs.back() = 1.0;
  return interval_mesh_from_vertices(xs);
}

// Exact element integrals of x^{-1/4} v' for P2 basis functions: v' is
// linear per element, recovered from its endpoint values, and the moment
// integrals have closed antiderivatives (4/3)x^{3/4} and (4/7)x^{7/4}.
Eigen::VectorXd singular_gradient_load(const TestSpace& V) {
  const SimplicialMesh& mesh = *V.mesh;
  Eigen::VectorXd load = Eigen::VectorXd::Zero(V.n_dofs);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementMap map = mesh.element_map(e);
    const double xa = map.to_physical({0.0, 0.0})[0];
    const double xb = map.to_physical({1.0, 0.0})[0];
    const BasisEval ba = eval_basis(V, e, {0.0, 0.0});
    const BasisEval bb = eval_basis(V, e, {1.0, 0.0});
    const double i0 = (4.0 / 3.0) * (std::pow(xb, 0.75) - std::pow(xa, 0.75));
    const double i1 = (4.0 / 7.0) * (std::pow(xb, 1.75) - std::pow(xa, 1.75));
    for (int i = 0; i < ba.n; ++i) {
      const int dof = V.dof_map[e][i];
      if (dof < 0) continue;
      const double g0 = ba.grad[i][0];
      const double g1 = bb.grad[i][0];
      const double s = (g1 - g0) / (xb - xa);
      load[dof] += (g0 - s * xa) * i0 + s * i1;
    }
  }
  return load;
}

double phi_eps(double x, double eps) {
  return x <= eps ? x / eps : (1.0 - x) / (1.0 - eps);
}

// Load of the skewed hat: exact because the mesh has a vertex at eps, so
// phi_eps is linear on every element and order 5 integrates degree 3.
Eigen::VectorXd hat_load(const TestSpace& V, double eps) {
  const SimplicialMesh& mesh = *V.mesh;
  const auto rule = quadrature_rule(1, 5);
  Eigen::VectorXd load = Eigen::VectorXd::Zero(V.n_dofs);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementMap map = mesh.element_map(e);
    for (const auto& qp : rule) {
      const double x = map.to_physical(qp.xref)[0];
      const double w = qp.weight * map.det_abs * phi_eps(x, eps);
      const BasisEval b = eval_basis(V, e, qp.xref);
      for (int i = 0; i < b.n; ++i) {
        const int dof = V.dof_map[e][i];
        if (dof >= 0) load[dof] += w * b.value[i];
      }
    }
  }
  return load;
}

}  // namespace

InstabilityResult run_instability_study(const StudyConfig& cfg) {
  InstabilityResult result;
  std::vector<double> eps_sweep = cfg.epsilons;
  if (eps_sweep.empty())
    for (int k = 1; k <= 9; ++k) eps_sweep.push_back(std::pow(10.0, -k));

  const std::string dir = prepare_out(cfg, result.files);
  const double hat_l2 = std::sqrt(3.0) / 3.0;  // ||phi_eps||_{L2}, any eps

  for (double eps : eps_sweep) {
    if (!(eps > 0.0 && eps < 1.0))
      fail(ErrorCode::InvalidArgument, "instability epsilons must lie in (0, 1)");

    // L2 projection coefficient, exact: alpha = f(phi_eps) / ||phi_eps||^2.
    const double alpha =
        4.0 * (std::pow(eps, -0.25) - (1.0 - std::pow(eps, 0.75)) / (1.0 - eps));

    const SimplicialMesh mesh = instability_mesh(eps);
    const TestSpace V = TestSpace::make(mesh, TestSpaceKind::P2);
    const FemFunction zero(V);
    DualityParams dp;
    dp.q = 2.0;
    dp.eps_reg = 0.0;
    const Eigen::SparseMatrix<double> K = duality_jacobian_matrix(zero, dp);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(K);
    if (solver.info() != Eigen::Success)
      fail(ErrorCode::Internal, "instability stiffness factorization failed");

    const Eigen::VectorXd F = singular_gradient_load(V);
    const Eigen::VectorXd B = hat_load(V, eps);
    const Eigen::VectorXd y = solver.solve(B);
    const double c = B.dot(solver.solve(F)) / B.dot(y);

    InstabilityRow row;
    row.epsilon = eps;
    row.l2_proj_norm = std::abs(alpha) * hat_l2;
    row.h1neg_proj_l2norm = std::abs(c) * hat_l2;
    result.rows.push_back(row);
  }

  std::vector<double> le, ll;
  const size_t tail = std::min<size_t>(4, result.rows.size());
  for (size_t i = result.rows.size() - tail; i < result.rows.size(); ++i) {
    le.push_back(std::log(result.rows[i].epsilon));
    ll.push_back(std::log(result.rows[i].l2_proj_norm));
  }
  result.l2_tail_slope = ls_slope(le, ll);

  double lo = 0.0, hi = 0.0;
  for (const auto& row : result.rows) {
    if (lo == 0.0 || row.h1neg_proj_l2norm < lo) lo = row.h1neg_proj_l2norm;
    if (row.h1neg_proj_l2norm > hi) hi = row.h1neg_proj_l2norm;
  }
  result.h1neg_max_ratio = lo > 0.0 ? hi / lo : 0.0;

  std::string csv = "epsilon,l2_proj_norm,h1neg_proj_l2norm\n";
  for (const auto& row : result.rows) {
    csv += format_double_17(row.epsilon) + "," + format_double_17(row.l2_proj_norm) + "," +
           format_double_17(row.h1neg_proj_l2norm) + "\n";
  }
  const std::string csv_path = out_path(dir, "instability.csv");
  atomic_write_file(csv_path, csv);
  result.files.push_back(csv_path);
  return result;
}

Algorithm1StudyResult run_algorithm1_study(const StudyConfig& cfg) {
  if (cfg.experiment != ExperimentKind::Ode1d)
    fail(ErrorCode::InvalidArgument, "the two-stage driver study needs experiment=ode1d");

  Algorithm1StudyResult result;
  const std::string dir = prepare_out(cfg, result.files);
  const RoughFunctional f = RoughFunctional::dirac({cfg.x0, 0.0});
  const PdeProblem problem = PdeProblem::ode1d(cfg.a, cfg.x0);
  const SimplicialMesh mesh0 = build_interval_mesh(cfg.mesh_n, 0.0, 1.0);
  std::vector<double> tols = cfg.tols.empty() ? std::vector<double>{cfg.tol} : cfg.tols;

  std::string csv =
      "tol,h1_error,stage1_estimator,stage2_estimator,stage1_levels,stage2_levels,"
      "pde_ndofs\n";

  for (double tol : tols) {
    Algorithm1Params params;
    params.tol = tol;
    params.alpha = cfg.alpha;
    params.max_iterations = cfg.max_iterations;
    params.pairing = PairingKind::P0_PdPlus1;
    params.p = cfg.p_values.front();
    Algorithm1Result res = run_algorithm1(f, problem, mesh0, params);

    const std::string tag = "algorithm1_tol" + number_tag(tol);
    const std::string proj_mesh_path = out_path(dir, tag + "_projection_mesh.txt");
    const std::string pde_mesh_path = out_path(dir, tag + "_pde_mesh.txt");
    save_mesh(*res.projection_mesh, proj_mesh_path);
    save_mesh(*res.pde_mesh, pde_mesh_path);
    result.files.push_back(proj_mesh_path);
    result.files.push_back(pde_mesh_path);

    const std::string s1_path = out_path(dir, tag + "_stage1.csv");
    const std::string s2_path = out_path(dir, tag + "_stage2.csv");
    write_history_csv(res.stage1_history, s1_path);
    write_history_csv(res.stage2_history, s2_path);
    result.files.push_back(s1_path);
    result.files.push_back(s2_path);

    const double stage2_est = res.stage2_history.iterations.empty()
                                  ? 0.0
                                  : res.stage2_history.iterations.back().estimator;
    nlohmann::json j;
    j["tol"] = tol;
    j["a"] = cfg.a;
    j["x0"] = cfg.x0;
    j["h1_error"] = res.solution.h1_error;
    j["stage1_estimator"] = res.stage1_estimator;
    j["stage2_estimator"] = stage2_est;
    j["pde_ndofs"] = res.pde_space->n_dofs;
    j["stage1"] = history_to_json(res.stage1_history);
    j["stage2"] = history_to_json(res.stage2_history);
    j["projection_mesh"] = proj_mesh_path;
    j["pde_mesh"] = pde_mesh_path;
    const std::string json_path = out_path(dir, tag + ".json");
    atomic_write_file(json_path, j.dump(2) + "\n");
    result.files.push_back(json_path);

    csv += format_double_17(tol) + "," + format_double_17(res.solution.h1_error) + "," +
           format_double_17(res.stage1_estimator) + "," + format_double_17(stage2_est) +
           "," + std::to_string(res.stage1_history.iterations.size()) + "," +
           std::to_string(res.stage2_history.iterations.size()) + "," +
           std::to_string(res.pde_space->n_dofs) + "\n";

    Algorithm1StudyRun run;
    run.tol = tol;
    run.result = std::move(res);
    result.runs.push_back(std::move(run));
  }

  const std::string csv_path = out_path(dir, "algorithm1.csv");
  atomic_write_file(csv_path, csv);
  result.files.push_back(csv_path);
  return result;
}

SnapshotResult run_delta2d_snapshots(const StudyConfig& cfg) {
  if (cfg.experiment != ExperimentKind::Delta2d)
    fail(ErrorCode::InvalidArgument, "snapshots need experiment=delta2d");

  SnapshotResult result;
  const std::string dir = prepare_out(cfg, result.files);
  const RoughFunctional f = RoughFunctional::dirac({0.0, 0.0});
  const PdeProblem problem = PdeProblem::poisson2d();
  const SimplicialMesh mesh0 = build_disk_mesh(1);
  const double p = cfg.p_values.front();

  std::vector<double> ladder = cfg.tols;
  if (ladder.empty()) ladder = {4.0 * cfg.tol, 2.0 * cfg.tol, cfg.tol};

  std::string stages = "stage,tol,n_elements,ndofs,estimator,l2_error\n";
  for (size_t k = 0; k < ladder.size(); ++k) {
    AdaptConfig ac;
    ac.tol = ladder[k];
    ac.alpha = cfg.alpha;
    ac.max_iterations = cfg.max_iterations;
    ac.max_total_dofs = cfg.max_total_dofs;
    AdaptiveResult ar = adaptive_project(f, mesh0, PairingKind::P1_P2, p, ac);

    const RegularizedDensity density(*ar.trial, ar.solution.f_coeffs);
    const TestSpace galerkin_space = TestSpace::make(*ar.mesh, TestSpaceKind::P1);
    const PdeSolution pde = galerkin_solve(problem, density, galerkin_space);
    const double l2 = poisson2d_l2_error(pde.u_h, {0.0, 0.0});

    const std::string tag = "delta2d_stage" + std::to_string(k + 1);
    const std::string mesh_path = out_path(dir, tag + "_mesh.txt");
    const std::string sol_path = out_path(dir, tag + "_solution.json");
    const std::string sample_path = out_path(dir, tag + "_samples.csv");
    save_mesh(*ar.mesh, mesh_path);
    save_solution(ar.solution, sol_path);
    write_grid_samples(pde.u_h, 41, sample_path);
    result.files.push_back(mesh_path);
    result.files.push_back(sol_path);
    result.files.push_back(sample_path);

    stages += std::to_string(k + 1) + "," + format_double_17(ladder[k]) + "," +
              std::to_string(ar.mesh->num_elements()) + "," +
              std::to_string(ar.trial->n_generators + ar.test->n_dofs) + "," +
              format_double_17(ar.solution.estimator_global) + "," +
              format_double_17(l2) + "\n";
  }

  const std::string stages_path = out_path(dir, "delta2d_stages.csv");
  atomic_write_file(stages_path, stages);
  result.files.push_back(stages_path);
  return result;
}

std::vector<std::string> run_study(const StudyConfig& cfg) {
  switch (cfg.experiment) {
    case ExperimentKind::Delta1d:
    case ExperimentKind::LineSource:
      return run_project_study(cfg).files;
    case ExperimentKind::Delta2d:
      if (cfg.snapshots) return run_delta2d_snapshots(cfg).files;
      return run_project_study(cfg).files;
    case ExperimentKind::Ode1d:
      if (cfg.mode == StudyMode::Adaptive || !cfg.tols.empty())
        return run_algorithm1_study(cfg).files;
      return run_ode_study(cfg).files;
    case ExperimentKind::Instability:
      return run_instability_study(cfg).files;
  }
  fail(ErrorCode::Internal, "unhandled experiment kind");
}

}  // namespace negproj
