#pragma once
// Command-line front end: subcommand drivers, parameter-grid sweeps, CSV
// output, and JSON run manifests. All logic lives in this header so it can be
// exercised in-process; tools/rbmts_cli.cpp is a thin main().
//
// Subcommands: solve, reduced, stability, free-entropy, simulate, lottery,
// sweep. Options can also come from an INI file (--config) with one section
// per subcommand; command-line flags override file values. Every run that
// writes an output file also writes <output>.manifest.json next to it with
// the resolved configuration, seeds, and component versions. Timestamps live
// only in the manifest, so identical configuration and seed reproduce
// byte-identical CSV output regardless of worker count.

#include <rbmts/core.hpp>
#include <rbmts/free_entropy.hpp>
#include <rbmts/reduced.hpp>
#include <rbmts/saddle.hpp>
#include <rbmts/sampling.hpp>
#include <rbmts/simulation.hpp>
#include <rbmts/stability.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace rbmts::cli {

inline constexpr const char* kVersion = "1.0.0";

// ---------------------------------------------------------------------------
// Formatting and CSV assembly
// ---------------------------------------------------------------------------

// 12 significant digits; NaN of either sign renders as the literal "nan".
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

using Cell = std::variant<double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

inline std::string render_csv(const Table& t) {
  std::string out;
  for (size_t j = 0; j < t.columns.size(); ++j) {
    if (j) out += ',';
    out += t.columns[j];
  }
  out += '\n';
  for (const auto& row : t.rows) {
    if (row.size() != t.columns.size())
      throw DimensionMismatch("csv row width does not match the header");
    for (size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      if (std::holds_alternative<double>(row[j]))
        out += format_number(std::get<double>(row[j]));
      else
        out += std::get<std::string>(row[j]);
    }
    out += '\n';
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << text;
  if (!f) throw IoError("write failed: " + path);
}

inline void emit_csv(const Table& t, const std::string& path) {
  write_text_file(path, render_csv(t));
}

// ---------------------------------------------------------------------------
// Run manifests
// ---------------------------------------------------------------------------

inline std::string iso_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string manifest_path_for(const std::string& output_path) {
  std::filesystem::path p(output_path);
  p.replace_extension();
  p += ".manifest.json";
  return p.string();
}

// Writes <output>.manifest.json next to the output file. The body should
// carry the resolved configuration and seeds; versions and the timestamp are
// appended here.
inline void write_manifest(const std::string& output_path, nlohmann::json body) {
  body["written_at"] = iso_timestamp();
  body["versions"] = {
      {"rbmts", kVersion},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                    std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
      {"cli11", CLI11_VERSION},
  };
  write_text_file(manifest_path_for(output_path), body.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Token and grid parsing
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace detail

inline double parse_double_token(const std::string& tok, const std::string& what) {
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw ConfigParseError("expected a number for " + what + ", got '" + tok + "'");
  }
  if (pos != tok.size())
    throw ConfigParseError("trailing junk in " + what + ": '" + tok + "'");
  return v;
}

inline long long parse_int_token(const std::string& tok, const std::string& what) {
  size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(tok, &pos);
  } catch (const std::exception&) {
    throw ConfigParseError("expected an integer for " + what + ", got '" + tok + "'");
  }
  if (pos != tok.size())
    throw ConfigParseError("trailing junk in " + what + ": '" + tok + "'");
  return v;
}

inline std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const std::string& tok : detail::split(text, ','))
    out.push_back(parse_double_token(tok, what));
  return out;
}

// One axis of a sweep grid: `name=lo:hi:count` (inclusive linear spacing) or
// the pinned form `name=value`.
struct GridDimension {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  int count = 1;

  double value(int i) const {
    if (count <= 1) return lo;
    return lo + (hi - lo) * (static_cast<double>(i) / (count - 1));
  }
};

// Parses `alpha=0:3:60,T=0.1:1.2:60`. Dimensions are comma-separated; the
// first listed dimension varies slowest in the output row order. Hyphens in
// names normalize to underscores.
inline std::vector<GridDimension> parse_grid(const std::string& spec) {
  if (spec.empty()) throw ConfigParseError("empty grid specification");
  std::vector<GridDimension> dims;
  for (const std::string& part : detail::split(spec, ',')) {
    size_t eq = part.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigParseError("grid dimension needs name=lo:hi:count, got '" + part + "'");
    GridDimension d;
    d.name = part.substr(0, eq);
    for (char& ch : d.name)
      if (ch == '-') ch = '_';
    std::vector<std::string> f = detail::split(part.substr(eq + 1), ':');
    if (f.size() == 1) {
      d.lo = d.hi = parse_double_token(f[0], "grid value for " + d.name);
      d.count = 1;
    } else if (f.size() == 3) {
      d.lo = parse_double_token(f[0], "grid start for " + d.name);
      d.hi = parse_double_token(f[1], "grid end for " + d.name);
      long long c = parse_int_token(f[2], "grid count for " + d.name);
      if (c < 1 || c > 1000000)
        throw ConfigParseError("grid count for " + d.name + " must lie in [1, 1000000]");
      d.count = static_cast<int>(c);
    } else {
      throw ConfigParseError("grid dimension needs name=lo:hi:count, got '" + part + "'");
    }
    for (const GridDimension& prev : dims)
      if (prev.name == d.name)
        throw ConfigParseError("duplicate grid dimension: " + d.name);
    dims.push_back(d);
  }
  return dims;
}

inline long grid_point_count(const std::vector<GridDimension>& dims) {
  long n = 1;
  for (const GridDimension& d : dims) n *= d.count;
  return n;
}

// Flat index -> per-dimension indices, first dimension slowest.
inline std::vector<int> grid_multi_index(const std::vector<GridDimension>& dims, long flat) {
  std::vector<int> idx(dims.size(), 0);
  for (size_t k = dims.size(); k-- > 0;) {
    idx[k] = static_cast<int>(flat % dims[k].count);
    flat /= dims[k].count;
  }
  return idx;
}

// ---------------------------------------------------------------------------
// Worker pool
// ---------------------------------------------------------------------------

// RBMTS_WORKERS overrides the default (hardware concurrency, capped at 8).
inline int worker_count() {
  if (const char* env = std::getenv("RBMTS_WORKERS")) {
    long long v = parse_int_token(env, "RBMTS_WORKERS");
    if (v < 1 || v > 256) throw ConfigParseError("RBMTS_WORKERS must lie in [1, 256]");
    return static_cast<int>(v);
  }
  unsigned hc = std::thread::hardware_concurrency();
  if (hc == 0) return 1;
  return static_cast<int>(std::min(hc, 8u));
}

// Runs fn(0..n-1) over a work queue. fn must not throw; callers catch per
// point and record failures as data.
inline void run_parallel(long n, int workers, const std::function<void(long)>& fn) {
  if (n <= 0) return;
  if (workers <= 1 || n == 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  auto drain = [&] {
    for (long i; (i = next.fetch_add(1)) < n;) fn(i);
  };
  std::vector<std::thread> pool;
  const int spawn = static_cast<int>(std::min<long>(workers, n));
  pool.reserve(spawn);
  for (int w = 0; w < spawn; ++w) pool.emplace_back(drain);
  for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// Shared option groups
// ---------------------------------------------------------------------------

struct PhysicsOptions {
  double beta_star = 1.2;
  double beta = 1.2;
  double alpha = 1.0;
  double c = 0.0;
  int p = 1;
  int p_star = 1;
  std::string student_prior = "binary";
  std::string teacher_prior = "binary";
  int wishart_d = 0;  // > 0 requests a Wishart-projected covariance
  std::uint64_t wishart_seed = 7;
};

struct SolverOptions {
  std::string init = "near-diagonal:0.4:0.01";
  int samples = 10000;
  double tolerance = 1e-6;
  int max_iters = 10000;
  double dt_order = 0.1;
  double dt_conjugate = 1.0;
  std::uint64_t seed = 1;
  std::string symmetrize;  // "i:j", 1-based student rows
};

inline StudentPrior parse_student_prior(const std::string& s) {
  if (s == "binary") return StudentPrior::BinaryUniform;
  if (s == "gaussian") return StudentPrior::StandardGaussian;
  throw ConfigParseError("unknown student prior: " + s);
}

inline TeacherPrior parse_teacher_prior(const std::string& s) {
  if (s == "binary") return TeacherPrior::BinaryArcsine;
  if (s == "gaussian") return TeacherPrior::Gaussian;
  throw ConfigParseError("unknown teacher prior: " + s);
}

inline Hyperparameters make_hyper(const PhysicsOptions& o) {
  Hyperparameters h;
  h.beta_star = o.beta_star;
  h.beta = o.beta;
  h.alpha = o.alpha;
  h.p_star = o.p_star;
  h.p = o.p;
  h.student_prior = parse_student_prior(o.student_prior);
  h.teacher_prior = parse_teacher_prior(o.teacher_prior);
  return h;
}

inline CovarianceSpec make_cov(const PhysicsOptions& o) {
  if (o.wishart_d > 0) return CovarianceSpec::wishart(o.c, o.wishart_d, o.wishart_seed);
  return CovarianceSpec::uniform(o.c);
}

// validate() collects all violations; here they become one ConfigParseError.
inline CheckedConfig require_checked(const Hyperparameters& h, const CovarianceSpec& cov) {
  CheckedConfig chk = validate(h, cov);
  if (!chk.ok) {
    std::string msg = "invalid configuration:";
    for (const Violation& v : chk.violations) msg += "\n  [" + v.code + "] " + v.detail;
    throw ConfigParseError(msg);
  }
  return chk;
}

// Grammar: paramagnetic | near-diagonal[:m0:eps] | off-diagonal[:m0:eps:row:col]
// | random[:scale[:seed]]. Rows/columns are 1-based student indices.
inline InitialStateSpec parse_init_spec(const std::string& text) {
  std::vector<std::string> f = detail::split(text, ':');
  const std::string& kind = f[0];
  auto expect = [&](std::initializer_list<size_t> allowed) {
    for (size_t n : allowed)
      if (f.size() == n) return;
    throw ConfigParseError("malformed initial state '" + text + "'");
  };
  if (kind == "paramagnetic") {
    expect({1});
    return paramagnetic_init();
  }
  if (kind == "near-diagonal") {
    expect({1, 3});
    double m0 = f.size() > 1 ? parse_double_token(f[1], "init m0") : 0.4;
    double eps = f.size() > 2 ? parse_double_token(f[2], "init eps") : 0.01;
    return near_diagonal_init(m0, eps);
  }
  if (kind == "off-diagonal") {
    expect({1, 5});
    double m0 = 0.4, eps = 0.01;
    int row = 1, col = 2;
    if (f.size() == 5) {
      m0 = parse_double_token(f[1], "init m0");
      eps = parse_double_token(f[2], "init eps");
      row = static_cast<int>(parse_int_token(f[3], "init row"));
      col = static_cast<int>(parse_int_token(f[4], "init column"));
    }
    return off_diagonal_init(m0, eps, row, col);
  }
  if (kind == "random") {
    expect({1, 2, 3});
    double scale = f.size() > 1 ? parse_double_token(f[1], "init scale") : 0.3;
    if (f.size() > 2) {
      long long seed = parse_int_token(f[2], "init seed");
      return random_init(scale, static_cast<std::uint64_t>(seed));
    }
    return random_init(scale);
  }
  throw ConfigParseError("unknown initial state kind: " + kind);
}

inline SolverConfig make_solver_config(const SolverOptions& o) {
  SolverConfig cfg;
  cfg.n_gaussian_samples = o.samples;
  cfg.tolerance = o.tolerance;
  cfg.max_iters = o.max_iters;
  cfg.dt_order = o.dt_order;
  cfg.dt_conjugate = o.dt_conjugate;
  cfg.seed = o.seed;
  if (!o.symmetrize.empty()) {
    std::vector<std::string> f = detail::split(o.symmetrize, ':');
    if (f.size() != 2) throw ConfigParseError("--symmetrize needs row:row, got '" + o.symmetrize + "'");
    cfg.symmetrize_pair = {static_cast<int>(parse_int_token(f[0], "symmetrize row")),
                           static_cast<int>(parse_int_token(f[1], "symmetrize row"))};
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Row schema shared by solve and sweep
// ---------------------------------------------------------------------------

inline constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

inline void append_matrix_columns(std::vector<std::string>& cols, const std::string& base,
                                  int rows, int colsn) {
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < colsn; ++j)
      cols.push_back(base + "_" + std::to_string(i) + "_" + std::to_string(j));
}

// alpha, T, beta, beta_star, c, p, p_star, m (P*xP), q (PxP), s (PxP),
// residual, iterations, status — matrices flattened row-major.
inline std::vector<std::string> state_row_schema(int p_star, int p) {
  std::vector<std::string> cols = {"alpha", "T", "beta", "beta_star", "c", "p", "p_star"};
  append_matrix_columns(cols, "m", p_star, p);
  append_matrix_columns(cols, "q", p, p);
  append_matrix_columns(cols, "s", p, p);
  cols.push_back("residual");
  cols.push_back("iterations");
  cols.push_back("status");
  return cols;
}

inline void append_matrix_cells(std::vector<Cell>& row, const Matrix* m, int rows, int colsn) {
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < colsn; ++j) row.push_back(m ? (*m)(i, j) : kNan);
}

inline std::vector<Cell> state_row(const Hyperparameters& h, double c,
                                   const OrderParameterState* st, double residual,
                                   double iterations, const std::string& status) {
  std::vector<Cell> row = {h.alpha,
                           1.0 / h.beta,
                           h.beta,
                           h.beta_star,
                           c,
                           static_cast<double>(h.p),
                           static_cast<double>(h.p_star)};
  append_matrix_cells(row, st ? &st->m : nullptr, h.p_star, h.p);
  append_matrix_cells(row, st ? &st->q : nullptr, h.p, h.p);
  append_matrix_cells(row, st ? &st->s : nullptr, h.p, h.p);
  row.push_back(residual);
  row.push_back(iterations);
  row.push_back(status);
  return row;
}

inline void print_matrix(std::ostream& out, const std::string& name, const Matrix& m) {
  out << name << " = [";
  for (int i = 0; i < m.rows(); ++i) {
    if (i) out << "; ";
    for (int j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << format_number(m(i, j));
    }
  }
  out << "]\n";
}

inline nlohmann::json physics_json(const PhysicsOptions& o) {
  return {{"beta_star", o.beta_star}, {"beta", o.beta},
          {"alpha", o.alpha},         {"c", o.c},
          {"p", o.p},                 {"p_star", o.p_star},
          {"student_prior", o.student_prior}, {"teacher_prior", o.teacher_prior},
          {"wishart_d", o.wishart_d}, {"wishart_seed", o.wishart_seed}};
}

inline nlohmann::json solver_json(const SolverOptions& o) {
  return {{"init", o.init},           {"samples", o.samples},
          {"tolerance", o.tolerance}, {"max_iters", o.max_iters},
          {"dt_order", o.dt_order},   {"dt_conjugate", o.dt_conjugate},
          {"seed", o.seed},           {"symmetrize", o.symmetrize}};
}

// ---------------------------------------------------------------------------
// stability
// ---------------------------------------------------------------------------

struct StabilityOptions {
  PhysicsOptions phys;
  int draws = 0;  // > 0 adds Wishart ensemble statistics
  std::string output;
};

inline int run_stability(const StabilityOptions& o, std::ostream& out, std::ostream&) {
  Hyperparameters h = make_hyper(o.phys);
  CovarianceSpec cov = make_cov(o.phys);
  CheckedConfig chk = require_checked(h, cov);
  StabilityReport rep = critical_load(chk.Q, h.beta_star, h.beta);
  out << "alpha_crit = " << format_number(rep.alpha_crit) << "\n";
  out << "lambda_max = " << format_number(rep.lambda_max) << "\n";
  if (o.draws > 0) {
    Rng rng(o.phys.wishart_seed);
    const int d = o.phys.wishart_d > 0 ? o.phys.wishart_d : h.p_star;
    WishartCriticalStatistics ws =
        wishart_critical_statistics(o.phys.c, h.p_star, h.beta_star, h.beta, o.draws, rng);
    out << "alpha_crit_mean = " << format_number(ws.alpha_crit_mean) << "\n";
    out << "alpha_crit_se = " << format_number(ws.alpha_crit_se) << "\n";
    out << "lambda_max_harmonic = " << format_number(ws.lambda_max_harmonic) << "\n";
    out << "draws = " << ws.n_draws << " (d = " << d << ")\n";
  }
  if (!o.output.empty()) {
    Table t;
    t.columns = {"c", "p_star", "beta_star", "beta", "lambda_max", "alpha_crit"};
    t.rows.push_back({o.phys.c, static_cast<double>(h.p_star), h.beta_star, h.beta,
                      rep.lambda_max, rep.alpha_crit});
    emit_csv(t, o.output);
    write_manifest(o.output, {{"command", "stability"},
                              {"config", physics_json(o.phys)},
                              {"draws", o.draws},
                              {"output", o.output}});
  }
  return 0;
}

// ---------------------------------------------------------------------------
// reduced
// ---------------------------------------------------------------------------

struct ReducedOptions {
  double beta_star = 1.2;
  double beta = 1.2;
  double alpha = 1.0;
  std::string branch = "binary-psb";
  double damping = 0.5;
  double tolerance = 1e-10;
  int max_iters = 100000;
  double init_m = 0.5;
  double init_q = 0.5;
  double init_g = 0.5;
  int nodes = 61;
  std::string output;
};

inline int run_reduced(const ReducedOptions& o, std::ostream& out, std::ostream&) {
  ReducedConfig rc;
  rc.damping = o.damping;
  rc.tolerance = o.tolerance;
  rc.max_iters = o.max_iters;
  rc.init_m = o.init_m;
  rc.init_q = o.init_q;
  rc.init_g = o.init_g;
  rc.quadrature_nodes = o.nodes;

  double m = kNan, q = kNan, g = kNan, m_hat = kNan, q_hat = kNan, g_hat = kNan;
  double residual = kNan;
  bool converged = false;
  long iterations = 0;
  if (o.branch == "binary-psb") {
    BinaryPsbSolution s = solve_binary_psb(o.beta_star, o.beta, o.alpha, rc);
    m = s.m; q = s.q; m_hat = s.m_hat; q_hat = s.q_hat;
    converged = s.converged; iterations = s.iterations; residual = s.residual;
  } else if (o.branch == "spurious") {
    SpuriousSolution s = solve_spurious(o.beta, o.alpha, rc);
    g = s.g; g_hat = s.g_hat;
    converged = s.converged; iterations = s.iterations; residual = s.residual;
  } else if (o.branch == "gaussian-psb") {
    GaussianPsbSolution s = solve_gaussian_psb(o.beta_star, o.beta, o.alpha, rc);
    m = s.m; q = s.q; g = s.g; m_hat = s.m_hat; q_hat = s.q_hat; g_hat = s.g_hat;
    converged = s.converged; iterations = s.iterations; residual = s.residual;
  } else if (o.branch == "binary-matched") {
    NishimoriSolution s = solve_binary_matched(o.beta, o.alpha, rc);
    m = s.m; q = s.m; m_hat = s.m_hat; q_hat = s.m_hat;
    converged = s.converged; iterations = s.iterations; residual = s.residual;
  } else if (o.branch == "gaussian-matched") {
    NishimoriSolution s = solve_gaussian_matched(o.beta, o.alpha, rc);
    m = s.m; q = s.m; m_hat = s.m_hat; q_hat = s.m_hat;
    converged = s.converged; iterations = s.iterations; residual = s.residual;
  } else {
    throw ConfigParseError("unknown branch: " + o.branch);
  }
  const std::string status = converged ? "converged" : "max_iters";

  out << "branch = " << o.branch << "\n";
  out << "m = " << format_number(m) << "\n";
  out << "q = " << format_number(q) << "\n";
  out << "g = " << format_number(g) << "\n";
  out << "m_hat = " << format_number(m_hat) << "\n";
  out << "q_hat = " << format_number(q_hat) << "\n";
  out << "g_hat = " << format_number(g_hat) << "\n";
  out << "status = " << status << "\n";
  out << "iterations = " << iterations << "\n";
  out << "residual = " << format_number(residual) << "\n";

  if (!o.output.empty()) {
    Table t;
    t.columns = {"branch", "beta_star", "beta", "alpha",  "m",
                 "q",      "g",         "m_hat", "q_hat", "g_hat",
                 "residual", "iterations", "status"};
    t.rows.push_back({o.branch, o.beta_star, o.beta, o.alpha, m, q, g, m_hat, q_hat, g_hat,
                      residual, static_cast<double>(iterations), status});
    emit_csv(t, o.output);
    write_manifest(
        o.output,
        {{"command", "reduced"},
         {"config",
          {{"beta_star", o.beta_star}, {"beta", o.beta}, {"alpha", o.alpha},
           {"branch", o.branch}, {"damping", o.damping}, {"tolerance", o.tolerance},
           {"max_iters", o.max_iters}, {"init_m", o.init_m}, {"init_q", o.init_q},
           {"init_g", o.init_g}, {"nodes", o.nodes}}},
         {"output", o.output}});
  }
  return 0;
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

struct SolveOptions {
  PhysicsOptions phys;
  SolverOptions solver;
  std::string output;
};

inline int run_solve(const SolveOptions& o, std::ostream& out, std::ostream& err) {
  Hyperparameters h = make_hyper(o.phys);
  CheckedConfig chk = require_checked(h, make_cov(o.phys));
  InitialStateSpec spec = parse_init_spec(o.solver.init);
  SolverConfig cfg = make_solver_config(o.solver);

  std::string status = "diverged";
  double residual = kNan, iterations = kNan;
  const OrderParameterState* stp = nullptr;
  SolveResult res;
  try {
    res = solve(chk.h, chk.Q, cfg, initial_state(spec, h.p_star, h.p));
    status = res.converged ? "converged" : "max_iters";
    stp = &res.state;
    iterations = res.iterations;
    if (!res.residual_trace.empty()) residual = res.residual_trace.back();
  } catch (const Error& e) {
    err << "diverged: " << e.what() << "\n";
  }

  out << "status = " << status << "\n";
  out << "iterations = " << format_number(iterations) << "\n";
  out << "residual = " << format_number(residual) << "\n";
  if (stp) {
    out << "mc_standard_error = " << format_number(res.mc_standard_error) << "\n";
    out << "imaginary_leakage = " << format_number(res.imaginary_leakage) << "\n";
    print_matrix(out, "m", stp->m);
    print_matrix(out, "q", stp->q);
    print_matrix(out, "s", stp->s);
  }

  if (!o.output.empty()) {
    Table t;
    t.columns = state_row_schema(h.p_star, h.p);
    t.rows.push_back(state_row(h, o.phys.c, stp, residual, iterations, status));
    emit_csv(t, o.output);
    write_manifest(o.output, {{"command", "solve"},
                              {"config", physics_json(o.phys)},
                              {"solver", solver_json(o.solver)},
                              {"output", o.output}});
  }
  return status == "diverged" ? 2 : 0;
}

// ---------------------------------------------------------------------------
// free-entropy
// ---------------------------------------------------------------------------

struct FreeEntropyOptions {
  PhysicsOptions phys;
  SolverOptions solver;
  int fe_samples = 200000;
  std::string compare;  // second initial state; evaluates f at both and the gap
  std::string output;
};

inline int run_free_entropy(const FreeEntropyOptions& o, std::ostream& out, std::ostream& err) {
  Hyperparameters h = make_hyper(o.phys);
  CheckedConfig chk = require_checked(h, make_cov(o.phys));
  SolverConfig cfg = make_solver_config(o.solver);

  struct Branch {
    std::string init;
    std::string status = "diverged";
    double residual = kNan, iterations = kNan;
    double f = kNan, f_se = kNan;
    OrderParameterState state;
  };
  std::vector<Branch> branches;
  branches.push_back({o.solver.init});
  if (!o.compare.empty()) branches.push_back({o.compare});

  for (Branch& b : branches) {
    try {
      SolveResult r = solve(chk.h, chk.Q, cfg, initial_state(parse_init_spec(b.init), h.p_star, h.p));
      b.status = r.converged ? "converged" : "max_iters";
      b.state = r.state;
      b.iterations = r.iterations;
      if (!r.residual_trace.empty()) b.residual = r.residual_trace.back();
    } catch (const Error& e) {
      err << "diverged at init " << b.init << ": " << e.what() << "\n";
    }
  }

  const int n_fe = o.fe_samples + (o.fe_samples % 2);  // gap evaluation wants pairs
  double gap = kNan, gap_se = kNan;
  Rng fe_rng(derive_seed(o.solver.seed, 0xFEull));
  const bool both_ok = branches.size() == 2 && branches[0].status != "diverged" &&
                       branches[1].status != "diverged";
  if (both_ok) {
    FreeEntropyGap fg =
        free_entropy_gap(branches[0].state, branches[1].state, chk.h, chk.Q, n_fe, fe_rng);
    gap = fg.value;
    gap_se = fg.standard_error;
    branches[0].f = fg.first.value;
    branches[0].f_se = fg.first.mc_standard_error;
    branches[1].f = fg.second.value;
    branches[1].f_se = fg.second.mc_standard_error;
  } else {
    for (Branch& b : branches) {
      if (b.status == "diverged") continue;
      FreeEntropyResult fr = free_entropy(b.state, chk.h, chk.Q, n_fe, fe_rng);
      b.f = fr.value;
      b.f_se = fr.mc_standard_error;
    }
  }

  for (size_t i = 0; i < branches.size(); ++i) {
    const Branch& b = branches[i];
    const std::string tag = i == 0 ? "f" : "f_compare";
    out << tag << " = " << format_number(b.f) << "\n";
    out << tag << "_se = " << format_number(b.f_se) << "\n";
    out << tag << "_status = " << b.status << "\n";
  }
  if (branches.size() == 2) {
    out << "gap = " << format_number(gap) << "\n";
    out << "gap_se = " << format_number(gap_se) << "\n";
  }

  if (!o.output.empty()) {
    Table t;
    t.columns = {"branch", "init", "f", "f_se", "residual", "iterations", "status"};
    for (size_t i = 0; i < branches.size(); ++i) {
      const Branch& b = branches[i];
      t.rows.push_back({i == 0 ? std::string("primary") : std::string("compare"), b.init, b.f,
                        b.f_se, b.residual, b.iterations, b.status});
    }
    if (branches.size() == 2)
      t.rows.push_back({std::string("gap"), branches[0].init + " - " + branches[1].init, gap,
                        gap_se, kNan, kNan, both_ok ? "converged" : "diverged"});
    emit_csv(t, o.output);
    write_manifest(o.output, {{"command", "free-entropy"},
                              {"config", physics_json(o.phys)},
                              {"solver", solver_json(o.solver)},
                              {"fe_samples", n_fe},
                              {"compare", o.compare},
                              {"output", o.output}});
  }
  for (const Branch& b : branches)
    if (b.status == "diverged") return 2;
  return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOptions {
  int n = 256;
  double alpha = 1.0;
  int m_samples = 0;  // > 0 overrides alpha * n
  int p = 1;
  int p_star = 1;
  double beta_star = 1.2;
  double beta = 1.2;
  double c = 0.0;
  std::string student_prior = "binary";
  std::string teacher_prior = "binary";
  int gibbs_sweeps = 200;
  int sweeps = 1000;
  int window = 0;
  std::uint64_t seed = 1;
  double field_lambda = 0.0;
  double step = 1e-3;
  double decay = 1.0;
  double friction = 1.0;
  int cd_steps = 1;
  double guard = 100.0;
  std::string output;
};

inline int run_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
  const int m_count = o.m_samples > 0 ? o.m_samples : static_cast<int>(std::lround(o.alpha * o.n));
  PhysicsOptions phys;
  phys.beta_star = o.beta_star;
  phys.beta = o.beta;
  phys.alpha = static_cast<double>(m_count) / o.n;
  phys.c = o.c;
  phys.p = o.p;
  phys.p_star = o.p_star;
  phys.student_prior = o.student_prior;
  phys.teacher_prior = o.teacher_prior;
  Hyperparameters h = make_hyper(phys);
  CheckedConfig chk = require_checked(h, make_cov(phys));

  SimulationConfig sim;
  sim.gibbs_sweeps = o.gibbs_sweeps;
  sim.mc_sweeps = o.sweeps;
  sim.summary_window = o.window;
  sim.seed = o.seed;
  if (o.field_lambda > 0.0) sim.external_field = ExternalField{o.field_lambda, {}};
  sim.langevin.step_size = o.step;
  sim.langevin.decay = o.decay;
  sim.langevin.friction = o.friction;
  sim.langevin.cd_steps = o.cd_steps;
  sim.langevin.guard = o.guard;

  Rng master(o.seed);
  Rng teacher_rng = master.split(1);
  Rng data_rng = master.split(2);
  Rng init_rng = master.split(3);
  Rng train_rng = master.split(4);

  const PatternMatrix xi_star = h.teacher_prior == TeacherPrior::BinaryArcsine
                                    ? sample_binary_arcsine(chk.Q, o.n, teacher_rng)
                                    : sample_gaussian_patterns(chk.Q, o.n, teacher_rng);
  const Dataset data = generate_teacher_data(xi_star, o.beta_star, m_count, o.n, sim, data_rng);

  const bool binary_student = h.student_prior == StudentPrior::BinaryUniform;
  PatternMatrix init;
  init.binary = binary_student;
  init.values.resize(o.p, o.n);
  for (int i = 0; i < o.p; ++i)
    for (int j = 0; j < o.n; ++j)
      init.values(i, j) = binary_student ? (init_rng.uniform() < 0.5 ? -1.0 : 1.0)
                                         : init_rng.normal();

  TrainResult res;
  try {
    res = binary_student ? train_student_binary(data, o.beta, o.p, init, sim, train_rng)
                         : train_student_gaussian(data, o.beta, o.p, init, sim, train_rng);
  } catch (const DivergedTrajectory& e) {
    err << "diverged: " << e.what() << "\n";
    return 2;
  }

  const OverlapTrace& tr = res.trace;
  out << "epochs = " << o.sweeps << "\n";
  out << "window = " << tr.window << "\n";
  print_matrix(out, "window_mean", tr.window_mean);
  print_matrix(out, "window_std", tr.window_std);
  out << "recall = " << format_number(recall_magnetization(tr.window_mean)) << "\n";
  if (binary_student) {
    double acc = 0.0;
    for (size_t e = 1; e < tr.acceptance.size(); ++e) acc += tr.acceptance[e];
    if (tr.acceptance.size() > 1) acc /= static_cast<double>(tr.acceptance.size() - 1);
    out << "mean_acceptance = " << format_number(acc) << "\n";
  } else if (!tr.step_size.empty()) {
    out << "final_step = " << format_number(tr.step_size.back()) << "\n";
  }

  if (!o.output.empty()) {
    Table t;
    t.columns = {"epoch"};
    append_matrix_columns(t.columns, "m", o.p_star, o.p);
    t.columns.push_back(binary_student ? "acceptance" : "step_size");
    const std::vector<double>& extra = binary_student ? tr.acceptance : tr.step_size;
    for (size_t e = 0; e < tr.m.size(); ++e) {
      std::vector<Cell> row = {static_cast<double>(e)};
      append_matrix_cells(row, &tr.m[e], o.p_star, o.p);
      row.push_back(e < extra.size() ? extra[e] : kNan);
      t.rows.push_back(std::move(row));
    }
    emit_csv(t, o.output);
    write_manifest(
        o.output,
        {{"command", "simulate"},
         {"config",
          {{"n", o.n}, {"m_samples", m_count}, {"alpha", phys.alpha}, {"p", o.p},
           {"p_star", o.p_star}, {"beta_star", o.beta_star}, {"beta", o.beta}, {"c", o.c},
           {"student_prior", o.student_prior}, {"teacher_prior", o.teacher_prior},
           {"gibbs_sweeps", o.gibbs_sweeps}, {"sweeps", o.sweeps}, {"window", tr.window},
           {"field_lambda", o.field_lambda}, {"step", o.step}, {"decay", o.decay},
           {"friction", o.friction}, {"cd_steps", o.cd_steps}, {"guard", o.guard}}},
         {"seed", o.seed},
         {"teacher_seed", data.teacher_seed},
         {"output", o.output}});
  }
  return 0;
}

// ---------------------------------------------------------------------------
// lottery
// ---------------------------------------------------------------------------

struct LotteryOptions {
  int n = 512;
  int p_star = 4;
  int p_large = 8;
  int keep = 4;
  double beta_star = 4.0;
  double beta = 4.0;
  std::string alphas = "0,0.25,0.5,0.75,1";
  int gibbs_sweeps = 200;
  int sweeps = 1000;
  int window = 0;
  double step = 1e-3;
  double decay = 1.0;
  double friction = 1.0;
  int cd_steps = 1;
  double guard = 100.0;
  std::uint64_t seed = 1;
  std::string output;
};

inline int run_lottery(const LotteryOptions& o, std::ostream& out, std::ostream&) {
  LotteryConfig cfg;
  cfg.n = o.n;
  cfg.p_star = o.p_star;
  cfg.p_large = o.p_large;
  cfg.keep = o.keep;
  cfg.beta_star = o.beta_star;
  cfg.beta = o.beta;
  cfg.alphas = parse_double_list(o.alphas, "--alphas");
  cfg.sim.gibbs_sweeps = o.gibbs_sweeps;
  cfg.sim.mc_sweeps = o.sweeps;
  cfg.sim.summary_window = o.window;
  cfg.sim.seed = o.seed;
  cfg.sim.langevin.step_size = o.step;
  cfg.sim.langevin.decay = o.decay;
  cfg.sim.langevin.friction = o.friction;
  cfg.sim.langevin.cd_steps = o.cd_steps;
  cfg.sim.langevin.guard = o.guard;

  Rng master(o.seed);
  LotteryResult res = run_lottery_experiment(cfg, master);

  const size_t epochs = res.median_lead.size();
  const size_t quarter = std::max<size_t>(1, epochs / 4);
  double early = 0.0, late = 0.0, peak = -1e300;
  for (size_t e = 0; e < epochs; ++e) {
    if (e < quarter) early += res.median_lead[e];
    if (e >= epochs - quarter) late += res.median_lead[e];
    peak = std::max(peak, std::abs(res.median_lead[e]));
  }
  out << "points = " << res.alphas.size() << "\n";
  out << "epochs = " << (epochs ? epochs - 1 : 0) << "\n";
  out << "early_median_lead = " << format_number(early / static_cast<double>(quarter)) << "\n";
  out << "late_median_lead = " << format_number(late / static_cast<double>(quarter)) << "\n";
  out << "peak_abs_median_lead = " << format_number(peak) << "\n";

  if (!o.output.empty()) {
    Table t;
    t.columns = {"epoch", "median_lead", "mad_lead"};
    for (size_t j = 0; j < res.alphas.size(); ++j)
      t.columns.push_back("ticket_" + std::to_string(j));
    for (size_t j = 0; j < res.alphas.size(); ++j)
      t.columns.push_back("control_" + std::to_string(j));
    for (size_t e = 0; e < epochs; ++e) {
      std::vector<Cell> row = {static_cast<double>(e), res.median_lead[e], res.mad_lead[e]};
      for (size_t j = 0; j < res.alphas.size(); ++j) row.push_back(res.m_ticket[j][e]);
      for (size_t j = 0; j < res.alphas.size(); ++j) row.push_back(res.m_control[j][e]);
      t.rows.push_back(std::move(row));
    }
    emit_csv(t, o.output);
    write_manifest(
        o.output,
        {{"command", "lottery"},
         {"config",
          {{"n", o.n}, {"p_star", o.p_star}, {"p_large", o.p_large}, {"keep", o.keep},
           {"beta_star", o.beta_star}, {"beta", o.beta}, {"alphas", cfg.alphas},
           {"gibbs_sweeps", o.gibbs_sweeps}, {"sweeps", o.sweeps}, {"step", o.step},
           {"decay", o.decay}, {"friction", o.friction}, {"cd_steps", o.cd_steps},
           {"guard", o.guard}}},
         {"seed", o.seed},
         {"output", o.output}});
  }
  return 0;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepOptions {
  PhysicsOptions phys;
  SolverOptions solver;
  std::string grid;
  bool nishimori = false;  // tie beta_star to beta at every grid point
  std::string output = "sweep.csv";
};

// Grid axes: alpha, T (sets beta = 1/T), beta, beta_star, c. Each point gets
// its own solver seeded by derive_seed(master, flat_index); failures are
// recorded per point ("diverged" rows with nan fields) and never abort the
// sweep. Rows follow grid order with the first axis slowest; the result is
// byte-identical for any worker count.
inline int run_sweep(const SweepOptions& o, std::ostream& out, std::ostream&) {
  const std::vector<GridDimension> dims = parse_grid(o.grid);
  for (const GridDimension& d : dims) {
    if (d.name != "alpha" && d.name != "T" && d.name != "beta" && d.name != "beta_star" &&
        d.name != "c")
      throw ConfigParseError("unknown grid axis: " + d.name +
                             " (use alpha, T, beta, beta_star, c)");
    if (o.nishimori && d.name == "beta_star")
      throw ConfigParseError("--nishimori pins beta_star = beta; drop the beta_star axis");
  }
  bool has_T = false, has_beta = false;
  for (const GridDimension& d : dims) {
    has_T |= d.name == "T";
    has_beta |= d.name == "beta";
  }
  if (has_T && has_beta) throw ConfigParseError("grid axes T and beta conflict");

  const InitialStateSpec init_spec = parse_init_spec(o.solver.init);
  const SolverConfig base_cfg = make_solver_config(o.solver);
  const long n_points = grid_point_count(dims);
  const int workers = worker_count();

  Table t;
  t.columns = state_row_schema(o.phys.p_star, o.phys.p);
  t.rows.resize(n_points);
  std::atomic<long> diverged{0};

  run_parallel(n_points, workers, [&](long i) {
    PhysicsOptions pt = o.phys;
    const std::vector<int> idx = grid_multi_index(dims, i);
    for (size_t k = 0; k < dims.size(); ++k) {
      const double v = dims[k].value(idx[k]);
      if (dims[k].name == "alpha") pt.alpha = v;
      else if (dims[k].name == "T") pt.beta = 1.0 / v;
      else if (dims[k].name == "beta") pt.beta = v;
      else if (dims[k].name == "beta_star") pt.beta_star = v;
      else pt.c = v;
    }
    if (o.nishimori) pt.beta_star = pt.beta;
    Hyperparameters h = make_hyper(pt);
    try {
      CheckedConfig chk = require_checked(h, make_cov(pt));
      SolverConfig cfg = base_cfg;
      cfg.seed = derive_seed(o.solver.seed, static_cast<std::uint64_t>(i));
      SolveResult r = solve(chk.h, chk.Q, cfg, initial_state(init_spec, h.p_star, h.p));
      const double residual = r.residual_trace.empty() ? kNan : r.residual_trace.back();
      t.rows[i] = state_row(h, pt.c, &r.state, residual, r.iterations,
                            r.converged ? "converged" : "max_iters");
    } catch (const std::exception&) {
      diverged.fetch_add(1);
      t.rows[i] = state_row(h, pt.c, nullptr, kNan, kNan, "diverged");
    }
  });

  emit_csv(t, o.output);
  nlohmann::json grid_json = nlohmann::json::array();
  for (const GridDimension& d : dims)
    grid_json.push_back({{"name", d.name}, {"lo", d.lo}, {"hi", d.hi}, {"count", d.count}});
  write_manifest(o.output, {{"command", "sweep"},
                            {"config", physics_json(o.phys)},
                            {"solver", solver_json(o.solver)},
                            {"grid", grid_json},
                            {"nishimori", o.nishimori},
                            {"master_seed", o.solver.seed},
                            {"seed_rule", "derive_seed(master_seed, flat_grid_index)"},
                            {"workers", workers},
                            {"points", n_points},
                            {"diverged", diverged.load()},
                            {"output", o.output}});
  out << "wrote " << o.output << " (" << n_points << " points, " << diverged.load()
      << " diverged)\n";
  return diverged.load() > 0 ? 2 : 0;
}

// ---------------------------------------------------------------------------
// Flag wiring
// ---------------------------------------------------------------------------

namespace detail {

inline void add_physics_flags(CLI::App* sub, PhysicsOptions& o) {
  sub->add_option("--beta-star", o.beta_star, "Teacher inverse temperature")->capture_default_str();
  sub->add_option("--beta", o.beta, "Student inverse temperature")->capture_default_str();
  sub->add_option("--alpha", o.alpha, "Load M/N")->capture_default_str();
  sub->add_option("--c", o.c, "Uniform teacher-pattern correlation")->capture_default_str();
  sub->add_option("--p", o.p, "Student hidden units")->capture_default_str();
  sub->add_option("--p-star", o.p_star, "Teacher hidden units")->capture_default_str();
  sub->add_option("--student-prior", o.student_prior, "Student pattern prior")
      ->check(CLI::IsMember({"binary", "gaussian"}))
      ->capture_default_str();
  sub->add_option("--teacher-prior", o.teacher_prior, "Teacher pattern prior")
      ->check(CLI::IsMember({"binary", "gaussian"}))
      ->capture_default_str();
  sub->add_option("--wishart-d", o.wishart_d,
                  "Wishart covariance rank (0 disables the ensemble)")
      ->capture_default_str();
  sub->add_option("--wishart-seed", o.wishart_seed, "Wishart draw seed")->capture_default_str();
}

inline void add_solver_flags(CLI::App* sub, SolverOptions& o) {
  sub->add_option("--init", o.init,
                  "Initial state: paramagnetic | near-diagonal[:m0:eps] | "
                  "off-diagonal[:m0:eps:row:col] | random[:scale[:seed]]")
      ->capture_default_str();
  sub->add_option("--samples", o.samples, "Gaussian quadrature sample count")->capture_default_str();
  sub->add_option("--tolerance", o.tolerance, "Fixed-point residual tolerance")->capture_default_str();
  sub->add_option("--max-iters", o.max_iters, "Iteration cap")->capture_default_str();
  sub->add_option("--dt-order", o.dt_order, "Damping step for the order parameters")
      ->capture_default_str();
  sub->add_option("--dt-conjugate", o.dt_conjugate, "Damping step for the conjugate parameters")
      ->capture_default_str();
  sub->add_option("--seed", o.seed, "Quadrature noise seed")->capture_default_str();
  sub->add_option("--symmetrize", o.symmetrize, "Average a student row pair each step (row:row)")
      ->capture_default_str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Top-level driver. Exit codes: 0 success, 1 configuration error, 2 when a
// requested computation diverged (outputs are still written).
// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Teacher-student RBM toolkit: saddle-point solvers, stability "
               "boundaries, free entropies, and finite-size Monte Carlo"};
  app.set_config("--config", "", "INI file with one section per subcommand");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  SolveOptions solve_opt;
  auto* solve_sub = app.add_subcommand("solve", "Iterate the coupled order-parameter equations");
  solve_sub->configurable();
  detail::add_physics_flags(solve_sub, solve_opt.phys);
  detail::add_solver_flags(solve_sub, solve_opt.solver);
  solve_sub->add_option("--output", solve_opt.output, "CSV path for the fixed point");

  ReducedOptions reduced_opt;
  auto* reduced_sub =
      app.add_subcommand("reduced", "Solve a symmetric scalar branch of the fixed-point equations");
  reduced_sub->configurable();
  reduced_sub->add_option("--beta-star", reduced_opt.beta_star, "Teacher inverse temperature")
      ->capture_default_str();
  reduced_sub->add_option("--beta", reduced_opt.beta, "Student inverse temperature")
      ->capture_default_str();
  reduced_sub->add_option("--alpha", reduced_opt.alpha, "Load M/N")->capture_default_str();
  reduced_sub->add_option("--branch", reduced_opt.branch, "Scalar branch")
      ->check(CLI::IsMember(
          {"binary-psb", "spurious", "gaussian-psb", "binary-matched", "gaussian-matched"}))
      ->capture_default_str();
  reduced_sub->add_option("--damping", reduced_opt.damping, "Update damping")->capture_default_str();
  reduced_sub->add_option("--tolerance", reduced_opt.tolerance, "Residual tolerance")
      ->capture_default_str();
  reduced_sub->add_option("--max-iters", reduced_opt.max_iters, "Iteration cap")
      ->capture_default_str();
  reduced_sub->add_option("--init-m", reduced_opt.init_m, "Initial recall overlap")
      ->capture_default_str();
  reduced_sub->add_option("--init-q", reduced_opt.init_q, "Initial replica overlap")
      ->capture_default_str();
  reduced_sub->add_option("--init-g", reduced_opt.init_g, "Initial spurious overlap")
      ->capture_default_str();
  reduced_sub->add_option("--nodes", reduced_opt.nodes, "Gauss-Hermite node count")
      ->capture_default_str();
  reduced_sub->add_option("--output", reduced_opt.output, "CSV path for the solution row");

  StabilityOptions stab_opt;
  auto* stab_sub = app.add_subcommand(
      "stability", "Critical load where the paramagnetic state destabilizes");
  stab_sub->configurable();
  detail::add_physics_flags(stab_sub, stab_opt.phys);
  stab_sub->add_option("--draws", stab_opt.draws, "Wishart ensemble draw count (0 = single Q)")
      ->capture_default_str();
  stab_sub->add_option("--output", stab_opt.output, "CSV path for the report row");

  FreeEntropyOptions fe_opt;
  auto* fe_sub =
      app.add_subcommand("free-entropy", "Evaluate the free entropy at solved fixed points");
  fe_sub->configurable();
  detail::add_physics_flags(fe_sub, fe_opt.phys);
  detail::add_solver_flags(fe_sub, fe_opt.solver);
  fe_sub->add_option("--fe-samples", fe_opt.fe_samples, "Samples for the free-entropy average")
      ->capture_default_str();
  fe_sub->add_option("--compare", fe_opt.compare,
                     "Second initial state; also reports the free-entropy gap");
  fe_sub->add_option("--output", fe_opt.output, "CSV path for the evaluated branches");

  SimulateOptions sim_opt;
  auto* sim_sub =
      app.add_subcommand("simulate", "Finite-size posterior sampling on planted data");
  sim_sub->configurable();
  sim_sub->add_option("--n", sim_opt.n, "Visible units")->capture_default_str();
  sim_sub->add_option("--alpha", sim_opt.alpha, "Load M/N")->capture_default_str();
  sim_sub->add_option("--m-samples", sim_opt.m_samples, "Sample count (overrides alpha)")
      ->capture_default_str();
  sim_sub->add_option("--p", sim_opt.p, "Student hidden units")->capture_default_str();
  sim_sub->add_option("--p-star", sim_opt.p_star, "Teacher hidden units")->capture_default_str();
  sim_sub->add_option("--beta-star", sim_opt.beta_star, "Teacher inverse temperature")
      ->capture_default_str();
  sim_sub->add_option("--beta", sim_opt.beta, "Student inverse temperature")->capture_default_str();
  sim_sub->add_option("--c", sim_opt.c, "Uniform teacher-pattern correlation")->capture_default_str();
  sim_sub->add_option("--student-prior", sim_opt.student_prior, "binary: Metropolis; gaussian: Langevin")
      ->check(CLI::IsMember({"binary", "gaussian"}))
      ->capture_default_str();
  sim_sub->add_option("--teacher-prior", sim_opt.teacher_prior, "Teacher pattern prior")
      ->check(CLI::IsMember({"binary", "gaussian"}))
      ->capture_default_str();
  sim_sub->add_option("--gibbs-sweeps", sim_opt.gibbs_sweeps, "Teacher data burn-in sweeps")
      ->capture_default_str();
  sim_sub->add_option("--sweeps", sim_opt.sweeps, "Training epochs")->capture_default_str();
  sim_sub->add_option("--window", sim_opt.window, "Trailing summary window (0 = half the run)")
      ->capture_default_str();
  sim_sub->add_option("--seed", sim_opt.seed, "Master seed")->capture_default_str();
  sim_sub->add_option("--field-lambda", sim_opt.field_lambda,
                      "Symmetry-breaking field strength (0 = off)")
      ->capture_default_str();
  sim_sub->add_option("--step", sim_opt.step, "Langevin step size")->capture_default_str();
  sim_sub->add_option("--decay", sim_opt.decay, "Per-epoch step decay")->capture_default_str();
  sim_sub->add_option("--friction", sim_opt.friction, "Langevin friction")->capture_default_str();
  sim_sub->add_option("--cd-steps", sim_opt.cd_steps, "Contrastive-divergence chain steps")
      ->capture_default_str();
  sim_sub->add_option("--guard", sim_opt.guard, "Divergence guard on the pattern norm")
      ->capture_default_str();
  sim_sub->add_option("--output", sim_opt.output, "CSV path for the overlap trace");

  LotteryOptions lot_opt;
  auto* lot_sub = app.add_subcommand(
      "lottery", "Prune a wide student and race the ticket against a fresh control");
  lot_sub->configurable();
  lot_sub->add_option("--n", lot_opt.n, "Visible units")->capture_default_str();
  lot_sub->add_option("--p-star", lot_opt.p_star, "Teacher hidden units")->capture_default_str();
  lot_sub->add_option("--p-large", lot_opt.p_large, "Wide student hidden units")
      ->capture_default_str();
  lot_sub->add_option("--keep", lot_opt.keep, "Rows kept by the prune (also control width)")
      ->capture_default_str();
  lot_sub->add_option("--beta-star", lot_opt.beta_star, "Teacher inverse temperature")
      ->capture_default_str();
  lot_sub->add_option("--beta", lot_opt.beta, "Student inverse temperature")->capture_default_str();
  lot_sub->add_option("--alphas", lot_opt.alphas, "Comma-separated load grid")
      ->capture_default_str();
  lot_sub->add_option("--gibbs-sweeps", lot_opt.gibbs_sweeps, "Teacher data burn-in sweeps")
      ->capture_default_str();
  lot_sub->add_option("--sweeps", lot_opt.sweeps, "Training epochs")->capture_default_str();
  lot_sub->add_option("--window", lot_opt.window, "Trailing summary window")->capture_default_str();
  lot_sub->add_option("--step", lot_opt.step, "Langevin step size")->capture_default_str();
  lot_sub->add_option("--decay", lot_opt.decay, "Per-epoch step decay")->capture_default_str();
  lot_sub->add_option("--friction", lot_opt.friction, "Langevin friction")->capture_default_str();
  lot_sub->add_option("--cd-steps", lot_opt.cd_steps, "Contrastive-divergence chain steps")
      ->capture_default_str();
  lot_sub->add_option("--guard", lot_opt.guard, "Divergence guard on the pattern norm")
      ->capture_default_str();
  lot_sub->add_option("--seed", lot_opt.seed, "Master seed")->capture_default_str();
  lot_sub->add_option("--output", lot_opt.output, "CSV path for the per-epoch leads");

  SweepOptions sweep_opt;
  auto* sweep_sub = app.add_subcommand(
      "sweep", "Solve the fixed-point equations over a parameter grid, in parallel");
  sweep_sub->configurable();
  detail::add_physics_flags(sweep_sub, sweep_opt.phys);
  detail::add_solver_flags(sweep_sub, sweep_opt.solver);
  sweep_sub
      ->add_option("--grid", sweep_opt.grid,
                   "Axes: name=lo:hi:count[,name=lo:hi:count...]; names from "
                   "{alpha, T, beta, beta_star, c}; first axis slowest")
      ->required();
  sweep_sub->add_flag("--nishimori", sweep_opt.nishimori, "Pin beta_star = beta at every point");
  sweep_sub->add_option("--output", sweep_opt.output, "CSV path for the grid rows")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (solve_sub->parsed()) return run_solve(solve_opt, out, err);
    if (reduced_sub->parsed()) return run_reduced(reduced_opt, out, err);
    if (stab_sub->parsed()) return run_stability(stab_opt, out, err);
    if (fe_sub->parsed()) return run_free_entropy(fe_opt, out, err);
    if (sim_sub->parsed()) return run_simulate(sim_opt, out, err);
    if (lot_sub->parsed()) return run_lottery(lot_opt, out, err);
    if (sweep_sub->parsed()) return run_sweep(sweep_opt, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace rbmts::cli
