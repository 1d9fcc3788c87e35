#pragma once

// Batch front-end logic behind the command-line binary: strict INI run
// configs, the solver experiment runner, the conformance-check wrapper, and
// the coordinate-geometry demos.  Everything here is plain functions over
// streams so the commands stay testable in-process.

#include <riemopt/diagnostics.hpp>
#include <riemopt/problems.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace riemopt {

struct RunConfig {
  std::string problem_kind;
  std::vector<std::string> data_paths;
  std::uint64_t problem_seed = 0;
  int count = 0;  // sample count for generated mean problems
  int rows = 0;   // row count for generated fitting problems

  std::string manifold_name;
  int n = 0;
  int d = 0;
  std::string metric;

  SolverConfig solver;

  std::string trace_path;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    int v = std::stoi(value, &used);
    require(used == value.size(), "trailing characters");
    return v;
  } catch (const std::exception&) {
    throw Error("config: key '" + key + "' needs an integer, got '" + value + "'");
  }
}

inline double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    require(used == value.size(), "trailing characters");
    return v;
  } catch (const std::exception&) {
    throw Error("config: key '" + key + "' needs a number, got '" + value + "'");
  }
}

inline std::uint64_t parse_seed(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    unsigned long long v = std::stoull(value, &used);
    require(used == value.size(), "trailing characters");
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw Error("config: key '" + key + "' needs a non-negative integer, got '" + value + "'");
  }
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline SolverMethod parse_method(const std::string& value) {
  if (value == "rgd") return SolverMethod::RGD;
  if (value == "rsgd") return SolverMethod::RSGD;
  if (value == "newton-cg") return SolverMethod::NewtonCG;
  if (value == "rbfgs") return SolverMethod::RBFGS;
  if (value == "rlbfgs") return SolverMethod::RLBFGS;
  throw Error("config: unknown solver method '" + value +
              "' (expected rgd, rsgd, newton-cg, rbfgs, or rlbfgs)");
}

inline StepSchedule parse_schedule(const std::string& value) {
  if (value == "fixed") return StepSchedule::Fixed;
  if (value == "inverse-iter") return StepSchedule::InverseIter;
  throw Error("config: unknown schedule '" + value + "' (expected fixed or inverse-iter)");
}

inline DenseMatrix load_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open data file '" + path + "'");
  return read_matrix(in);
}

}  // namespace detail

// Strict INI parser: the four known sections, known keys per section, no
// duplicates, and every referenced data file must exist before we return.
inline RunConfig parse_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open '" + path + "'");
  const std::filesystem::path base = std::filesystem::path(path).parent_path();

  static const std::map<std::string, std::set<std::string>> known = {
      {"problem", {"kind", "data", "seed", "count", "rows"}},
      {"manifold", {"name", "n", "d", "metric"}},
      {"solver",
       {"method", "max_iter", "grad_tolerance", "initial_step", "c1", "backtrack", "memory",
        "cautious_eps", "batch_size", "schedule", "seed", "retraction", "transport"}},
      {"output", {"trace"}},
  };

  RunConfig cfg;
  std::string section;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = detail::trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      require(s.back() == ']', "config: malformed section header at line " +
                                   std::to_string(lineno));
      section = detail::trim(s.substr(1, s.size() - 2));
      require(known.count(section) == 1,
              "config: unknown section [" + section + "] at line " + std::to_string(lineno));
      continue;
    }
    const std::size_t eq = s.find('=');
    require(eq != std::string::npos,
            "config: expected 'key = value' at line " + std::to_string(lineno));
    require(!section.empty(),
            "config: key outside any section at line " + std::to_string(lineno));
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string value = detail::trim(s.substr(eq + 1));
    require(known.at(section).count(key) == 1,
            "config: unknown key '" + key + "' in section [" + section + "]");
    require(seen.insert(section + "." + key).second,
            "config: duplicate key '" + key + "' in section [" + section + "]");

    if (section == "problem") {
      if (key == "kind")
        cfg.problem_kind = value;
      else if (key == "data")
        cfg.data_paths = detail::split_list(value);
      else if (key == "seed")
        cfg.problem_seed = detail::parse_seed(key, value);
      else if (key == "count")
        cfg.count = detail::parse_int(key, value);
      else if (key == "rows")
        cfg.rows = detail::parse_int(key, value);
    } else if (section == "manifold") {
      if (key == "name")
        cfg.manifold_name = value;
      else if (key == "n")
        cfg.n = detail::parse_int(key, value);
      else if (key == "d")
        cfg.d = detail::parse_int(key, value);
      else if (key == "metric")
        cfg.metric = value;
    } else if (section == "solver") {
      if (key == "method")
        cfg.solver.method = detail::parse_method(value);
      else if (key == "max_iter")
        cfg.solver.max_iter = detail::parse_int(key, value);
      else if (key == "grad_tolerance")
        cfg.solver.grad_tolerance = detail::parse_double(key, value);
      else if (key == "initial_step")
        cfg.solver.initial_step = detail::parse_double(key, value);
      else if (key == "c1")
        cfg.solver.c1 = detail::parse_double(key, value);
      else if (key == "backtrack")
        cfg.solver.backtrack = detail::parse_double(key, value);
      else if (key == "memory")
        cfg.solver.memory = detail::parse_int(key, value);
      else if (key == "cautious_eps")
        cfg.solver.cautious_eps = detail::parse_double(key, value);
      else if (key == "batch_size")
        cfg.solver.batch_size = detail::parse_int(key, value);
      else if (key == "schedule")
        cfg.solver.schedule = detail::parse_schedule(value);
      else if (key == "seed")
        cfg.solver.seed = detail::parse_seed(key, value);
      else if (key == "retraction")
        cfg.solver.retraction = value;
      else if (key == "transport")
        cfg.solver.transport = value;
    } else if (section == "output") {
      // outputs resolve against the working directory; only inputs are
      // rebased onto the config file's location
      if (key == "trace") cfg.trace_path = value;
    }
  }

  require(!cfg.problem_kind.empty(), "config: [problem] kind is required");
  require(!cfg.manifold_name.empty(), "config: [manifold] name is required");
  require(cfg.n >= 1, "config: [manifold] n is required");
  for (std::string& p : cfg.data_paths) {
    p = (base / p).string();
    if (!std::filesystem::exists(p)) throw Error("config: data file does not exist: " + p);
  }
  cfg.solver.metric = cfg.metric;
  cfg.solver.validate();
  return cfg;
}

// The solver seed drives both the starting point and any stochastic batch
// draws, so one value reproduces the whole run.
inline void apply_env_seed(RunConfig& cfg) {
  const char* env = std::getenv("RIEMOPT_SEED");
  if (env == nullptr) return;
  const std::uint64_t s = detail::parse_seed("RIEMOPT_SEED", env);
  cfg.problem_seed = s;
  cfg.solver.seed = s;
}

inline ProblemInstance build_problem(const RunConfig& cfg) {
  const std::string& kind = cfg.problem_kind;
  if (kind == "rayleigh") {
    if (cfg.data_paths.size() == 1)
      return make_rayleigh(detail::load_matrix_file(cfg.data_paths[0]), cfg.d);
    require(cfg.data_paths.empty(), "config: rayleigh takes one data matrix");
    return make_rayleigh_instance(cfg.n, cfg.d, cfg.problem_seed);
  }
  if (kind == "procrustes") {
    if (cfg.data_paths.size() == 2)
      return make_procrustes(detail::load_matrix_file(cfg.data_paths[0]),
                             detail::load_matrix_file(cfg.data_paths[1]));
    require(cfg.data_paths.empty(), "config: procrustes takes two data matrices");
    const int rows = cfg.rows > 0 ? cfg.rows : 2 * cfg.n;
    return make_procrustes_instance(rows, cfg.n, cfg.d, cfg.problem_seed);
  }
  if (kind == "karcher") {
    if (!cfg.data_paths.empty()) {
      std::vector<DenseMatrix> samples;
      for (const std::string& p : cfg.data_paths)
        samples.push_back(detail::load_matrix_file(p));
      return make_karcher_mean(samples);
    }
    const int count = cfg.count > 0 ? cfg.count : 5;
    return make_karcher_instance(cfg.n, count, cfg.problem_seed);
  }
  if (kind == "logdet") {
    if (cfg.data_paths.size() == 1)
      return make_logdet(detail::load_matrix_file(cfg.data_paths[0]));
    require(cfg.data_paths.empty(), "config: logdet takes one data matrix");
    return make_logdet_instance(cfg.n, cfg.problem_seed);
  }
  throw Error("config: unknown problem kind '" + kind +
              "' (expected rayleigh, procrustes, karcher, or logdet)");
}

namespace detail {

inline void check_binding(const ProblemInstance& p, const RunConfig& cfg) {
  if (p.manifold == "grassmann")
    require(cfg.manifold_name == "grassmann" || cfg.manifold_name == "stiefel",
            "config: problem '" + p.name + "' runs on grassmann or stiefel");
  else
    require(cfg.manifold_name == p.manifold,
            "config: problem '" + p.name + "' runs on " + p.manifold + ", config says " +
                cfg.manifold_name);
  require(p.n == cfg.n, "config: problem size n=" + std::to_string(p.n) +
                            " does not match [manifold] n=" + std::to_string(cfg.n));
  if (p.manifold != "spd")
    require(p.d == cfg.d, "config: problem size d=" + std::to_string(p.d) +
                              " does not match [manifold] d=" + std::to_string(cfg.d));
}

template <ManifoldGeometry M>
int run_experiment(M m, const ProblemInstance& p, const RunConfig& cfg, std::ostream& out) {
  m.set_kinds(cfg.solver.retraction, cfg.solver.transport, cfg.solver.metric);
  std::mt19937_64 rng(cfg.solver.seed);
  DenseMatrix x0 = m.random_point(rng);
  SolverResult res = solve(p.objective, m, x0, cfg.solver);
  double elapsed = res.trace.rows.empty() ? 0.0 : res.trace.rows.back().wall_ms;
  if (!cfg.trace_path.empty()) {
    // wall time is zeroed in the file so identical config + seed reruns are
    // byte-identical; the summary line below carries the real elapsed time
    SolverTrace stable = res.trace;
    for (TraceRow& r : stable.rows) r.wall_ms = 0.0;
    std::ofstream tf(cfg.trace_path);
    if (!tf) throw Error("config: cannot open trace output '" + cfg.trace_path + "'");
    stable.write_csv(tf);
  }
  const TraceRow& last = res.trace.rows.back();
  out << p.name << " on " << m.name() << ": cost=" << fmt17(last.cost)
      << " grad_norm=" << fmt17(last.grad_norm) << " iters=" << last.iter
      << " reason=" << termination_name(res.trace.reason) << " elapsed_ms=" << elapsed << '\n';
  switch (res.trace.reason) {
    case TerminationReason::GradTol:
      return 0;
    default:
      return 2;
  }
}

// chart sampling boxes for the built-in metrics, kept away from coordinate
// degeneracies (sphere poles, half-plane boundary, polar origin)
inline ChartManifold builtin_chart(const std::string& name) {
  ChartManifold m;
  m.metric = make_builtin_metric(name);
  const std::string head = name.substr(0, name.find(':'));
  if (head == "euclidean") {
    m.sample_lo = Vector::Constant(m.metric.dim, -1.0);
    m.sample_hi = Vector::Constant(m.metric.dim, 1.0);
  } else if (head == "polar") {
    m.sample_lo = Vector(2);
    m.sample_hi = Vector(2);
    m.sample_lo << 0.5, 0.2;
    m.sample_hi << 2.0, 1.5;
  } else if (head == "sphere") {
    m.sample_lo = Vector(2);
    m.sample_hi = Vector(2);
    m.sample_lo << 0.4, -2.5;
    m.sample_hi << 2.7, 2.5;
  } else if (head == "hyperbolic-halfplane") {
    m.sample_lo = Vector::Constant(2, 0.5);
    m.sample_hi = Vector::Constant(2, 2.0);
  } else {
    throw Error("check: no sampling box known for metric '" + name + "'");
  }
  return m;
}

}  // namespace detail

// Exit codes: 0 when the run hits the gradient tolerance, 2 when it stops
// any other way (iteration cap, line-search failure, numerical trouble),
// 1 for configuration or data errors.
inline int cmd_run(const std::string& config_path, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  try {
    RunConfig cfg = parse_run_config(config_path);
    apply_env_seed(cfg);
    ProblemInstance p = build_problem(cfg);
    detail::check_binding(p, cfg);
    if (cfg.manifold_name == "stiefel")
      return detail::run_experiment(StiefelManifold{cfg.n, cfg.d}, p, cfg, out);
    if (cfg.manifold_name == "grassmann")
      return detail::run_experiment(GrassmannManifold{cfg.n, cfg.d}, p, cfg, out);
    if (cfg.manifold_name == "spd")
      return detail::run_experiment(SpdManifold{cfg.n}, p, cfg, out);
    throw Error("config: unknown manifold '" + cfg.manifold_name +
                "' (expected stiefel, grassmann, or spd)");
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

struct CheckArgs {
  std::string manifold;
  int n = 0;
  int d = 0;
  std::uint64_t seed = 0;
  int samples = 100;
};

inline int cmd_check(const CheckArgs& args, std::ostream& out = std::cout,
                     std::ostream& err = std::cerr) {
  try {
    std::vector<CheckReport> reports;
    if (args.manifold == "stiefel" || args.manifold == "grassmann") {
      require(args.n >= 1 && args.d >= 1,
              "check: " + args.manifold + " needs positive n and d");
      if (args.manifold == "stiefel")
        reports = check_manifold_suite(StiefelManifold{args.n, args.d}, args.seed, args.samples);
      else
        reports = check_manifold_suite(GrassmannManifold{args.n, args.d}, args.seed,
                                       args.samples);
    } else if (args.manifold == "spd") {
      require(args.n >= 1, "check: spd needs a positive n");
      reports = check_manifold_suite(SpdManifold{args.n}, args.seed, args.samples);
    } else {
      reports = check_manifold_suite(detail::builtin_chart(args.manifold), args.seed,
                                     args.samples);
    }
    render_reports_table(out, reports);
    return all_pass(reports) ? 0 : 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

struct GeometryArgs {
  std::string sub;
  std::string metric;
  Vector at;
  Vector dir;
  Vector vec;
  double t_end = 1.0;
  double step = 0.0;  // 0 picks the subcommand default (1e-3 ODE, 1e-2 flow)
  std::string out_path;
};

namespace detail {

inline std::ostream& geometry_sink(const GeometryArgs& args, std::ofstream& file,
                                   std::ostream& out) {
  if (args.out_path.empty()) return out;
  file.open(args.out_path);
  if (!file) throw Error("geometry: cannot open output '" + args.out_path + "'");
  return file;
}

// one-parameter flow families: the round sphere tracked by squared radius,
// and a scaled flat metric (stationary) for any euclidean dimension
inline RicciFlowFamily flow_family_for(const std::string& name, Vector& theta0,
                                       std::string& column) {
  const std::string head = name.substr(0, name.find(':'));
  if (head == "sphere") {
    MetricField probe = make_builtin_metric(name);
    Vector ref(2);
    ref << 1.5707963267948966, 0.0;
    const double r2 = metric_at(probe, ref)(0, 0);
    theta0 = Vector::Constant(1, r2);
    column = "r_squared";
    return make_round_sphere_family();
  }
  if (head == "euclidean") {
    MetricField probe = make_builtin_metric(name);
    const int dim = probe.dim;
    theta0 = Vector::Constant(1, 1.0);
    column = "scale";
    RicciFlowFamily family;
    family.param_dim = 1;
    family.member = [dim](const Vector& theta) {
      const double s = theta(0);
      if (s <= 0.0) throw DegenerateMetricError("flat family: scale hit zero");
      MetricField m;
      m.dim = dim;
      m.mode = DerivMode::Analytic;
      m.g = [s, dim](const Vector&) { return DenseMatrix(s * DenseMatrix::Identity(dim, dim)); };
      m.dg = [dim](const Vector&) {
        return std::vector<DenseMatrix>(dim, DenseMatrix::Zero(dim, dim));
      };
      return m;
    };
    family.update = [dim](const Vector&,
                          const std::function<DenseMatrix(const Vector&)>& ricci_at) {
      Vector dtheta(1);
      dtheta(0) = -2.0 * ricci_at(Vector::Zero(dim))(0, 0);
      return dtheta;
    };
    return family;
  }
  throw Error("geometry: ricci-flow supports sphere:r and euclidean:n, got '" + name + "'");
}

}  // namespace detail

inline int cmd_geometry(const GeometryArgs& args, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  try {
    if (args.sub == "curvature") {
      MetricField m = make_builtin_metric(args.metric);
      require(args.at.size() == m.dim, "geometry: --at needs " + std::to_string(m.dim) +
                                           " components for metric '" + args.metric + "'");
      CurvatureBundle c = riemann_tensor(m, args.at);
      out << "metric " << args.metric << " at (" << args.at.transpose() << ")\n";
      if (m.dim == 2) {
        Vector e0 = Vector::Zero(2), e1 = Vector::Zero(2);
        e0(0) = 1.0;
        e1(1) = 1.0;
        out << "K = " << fmt17(sectional_curvature(m, args.at, e0, e1)) << '\n';
      }
      out << "scalar = " << fmt17(c.scalar) << '\n';
      out << "ricci:\n";
      write_matrix(out, c.ricci);
      return 0;
    }
    if (args.sub == "geodesic") {
      MetricField m = make_builtin_metric(args.metric);
      require(args.at.size() == m.dim && args.dir.size() == m.dim,
              "geometry: --at and --dir need " + std::to_string(m.dim) + " components");
      const double h = args.step > 0.0 ? args.step : 1e-3;
      GeodesicSolution sol = geodesic_ivp(m, args.at, args.dir, args.t_end, h);
      std::ofstream file;
      std::ostream& sink = detail::geometry_sink(args, file, out);
      sink << 't';
      for (int i = 0; i < m.dim; ++i) sink << ",x" << i;
      for (int i = 0; i < m.dim; ++i) sink << ",v" << i;
      sink << '\n';
      for (std::size_t k = 0; k < sol.times.size(); ++k) {
        sink << fmt17(sol.times[k]);
        for (int i = 0; i < m.dim; ++i) sink << ',' << fmt17(sol.states[k].x(i));
        for (int i = 0; i < m.dim; ++i) sink << ',' << fmt17(sol.states[k].xdot(i));
        sink << '\n';
      }
      return 0;
    }
    if (args.sub == "transport") {
      MetricField m = make_builtin_metric(args.metric);
      require(args.at.size() == m.dim && args.dir.size() == m.dim && args.vec.size() == m.dim,
              "geometry: --at, --dir, and --vec need " + std::to_string(m.dim) +
                  " components");
      const double h = args.step > 0.0 ? args.step : 1e-3;
      GeodesicSolution geo = geodesic_ivp(m, args.at, args.dir, args.t_end, h);
      TransportSolution sol = parallel_transport_ode(m, geo, args.vec);
      std::ofstream file;
      std::ostream& sink = detail::geometry_sink(args, file, out);
      sink << 't';
      for (int i = 0; i < m.dim; ++i) sink << ",v" << i;
      sink << '\n';
      for (std::size_t k = 0; k < sol.times.size(); ++k) {
        sink << fmt17(sol.times[k]);
        for (int i = 0; i < m.dim; ++i) sink << ',' << fmt17(sol.vectors[k](i));
        sink << '\n';
      }
      const Vector& v0 = sol.vectors.front();
      const Vector& v1 = sol.vectors.back();
      const double n0 = std::sqrt(v0.dot(metric_at(m, geo.states.front().x) * v0));
      const double n1 = std::sqrt(v1.dot(metric_at(m, geo.states.back().x) * v1));
      out << "# norm start " << fmt17(n0) << " end " << fmt17(n1) << '\n';
      return 0;
    }
    if (args.sub == "ricci-flow") {
      Vector theta0;
      std::string column;
      RicciFlowFamily family = detail::flow_family_for(args.metric, theta0, column);
      const double dt = args.step > 0.0 ? args.step : 1e-2;
      RicciFlowTrajectory traj = ricci_flow_evolve(family, theta0, args.t_end, dt);
      std::ofstream file;
      std::ostream& sink = detail::geometry_sink(args, file, out);
      sink << "t," << column << '\n';
      for (std::size_t k = 0; k < traj.times.size(); ++k)
        sink << fmt17(traj.times[k]) << ',' << fmt17(traj.thetas[k](0)) << '\n';
      return 0;
    }
    throw Error("geometry: unknown subcommand '" + args.sub +
                "' (expected curvature, geodesic, transport, or ricci-flow)");
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace riemopt
