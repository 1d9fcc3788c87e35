#pragma once

// First and second order Riemannian solvers over the uniform geometry
// contract: gradient descent with Armijo backtracking, stochastic gradient
// descent over batched objectives, truncated Newton-CG, and two quasi-Newton
// methods (dense BFGS and limited-memory BFGS) that maintain curvature
// information in a metric-orthonormal tangent basis rebuilt by transport.

#include <riemopt/manifolds.hpp>

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <numeric>
#include <ostream>
#include <string>

namespace riemopt {

struct Objective {
  std::function<double(const DenseMatrix&)> cost;
  std::function<DenseMatrix(const DenseMatrix&)> egrad;
  // optional: ambient Hessian of the smooth extension applied to a tangent
  std::function<DenseMatrix(const DenseMatrix&, const DenseMatrix&)> ehess_vec;
  // optional: unscaled gradient sum over the given sample indices
  std::function<DenseMatrix(const DenseMatrix&, const std::vector<int>&)> batch_egrad;
  int batch_count = 0;
  // set when egrad already returns a tangent Riemannian gradient
  bool grad_is_riemannian = false;
};

enum class SolverMethod { RGD, RSGD, NewtonCG, RBFGS, RLBFGS };
enum class TerminationReason { GradTol, MaxIter, LineSearchFail, NumericalError };
enum class StepSchedule { Fixed, InverseIter };

inline const char* termination_name(TerminationReason r) {
  switch (r) {
    case TerminationReason::GradTol:
      return "GradTol";
    case TerminationReason::MaxIter:
      return "MaxIter";
    case TerminationReason::LineSearchFail:
      return "LineSearchFail";
    default:
      return "NumericalError";
  }
}

struct SolverConfig {
  SolverMethod method = SolverMethod::RGD;
  int max_iter = 1000;
  double grad_tolerance = 1e-8;
  double initial_step = 1.0;
  double c1 = 1e-4;
  double backtrack = 0.5;
  int memory = 10;           // limited-memory history; negative means unbounded
  double cautious_eps = 1e-6;
  int batch_size = 0;        // stochastic batch; 0 or >= batch_count is full batch
  StepSchedule schedule = StepSchedule::Fixed;
  std::uint64_t seed = 0;
  // manifold-specific kind names applied to the adapter before the run;
  // empty strings keep the adapter defaults
  std::string retraction;
  std::string transport;
  std::string metric;

  void validate() const {
    require(max_iter >= 0, "solver config: max_iter must be >= 0");
    require(grad_tolerance >= 0.0, "solver config: grad_tolerance must be >= 0");
    require(initial_step > 0.0, "solver config: initial_step must be > 0");
    require(c1 > 0.0 && c1 < 1.0, "solver config: c1 must lie in (0,1)");
    require(backtrack > 0.0 && backtrack < 1.0, "solver config: backtrack must lie in (0,1)");
    require(cautious_eps >= 0.0, "solver config: cautious_eps must be >= 0");
    require(batch_size >= 0, "solver config: batch_size must be >= 0");
  }
};

struct TraceRow {
  int iter;
  double cost;
  double grad_norm;
  double step;
  double wall_ms;
};

struct SolverTrace {
  std::vector<TraceRow> rows;
  TerminationReason reason = TerminationReason::MaxIter;
  int resets = 0;          // quasi-Newton model resets and Newton gradient fallbacks
  int cautious_skips = 0;  // curvature pairs rejected by the cautious test

  void write_csv(std::ostream& os) const {
    os << "iter,cost,grad_norm,step,wall_ms\n";
    for (const TraceRow& r : rows)
      os << r.iter << ',' << fmt17(r.cost) << ',' << fmt17(r.grad_norm) << ',' << fmt17(r.step)
         << ',' << fmt17(r.wall_ms) << '\n';
    os << "# termination: " << termination_name(reason) << '\n';
  }
};

struct SolverResult {
  DenseMatrix x;
  SolverTrace trace;
};

struct LineSearchError : Error {
  using Error::Error;
};

struct LineSearchResult {
  double step;
  DenseMatrix x_next;
  double cost_next;
};

// Backtracking line search on f(Ret_x(t dir)); g0 is the directional
// derivative g(grad, dir) at t = 0 and must be negative.  Gives up after 60
// halvings of the initial step.
template <ManifoldGeometry M>
LineSearchResult armijo_backtrack(const Objective& obj, const M& m, const DenseMatrix& x,
                                  const DenseMatrix& dir, double g0, const SolverConfig& cfg) {
  require(std::isfinite(g0) && g0 < 0.0, "armijo_backtrack: need a descent direction (g0 < 0)");
  const double f0 = obj.cost(x);
  double step = cfg.initial_step;
  for (int attempt = 0; attempt <= 60; ++attempt) {
    DenseMatrix x_try = m.retract(x, step * dir);
    const double f_try = obj.cost(x_try);
    if (std::isfinite(f_try) && f_try <= f0 + cfg.c1 * step * g0)
      return {step, std::move(x_try), f_try};
    step *= cfg.backtrack;
  }
  throw LineSearchError("armijo_backtrack: no acceptable step after 60 halvings");
}

template <ManifoldGeometry M>
DenseMatrix riemannian_gradient(const Objective& obj, const M& m, const DenseMatrix& x) {
  DenseMatrix g = obj.egrad(x);
  return obj.grad_is_riemannian ? m.project(x, g) : m.egrad_to_rgrad(x, g);
}

// Called once per accepted direction, before the line search; used by tests
// and benchmarks to observe the search directions without touching the trace.
using SolverObserver = std::function<void(int, const DenseMatrix&, const DenseMatrix&)>;

namespace detail {

struct TraceClock {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

// Truncated CG on the Newton system H eta = -grad in the tangent space at x,
// with the forcing tolerance min(0.5, sqrt(|g|)) |g|.  Negative curvature on
// the first CG direction falls back to steepest descent (counted as a reset);
// later on it truncates to the iterate built so far.
template <ManifoldGeometry M>
DenseMatrix newton_cg_direction(const Objective& obj, const M& m, const DenseMatrix& x,
                                const DenseMatrix& eg, const DenseMatrix& grad, double gn,
                                int& resets) {
  auto apply_h = [&](const DenseMatrix& v) {
    return m.ehess_to_rhess(x, eg, obj.ehess_vec(x, v), v);
  };
  const double forcing = std::min(0.5, std::sqrt(gn)) * gn;
  DenseMatrix eta = DenseMatrix::Zero(grad.rows(), grad.cols());
  DenseMatrix r = grad;  // residual of H eta + grad = 0
  DenseMatrix d = -grad;
  double rr = gn * gn;
  const int cap = m.dim();
  for (int j = 0; j < cap; ++j) {
    DenseMatrix hd = apply_h(d);
    const double kappa = m.inner(x, d, hd);
    if (!(kappa > 0.0)) {
      if (j == 0) {
        ++resets;
        return -grad;
      }
      break;
    }
    const double alpha = rr / kappa;
    eta += alpha * d;
    r += alpha * hd;
    const double rr_new = m.inner(x, r, r);
    if (std::sqrt(rr_new) <= forcing) break;
    d = (rr_new / rr) * d - r;
    rr = rr_new;
  }
  return eta;
}

inline Vector basis_coords(const std::vector<DenseMatrix>& basis, auto&& inner_at,
                           const DenseMatrix& v) {
  Vector c(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) c(static_cast<Eigen::Index>(i)) = inner_at(basis[i], v);
  return c;
}

inline DenseMatrix basis_combine(const std::vector<DenseMatrix>& basis, const Vector& c) {
  DenseMatrix v = DenseMatrix::Zero(basis.front().rows(), basis.front().cols());
  for (std::size_t i = 0; i < basis.size(); ++i) v += c(static_cast<Eigen::Index>(i)) * basis[i];
  return v;
}

// Orthogonal polar factor of the transport Gram matrix: maps coordinates in
// the old basis to coordinates in the new one while discarding the
// non-isometric part of the transport.
inline DenseMatrix basis_rotation(const DenseMatrix& gram) {
  Eigen::JacobiSVD<DenseMatrix> svd(gram, Eigen::ComputeThinU | Eigen::ComputeThinV);
  require(svd.singularValues().minCoeff() > 1e-8,
          "quasi-Newton basis transport: transported basis lost rank");
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace detail

template <ManifoldGeometry M>
SolverResult solve_rgd(const Objective& obj, const M& m, const DenseMatrix& x0,
                       const SolverConfig& cfg, const SolverObserver& observer = {}) {
  cfg.validate();
  m.validate_point(x0);
  detail::TraceClock clock;
  SolverResult res;
  DenseMatrix x = x0;
  double f = obj.cost(x);
  DenseMatrix g = riemannian_gradient(obj, m, x);
  double gn = std::sqrt(std::max(m.inner(x, g, g), 0.0));
  res.trace.reason = TerminationReason::MaxIter;
  if (!std::isfinite(f) || !std::isfinite(gn)) {
    res.trace.reason = TerminationReason::NumericalError;
    res.x = std::move(x);
    return res;
  }
  res.trace.rows.push_back({0, f, gn, 0.0, clock.ms()});
  if (gn <= cfg.grad_tolerance) {
    res.trace.reason = TerminationReason::GradTol;
    res.x = std::move(x);
    return res;
  }
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    DenseMatrix dir = -g;
    const double g0 = -(gn * gn);
    if (observer) observer(iter, x, dir);
    LineSearchResult ls;
    try {
      ls = armijo_backtrack(obj, m, x, dir, g0, cfg);
    } catch (const LineSearchError&) {
      res.trace.reason = TerminationReason::LineSearchFail;
      break;
    }
    x = std::move(ls.x_next);
    f = ls.cost_next;
    g = riemannian_gradient(obj, m, x);
    gn = std::sqrt(std::max(m.inner(x, g, g), 0.0));
    if (!std::isfinite(f) || !std::isfinite(gn)) {
      res.trace.reason = TerminationReason::NumericalError;
      break;
    }
    res.trace.rows.push_back({iter, f, gn, ls.step, clock.ms()});
    if (gn <= cfg.grad_tolerance) {
      res.trace.reason = TerminationReason::GradTol;
      break;
    }
  }
  res.x = std::move(x);
  return res;
}

// Stochastic gradient steps with a fixed or 1/nu decaying step size and no
// line search.  With a full batch the index list is the natural order and no
// random draws happen, so the iterates reproduce plain gradient descent
// whenever that method accepts its initial step.
template <ManifoldGeometry M>
SolverResult solve_rsgd(const Objective& obj, const M& m, const DenseMatrix& x0,
                        const SolverConfig& cfg) {
  cfg.validate();
  m.validate_point(x0);
  require(static_cast<bool>(obj.batch_egrad) && obj.batch_count > 0,
          "solve_rsgd: objective provides no batched gradient");
  const int count = obj.batch_count;
  const bool full = cfg.batch_size == 0 || cfg.batch_size >= count;
  std::mt19937_64 rng(cfg.seed);
  std::vector<int> all(static_cast<std::size_t>(count));
  std::iota(all.begin(), all.end(), 0);
  auto batch_gradient = [&](const DenseMatrix& x) {
    DenseMatrix raw;
    if (full) {
      raw = obj.batch_egrad(x, all);
    } else {
      std::vector<int> idx(static_cast<std::size_t>(cfg.batch_size));
      std::uniform_int_distribution<int> pick(0, count - 1);
      for (int& i : idx) i = pick(rng);
      raw = obj.batch_egrad(x, idx);
      raw *= static_cast<double>(count) / static_cast<double>(cfg.batch_size);
    }
    return obj.grad_is_riemannian ? m.project(x, raw) : m.egrad_to_rgrad(x, raw);
  };
  detail::TraceClock clock;
  SolverResult res;
  DenseMatrix x = x0;
  double f = obj.cost(x);
  DenseMatrix g = batch_gradient(x);
  double gn = std::sqrt(std::max(m.inner(x, g, g), 0.0));
  res.trace.reason = TerminationReason::MaxIter;
  if (!std::isfinite(f) || !std::isfinite(gn)) {
    res.trace.reason = TerminationReason::NumericalError;
    res.x = std::move(x);
    return res;
  }
  res.trace.rows.push_back({0, f, gn, 0.0, clock.ms()});
  if (gn <= cfg.grad_tolerance) {
    res.trace.reason = TerminationReason::GradTol;
    res.x = std::move(x);
    return res;
  }
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    const double lambda = cfg.schedule == StepSchedule::Fixed
                              ? cfg.initial_step
                              : cfg.initial_step / static_cast<double>(iter);
    DenseMatrix dir = -g;
    x = m.retract(x, lambda * dir);
    f = obj.cost(x);
    g = batch_gradient(x);
    gn = std::sqrt(std::max(m.inner(x, g, g), 0.0));
    if (!std::isfinite(f) || !std::isfinite(gn)) {
      res.trace.reason = TerminationReason::NumericalError;
      break;
    }
    res.trace.rows.push_back({iter, f, gn, lambda, clock.ms()});
    if (gn <= cfg.grad_tolerance) {
      res.trace.reason = TerminationReason::GradTol;
      break;
    }
  }
  res.x = std::move(x);
  return res;
}

template <ManifoldGeometry M>
SolverResult solve_newton_cg(const Objective& obj, const M& m, const DenseMatrix& x0,
                             const SolverConfig& cfg, const SolverObserver& observer = {}) {
  cfg.validate();
  m.validate_point(x0);
  require(static_cast<bool>(obj.ehess_vec), "solve_newton_cg: objective provides no ehess_vec");
  detail::TraceClock clock;
  SolverResult res;
  DenseMatrix x = x0;
  double f = obj.cost(x);
  DenseMatrix eg = obj.egrad(x);
  DenseMatrix g = obj.grad_is_riemannian ? m.project(x, eg) : m.egrad_to_rgrad(x, eg);
  double gn = std::sqrt(std::max(m.inner(x, g, g), 0.0));
  res.trace.reason = TerminationReason::MaxIter;
  if (!std::isfinite(f) || !std::isfinite(gn)) {
    res.trace.reason = TerminationReason::NumericalError;
    res.x = std::move(x);
    return res;
  }
  res.trace.rows.push_back({0, f, gn, 0.0, clock.ms()});
  if (gn <= cfg.grad_tolerance) {
    res.trace.reason = TerminationReason::GradTol;
    res.x = std::move(x);
    return res;
  }
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    DenseMatrix dir = detail::newton_cg_direction(obj, m, x, eg, g, gn, res.trace.resets);
    dir = m.project(x, dir);  // numerical hygiene after the CG accumulation
    double g0 = m.inner(x, g, dir);
    if (!(g0 < 0.0)) {
      dir = -g;
      g0 = -(gn * gn);
      ++res.trace.resets;
    }
    if (observer) observer(iter, x, dir);
    LineSearchResult ls;
    try {
      ls = armijo_backtrack(obj, m, x, dir, g0, cfg);
    } catch (const LineSearchError&) {
      res.trace.reason = TerminationReason::LineSearchFail;
      break;
    }
    x = std::move(ls.x_next);
    f = ls.cost_next;
    eg = obj.egrad(x);
    g = obj.grad_is_riemannian ? m.project(x, eg) : m.egrad_to_rgrad(x, eg);
    gn = std::sqrt(std::max(m.inner(x, g, g), 0.0));
    if (!std::isfinite(f) || !std::isfinite(gn)) {
      res.trace.reason = TerminationReason::NumericalError;
      break;
    }
    res.trace.rows.push_back({iter, f, gn, ls.step, clock.ms()});
    if (gn <= cfg.grad_tolerance) {
      res.trace.reason = TerminationReason::GradTol;
      break;
    }
  }
  res.x = std::move(x);
  return res;
}

namespace detail {

// Shared skeleton of the two quasi-Newton methods.  The model policy sees
// gradient coordinates in the current metric-orthonormal basis, proposes
// descent coordinates, is rotated alongside the basis after every accepted
// step, and absorbs (s, y) pairs that pass the cautious test.
template <ManifoldGeometry M, class Model>
SolverResult solve_quasi_newton(const Objective& obj, const M& m, const DenseMatrix& x0,
                                const SolverConfig& cfg, Model& model,
                                const SolverObserver& observer) {
  cfg.validate();
  m.validate_point(x0);
  TraceClock clock;
  SolverResult res;
  DenseMatrix x = x0;
  double f = obj.cost(x);
  DenseMatrix g = riemannian_gradient(obj, m, x);
  double gn = std::sqrt(std::max(m.inner(x, g, g), 0.0));
  res.trace.reason = TerminationReason::MaxIter;
  if (!std::isfinite(f) || !std::isfinite(gn)) {
    res.trace.reason = TerminationReason::NumericalError;
    res.x = std::move(x);
    return res;
  }
  res.trace.rows.push_back({0, f, gn, 0.0, clock.ms()});
  if (gn <= cfg.grad_tolerance) {
    res.trace.reason = TerminationReason::GradTol;
    res.x = std::move(x);
    return res;
  }
  std::vector<DenseMatrix> basis = tangent_basis(m, x);
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    Vector c = basis_coords(basis, [&](const DenseMatrix& a, const DenseMatrix& b) {
      return m.inner(x, a, b);
    }, g);
    Vector dc = model.direction(c);
    DenseMatrix dir = basis_combine(basis, dc);
    double g0 = m.inner(x, g, dir);
    if (!(g0 < 0.0)) {
      model.reset();
      ++res.trace.resets;
      dir = -g;
      g0 = -(gn * gn);
    }
    if (observer) observer(iter, x, dir);
    LineSearchResult ls;
    try {
      ls = armijo_backtrack(obj, m, x, dir, g0, cfg);
    } catch (const LineSearchError&) {
      res.trace.reason = TerminationReason::LineSearchFail;
      break;
    }
    const DenseMatrix eta = ls.step * dir;
    const DenseMatrix& x_next = ls.x_next;
    std::vector<DenseMatrix> next_basis = tangent_basis(m, x_next);
    const int k = m.dim();
    DenseMatrix gram(k, k);
    for (int j = 0; j < k; ++j) {
      DenseMatrix tb = m.transport(x, eta, basis[static_cast<std::size_t>(j)]);
      for (int i = 0; i < k; ++i)
        gram(i, j) = m.inner(x_next, next_basis[static_cast<std::size_t>(i)], tb);
    }
    DenseMatrix q = basis_rotation(gram);
    model.rotate(q);
    auto coords_next = [&](const DenseMatrix& v) {
      return basis_coords(next_basis, [&](const DenseMatrix& a, const DenseMatrix& b) {
        return m.inner(x_next, a, b);
      }, v);
    };
    Vector s = coords_next(m.transport(x, eta, eta));
    DenseMatrix g_next = riemannian_gradient(obj, m, x_next);
    Vector y = coords_next(g_next) - coords_next(m.transport(x, eta, g));
    const double sy = y.dot(s);
    if (sy > cfg.cautious_eps * s.squaredNorm())
      model.update(s, y, 1.0 / sy);
    else
      ++res.trace.cautious_skips;
    basis = std::move(next_basis);
    x = x_next;
    f = ls.cost_next;
    g = std::move(g_next);
    gn = std::sqrt(std::max(m.inner(x, g, g), 0.0));
    if (!std::isfinite(f) || !std::isfinite(gn)) {
      res.trace.reason = TerminationReason::NumericalError;
      break;
    }
    res.trace.rows.push_back({iter, f, gn, ls.step, clock.ms()});
    if (gn <= cfg.grad_tolerance) {
      res.trace.reason = TerminationReason::GradTol;
      break;
    }
  }
  res.x = std::move(x);
  return res;
}

struct DenseBfgsModel {
  DenseMatrix h;  // inverse Hessian approximation in basis coordinates
  explicit DenseBfgsModel(int k) : h(DenseMatrix::Identity(k, k)) {}
  Vector direction(const Vector& c) const { return -(h * c); }
  void reset() { h = DenseMatrix::Identity(h.rows(), h.cols()); }
  void rotate(const DenseMatrix& q) { h = q * h * q.transpose(); }
  void update(const Vector& s, const Vector& y, double rho) {
    DenseMatrix left = DenseMatrix::Identity(h.rows(), h.cols()) - rho * s * y.transpose();
    h = left * h * left.transpose() + rho * s * s.transpose();
    h = 0.5 * (h + h.transpose());
  }
};

struct LimitedMemoryModel {
  struct Pair {
    Vector s, y;
    double rho;
  };
  std::deque<Pair> hist;
  int capacity;  // negative keeps everything
  explicit LimitedMemoryModel(int memory) : capacity(memory) {}
  Vector direction(const Vector& c) const {
    Vector q = c;
    std::vector<double> alpha(hist.size());
    for (std::size_t i = hist.size(); i-- > 0;) {
      alpha[i] = hist[i].rho * hist[i].s.dot(q);
      q -= alpha[i] * hist[i].y;
    }
    Vector r = q;  // implicit seed H0 = identity
    for (std::size_t i = 0; i < hist.size(); ++i) {
      const double beta = hist[i].rho * hist[i].y.dot(r);
      r += (alpha[i] - beta) * hist[i].s;
    }
    return -r;
  }
  void reset() { hist.clear(); }
  void rotate(const DenseMatrix& q) {
    for (Pair& p : hist) {
      p.s = q * p.s;
      p.y = q * p.y;
    }
  }
  void update(const Vector& s, const Vector& y, double rho) {
    if (capacity == 0) return;
    hist.push_back({s, y, rho});
    if (capacity > 0 && static_cast<int>(hist.size()) > capacity) hist.pop_front();
  }
};

}  // namespace detail

template <ManifoldGeometry M>
SolverResult solve_rbfgs(const Objective& obj, const M& m, const DenseMatrix& x0,
                         const SolverConfig& cfg, const SolverObserver& observer = {}) {
  detail::DenseBfgsModel model(m.dim());
  return detail::solve_quasi_newton(obj, m, x0, cfg, model, observer);
}

template <ManifoldGeometry M>
SolverResult solve_rlbfgs(const Objective& obj, const M& m, const DenseMatrix& x0,
                          const SolverConfig& cfg, const SolverObserver& observer = {}) {
  detail::LimitedMemoryModel model(cfg.memory);
  SolverResult res = detail::solve_quasi_newton(obj, m, x0, cfg, model, observer);
  require(cfg.memory < 0 || static_cast<int>(model.hist.size()) <= std::max(cfg.memory, 0),
          "solve_rlbfgs: history exceeded the configured memory");
  return res;
}

template <ManifoldGeometry M>
SolverResult solve(const Objective& obj, const M& m, const DenseMatrix& x0,
                   const SolverConfig& cfg) {
  switch (cfg.method) {
    case SolverMethod::RGD:
      return solve_rgd(obj, m, x0, cfg);
    case SolverMethod::RSGD:
      return solve_rsgd(obj, m, x0, cfg);
    case SolverMethod::NewtonCG:
      return solve_newton_cg(obj, m, x0, cfg);
    case SolverMethod::RBFGS:
      return solve_rbfgs(obj, m, x0, cfg);
    case SolverMethod::RLBFGS:
    default:
      return solve_rlbfgs(obj, m, x0, cfg);
  }
}

}  // namespace riemopt
