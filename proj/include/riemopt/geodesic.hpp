#pragma once

// Chart-level differential equations: geodesic initial- and boundary-value
// problems, second-order power-series exp/log, parallel transport along
// curves, and Ricci flow for parametrized families and gridded metrics.

#include <riemopt/geometry.hpp>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace riemopt {

struct GeodesicState {
  Vector x;
  Vector xdot;
};

struct GeodesicSolution {
  std::vector<double> times;
  std::vector<GeodesicState> states;
  double step = 0.0;
  std::string method = "rk4";
};

namespace detail {

// right-hand side of the first-order geodesic system:
// d/dt (x, v) = (v, -Gamma^k_ij v^i v^j)
inline void geodesic_rhs(const MetricField& m, const Vector& x, const Vector& v, Vector& dx,
                         Vector& dv) {
  const int n = m.dim;
  ChristoffelAt ch = christoffel(m, x);
  dx = v;
  dv = Vector::Zero(n);
  for (int k = 0; k < n; ++k) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += ch.gamma2(k, i, j) * v(i) * v(j);
    dv(k) = -s;
  }
}

}  // namespace detail

inline GeodesicSolution geodesic_ivp(const MetricField& m, const Vector& x0, const Vector& xi0,
                                     double t_end, double step = 1e-3) {
  require(x0.size() == m.dim && xi0.size() == m.dim, "geodesic_ivp: dimension mismatch");
  require(t_end >= 0.0, "geodesic_ivp: integration span must be non-negative");
  require(step > 0.0, "geodesic_ivp: step must be positive");
  GeodesicSolution sol;
  sol.step = step;
  sol.times.push_back(0.0);
  sol.states.push_back({x0, xi0});
  Vector x = x0, v = xi0;
  Vector k1x(m.dim), k1v(m.dim), k2x(m.dim), k2v(m.dim), k3x(m.dim), k3v(m.dim), k4x(m.dim),
      k4v(m.dim);
  double t = 0.0;
  while (t < t_end - 1e-15 * (1.0 + t_end)) {
    const double h = std::min(step, t_end - t);
    detail::geodesic_rhs(m, x, v, k1x, k1v);
    detail::geodesic_rhs(m, x + 0.5 * h * k1x, v + 0.5 * h * k1v, k2x, k2v);
    detail::geodesic_rhs(m, x + 0.5 * h * k2x, v + 0.5 * h * k2v, k3x, k3v);
    detail::geodesic_rhs(m, x + h * k3x, v + h * k3v, k4x, k4v);
    x += (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    v += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    t += h;
    require_finite(x, "geodesic_ivp");
    sol.times.push_back(t);
    sol.states.push_back({x, v});
  }
  return sol;
}

// Shooting solve of the two-point problem: returns xi with
// geodesic_ivp(m, x0, xi, 1).x(1) = x1 within tolerance.  Damped Newton on
// the endpoint residual with a central-difference sensitivity; a trial shot
// that leaves the chart counts as infinite residual so damping can back off.
inline Vector geodesic_bvp(const MetricField& m, const Vector& x0, const Vector& x1,
                           double tolerance = 1e-10, double step = 1e-3) {
  require(x0.size() == m.dim && x1.size() == m.dim, "geodesic_bvp: dimension mismatch");
  const int n = m.dim;
  auto endpoint_gap = [&](const Vector& xi) -> Vector {
    GeodesicSolution s = geodesic_ivp(m, x0, xi, 1.0, step);
    return s.states.back().x - x1;
  };
  auto residual = [&](const Vector& xi, Vector& gap) -> double {
    try {
      gap = endpoint_gap(xi);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
    return gap.norm();
  };

  Vector xi = x1 - x0;
  Vector gap(n);
  double res = residual(xi, gap);
  double best = res;
  const int max_iters = 50;
  for (int iter = 0; iter < max_iters; ++iter) {
    if (res <= tolerance) return xi;
    if (!std::isfinite(res))
      throw NonConvergenceError("geodesic_bvp: shooting left the chart", best);
    DenseMatrix jac(n, n);
    const double cbrt_eps = std::cbrt(std::numeric_limits<double>::epsilon());
    for (int j = 0; j < n; ++j) {
      const double h = cbrt_eps * (1.0 + std::abs(xi(j)));
      Vector xp = xi, xm = xi;
      xp(j) += h;
      xm(j) -= h;
      Vector gp(n), gm(n);
      if (!std::isfinite(residual(xp, gp)) || !std::isfinite(residual(xm, gm)))
        throw NonConvergenceError("geodesic_bvp: sensitivity stencil left the chart", best);
      jac.col(j) = (gp - gm) / (2.0 * h);
    }
    Vector delta = jac.fullPivLu().solve(-gap);
    if (!delta.allFinite())
      throw NonConvergenceError("geodesic_bvp: singular shooting sensitivity", best);
    double damping = 1.0;
    bool moved = false;
    for (int halvings = 0; halvings < 30; ++halvings) {
      Vector trial = xi + damping * delta;
      Vector trial_gap(n);
      double trial_res = residual(trial, trial_gap);
      if (trial_res < res) {
        xi = trial;
        gap = trial_gap;
        res = trial_res;
        best = std::min(best, res);
        moved = true;
        break;
      }
      damping *= 0.5;
    }
    if (!moved)
      throw NonConvergenceError("geodesic_bvp: damping stalled without progress", best);
  }
  if (res <= tolerance) return xi;
  throw NonConvergenceError("geodesic_bvp: no convergence in 50 iterations", best);
}

// Second-order coordinate approximations of the exponential map and its
// inverse: exp adds the tangent and subtracts the quadratic Christoffel
// correction, log applies the same correction to the coordinate gap.
inline Vector exp_power_series(const MetricField& m, const Vector& x, const Vector& xi) {
  require(x.size() == m.dim && xi.size() == m.dim, "exp_power_series: dimension mismatch");
  ChristoffelAt ch = christoffel(m, x);
  Vector out = x + xi;
  for (int k = 0; k < m.dim; ++k) {
    double s = 0.0;
    for (int i = 0; i < m.dim; ++i)
      for (int j = 0; j < m.dim; ++j) s += ch.gamma2(k, i, j) * xi(i) * xi(j);
    out(k) -= 0.5 * s;
  }
  return out;
}

inline Vector log_power_series(const MetricField& m, const Vector& x, const Vector& y) {
  require(x.size() == m.dim && y.size() == m.dim, "log_power_series: dimension mismatch");
  ChristoffelAt ch = christoffel(m, x);
  Vector gap = y - x;
  Vector out = gap;
  for (int k = 0; k < m.dim; ++k) {
    double s = 0.0;
    for (int i = 0; i < m.dim; ++i)
      for (int j = 0; j < m.dim; ++j) s += ch.gamma2(k, i, j) * gap(i) * gap(j);
    out(k) += 0.5 * s;
  }
  return out;
}

// A smooth curve given in closed form; used for transport along paths that
// are not geodesics (holonomy loops around non-geodesic legs).
struct ParametrizedCurve {
  std::function<Vector(double)> x;
  std::function<Vector(double)> xdot;
  double t0 = 0.0;
  double t1 = 1.0;
};

struct TransportSolution {
  std::vector<double> times;
  std::vector<Vector> vectors;
};

namespace detail {

inline Vector transport_rhs(const MetricField& m, const Vector& x, const Vector& xdot,
                            const Vector& v) {
  const int n = m.dim;
  ChristoffelAt ch = christoffel(m, x);
  Vector dv = Vector::Zero(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) s += ch.gamma2(i, j, k) * v(k) * xdot(j);
    dv(i) = -s;
  }
  return dv;
}

}  // namespace detail

inline TransportSolution parallel_transport_ode(const MetricField& m,
                                                const ParametrizedCurve& curve, const Vector& v0,
                                                double step = 1e-3) {
  require(v0.size() == m.dim, "parallel_transport_ode: vector dimension mismatch");
  require(curve.t1 > curve.t0, "parallel_transport_ode: empty parameter interval");
  require(step > 0.0, "parallel_transport_ode: step must be positive");
  TransportSolution sol;
  double t = curve.t0;
  Vector v = v0;
  sol.times.push_back(t);
  sol.vectors.push_back(v);
  while (t < curve.t1 - 1e-15 * (1.0 + std::abs(curve.t1))) {
    const double h = std::min(step, curve.t1 - t);
    Vector k1 = detail::transport_rhs(m, curve.x(t), curve.xdot(t), v);
    Vector xm = curve.x(t + 0.5 * h);
    Vector vm = curve.xdot(t + 0.5 * h);
    Vector k2 = detail::transport_rhs(m, xm, vm, v + 0.5 * h * k1);
    Vector k3 = detail::transport_rhs(m, xm, vm, v + 0.5 * h * k2);
    Vector k4 = detail::transport_rhs(m, curve.x(t + h), curve.xdot(t + h), v + h * k3);
    v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
    require_finite(v, "parallel_transport_ode");
    sol.times.push_back(t);
    sol.vectors.push_back(v);
  }
  return sol;
}

// Transport along a previously integrated geodesic.  Positions and velocities
// between the stored nodes come from cubic Hermite interpolation, which keeps
// the stage values accurate enough for the RK4 update.
inline TransportSolution parallel_transport_ode(const MetricField& m,
                                                const GeodesicSolution& curve,
                                                const Vector& v0) {
  require(curve.states.size() >= 2, "parallel_transport_ode: curve has fewer than two states");
  ParametrizedCurve c;
  c.t0 = curve.times.front();
  c.t1 = curve.times.back();
  auto locate = [&curve](double t) -> std::size_t {
    std::size_t lo = 0, hi = curve.times.size() - 1;
    while (hi - lo > 1) {
      std::size_t mid = (lo + hi) / 2;
      if (curve.times[mid] <= t)
        lo = mid;
      else
        hi = mid;
    }
    return lo;
  };
  c.x = [&curve, locate](double t) -> Vector {
    std::size_t i = locate(t);
    const double h = curve.times[i + 1] - curve.times[i];
    const double s = (t - curve.times[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    return (2.0 * s3 - 3.0 * s2 + 1.0) * curve.states[i].x +
           (s3 - 2.0 * s2 + s) * h * curve.states[i].xdot +
           (-2.0 * s3 + 3.0 * s2) * curve.states[i + 1].x +
           (s3 - s2) * h * curve.states[i + 1].xdot;
  };
  c.xdot = [&curve, locate](double t) -> Vector {
    std::size_t i = locate(t);
    const double h = curve.times[i + 1] - curve.times[i];
    const double s = (t - curve.times[i]) / h;
    const double s2 = s * s;
    return ((6.0 * s2 - 6.0 * s) * curve.states[i].x +
            (3.0 * s2 - 4.0 * s + 1.0) * h * curve.states[i].xdot +
            (-6.0 * s2 + 6.0 * s) * curve.states[i + 1].x +
            (3.0 * s2 - 2.0 * s) * h * curve.states[i + 1].xdot) /
           h;
  };
  return parallel_transport_ode(m, c, v0, curve.step);
}

// Ricci flow d g/dt = -2 Ric for a metric family g(x; theta).  The engine
// evaluates the Ricci tensor of the current member pointwise and hands that
// evaluator to the caller's update rule, which maps it to dtheta/dt.
struct RicciFlowFamily {
  int param_dim = 0;
  std::function<MetricField(const Vector& theta)> member;
  std::function<Vector(const Vector& theta,
                       const std::function<DenseMatrix(const Vector&)>& ricci_at)>
      update;
};

struct RicciFlowTrajectory {
  std::vector<double> times;
  std::vector<Vector> thetas;
};

namespace detail {

inline Vector ricci_flow_family_rhs(const RicciFlowFamily& family, const Vector& theta) {
  MetricField m = family.member(theta);
  auto ricci_at = [&m](const Vector& x) { return ricci_tensor(m, x); };
  Vector dtheta = family.update(theta, ricci_at);
  require(dtheta.size() == family.param_dim, "ricci flow: update rule has wrong dimension");
  return dtheta;
}

}  // namespace detail

inline RicciFlowTrajectory ricci_flow_evolve(const RicciFlowFamily& family, const Vector& theta0,
                                             double t_end, double dt) {
  require(theta0.size() == family.param_dim, "ricci_flow_evolve: theta0 has wrong dimension");
  require(t_end > 0.0 && dt > 0.0, "ricci_flow_evolve: t_end and dt must be positive");
  RicciFlowTrajectory traj;
  double t = 0.0;
  Vector theta = theta0;
  traj.times.push_back(t);
  traj.thetas.push_back(theta);
  double prev_t = t;
  Vector prev_theta = theta;
  while (t < t_end - 1e-15 * (1.0 + t_end)) {
    const double h = std::min(dt, t_end - t);
    try {
      Vector k1 = detail::ricci_flow_family_rhs(family, theta);
      Vector k2 = detail::ricci_flow_family_rhs(family, theta + 0.5 * h * k1);
      Vector k3 = detail::ricci_flow_family_rhs(family, theta + 0.5 * h * k2);
      Vector k4 = detail::ricci_flow_family_rhs(family, theta + h * k3);
      prev_t = t;
      prev_theta = theta;
      theta += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t += h;
      require(theta.allFinite(), "ricci_flow_evolve: parameters became non-finite");
    } catch (const DegenerateMetricError&) {
      // linear extrapolation of the fastest-shrinking parameter to zero
      double estimate = t + h;
      for (int i = 0; i < family.param_dim; ++i) {
        const double slope = (theta(i) - prev_theta(i)) / std::max(t - prev_t, dt);
        if (slope < 0.0) estimate = std::min(estimate, t - theta(i) / slope);
      }
      throw SingularityError("ricci_flow_evolve: metric left the positive cone", estimate);
    }
    traj.times.push_back(t);
    traj.thetas.push_back(theta);
  }
  return traj;
}

// The round sphere of initial radius r0 as a one-parameter family with
// theta = r^2, evolved by reading the (theta,theta) Ricci component at a
// fixed equatorial reference point (dg_00/dtheta = 1 on this chart).
inline RicciFlowFamily make_round_sphere_family() {
  RicciFlowFamily family;
  family.param_dim = 1;
  family.member = [](const Vector& theta) {
    const double r2 = theta(0);
    if (r2 <= 0.0)
      throw DegenerateMetricError("round sphere family: squared radius hit zero");
    MetricField m;
    m.dim = 2;
    m.mode = DerivMode::Analytic;
    m.g = [r2](const Vector& x) {
      DenseMatrix g = DenseMatrix::Zero(2, 2);
      const double s = std::sin(x(0));
      g(0, 0) = r2;
      g(1, 1) = r2 * s * s;
      return g;
    };
    m.dg = [r2](const Vector& x) {
      std::vector<DenseMatrix> d(2, DenseMatrix::Zero(2, 2));
      d[0](1, 1) = r2 * 2.0 * std::sin(x(0)) * std::cos(x(0));
      return d;
    };
    return m;
  };
  family.update = [](const Vector& theta,
                     const std::function<DenseMatrix(const Vector&)>& ricci_at) {
    if (theta(0) <= 0.0)
      throw DegenerateMetricError("round sphere family: squared radius hit zero");
    Vector ref(2);
    ref << 1.5707963267948966, 0.3;
    Vector dtheta(1);
    dtheta(0) = -2.0 * ricci_at(ref)(0, 0);
    return dtheta;
  };
  return family;
}

// Metric values on a rectangular lattice of chart points, flow evolved per
// grid point.  Boundary values are clamped; interior derivatives use central
// stencils of the stored values.
struct MetricGrid {
  std::vector<Vector> axes;           // axes[a] = strictly increasing uniform coordinates
  std::vector<DenseMatrix> values;    // row-major over the lattice, one g per point
};

struct RicciFlowGridTrajectory {
  std::vector<double> times;
  std::vector<std::vector<DenseMatrix>> values;
};

namespace detail {

struct GridShape {
  int dim = 0;
  std::vector<int> sizes;
  std::vector<std::size_t> strides;
  std::vector<double> spacing;
  std::size_t total = 0;
};

inline GridShape grid_shape(const MetricGrid& grid) {
  GridShape s;
  s.dim = static_cast<int>(grid.axes.size());
  require(s.dim >= 1, "metric grid: needs at least one axis");
  s.sizes.resize(s.dim);
  s.spacing.resize(s.dim);
  s.total = 1;
  for (int a = 0; a < s.dim; ++a) {
    const Vector& ax = grid.axes[a];
    require(ax.size() >= 3, "metric grid: each axis needs at least three points");
    s.sizes[a] = static_cast<int>(ax.size());
    s.spacing[a] = ax(1) - ax(0);
    require(s.spacing[a] > 0.0, "metric grid: axis must be strictly increasing");
    for (int i = 2; i < ax.size(); ++i)
      require(std::abs((ax(i) - ax(i - 1)) - s.spacing[a]) <= 1e-12 * (1.0 + s.spacing[a]),
              "metric grid: axis must be uniformly spaced");
    s.total *= static_cast<std::size_t>(s.sizes[a]);
  }
  s.strides.assign(s.dim, 1);
  for (int a = s.dim - 2; a >= 0; --a)
    s.strides[a] = s.strides[a + 1] * static_cast<std::size_t>(s.sizes[a + 1]);
  require(grid.values.size() == s.total, "metric grid: value count does not match the lattice");
  return s;
}

// -2 Ric at every interior lattice point (zero on the clamped boundary)
inline std::vector<DenseMatrix> grid_flow_rhs(const GridShape& shape,
                                              const std::vector<DenseMatrix>& values) {
  const int dim = shape.dim;
  const int n = static_cast<int>(values.front().rows());
  std::vector<DenseMatrix> rhs(values.size(), DenseMatrix::Zero(n, n));
  std::vector<int> idx(dim, 0);
  for (std::size_t flat = 0; flat < shape.total; ++flat) {
    std::size_t rem = flat;
    bool interior = true;
    for (int a = 0; a < dim; ++a) {
      idx[a] = static_cast<int>(rem / shape.strides[a]);
      rem %= shape.strides[a];
      if (idx[a] == 0 || idx[a] == shape.sizes[a] - 1) interior = false;
    }
    if (!interior) continue;
    MetricJets jets;
    jets.g = sym(values[flat]);
    Eigen::LLT<DenseMatrix> llt(jets.g);
    if (llt.info() != Eigen::Success)
      throw DegenerateMetricError("metric grid: lattice value left the positive cone");
    jets.ginv = llt.solve(DenseMatrix::Identity(n, n));
    jets.dg.resize(dim);
    jets.ddg.assign(dim, std::vector<DenseMatrix>(dim));
    for (int a = 0; a < dim; ++a) {
      const std::size_t up = flat + shape.strides[a];
      const std::size_t dn = flat - shape.strides[a];
      const double h = shape.spacing[a];
      jets.dg[a] = (values[up] - values[dn]) / (2.0 * h);
      jets.ddg[a][a] = (values[up] - 2.0 * values[flat] + values[dn]) / (h * h);
      for (int b = a + 1; b < dim; ++b) {
        // diagonal neighbours always exist for interior points
        const std::size_t pp = flat + shape.strides[a] + shape.strides[b];
        const std::size_t pm = flat + shape.strides[a] - shape.strides[b];
        const std::size_t mp = flat - shape.strides[a] + shape.strides[b];
        const std::size_t mm = flat - shape.strides[a] - shape.strides[b];
        jets.ddg[a][b] =
            (values[pp] - values[pm] - values[mp] + values[mm]) / (4.0 * h * shape.spacing[b]);
        jets.ddg[b][a] = jets.ddg[a][b];
      }
    }
    CurvatureBundle c = curvature_from_jets(jets);
    rhs[flat] = -2.0 * sym(c.ricci);
  }
  return rhs;
}

}  // namespace detail

inline RicciFlowGridTrajectory ricci_flow_evolve(const MetricGrid& grid, double t_end,
                                                 double dt) {
  require(t_end > 0.0 && dt > 0.0, "ricci_flow_evolve: t_end and dt must be positive");
  detail::GridShape shape = detail::grid_shape(grid);
  RicciFlowGridTrajectory traj;
  std::vector<DenseMatrix> values = grid.values;
  double t = 0.0;
  traj.times.push_back(t);
  traj.values.push_back(values);
  auto axpy = [](const std::vector<DenseMatrix>& base, double scale,
                 const std::vector<DenseMatrix>& dir) {
    std::vector<DenseMatrix> out = base;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += scale * dir[i];
    return out;
  };
  while (t < t_end - 1e-15 * (1.0 + t_end)) {
    const double h = std::min(dt, t_end - t);
    try {
      std::vector<DenseMatrix> k1 = detail::grid_flow_rhs(shape, values);
      std::vector<DenseMatrix> k2 = detail::grid_flow_rhs(shape, axpy(values, 0.5 * h, k1));
      std::vector<DenseMatrix> k3 = detail::grid_flow_rhs(shape, axpy(values, 0.5 * h, k2));
      std::vector<DenseMatrix> k4 = detail::grid_flow_rhs(shape, axpy(values, h, k3));
      for (std::size_t i = 0; i < values.size(); ++i)
        values[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      t += h;
    } catch (const DegenerateMetricError&) {
      // estimate blow-up by driving the smallest lattice eigenvalue to zero
      double min_eig = std::numeric_limits<double>::infinity();
      double min_prev = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < values.size(); ++i) {
        Eigen::SelfAdjointEigenSolver<DenseMatrix> es(sym(values[i]));
        min_eig = std::min(min_eig, es.eigenvalues()(0));
        Eigen::SelfAdjointEigenSolver<DenseMatrix> ep(sym(traj.values.back()[i]));
        min_prev = std::min(min_prev, ep.eigenvalues()(0));
      }
      double estimate = t + h;
      if (min_prev > min_eig && min_eig > 0.0)
        estimate = t + h * min_eig / (min_prev - min_eig);
      throw SingularityError("ricci_flow_evolve: lattice metric left the positive cone",
                             estimate);
    }
    traj.times.push_back(t);
    traj.values.push_back(values);
  }
  return traj;
}

}  // namespace riemopt
