#include <riemopt/geodesic.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace riemopt;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Vector vec3(double a, double b, double c) {
  Vector v(3);
  v << a, b, c;
  return v;
}

double loglog_slope(const std::vector<double>& ts, const std::vector<double>& errs) {
  std::vector<double> lx, ly;
  for (size_t i = 0; i < ts.size(); ++i) {
    if (errs[i] < 100.0 * std::numeric_limits<double>::epsilon()) continue;
    lx.push_back(std::log(ts[i]));
    ly.push_back(std::log(errs[i]));
  }
  if (lx.size() < 2) return std::numeric_limits<double>::infinity();
  double n = double(lx.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i]; sy += ly[i]; sxx += lx[i] * lx[i]; sxy += lx[i] * ly[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

const std::vector<double> kLadder = {1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4};

double g_energy(const MetricField& m, const GeodesicState& s) {
  return s.xdot.dot(metric_at(m, s.x) * s.xdot);
}

}  // namespace

TEST_CASE("geodesics in a flat chart are straight lines", "[geodesic]") {
  MetricField flat = make_builtin_metric("euclidean:3");
  Vector x0 = vec3(0.2, -1.0, 0.5);
  Vector xi = vec3(0.4, 1.1, -0.3);
  GeodesicSolution sol = geodesic_ivp(flat, x0, xi, 1.0, 1e-3);
  REQUIRE(sol.times.front() == 0.0);
  REQUIRE(sol.times.back() == Catch::Approx(1.0).margin(1e-12));
  REQUIRE((sol.states.back().x - (x0 + xi)).norm() <= 1e-12);
  REQUIRE((sol.states.back().xdot - xi).norm() <= 1e-12);
  // interior state is on the line too
  std::size_t mid = sol.states.size() / 2;
  REQUIRE((sol.states[mid].x - (x0 + sol.times[mid] * xi)).norm() <= 1e-12);
}

TEST_CASE("geodesic speed is conserved", "[geodesic]") {
  MetricField sphere = make_builtin_metric("sphere:1");
  Vector x0 = vec2(0.9, 0.4);
  Vector xi = vec2(0.3, 0.5);
  const double step = 1e-3, t_end = 1.0;
  GeodesicSolution sol = geodesic_ivp(sphere, x0, xi, t_end, step);
  const double e0 = g_energy(sphere, sol.states.front());
  double drift = 0.0;
  for (const GeodesicState& s : sol.states)
    drift = std::max(drift, std::abs(g_energy(sphere, s) - e0));
  REQUIRE(drift <= 10.0 * std::pow(step, 4) * t_end * (1.0 + std::abs(e0)));
}

TEST_CASE("equatorial great circle closes after a full turn", "[geodesic]") {
  MetricField sphere = make_builtin_metric("sphere:1");
  const double half_pi = 1.5707963267948966;
  Vector x0 = vec2(half_pi, 0.2);
  Vector xi = vec2(0.0, 1.0);
  GeodesicSolution sol = geodesic_ivp(sphere, x0, xi, 2.0 * 3.141592653589793, 1e-3);
  Vector expect = vec2(half_pi, 0.2 + 2.0 * 3.141592653589793);
  REQUIRE((sol.states.back().x - expect).norm() <= 1e-6);
}

TEST_CASE("halving the integrator step cuts the endpoint error sixteenfold", "[geodesic]") {
  MetricField sphere = make_builtin_metric("sphere:1");
  Vector x0 = vec2(0.9, 0.4);
  Vector xi = vec2(0.3, 0.5);
  Vector ref = geodesic_ivp(sphere, x0, xi, 1.0, 1e-3).states.back().x;
  double coarse = (geodesic_ivp(sphere, x0, xi, 1.0, 4e-2).states.back().x - ref).norm();
  double fine = (geodesic_ivp(sphere, x0, xi, 1.0, 2e-2).states.back().x - ref).norm();
  const double ratio = coarse / fine;
  REQUIRE(ratio >= 12.0);
  REQUIRE(ratio <= 20.0);
}

TEST_CASE("two-point geodesic solve", "[geodesic]") {
  MetricField sphere = make_builtin_metric("sphere:1");
  Vector a = vec2(1.5707963267948966, 0.3);

  REQUIRE(geodesic_bvp(sphere, a, a).norm() <= 1e-12);

  MetricField flat = make_builtin_metric("euclidean:3");
  Vector f0 = vec3(0.1, 0.2, 0.3), f1 = vec3(-0.4, 1.0, 0.8);
  REQUIRE((geodesic_bvp(flat, f0, f1) - (f1 - f0)).norm() <= 1e-10);

  // equator arc of angular length 0.5: initial speed equals the arc length
  Vector b = vec2(1.5707963267948966, 0.8);
  Vector xi = geodesic_bvp(sphere, a, b, 1e-10);
  double speed = std::sqrt(xi.dot(metric_at(sphere, a) * xi));
  REQUIRE(speed == Catch::Approx(0.5).margin(1e-6));

  // generic pair on the hyperbolic half-plane: verify the defining property
  MetricField half = make_builtin_metric("hyperbolic-halfplane");
  Vector h0 = vec2(0.0, 1.0), h1 = vec2(2.0, 1.2);
  Vector hxi = geodesic_bvp(half, h0, h1, 1e-10);
  Vector land = geodesic_ivp(half, h0, hxi, 1.0, 1e-3).states.back().x;
  REQUIRE((land - h1).norm() <= 1e-8);

  // unattainable tolerance: reports the best residual reached
  try {
    geodesic_bvp(sphere, a, b, 1e-30);
    FAIL("expected NonConvergenceError");
  } catch (const NonConvergenceError& e) {
    REQUIRE(e.best_residual < 1e-6);
  }
}

TEST_CASE("power-series exp and log are second-order accurate", "[geodesic]") {
  MetricField flat = make_builtin_metric("euclidean:2");
  Vector x0 = vec2(0.3, -0.6), xi0 = vec2(1.2, 0.4);
  REQUIRE((exp_power_series(flat, x0, xi0) - (x0 + xi0)).norm() == 0.0);
  REQUIRE((log_power_series(flat, x0, x0 + xi0) - xi0).norm() == 0.0);

  MetricField sphere = make_builtin_metric("sphere:1");
  Vector x = vec2(0.9, 0.4);
  Vector xi = vec2(0.3, 0.5);
  REQUIRE((exp_power_series(sphere, x, Vector::Zero(2)) - x).norm() == 0.0);
  REQUIRE(log_power_series(sphere, x, x).norm() == 0.0);

  std::vector<double> exp_err, log_err;
  for (double t : kLadder) {
    GeodesicSolution sol = geodesic_ivp(sphere, x, t * xi, 1.0, 1e-3);
    exp_err.push_back((exp_power_series(sphere, x, t * xi) - sol.states.back().x).norm());
    log_err.push_back((log_power_series(sphere, x, sol.states.back().x) - t * xi).norm());
  }
  REQUIRE(loglog_slope(kLadder, exp_err) >= 2.9);
  REQUIRE(loglog_slope(kLadder, log_err) >= 2.9);
}

TEST_CASE("parallel transport preserves the metric data", "[geodesic]") {
  // flat chart: the vector never changes at all
  MetricField flat = make_builtin_metric("euclidean:2");
  ParametrizedCurve circle;
  circle.x = [](double t) { return vec2(std::cos(t), std::sin(t)); };
  circle.xdot = [](double t) { return vec2(-std::sin(t), std::cos(t)); };
  circle.t0 = 0.0;
  circle.t1 = 2.0;
  TransportSolution flat_sol = parallel_transport_ode(flat, circle, vec2(0.7, -0.1), 1e-2);
  for (const Vector& v : flat_sol.vectors) REQUIRE((v - vec2(0.7, -0.1)).norm() == 0.0);

  MetricField sphere = make_builtin_metric("sphere:1");
  Vector x0 = vec2(0.9, 0.4);
  Vector xi = vec2(0.3, 0.5);
  const double step = 1e-3, t_end = 1.0;
  GeodesicSolution geo = geodesic_ivp(sphere, x0, xi, t_end, step);

  // a geodesic's own velocity transports onto the later velocities
  TransportSolution vel = parallel_transport_ode(sphere, geo, xi);
  REQUIRE(vel.vectors.size() == geo.states.size());
  for (std::size_t i = 0; i < vel.vectors.size(); i += 250)
    REQUIRE((vel.vectors[i] - geo.states[i].xdot).norm() <= 1e-6);
  REQUIRE((vel.vectors.back() - geo.states.back().xdot).norm() <= 1e-6);

  // a second vector keeps its g-norm and its g-angle with the velocity
  Vector w0 = vec2(1.0, 0.0);
  TransportSolution ws = parallel_transport_ode(sphere, geo, w0);
  const double norm0 = w0.dot(metric_at(sphere, x0) * w0);
  const double ang0 = w0.dot(metric_at(sphere, x0) * xi);
  const Vector wend = ws.vectors.back();
  const GeodesicState& end = geo.states.back();
  const DenseMatrix gend = metric_at(sphere, end.x);
  REQUIRE(std::abs(wend.dot(gend * wend) - norm0) <=
          10.0 * std::pow(step, 4) * t_end * (1.0 + norm0));
  REQUIRE(std::abs(wend.dot(gend * end.xdot) - ang0) <= 1e-8);
}

TEST_CASE("transport around a truncated sphere octant rotates by the enclosed area",
          "[geodesic]") {
  MetricField sphere = make_builtin_metric("sphere:1");
  const double half_pi = 1.5707963267948966;
  const double eps = 0.01;  // keep the loop off the chart's polar singularity
  const double step = 1e-3;

  std::vector<ParametrizedCurve> legs(4);
  legs[0].x = [half_pi](double t) { return vec2(half_pi, t); };
  legs[0].xdot = [](double) { return vec2(0.0, 1.0); };
  legs[0].t0 = 0.0;
  legs[0].t1 = half_pi;
  legs[1].x = [half_pi](double t) { return vec2(half_pi - t, half_pi); };
  legs[1].xdot = [](double) { return vec2(-1.0, 0.0); };
  legs[1].t0 = 0.0;
  legs[1].t1 = half_pi - eps;
  legs[2].x = [eps, half_pi](double t) { return vec2(eps, half_pi - t); };
  legs[2].xdot = [](double) { return vec2(0.0, -1.0); };
  legs[2].t0 = 0.0;
  legs[2].t1 = half_pi;
  legs[3].x = [eps](double t) { return vec2(eps + t, 0.0); };
  legs[3].xdot = [](double) { return vec2(1.0, 0.0); };
  legs[3].t0 = 0.0;
  legs[3].t1 = half_pi - eps;

  Vector v = vec2(1.0, 0.0);
  for (const ParametrizedCurve& leg : legs)
    v = parallel_transport_ode(sphere, leg, v, step).vectors.back();

  // at the start point the chart basis is g-orthonormal, so the rotation
  // angle falls out of atan2 directly
  const double angle = std::atan2(v(1), v(0));
  const double expected = half_pi * std::cos(eps);  // area enclosed by the loop
  REQUIRE(std::abs(std::abs(angle) - expected) <= 1e-6);
  REQUIRE(std::abs(std::abs(angle) - half_pi) <= 1e-3);
  REQUIRE(std::abs(v.norm() - 1.0) <= 1e-9);
}

TEST_CASE("round sphere shrinks linearly under ricci flow", "[geodesic]") {
  RicciFlowFamily family = make_round_sphere_family();
  Vector theta0(1);
  theta0 << 1.0;
  RicciFlowTrajectory traj = ricci_flow_evolve(family, theta0, 0.3, 0.01);
  REQUIRE(traj.times.size() == traj.thetas.size());
  for (std::size_t i = 0; i < traj.times.size(); ++i)
    REQUIRE(std::abs(traj.thetas[i](0) - (1.0 - 2.0 * traj.times[i])) <= 1e-9);

  // running into the extinction time reports a singularity near t = 1/2
  try {
    ricci_flow_evolve(family, theta0, 0.6, 0.01);
    FAIL("expected SingularityError");
  } catch (const SingularityError& e) {
    REQUIRE(std::abs(e.blow_up_estimate - 0.5) <= 0.05);
  }
}

TEST_CASE("lattice ricci flow", "[geodesic]") {
  // flat lattice: exactly stationary
  MetricGrid flat;
  flat.axes = {Vector::LinSpaced(11, 0.0, 1.0), Vector::LinSpaced(11, 0.0, 1.0)};
  flat.values.assign(121, DenseMatrix::Identity(2, 2));
  RicciFlowGridTrajectory traj = ricci_flow_evolve(flat, 0.2, 0.05);
  double drift = 0.0;
  for (const DenseMatrix& g : traj.values.back())
    drift = std::max(drift, (g - DenseMatrix::Identity(2, 2)).norm());
  REQUIRE(drift <= 1e-12);

  // spherical cap lattice: interior points move by -2 Ric dt, boundary clamped
  MetricGrid cap;
  cap.axes = {Vector::LinSpaced(21, 0.6, 1.6), Vector::LinSpaced(21, 0.0, 1.0)};
  for (int i = 0; i < 21; ++i)
    for (int j = 0; j < 21; ++j) {
      const double th = cap.axes[0](i);
      DenseMatrix g = DenseMatrix::Zero(2, 2);
      g(0, 0) = 1.0;
      g(1, 1) = std::sin(th) * std::sin(th);
      cap.values.push_back(g);
    }
  const double dt = 1e-3;
  RicciFlowGridTrajectory ct = ricci_flow_evolve(cap, dt, dt);
  const std::size_t centre = 10 * 21 + 10;
  const double th_c = cap.axes[0](10);
  DenseMatrix delta = ct.values.back()[centre] - cap.values[centre];
  // unit sphere has Ric = diag(1, sin^2 th) on this chart
  REQUIRE(std::abs(delta(0, 0) - (-2.0 * dt)) <= 0.05 * 2.0 * dt);
  REQUIRE(std::abs(delta(1, 1) - (-2.0 * dt * std::sin(th_c) * std::sin(th_c))) <=
          0.05 * 2.0 * dt);
  REQUIRE((ct.values.back()[0] - cap.values[0]).norm() == 0.0);

  // an indefinite lattice value is a flow singularity
  MetricGrid bad = flat;
  DenseMatrix indef(2, 2);
  indef << 1.0, 0.0, 0.0, -1.0;
  bad.values[5 * 11 + 5] = indef;
  REQUIRE_THROWS_AS(ricci_flow_evolve(bad, 0.1, 0.05), SingularityError);

  // malformed lattices are rejected up front
  MetricGrid ragged = flat;
  ragged.values.pop_back();
  REQUIRE_THROWS_AS(ricci_flow_evolve(ragged, 0.1, 0.05), Error);
  MetricGrid skewed = flat;
  skewed.axes[0](3) += 0.01;
  REQUIRE_THROWS_AS(ricci_flow_evolve(skewed, 0.1, 0.05), Error);
}
