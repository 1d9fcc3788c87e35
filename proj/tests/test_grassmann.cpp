#include <riemopt/grassmann.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

using namespace riemopt;

namespace {

GrassmannPoint random_gr_point(std::mt19937_64& rng, int n, int d) {
  return GrassmannPoint(random_orthonormal(rng, n, d));
}

GrassmannTangent random_gr_tangent(std::mt19937_64& rng, const GrassmannPoint& x) {
  return gr_project_tangent(x, gaussian_matrix(rng, x.n(), x.d()));
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

// ambient geodesic ODE oracle: integrate Xdd = -X (Xd^T Xd) by RK4
DenseMatrix geodesic_ode_oracle(const DenseMatrix& x0, const DenseMatrix& v0, double tend, double h) {
  DenseMatrix x = x0, v = v0;
  auto acc = [](const DenseMatrix& xx, const DenseMatrix& vv) -> DenseMatrix {
    return -xx * (vv.transpose() * vv);
  };
  long steps = std::lround(tend / h);
  for (long k = 0; k < steps; ++k) {
    DenseMatrix k1x = v, k1v = acc(x, v);
    DenseMatrix k2x = v + 0.5 * h * k1v, k2v = acc(x + 0.5 * h * k1x, v + 0.5 * h * k1v);
    DenseMatrix k3x = v + 0.5 * h * k2v, k3v = acc(x + 0.5 * h * k2x, v + 0.5 * h * k2v);
    DenseMatrix k4x = v + h * k3v, k4v = acc(x + h * k3x, v + h * k3v);
    x += (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    v += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  }
  return x;
}

}  // namespace

TEST_CASE("gr_dim formula", "[grassmann]") {
  REQUIRE(gr_dim(4, 2) == 4);
  REQUIRE(gr_dim(5, 5) == 0);
  REQUIRE(gr_dim(8, 3) == 15);
  REQUIRE_THROWS_AS(gr_dim(2, 3), Error);
}

TEST_CASE("gr_project_tangent horizontality", "[grassmann]") {
  std::mt19937_64 rng(10);
  GrassmannPoint x = random_gr_point(rng, 6, 3);

  DenseMatrix k = gaussian_matrix(rng, 3, 3);
  REQUIRE(gr_project_tangent(x, x.x * k).delta.norm() <= 1e-13 * (1.0 + k.norm()));

  GrassmannTangent t = random_gr_tangent(rng, x);
  REQUIRE((gr_project_tangent(x, t.delta).delta - t.delta).norm() <= 1e-12 * (1.0 + t.delta.norm()));

  DenseMatrix z = gaussian_matrix(rng, 6, 3);
  REQUIRE((x.x.transpose() * gr_project_tangent(x, z).delta).norm() <= 1e-12);
}

TEST_CASE("gr_inner quotient metric", "[grassmann]") {
  std::mt19937_64 rng(11);
  GrassmannPoint x = random_gr_point(rng, 6, 3);
  GrassmannTangent zero(x, DenseMatrix::Zero(6, 3));
  REQUIRE(gr_inner(x, zero, zero) == 0.0);

  GrassmannTangent t1 = random_gr_tangent(rng, x);
  GrassmannTangent t2 = random_gr_tangent(rng, x);
  REQUIRE(gr_inner(x, t1, t2) == Catch::Approx(gr_inner(x, t2, t1)).margin(1e-14));

  // O(d) invariance: rotate the representative and the lifts together
  DenseMatrix q = random_orthonormal(rng, 3, 3);
  GrassmannPoint xq(x.x * q);
  GrassmannTangent t1q(xq, t1.delta * q), t2q(xq, t2.delta * q);
  REQUIRE(std::abs(gr_inner(x, t1, t2) - gr_inner(xq, t1q, t2q)) <=
          1e-12 * (1.0 + std::abs(gr_inner(x, t1, t2))));

  REQUIRE_THROWS_AS(GrassmannTangent(x, x.x), Error);  // not horizontal
}

TEST_CASE("gr_egrad_to_rgrad defining identity", "[grassmann]") {
  std::mt19937_64 rng(12);
  GrassmannPoint x = random_gr_point(rng, 6, 3);

  DenseMatrix k = gaussian_matrix(rng, 3, 3);
  REQUIRE(gr_egrad_to_rgrad(x, x.x * k).delta.norm() <= 1e-13 * (1.0 + k.norm()));
  GrassmannTangent t = random_gr_tangent(rng, x);
  REQUIRE((gr_egrad_to_rgrad(x, t.delta).delta - t.delta).norm() <= 1e-12 * (1.0 + t.delta.norm()));

  DenseMatrix a = sym(gaussian_matrix(rng, 6, 6));
  auto f = [&](const DenseMatrix& m) { return -(m.transpose() * a * m).trace(); };
  DenseMatrix g = -2.0 * a * x.x;
  GrassmannTangent rg = gr_egrad_to_rgrad(x, g);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    GrassmannTangent d = random_gr_tangent(rng, x);
    double fd = (f(gr_retract(x, GrassmannTangent(x, h * d.delta)).x) -
                 f(gr_retract(x, GrassmannTangent(x, -h * d.delta)).x)) / (2.0 * h);
    double pairing = gr_inner(x, rg, d);
    REQUIRE(std::abs(fd - pairing) <= 1e-6 * (1.0 + std::abs(pairing)));
  }
}

TEST_CASE("gr_ehess_to_rhess cases and self-adjointness", "[grassmann]") {
  std::mt19937_64 rng(13);
  GrassmannPoint x = random_gr_point(rng, 6, 3);
  GrassmannTangent d = random_gr_tangent(rng, x);

  REQUIRE(gr_ehess_to_rhess(x, DenseMatrix::Zero(6, 3), DenseMatrix::Zero(6, 3), d).delta.norm() == 0.0);

  DenseMatrix g = gaussian_matrix(rng, 6, 3);
  GrassmannTangent lin = gr_ehess_to_rhess(x, g, DenseMatrix::Zero(6, 3), d);
  REQUIRE((lin.delta - (-d.delta * (x.x.transpose() * g))).norm() <= 1e-12 * (1.0 + lin.delta.norm()));

  // Rayleigh Hessian is self-adjoint w.r.t. the quotient metric
  DenseMatrix a = sym(gaussian_matrix(rng, 6, 6));
  DenseMatrix gq = -2.0 * a * x.x;
  for (int trial = 0; trial < 10; ++trial) {
    GrassmannTangent d1 = random_gr_tangent(rng, x);
    GrassmannTangent d2 = random_gr_tangent(rng, x);
    GrassmannTangent h1 = gr_ehess_to_rhess(x, gq, -2.0 * a * d1.delta, d1);
    GrassmannTangent h2 = gr_ehess_to_rhess(x, gq, -2.0 * a * d2.delta, d2);
    double lhs = gr_inner(x, h1, d2);
    double rhs = gr_inner(x, d1, h2);
    REQUIRE(std::abs(lhs - rhs) <= 1e-9 * (1.0 + std::abs(lhs)));
  }
}

TEST_CASE("gr_exp closed form vs geodesic ODE oracle", "[grassmann]") {
  std::mt19937_64 rng(14);
  GrassmannPoint x = random_gr_point(rng, 6, 3);
  GrassmannTangent zero(x, DenseMatrix::Zero(6, 3));
  REQUIRE(gr_subspace_distance(gr_exp(x, zero), x) <= 1e-12);

  for (int trial = 0; trial < 10; ++trial) {
    GrassmannTangent d = random_gr_tangent(rng, x);
    GrassmannPoint y = gr_exp(x, d);
    REQUIRE((y.x.transpose() * y.x - DenseMatrix::Identity(3, 3)).norm() <= 1e-10);
  }

  GrassmannTangent d = random_gr_tangent(rng, x);
  // geodesic equation residual by central differences
  const double t0 = 0.4, hh = 1e-4;
  auto curve = [&](double t) { return gr_exp(x, GrassmannTangent(x, t * d.delta)).x; };
  DenseMatrix xm = curve(t0 - hh), x0 = curve(t0), xp = curve(t0 + hh);
  DenseMatrix acc = (xp - 2.0 * x0 + xm) / (hh * hh);
  DenseMatrix velc = (xp - xm) / (2.0 * hh);
  REQUIRE((acc + x0 * (velc.transpose() * velc)).norm() <= 1e-4);

  // endpoint against a fine-step ambient integration, compared as subspaces
  DenseMatrix ode_end = geodesic_ode_oracle(x.x, d.delta, 1.0, 1e-3);
  GrassmannPoint ode_pt(ode_end, true);
  REQUIRE(gr_subspace_distance(gr_exp(x, d), ode_pt) <= 1e-6);

  // representative invariance of the class map
  DenseMatrix q = random_orthonormal(rng, 3, 3);
  GrassmannPoint xq(x.x * q);
  GrassmannTangent dq(xq, d.delta * q);
  REQUIRE(gr_subspace_distance(gr_exp(x, d), gr_exp(xq, dq)) <= 1e-10);
}

TEST_CASE("gr_retract identity, invariance, rigidity", "[grassmann]") {
  std::mt19937_64 rng(15);
  GrassmannPoint x = random_gr_point(rng, 6, 3);
  GrassmannTangent zero(x, DenseMatrix::Zero(6, 3));
  REQUIRE(gr_subspace_distance(gr_retract(x, zero, GrRetraction::QR), x) <= 1e-12);
  REQUIRE(gr_subspace_distance(gr_retract(x, zero, GrRetraction::Polar), x) <= 1e-12);

  GrassmannTangent d = random_gr_tangent(rng, x);
  DenseMatrix q = random_orthonormal(rng, 3, 3);
  GrassmannPoint xq(x.x * q);
  GrassmannTangent dq(xq, d.delta * q);
  for (auto kind : {GrRetraction::QR, GrRetraction::Polar})
    REQUIRE(gr_subspace_distance(gr_retract(x, d, kind), gr_retract(xq, dq, kind)) <= 1e-10);

  for (auto kind : {GrRetraction::QR, GrRetraction::Polar}) {
    std::vector<double> errs;
    for (double t : kLadder)
      errs.push_back((gr_retract(x, GrassmannTangent(x, t * d.delta), kind).x - x.x - t * d.delta).norm());
    REQUIRE(loglog_slope(kLadder, errs) >= 1.9);
  }
}

TEST_CASE("gr_transport axioms and differentiated-retraction oracle", "[grassmann]") {
  std::mt19937_64 rng(16);
  GrassmannPoint x = random_gr_point(rng, 6, 3);
  GrassmannTangent zero(x, DenseMatrix::Zero(6, 3));
  GrassmannTangent xi = random_gr_tangent(rng, x);
  GrassmannTangent dir = random_gr_tangent(rng, x);

  for (auto kind : {GrTransport::Projection, GrTransport::DiffQR, GrTransport::DiffPolar}) {
    REQUIRE((gr_transport(x, zero, xi, kind).delta - xi.delta).norm() <= 1e-12 * (1.0 + xi.delta.norm()));
    GrassmannTangent x2 = random_gr_tangent(rng, x);
    DenseMatrix comb = 2.0 * xi.delta - 0.5 * x2.delta;
    DenseMatrix lhs = gr_transport(x, dir, GrassmannTangent(x, comb), kind).delta;
    DenseMatrix rhs = 2.0 * gr_transport(x, dir, xi, kind).delta -
                      0.5 * gr_transport(x, dir, x2, kind).delta;
    REQUIRE((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
    GrassmannTangent out = gr_transport(x, dir, xi, kind);
    REQUIRE((out.base.transpose() * out.delta).norm() <= 1e-9);
  }

  // differentiated transports equal the horizontal part of the retraction's
  // directional derivative
  const double h = 1e-5;
  {
    GrassmannPoint y = gr_retract(x, dir, GrRetraction::QR);
    DenseMatrix fd = (gr_retract(x, GrassmannTangent(x, dir.delta + h * xi.delta), GrRetraction::QR).x -
                      gr_retract(x, GrassmannTangent(x, dir.delta - h * xi.delta), GrRetraction::QR).x) /
                     (2.0 * h);
    DenseMatrix fdh = fd - y.x * (y.x.transpose() * fd);
    DenseMatrix an = gr_transport(x, dir, xi, GrTransport::DiffQR).delta;
    REQUIRE((fdh - an).norm() <= 1e-6 * (1.0 + an.norm()));
  }
  {
    GrassmannPoint y = gr_retract(x, dir, GrRetraction::Polar);
    DenseMatrix fd = (gr_retract(x, GrassmannTangent(x, dir.delta + h * xi.delta), GrRetraction::Polar).x -
                      gr_retract(x, GrassmannTangent(x, dir.delta - h * xi.delta), GrRetraction::Polar).x) /
                     (2.0 * h);
    DenseMatrix fdh = fd - y.x * (y.x.transpose() * fd);
    DenseMatrix an = gr_transport(x, dir, xi, GrTransport::DiffPolar).delta;
    REQUIRE((fdh - an).norm() <= 1e-6 * (1.0 + an.norm()));
  }
}

TEST_CASE("gr_subspace_distance projector view", "[grassmann]") {
  std::mt19937_64 rng(17);
  GrassmannPoint x = random_gr_point(rng, 5, 2);
  REQUIRE(gr_subspace_distance(x, x) == 0.0);

  DenseMatrix q = random_orthonormal(rng, 2, 2);
  GrassmannPoint xq(x.x * q);
  REQUIRE(gr_subspace_distance(x, xq) <= 1e-13);

  DenseMatrix e1(2, 1), e2(2, 1);
  e1 << 1, 0;
  e2 << 0, 1;
  REQUIRE(gr_subspace_distance(GrassmannPoint(e1), GrassmannPoint(e2)) ==
          Catch::Approx(std::sqrt(2.0)).epsilon(1e-14));

  GrassmannPoint y = random_gr_point(rng, 6, 2);
  REQUIRE_THROWS_AS(gr_subspace_distance(x, y), Error);
}

TEST_CASE("grassmann serialization round-trip", "[grassmann]") {
  std::mt19937_64 rng(18);
  GrassmannPoint x = random_gr_point(rng, 5, 2);
  std::ostringstream os;
  save_grassmann(os, x);
  std::istringstream is(os.str());
  GrassmannPoint y = load_grassmann(is);
  REQUIRE((x.x - y.x).norm() == 0.0);

  std::istringstream bad("stiefel 5 2\n5 2\n");
  REQUIRE_THROWS_AS(load_grassmann(bad), Error);
}
