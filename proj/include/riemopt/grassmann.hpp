#pragma once

// Geometry of Gr(n,d) = St(n,d)/O(d) through horizontal lifts at an
// orthonormal representative: projection (I - XX^T)Z, the quotient metric,
// gradient/Hessian conversions, the SVD exponential, QR/polar retractions,
// projection and differentiated-retraction transports, and the
// representative-invariant subspace distance.

#include <riemopt/core.hpp>
#include <riemopt/stiefel.hpp>

#include <iostream>

namespace riemopt {

constexpr double kGrassmannTol = 1e-10;

inline void gr_validate_horizontal(const DenseMatrix& x, const DenseMatrix& delta) {
  require(delta.rows() == x.rows() && delta.cols() == x.cols(), "grassmann tangent: shape mismatch");
  require_finite(delta, "grassmann tangent");
  double res = (x.transpose() * delta).norm();
  if (res > kGrassmannTol)
    throw Error("grassmann tangent: horizontality residual " + std::to_string(res));
}

struct GrassmannPoint {
  DenseMatrix x;  // one orthonormal representative of the class [X] = {XQ}
  explicit GrassmannPoint(DenseMatrix m, bool reorthonormalize = false) : x(std::move(m)) {
    if (reorthonormalize) x = qr_positive(x).q;
    st_validate_point(x);
  }
  explicit GrassmannPoint(const StiefelPoint& p) : x(p.x) {}
  Eigen::Index n() const { return x.rows(); }
  Eigen::Index d() const { return x.cols(); }
  DenseMatrix projector() const { return x * x.transpose(); }
};

struct GrassmannTangent {
  DenseMatrix base;
  DenseMatrix delta;  // horizontal lift at the base representative
  GrassmannTangent(const GrassmannPoint& at, DenseMatrix m) : base(at.x), delta(std::move(m)) {
    gr_validate_horizontal(base, delta);
  }
};

inline void gr_require_attached(const GrassmannPoint& x, const GrassmannTangent& t, const char* who) {
  if ((t.base - x.x).norm() > kGrassmannTol)
    throw Error(std::string(who) + ": tangent lifted at a different representative");
}

inline int gr_dim(int n, int d) {
  require(n >= d && d >= 1, "gr_dim: need n >= d >= 1");
  return d * (n - d);
}

inline GrassmannTangent gr_project_tangent(const GrassmannPoint& x, const DenseMatrix& z) {
  require(z.rows() == x.n() && z.cols() == x.d(), "gr_project_tangent: shape mismatch");
  return {x, z - x.x * (x.x.transpose() * z)};
}

inline double gr_inner(const GrassmannPoint& x, const GrassmannTangent& d1, const GrassmannTangent& d2) {
  gr_require_attached(x, d1, "gr_inner");
  gr_require_attached(x, d2, "gr_inner");
  return (d1.delta.transpose() * d2.delta).trace();
}

inline GrassmannTangent gr_egrad_to_rgrad(const GrassmannPoint& x, const DenseMatrix& g) {
  require(g.rows() == x.n() && g.cols() == x.d(), "gr_egrad_to_rgrad: shape mismatch");
  return {x, g - x.x * (x.x.transpose() * g)};
}

inline GrassmannTangent gr_ehess_to_rhess(const GrassmannPoint& x, const DenseMatrix& g,
                                          const DenseMatrix& hd, const GrassmannTangent& delta) {
  gr_require_attached(x, delta, "gr_ehess_to_rhess");
  require(g.rows() == x.n() && hd.rows() == x.n(), "gr_ehess_to_rhess: shape mismatch");
  DenseMatrix out = hd - x.x * (x.x.transpose() * hd) - delta.delta * (x.x.transpose() * g);
  return {x, out};
}

// closed-form geodesic through the compact SVD of the lifted direction
inline GrassmannPoint gr_exp(const GrassmannPoint& x, const GrassmannTangent& delta) {
  gr_require_attached(x, delta, "gr_exp");
  CompactSvd svd = compact_svd(delta.delta);
  if (svd.sigma.size() > 0 && svd.sigma(0) >= M_PI)
    std::cerr << "riemopt warning: gr_exp direction with singular value " << svd.sigma(0)
              << " >= pi (cut-locus proximity); result evaluated anyway\n";
  Vector cs = svd.sigma.array().cos();
  Vector sn = svd.sigma.array().sin();
  DenseMatrix out = x.x * svd.v * cs.asDiagonal() * svd.v.transpose() +
                    svd.u * sn.asDiagonal() * svd.v.transpose();
  return GrassmannPoint(out);
}

enum class GrRetraction { QR, Polar };

inline GrassmannPoint gr_retract(const GrassmannPoint& x, const GrassmannTangent& delta,
                                 GrRetraction kind = GrRetraction::QR) {
  gr_require_attached(x, delta, "gr_retract");
  const Eigen::Index d = x.d();
  switch (kind) {
    case GrRetraction::QR:
      return GrassmannPoint(qr_positive(x.x + delta.delta).q);
    case GrRetraction::Polar: {
      DenseMatrix gram = DenseMatrix::Identity(d, d) + delta.delta.transpose() * delta.delta;
      return GrassmannPoint((x.x + delta.delta) * sym_inv_sqrt(gram));
    }
  }
  throw Error("gr_retract: unreachable");
}

enum class GrTransport { Projection, DiffQR, DiffPolar };

inline GrassmannTangent gr_transport(const GrassmannPoint& x, const GrassmannTangent& dir,
                                     const GrassmannTangent& xi, GrTransport kind) {
  gr_require_attached(x, dir, "gr_transport");
  gr_require_attached(x, xi, "gr_transport");
  const Eigen::Index d = x.d();
  switch (kind) {
    case GrTransport::Projection: {
      GrassmannPoint y = gr_retract(x, dir, GrRetraction::QR);
      return {y, xi.delta - y.x * (y.x.transpose() * xi.delta)};
    }
    case GrTransport::DiffQR: {
      auto [q, r] = qr_positive(x.x + dir.delta);
      GrassmannPoint y(q);
      DenseMatrix w = detail::solve_right_upper(xi.delta, r);
      return {y, w - y.x * (y.x.transpose() * w)};
    }
    case GrTransport::DiffPolar: {
      DenseMatrix gram = DenseMatrix::Identity(d, d) + dir.delta.transpose() * dir.delta;
      DenseMatrix s0 = sym_inv_sqrt(gram);
      DenseMatrix sdot = detail::polar_sdot(dir.delta, xi.delta, s0);
      GrassmannPoint y((x.x + dir.delta) * s0);
      DenseMatrix raw = xi.delta * s0 + (x.x + dir.delta) * sdot;
      return {y, raw - y.x * (y.x.transpose() * raw)};
    }
  }
  throw Error("gr_transport: unreachable");
}

// class-invariant comparison via orthogonal projectors
inline double gr_subspace_distance(const GrassmannPoint& x, const GrassmannPoint& y) {
  require(x.n() == y.n() && x.d() == y.d(), "gr_subspace_distance: dimension mismatch");
  return (x.projector() - y.projector()).norm();
}

inline void save_grassmann(std::ostream& os, const GrassmannPoint& x) {
  os << "grassmann " << x.n() << ' ' << x.d() << '\n';
  write_matrix(os, x.x);
}

inline GrassmannPoint load_grassmann(std::istream& is) {
  std::string tag;
  long n = 0, d = 0;
  if (!(is >> tag >> n >> d) || tag != "grassmann")
    throw Error("load_grassmann: expected 'grassmann n d' header");
  DenseMatrix m = read_matrix(is);
  require(m.rows() == n && m.cols() == d, "load_grassmann: header/matrix size mismatch");
  return GrassmannPoint(m);
}

}  // namespace riemopt
