#pragma once

// Geometry of St(n,d) = {X : X^T X = I_d}: tangent projection, the
// Euclidean/canonical/alpha metric family, Euclidean-metric gradient and
// Hessian conversions, the closed-form geodesic exponential, QR and polar
// retractions, and projection/differentiated-retraction vector transports.

#include <riemopt/core.hpp>

namespace riemopt {

constexpr double kStiefelTol = 1e-10;

inline void st_validate_point(const DenseMatrix& x) {
  require(x.rows() >= x.cols() && x.cols() >= 1, "stiefel: need n >= d >= 1");
  require_finite(x, "stiefel point");
  const Eigen::Index d = x.cols();
  double res = (x.transpose() * x - DenseMatrix::Identity(d, d)).norm();
  if (res > kStiefelTol)
    throw Error("stiefel point: orthonormality residual " + std::to_string(res));
}

inline void st_validate_tangent(const DenseMatrix& x, const DenseMatrix& delta) {
  require(delta.rows() == x.rows() && delta.cols() == x.cols(), "stiefel tangent: shape mismatch");
  require_finite(delta, "stiefel tangent");
  DenseMatrix a = x.transpose() * delta;
  double res = (a + a.transpose()).norm();
  if (res > kStiefelTol)
    throw Error("stiefel tangent: X^T Delta skewness residual " + std::to_string(res));
}

struct StiefelPoint {
  DenseMatrix x;
  explicit StiefelPoint(DenseMatrix m, bool reorthonormalize = false) : x(std::move(m)) {
    if (reorthonormalize) x = qr_positive(x).q;
    st_validate_point(x);
  }
  Eigen::Index n() const { return x.rows(); }
  Eigen::Index d() const { return x.cols(); }
};

struct StiefelTangent {
  DenseMatrix base;   // the attachment point's representative
  DenseMatrix delta;
  StiefelTangent(const StiefelPoint& at, DenseMatrix m) : base(at.x), delta(std::move(m)) {
    st_validate_tangent(base, delta);
  }
};

inline void st_require_attached(const StiefelPoint& x, const StiefelTangent& t, const char* who) {
  if ((t.base - x.x).norm() > kStiefelTol)
    throw Error(std::string(who) + ": tangent attached to a different point");
}

struct StiefelMetricKind {
  enum class Family { Euclidean, Canonical, Alpha };
  Family family = Family::Euclidean;
  double alpha = 1.0;

  static StiefelMetricKind euclidean() { return {Family::Euclidean, 1.0}; }
  static StiefelMetricKind canonical() { return {Family::Canonical, 1.0}; }
  static StiefelMetricKind with_alpha(double a) {
    require(a > 0.0, "stiefel metric: alpha must be positive");
    return {Family::Alpha, a};
  }
};

inline int st_dim(int n, int d) {
  require(n >= d && d >= 1, "st_dim: need n >= d >= 1");
  return n * d - d * (d + 1) / 2;
}

inline StiefelTangent st_project_tangent(const StiefelPoint& x, const DenseMatrix& z) {
  require(z.rows() == x.n() && z.cols() == x.d(), "st_project_tangent: shape mismatch");
  return {x, z - x.x * sym(x.x.transpose() * z)};
}

inline double st_inner(const StiefelPoint& x, const StiefelTangent& d1, const StiefelTangent& d2,
                       StiefelMetricKind kind = StiefelMetricKind::euclidean()) {
  st_require_attached(x, d1, "st_inner");
  st_require_attached(x, d2, "st_inner");
  switch (kind.family) {
    case StiefelMetricKind::Family::Euclidean:
      return (d1.delta.transpose() * d2.delta).trace();
    case StiefelMetricKind::Family::Canonical:
      return (d1.delta.transpose() * (d2.delta - 0.5 * x.x * (x.x.transpose() * d2.delta))).trace();
    case StiefelMetricKind::Family::Alpha:
      return (d1.delta.transpose() *
              (d2.delta - (1.0 / (2.0 * kind.alpha)) * x.x * (x.x.transpose() * d2.delta))).trace();
  }
  throw Error("st_inner: unreachable");
}

// Euclidean-metric gradient: projection of the ambient gradient
inline StiefelTangent st_egrad_to_rgrad(const StiefelPoint& x, const DenseMatrix& g) {
  require(g.rows() == x.n() && g.cols() == x.d(), "st_egrad_to_rgrad: shape mismatch");
  return {x, g - x.x * sym(x.x.transpose() * g)};
}

// Euclidean-metric Hessian applied to a tangent; hd is the ambient Hessian
// of the extension applied to delta
inline StiefelTangent st_ehess_to_rhess(const StiefelPoint& x, const DenseMatrix& g,
                                        const DenseMatrix& hd, const StiefelTangent& delta) {
  st_require_attached(x, delta, "st_ehess_to_rhess");
  require(g.rows() == x.n() && hd.rows() == x.n(), "st_ehess_to_rhess: shape mismatch");
  DenseMatrix xtg = sym(x.x.transpose() * g);
  DenseMatrix out = hd - delta.delta * xtg -
                    x.x * sym(x.x.transpose() * hd - x.x.transpose() * delta.delta * xtg);
  return {x, out};
}

// geodesic of the canonical metric through the 2d x 2d block exponential
inline StiefelPoint st_exp(const StiefelPoint& x, const StiefelTangent& delta) {
  st_require_attached(x, delta, "st_exp");
  const Eigen::Index d = x.d();
  DenseMatrix a = x.x.transpose() * delta.delta;
  DenseMatrix s = delta.delta.transpose() * delta.delta;
  DenseMatrix m(2 * d, 2 * d);
  m.topLeftCorner(d, d) = a;
  m.topRightCorner(d, d) = -s;
  m.bottomLeftCorner(d, d) = DenseMatrix::Identity(d, d);
  m.bottomRightCorner(d, d) = a;
  DenseMatrix n2d = expm(m).leftCols(d) * expm(-a);
  return StiefelPoint(x.x * n2d.topRows(d) + delta.delta * n2d.bottomRows(d));
}

enum class StRetraction { QR, Polar };

inline StiefelPoint st_retract(const StiefelPoint& x, const StiefelTangent& delta,
                               StRetraction kind = StRetraction::QR) {
  st_require_attached(x, delta, "st_retract");
  const Eigen::Index d = x.d();
  switch (kind) {
    case StRetraction::QR:
      return StiefelPoint(qr_positive(x.x + delta.delta).q);
    case StRetraction::Polar: {
      DenseMatrix gram = DenseMatrix::Identity(d, d) + delta.delta.transpose() * delta.delta;
      return StiefelPoint((x.x + delta.delta) * sym_inv_sqrt(gram));
    }
  }
  throw Error("st_retract: unreachable");
}

enum class StTransport { Projection, DiffQR, DiffPolar };

namespace detail {

// strictly lower triangular part
inline DenseMatrix low(const DenseMatrix& b) {
  DenseMatrix l = DenseMatrix::Zero(b.rows(), b.cols());
  for (Eigen::Index i = 1; i < b.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j) l(i, j) = b(i, j);
  return l;
}

// right-multiply by R^{-1} for upper triangular R
inline DenseMatrix solve_right_upper(const DenseMatrix& m, const DenseMatrix& r) {
  return r.transpose().triangularView<Eigen::Lower>().solve(m.transpose()).transpose();
}

// derivative of S(t) = (I + D(t)^T D(t))^{-1/2} at t = 0 where D(t) = dir + t xi:
// S-dot solves S Sdot + Sdot S = d/dt[(I + D^T D)^{-1}] = -A^{-1} Adot A^{-1}
inline DenseMatrix polar_sdot(const DenseMatrix& dir, const DenseMatrix& xi, const DenseMatrix& s0) {
  const Eigen::Index d = dir.cols();
  DenseMatrix a = DenseMatrix::Identity(d, d) + dir.transpose() * dir;
  DenseMatrix adot = dir.transpose() * xi + xi.transpose() * dir;
  DenseMatrix ainv = a.llt().solve(DenseMatrix::Identity(d, d));
  return solve_sylvester_spd(s0, sym(-ainv * adot * ainv));
}

}  // namespace detail

inline StiefelTangent st_transport(const StiefelPoint& x, const StiefelTangent& dir,
                                   const StiefelTangent& xi, StTransport kind) {
  st_require_attached(x, dir, "st_transport");
  st_require_attached(x, xi, "st_transport");
  const Eigen::Index n = x.n(), d = x.d();
  switch (kind) {
    case StTransport::Projection: {
      StiefelPoint y = st_retract(x, dir, StRetraction::QR);
      return {y, xi.delta - y.x * sym(y.x.transpose() * xi.delta)};
    }
    case StTransport::DiffQR: {
      auto [q, r] = qr_positive(x.x + dir.delta);
      StiefelPoint y(q);
      DenseMatrix w = detail::solve_right_upper(xi.delta, r);
      DenseMatrix b = y.x.transpose() * w;
      DenseMatrix omega = detail::low(b) - detail::low(b).transpose();
      DenseMatrix out = y.x * omega + w - y.x * (y.x.transpose() * w);
      return {y, out};
    }
    case StTransport::DiffPolar: {
      DenseMatrix gram = DenseMatrix::Identity(d, d) + dir.delta.transpose() * dir.delta;
      DenseMatrix s0 = sym_inv_sqrt(gram);
      DenseMatrix sdot = detail::polar_sdot(dir.delta, xi.delta, s0);
      StiefelPoint y((x.x + dir.delta) * s0);
      return {y, xi.delta * s0 + (x.x + dir.delta) * sdot};
    }
  }
  (void)n;
  throw Error("st_transport: unreachable");
}

inline void save_stiefel(std::ostream& os, const StiefelPoint& x) {
  os << "stiefel " << x.n() << ' ' << x.d() << '\n';
  write_matrix(os, x.x);
}

inline StiefelPoint load_stiefel(std::istream& is) {
  std::string tag;
  long n = 0, d = 0;
  if (!(is >> tag >> n >> d) || tag != "stiefel")
    throw Error("load_stiefel: expected 'stiefel n d' header");
  DenseMatrix m = read_matrix(is);
  require(m.rows() == n && m.cols() == d, "load_stiefel: header/matrix size mismatch");
  return StiefelPoint(m);
}

}  // namespace riemopt
