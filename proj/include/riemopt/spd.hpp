#pragma once

// Geometry of the SPD cone S++^n: validated points, four metrics (Euclidean,
// affine-invariant, log-Euclidean, Bures-Wasserstein), Euclidean and
// affine-invariant gradient/Hessian/exponential/retraction, affine-invariant
// logarithm and parallel transport, and differentiated-retraction transports.

#include <riemopt/core.hpp>

namespace riemopt {

constexpr double kSpdSymTol = 1e-10;

struct SpdPoint {
  DenseMatrix x;
  SymEigen eig;
  DenseMatrix sqrt_x, inv_sqrt_x, inv_x;

  explicit SpdPoint(DenseMatrix m) : x(std::move(m)) {
    require(x.rows() == x.cols() && x.rows() >= 1, "spd point: need square matrix");
    require_finite(x, "spd point");
    double asym = (x - x.transpose()).norm();
    if (asym > kSpdSymTol)
      throw Error("spd point: symmetry residual " + std::to_string(asym));
    x = sym(x);
    eig = sym_eigen(x);
    if (!spd_check(eig))
      throw Error("spd point: eigenvalue below positivity threshold (min " +
                  std::to_string(eig.values(0)) + ", max " +
                  std::to_string(eig.values(eig.values.size() - 1)) + ")");
    Vector sq = eig.values.array().sqrt();
    sqrt_x = sym(eig.vectors * sq.asDiagonal() * eig.vectors.transpose());
    inv_sqrt_x = sym(eig.vectors * sq.cwiseInverse().asDiagonal() * eig.vectors.transpose());
    inv_x = sym(eig.vectors * eig.values.cwiseInverse().asDiagonal() * eig.vectors.transpose());
  }
  Eigen::Index n() const { return x.rows(); }
};

struct SpdTangent {
  DenseMatrix delta;  // the tangent space at every SPD point is S^n
  explicit SpdTangent(DenseMatrix m) : delta(std::move(m)) {
    require(delta.rows() == delta.cols(), "spd tangent: need square matrix");
    require_finite(delta, "spd tangent");
    double asym = (delta - delta.transpose()).norm();
    if (asym > kSpdSymTol)
      throw Error("spd tangent: symmetry residual " + std::to_string(asym));
    delta = sym(delta);
  }
};

enum class SpdMetricKind { Euclidean, AffineInvariant, LogEuclidean, BuresWasserstein };

inline int spd_dim(int n) {
  require(n >= 1, "spd_dim: need n >= 1");
  return n * (n + 1) / 2;
}

// Frechet derivative of the matrix log at X by eigen divided differences
inline DenseMatrix spd_dlog(const SpdPoint& x, const DenseMatrix& delta) {
  const Eigen::Index n = x.n();
  DenseMatrix w = x.eig.vectors.transpose() * delta * x.eig.vectors;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double li = x.eig.values(i), lj = x.eig.values(j);
      double coef = (std::abs(li - lj) < 1e-8 * li) ? 1.0 / li
                                                    : (std::log(li) - std::log(lj)) / (li - lj);
      w(i, j) *= coef;
    }
  }
  return x.eig.vectors * w * x.eig.vectors.transpose();
}

inline double spd_inner(const SpdPoint& x, const SpdTangent& d1, const SpdTangent& d2,
                        SpdMetricKind kind = SpdMetricKind::AffineInvariant) {
  require(d1.delta.rows() == x.n() && d2.delta.rows() == x.n(), "spd_inner: size mismatch");
  switch (kind) {
    case SpdMetricKind::Euclidean:
      return (d1.delta * d2.delta).trace();
    case SpdMetricKind::AffineInvariant:
      return (x.inv_x * d1.delta * x.inv_x * d2.delta).trace();
    case SpdMetricKind::LogEuclidean:
      return (spd_dlog(x, d1.delta) * spd_dlog(x, d2.delta)).trace();
    case SpdMetricKind::BuresWasserstein:
      return 0.5 * (solve_sylvester_spd(x.x, d1.delta) * d2.delta).trace();
  }
  throw Error("spd_inner: unreachable");
}

enum class SpdGeodesicKind { Euclidean, AffineInvariant };

inline SpdTangent spd_egrad_to_rgrad(const SpdPoint& x, const DenseMatrix& g, SpdGeodesicKind kind) {
  require(g.rows() == x.n() && g.cols() == x.n(), "spd_egrad_to_rgrad: size mismatch");
  switch (kind) {
    case SpdGeodesicKind::Euclidean:
      return SpdTangent(sym(g));
    case SpdGeodesicKind::AffineInvariant:
      return SpdTangent(sym(x.x * sym(g) * x.x));
  }
  throw Error("spd_egrad_to_rgrad: unreachable");
}

inline SpdTangent spd_ehess_to_rhess(const SpdPoint& x, const DenseMatrix& g, const DenseMatrix& hd,
                                     const SpdTangent& delta, SpdGeodesicKind kind) {
  require(g.rows() == x.n() && hd.rows() == x.n(), "spd_ehess_to_rhess: size mismatch");
  switch (kind) {
    case SpdGeodesicKind::Euclidean:
      return SpdTangent(sym(hd));
    case SpdGeodesicKind::AffineInvariant: {
      DenseMatrix sg = sym(g);
      DenseMatrix out = x.x * sym(hd) * x.x +
                        0.5 * (delta.delta * sg * x.x + x.x * sg * delta.delta);
      return SpdTangent(sym(out));
    }
  }
  throw Error("spd_ehess_to_rhess: unreachable");
}

inline SpdPoint spd_exp(const SpdPoint& x, const SpdTangent& delta, SpdGeodesicKind kind) {
  switch (kind) {
    case SpdGeodesicKind::Euclidean: {
      DenseMatrix y = sym(x.x + delta.delta);
      SymEigen es = sym_eigen(y);
      if (!spd_check(es))
        throw ConeExitError("spd_exp (Euclidean): X + Delta leaves the SPD cone (min eigenvalue " +
                            std::to_string(es.values(0)) + ")");
      return SpdPoint(y);
    }
    case SpdGeodesicKind::AffineInvariant: {
      DenseMatrix s = sym(x.inv_sqrt_x * delta.delta * x.inv_sqrt_x);
      return SpdPoint(sym(x.sqrt_x * sym_exp(s) * x.sqrt_x));
    }
  }
  throw Error("spd_exp: unreachable");
}

inline SpdTangent spd_log_ai(const SpdPoint& x, const SpdPoint& y) {
  require(x.n() == y.n(), "spd_log_ai: size mismatch");
  DenseMatrix inner = sym(x.inv_sqrt_x * y.x * x.inv_sqrt_x);
  return SpdTangent(sym(x.sqrt_x * sym_log(inner) * x.sqrt_x));
}

inline SpdPoint spd_retract(const SpdPoint& x, const SpdTangent& delta, SpdGeodesicKind kind) {
  switch (kind) {
    case SpdGeodesicKind::Euclidean: {
      DenseMatrix y = sym(x.x + delta.delta);
      SymEigen es = sym_eigen(y);
      if (!spd_check(es))
        throw ConeExitError("spd_retract (Euclidean): X + Delta leaves the SPD cone (min eigenvalue " +
                            std::to_string(es.values(0)) + ")");
      return SpdPoint(y);
    }
    case SpdGeodesicKind::AffineInvariant:
      // second-order expansion of the AI geodesic; SPD for every symmetric step
      return SpdPoint(sym(x.x + delta.delta + 0.5 * delta.delta * x.inv_x * delta.delta));
  }
  throw Error("spd_retract: unreachable");
}

enum class SpdTransportKind { EuclideanIdentity, AIParallel, DiffEuclidean, DiffAI };

inline SpdTangent spd_transport(const SpdPoint& x, const SpdTangent& dir, const SpdTangent& xi,
                                SpdTransportKind kind) {
  switch (kind) {
    case SpdTransportKind::EuclideanIdentity:
    case SpdTransportKind::DiffEuclidean:
      return xi;
    case SpdTransportKind::AIParallel: {
      DenseMatrix s = sym(x.inv_sqrt_x * dir.delta * x.inv_sqrt_x);
      DenseMatrix a = sym(x.inv_sqrt_x * xi.delta * x.inv_sqrt_x);
      DenseMatrix half = sym_exp(0.5 * s);
      return SpdTangent(sym(x.sqrt_x * half * a * half * x.sqrt_x));
    }
    case SpdTransportKind::DiffAI: {
      DenseMatrix out = xi.delta + 0.5 * (xi.delta * x.inv_x * dir.delta +
                                          dir.delta * x.inv_x * xi.delta);
      return SpdTangent(sym(out));
    }
  }
  throw Error("spd_transport: unreachable");
}

inline void save_spd(std::ostream& os, const SpdPoint& x) {
  os << "spd " << x.n() << '\n';
  write_matrix(os, x.x);
}

inline SpdPoint load_spd(std::istream& is) {
  std::string tag;
  long n = 0;
  if (!(is >> tag >> n) || tag != "spd")
    throw Error("load_spd: expected 'spd n' header");
  DenseMatrix m = read_matrix(is);
  require(m.rows() == n && m.cols() == n, "load_spd: header/matrix size mismatch");
  return SpdPoint(m);
}

}  // namespace riemopt
