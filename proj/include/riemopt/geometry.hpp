#pragma once

// Chart-based tensor calculus for a user-supplied metric field g_ij(x):
// Christoffel symbols, Riemann/Ricci/scalar/sectional/Gaussian curvature,
// Schouten/Weyl/Cotton tensors, covariant derivatives, Lie brackets, and
// coordinate expressions of the Riemannian gradient and Hessian.

#include <riemopt/core.hpp>

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace riemopt {

// Dense value containers for rank-3 and rank-4 tensors on an n-dim chart.
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int n) : n_(n), v_(static_cast<std::size_t>(n) * n * n, 0.0) {}
  int dim() const { return n_; }
  double& operator()(int a, int b, int c) {
    return v_[(static_cast<std::size_t>(a) * n_ + b) * n_ + c];
  }
  double operator()(int a, int b, int c) const {
    return v_[(static_cast<std::size_t>(a) * n_ + b) * n_ + c];
  }
  double max_abs() const {
    double m = 0.0;
    for (double x : v_) m = std::max(m, std::abs(x));
    return m;
  }

 private:
  int n_ = 0;
  std::vector<double> v_;
};

class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(int n) : n_(n), v_(static_cast<std::size_t>(n) * n * n * n, 0.0) {}
  int dim() const { return n_; }
  double& operator()(int a, int b, int c, int d) {
    return v_[((static_cast<std::size_t>(a) * n_ + b) * n_ + c) * n_ + d];
  }
  double operator()(int a, int b, int c, int d) const {
    return v_[((static_cast<std::size_t>(a) * n_ + b) * n_ + c) * n_ + d];
  }
  double max_abs() const {
    double m = 0.0;
    for (double x : v_) m = std::max(m, std::abs(x));
    return m;
  }

 private:
  int n_ = 0;
  std::vector<double> v_;
};

enum class DerivMode { Analytic, CentralDifference };

// A coordinate chart with its metric components.  `g` must be pure and
// reentrant: engine operations evaluate it at stencil points from any thread.
// `dg` (x -> [d_0 g, ..., d_{n-1} g]) is consulted only in Analytic mode.
// fd_step == 0 selects the default per-coordinate step eps^{1/3}(1+|x_l|).
struct MetricField {
  int dim = 0;
  std::function<DenseMatrix(const Vector&)> g;
  std::function<std::vector<DenseMatrix>(const Vector&)> dg;
  DerivMode mode = DerivMode::CentralDifference;
  double fd_step = 0.0;
};

inline DenseMatrix metric_at(const MetricField& m, const Vector& x) {
  require(x.size() == m.dim, "metric_at: point has wrong dimension");
  DenseMatrix g = m.g(x);
  require(g.rows() == m.dim && g.cols() == m.dim, "metric_at: g(x) has wrong shape");
  require_finite(g, "metric_at");
  std::ostringstream where;
  where << "x = [" << x.transpose() << "]";
  if ((g - g.transpose()).norm() > 1e-8 * (1.0 + g.norm()))
    throw Error("metric_at: g(x) is not symmetric at " + where.str());
  g = sym(g);
  Eigen::LLT<DenseMatrix> llt(g);
  if (llt.info() != Eigen::Success)
    throw DegenerateMetricError("metric_at: g(x) is not positive definite at " + where.str());
  return g;
}

inline DenseMatrix metric_inverse(const MetricField& m, const Vector& x) {
  DenseMatrix g = metric_at(m, x);
  DenseMatrix inv = g.llt().solve(DenseMatrix::Identity(m.dim, m.dim));
  if ((g * inv - DenseMatrix::Identity(m.dim, m.dim)).norm() > 1e-10)
    throw DegenerateMetricError("metric_inverse: g(x) too ill-conditioned to invert");
  return inv;
}

enum class IndexDirection { Lower, Raise };

inline Vector raise_lower_index(const MetricField& m, const Vector& x, const Vector& v,
                                IndexDirection dir) {
  require(v.size() == m.dim, "raise_lower_index: vector has wrong dimension");
  if (dir == IndexDirection::Lower) return metric_at(m, x) * v;
  return metric_inverse(m, x) * v;
}

namespace detail {

inline double fd_first_step(const MetricField& m, const Vector& x, int l) {
  if (m.fd_step > 0.0) return m.fd_step;
  const double cbrt_eps = std::cbrt(std::numeric_limits<double>::epsilon());
  return cbrt_eps * (1.0 + std::abs(x(l)));
}

inline double fd_second_step(const MetricField& m, const Vector& x, int l) {
  if (m.fd_step > 0.0) return m.fd_step;
  const double qrt_eps = std::pow(std::numeric_limits<double>::epsilon(), 0.25);
  return qrt_eps * (1.0 + std::abs(x(l)));
}

// First partials d_l g, either from the supplied dg or by central differences.
inline std::vector<DenseMatrix> metric_partials(const MetricField& m, const Vector& x) {
  const int n = m.dim;
  if (m.mode == DerivMode::Analytic) {
    require(static_cast<bool>(m.dg), "metric partials: Analytic mode needs dg");
    std::vector<DenseMatrix> dgs = m.dg(x);
    require(static_cast<int>(dgs.size()) == n, "metric partials: dg(x) has wrong length");
    for (const DenseMatrix& d : dgs) {
      require(d.rows() == n && d.cols() == n, "metric partials: dg entry has wrong shape");
      require_finite(d, "metric partials");
      require((d - d.transpose()).norm() <= 1e-8 * (1.0 + d.norm()),
              "metric partials: supplied derivative matrix is not symmetric");
    }
    return dgs;
  }
  std::vector<DenseMatrix> dgs(n);
  for (int l = 0; l < n; ++l) {
    const double h = fd_first_step(m, x, l);
    Vector xp = x, xm = x;
    xp(l) += h;
    xm(l) -= h;
    dgs[l] = (metric_at(m, xp) - metric_at(m, xm)) / (2.0 * h);
  }
  return dgs;
}

// Second partials dd[a][b] = d_a d_b g.  In Analytic mode this differences the
// supplied dg once; in CentralDifference mode the inner eps^{1/3} stencil is
// nested inside a wider eps^{1/4} outer stencil.  The result is symmetrized
// over the two derivative indices.
inline std::vector<std::vector<DenseMatrix>> metric_second_partials(const MetricField& m,
                                                                    const Vector& x) {
  const int n = m.dim;
  std::vector<std::vector<DenseMatrix>> dd(n, std::vector<DenseMatrix>(n));
  for (int a = 0; a < n; ++a) {
    const double h = m.mode == DerivMode::Analytic ? fd_first_step(m, x, a)
                                                   : fd_second_step(m, x, a);
    Vector xp = x, xm = x;
    xp(a) += h;
    xm(a) -= h;
    std::vector<DenseMatrix> dp, dm;
    if (m.mode == DerivMode::Analytic) {
      dp = m.dg(xp);
      dm = m.dg(xm);
      require(static_cast<int>(dp.size()) == n && static_cast<int>(dm.size()) == n,
              "metric second partials: dg has wrong length");
    } else {
      dp = metric_partials(m, xp);
      dm = metric_partials(m, xm);
    }
    for (int b = 0; b < n; ++b) dd[a][b] = (dp[b] - dm[b]) / (2.0 * h);
  }
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      DenseMatrix avg = 0.5 * (dd[a][b] + dd[b][a]);
      dd[a][b] = avg;
      dd[b][a] = avg;
    }
  return dd;
}

struct MetricJets {
  DenseMatrix g;
  DenseMatrix ginv;
  std::vector<DenseMatrix> dg;
  std::vector<std::vector<DenseMatrix>> ddg;  // filled only when second order requested
};

inline MetricJets metric_jets(const MetricField& m, const Vector& x, bool second_order) {
  MetricJets j;
  j.g = metric_at(m, x);
  j.ginv = metric_inverse(m, x);
  j.dg = metric_partials(m, x);
  if (second_order) j.ddg = metric_second_partials(m, x);
  return j;
}

inline Tensor3 christoffel_second_from_jets(const MetricJets& j) {
  const int n = static_cast<int>(j.g.rows());
  Tensor3 g2(n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int jk = 0; jk < n; ++jk) {
        double s = 0.0;
        for (int l = 0; l < n; ++l)
          s += j.ginv(k, l) * (j.dg[i](jk, l) + j.dg[jk](i, l) - j.dg[l](i, jk));
        g2(k, i, jk) = 0.5 * s;
      }
  return g2;
}

}  // namespace detail

// Both kinds of Christoffel symbols at a point, plus the torsion diagnostic
// max_kij |Gamma^k_ij - Gamma^k_ji|.  gamma2(k,i,j) = Gamma^k_ij and
// gamma1(i,j,k) = g_il Gamma^l_jk (index lowered into the first slot).
struct ChristoffelAt {
  Tensor3 gamma2;
  Tensor3 gamma1;
  double torsion_max = 0.0;
};

inline ChristoffelAt christoffel(const MetricField& m, const Vector& x) {
  detail::MetricJets j = detail::metric_jets(m, x, false);
  const int n = m.dim;
  ChristoffelAt out;
  out.gamma2 = detail::christoffel_second_from_jets(j);
  out.gamma1 = Tensor3(n);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += j.g(i, l) * out.gamma2(l, a, b);
        out.gamma1(i, a, b) = s;
      }
  for (int k = 0; k < n; ++k)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        out.torsion_max =
            std::max(out.torsion_max, std::abs(out.gamma2(k, a, b) - out.gamma2(k, b, a)));
  return out;
}

// A vector field given by its components plus (optionally) its Jacobian
// J(a,b) = d V^a / d x^b.  When jacobian is absent it is formed by central
// differences of `value`.
struct VectorField {
  std::function<Vector(const Vector&)> value;
  std::function<DenseMatrix(const Vector&)> jacobian;
};

namespace detail {

inline DenseMatrix field_jacobian(int dim, const VectorField& f, const Vector& x) {
  if (f.jacobian) {
    DenseMatrix jac = f.jacobian(x);
    require(jac.rows() == dim && jac.cols() == dim, "vector field Jacobian has wrong shape");
    return jac;
  }
  const double cbrt_eps = std::cbrt(std::numeric_limits<double>::epsilon());
  DenseMatrix jac(dim, dim);
  for (int b = 0; b < dim; ++b) {
    const double h = cbrt_eps * (1.0 + std::abs(x(b)));
    Vector xp = x, xm = x;
    xp(b) += h;
    xm(b) -= h;
    jac.col(b) = (f.value(xp) - f.value(xm)) / (2.0 * h);
  }
  return jac;
}

}  // namespace detail

enum class Variance { Contravariant, Covariant };

// out(i, j) is the derivative along coordinate i of component j:
// contravariant nabla_i V^j = d_i V^j + Gamma^j_ik V^k,
// covariant     nabla_i V_j = d_i V_j - Gamma^k_ij V_k.
inline DenseMatrix covariant_derivative_vector(const MetricField& m, const Vector& x,
                                               const VectorField& field, Variance variance) {
  const int n = m.dim;
  Vector v = field.value(x);
  require(v.size() == n, "covariant_derivative_vector: field value has wrong dimension");
  DenseMatrix jac = detail::field_jacobian(n, field, x);
  ChristoffelAt ch = christoffel(m, x);
  DenseMatrix out(n, n);
  for (int i = 0; i < n; ++i)
    for (int jj = 0; jj < n; ++jj) {
      double s = jac(jj, i);
      for (int k = 0; k < n; ++k) {
        if (variance == Variance::Contravariant)
          s += ch.gamma2(jj, i, k) * v(k);
        else
          s -= ch.gamma2(k, i, jj) * v(k);
      }
      out(i, jj) = s;
    }
  return out;
}

inline Vector lie_bracket(int dim, const VectorField& fx, const VectorField& fy,
                          const Vector& x) {
  Vector vx = fx.value(x);
  Vector vy = fy.value(x);
  require(vx.size() == dim && vy.size() == dim, "lie_bracket: field value has wrong dimension");
  DenseMatrix jx = detail::field_jacobian(dim, fx, x);
  DenseMatrix jy = detail::field_jacobian(dim, fy, x);
  return jy * vx - jx * vy;
}

// riemann_up(l,i,j,k)   = R^l_ijk = d_j Gamma^l_ki - d_k Gamma^l_ji
//                                   + Gamma^l_jp Gamma^p_ki - Gamma^l_kp Gamma^p_ji
// riemann_down(m,i,j,k) = g_ml R^l_ijk
// ricci(i,j)            = R^k_ikj,   scalar = g^ij ricci_ij
struct CurvatureBundle {
  Tensor4 riemann_up;
  Tensor4 riemann_down;
  DenseMatrix ricci;
  double scalar = 0.0;
};

namespace detail {

// Assembles the full curvature bundle from (g, g^{-1}, dg, ddg).  Shared by
// the metric-field path and the Ricci-flow lattice path, which builds its
// jets from grid stencils instead of function evaluations.
inline CurvatureBundle curvature_from_jets(const MetricJets& j) {
  const int n = static_cast<int>(j.g.rows());
  Tensor3 g2 = christoffel_second_from_jets(j);

  // d_a g^{lm} = -g^{lp} (d_a g_{pq}) g^{qm}
  std::vector<DenseMatrix> dginv(n);
  for (int a = 0; a < n; ++a) dginv[a] = -j.ginv * j.dg[a] * j.ginv;

  // dgamma(a) holds d_a Gamma^k_ij via the product rule on the Gamma formula
  std::vector<Tensor3> dgamma(n, Tensor3(n));
  for (int a = 0; a < n; ++a)
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int jj = 0; jj < n; ++jj) {
          double s = 0.0;
          for (int l = 0; l < n; ++l) {
            s += dginv[a](k, l) * (j.dg[i](jj, l) + j.dg[jj](i, l) - j.dg[l](i, jj));
            s += j.ginv(k, l) *
                 (j.ddg[a][i](jj, l) + j.ddg[a][jj](i, l) - j.ddg[a][l](i, jj));
          }
          dgamma[a](k, i, jj) = 0.5 * s;
        }

  CurvatureBundle out;
  out.riemann_up = Tensor4(n);
  out.riemann_down = Tensor4(n);
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int jj = 0; jj < n; ++jj)
        for (int k = 0; k < n; ++k) {
          double s = dgamma[jj](l, k, i) - dgamma[k](l, jj, i);
          for (int p = 0; p < n; ++p)
            s += g2(l, jj, p) * g2(p, k, i) - g2(l, k, p) * g2(p, jj, i);
          out.riemann_up(l, i, jj, k) = s;
        }
  for (int mm = 0; mm < n; ++mm)
    for (int i = 0; i < n; ++i)
      for (int jj = 0; jj < n; ++jj)
        for (int k = 0; k < n; ++k) {
          double s = 0.0;
          for (int l = 0; l < n; ++l) s += j.g(mm, l) * out.riemann_up(l, i, jj, k);
          out.riemann_down(mm, i, jj, k) = s;
        }
  out.ricci = DenseMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int jj = 0; jj < n; ++jj)
      for (int k = 0; k < n; ++k) out.ricci(i, jj) += out.riemann_up(k, i, k, jj);
  out.scalar = (j.ginv.array() * out.ricci.array()).sum();
  return out;
}

}  // namespace detail

inline CurvatureBundle riemann_tensor(const MetricField& m, const Vector& x) {
  return detail::curvature_from_jets(detail::metric_jets(m, x, true));
}

inline DenseMatrix ricci_tensor(const MetricField& m, const Vector& x) {
  return riemann_tensor(m, x).ricci;
}

inline double scalar_curvature(const MetricField& m, const Vector& x) {
  return riemann_tensor(m, x).scalar;
}

inline double sectional_curvature(const MetricField& m, const Vector& x, const Vector& vx,
                                  const Vector& vy) {
  const int n = m.dim;
  require(vx.size() == n && vy.size() == n, "sectional_curvature: vector has wrong dimension");
  CurvatureBundle c = riemann_tensor(m, x);
  DenseMatrix g = metric_at(m, x);
  const double xx = vx.dot(g * vx);
  const double yy = vy.dot(g * vy);
  const double xy = vx.dot(g * vy);
  const double den = xx * yy - xy * xy;
  if (den <= 1e-14 * std::max(xx * yy, 1e-300))
    throw Error("sectional_curvature: tangent vectors do not span a plane");
  double num = 0.0;
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int jj = 0; jj < n; ++jj)
        for (int k = 0; k < n; ++k)
          num += vx(l) * vy(i) * vx(jj) * vy(k) * c.riemann_down(l, i, jj, k);
  return num / den;
}

inline double gaussian_curvature_2d(const MetricField& m, const Vector& x) {
  require(m.dim == 2, "gaussian_curvature_2d: chart dimension must be 2");
  CurvatureBundle c = riemann_tensor(m, x);
  DenseMatrix g = metric_at(m, x);
  const double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
  require(std::abs(det) > 0.0, "gaussian_curvature_2d: degenerate metric determinant");
  return c.riemann_down(0, 1, 0, 1) / det;
}

// Schouten P_ij = (R_ij - R g_ij / (2(n-1))) / (n-2)
// Weyl    W_ijkl = R_ijkl - (g_ik P_jl - g_il P_jk - g_jk P_il + g_jl P_ik)
// Cotton  C_ijk = nabla_k P_ij - nabla_j P_ik
struct ConformalTensors {
  DenseMatrix schouten;
  Tensor4 weyl;
  Tensor3 cotton;
};

namespace detail {

inline DenseMatrix schouten_at(const MetricField& m, const Vector& x) {
  const int n = m.dim;
  CurvatureBundle c = riemann_tensor(m, x);
  DenseMatrix g = metric_at(m, x);
  return (c.ricci - (c.scalar / (2.0 * (n - 1))) * g) / static_cast<double>(n - 2);
}

}  // namespace detail

inline ConformalTensors conformal_tensors(const MetricField& m, const Vector& x) {
  const int n = m.dim;
  require(n >= 3, "conformal_tensors: chart dimension must be at least 3");
  CurvatureBundle c = riemann_tensor(m, x);
  DenseMatrix g = metric_at(m, x);
  ConformalTensors out;
  out.schouten = detail::schouten_at(m, x);
  out.weyl = Tensor4(n);
  const DenseMatrix& p = out.schouten;
  for (int i = 0; i < n; ++i)
    for (int jj = 0; jj < n; ++jj)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          out.weyl(i, jj, k, l) = c.riemann_down(i, jj, k, l) -
                                  (g(i, k) * p(jj, l) - g(i, l) * p(jj, k) -
                                   g(jj, k) * p(i, l) + g(jj, l) * p(i, k));

  // nabla_k P_ij needs d_k P, taken by central differences with the wider
  // second-derivative step (P already contains two derivatives of g)
  ChristoffelAt ch = christoffel(m, x);
  std::vector<DenseMatrix> dp(n);
  for (int k = 0; k < n; ++k) {
    const double h = detail::fd_second_step(m, x, k);
    Vector xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    dp[k] = (detail::schouten_at(m, xp) - detail::schouten_at(m, xm)) / (2.0 * h);
  }
  Tensor3 covp(n);  // covp(k,i,j) = nabla_k P_ij
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int jj = 0; jj < n; ++jj) {
        double s = dp[k](i, jj);
        for (int l = 0; l < n; ++l)
          s -= ch.gamma2(l, k, i) * p(l, jj) + ch.gamma2(l, k, jj) * p(i, l);
        covp(k, i, jj) = s;
      }
  out.cotton = Tensor3(n);
  for (int i = 0; i < n; ++i)
    for (int jj = 0; jj < n; ++jj)
      for (int k = 0; k < n; ++k)
        out.cotton(i, jj, k) = covp(k, i, jj) - covp(jj, i, k);
  return out;
}

inline Vector riemannian_gradient_coords(const MetricField& m, const Vector& x,
                                         const Vector& df) {
  require(df.size() == m.dim, "riemannian_gradient_coords: df has wrong dimension");
  return metric_inverse(m, x) * df;
}

inline DenseMatrix riemannian_hessian_coords(const MetricField& m, const Vector& x,
                                             const Vector& df, const DenseMatrix& d2f) {
  const int n = m.dim;
  require(df.size() == n, "riemannian_hessian_coords: df has wrong dimension");
  require(d2f.rows() == n && d2f.cols() == n, "riemannian_hessian_coords: d2f has wrong shape");
  ChristoffelAt ch = christoffel(m, x);
  DenseMatrix h = d2f;
  for (int i = 0; i < n; ++i)
    for (int jj = 0; jj < n; ++jj)
      for (int k = 0; k < n; ++k) h(i, jj) -= ch.gamma2(k, i, jj) * df(k);
  return h;
}

// Named charts selectable from the command line:
//   euclidean:n            flat R^n, g = I
//   polar                  plane in polar coordinates (r, theta), g = diag(1, r^2)
//   sphere:r               radius-r sphere chart (theta, phi), g = diag(r^2, r^2 sin^2 theta)
//   hyperbolic-halfplane   upper half-plane (x, y>0), g = diag(1/y^2, 1/y^2)
// All ship with analytic derivatives and default to Analytic mode.
inline MetricField make_builtin_metric(const std::string& name) {
  MetricField m;
  m.mode = DerivMode::Analytic;
  auto colon = name.find(':');
  const std::string head = name.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : name.substr(colon + 1);
  if (head == "euclidean") {
    int n = 0;
    try {
      std::size_t used = 0;
      n = std::stoi(arg, &used);
      require(used == arg.size(), "trailing characters");
    } catch (const std::exception&) {
      throw Error("make_builtin_metric: euclidean:n needs an integer dimension, got '" + arg +
                  "'");
    }
    require(n >= 1, "make_builtin_metric: euclidean dimension must be positive");
    m.dim = n;
    m.g = [n](const Vector&) { return DenseMatrix::Identity(n, n); };
    m.dg = [n](const Vector&) {
      return std::vector<DenseMatrix>(n, DenseMatrix::Zero(n, n));
    };
    return m;
  }
  if (head == "polar") {
    require(arg.empty(), "make_builtin_metric: polar takes no parameter");
    m.dim = 2;
    m.g = [](const Vector& x) {
      DenseMatrix g = DenseMatrix::Zero(2, 2);
      g(0, 0) = 1.0;
      g(1, 1) = x(0) * x(0);
      return g;
    };
    m.dg = [](const Vector& x) {
      std::vector<DenseMatrix> d(2, DenseMatrix::Zero(2, 2));
      d[0](1, 1) = 2.0 * x(0);
      return d;
    };
    return m;
  }
  if (head == "sphere") {
    double r = 1.0;
    if (!arg.empty()) {
      try {
        std::size_t used = 0;
        r = std::stod(arg, &used);
        require(used == arg.size(), "trailing characters");
      } catch (const std::exception&) {
        throw Error("make_builtin_metric: sphere:r needs a real radius, got '" + arg + "'");
      }
    }
    require(r > 0.0, "make_builtin_metric: sphere radius must be positive");
    m.dim = 2;
    m.g = [r](const Vector& x) {
      DenseMatrix g = DenseMatrix::Zero(2, 2);
      const double s = std::sin(x(0));
      g(0, 0) = r * r;
      g(1, 1) = r * r * s * s;
      return g;
    };
    m.dg = [r](const Vector& x) {
      std::vector<DenseMatrix> d(2, DenseMatrix::Zero(2, 2));
      d[0](1, 1) = r * r * 2.0 * std::sin(x(0)) * std::cos(x(0));
      return d;
    };
    return m;
  }
  if (head == "hyperbolic-halfplane") {
    require(arg.empty(), "make_builtin_metric: hyperbolic-halfplane takes no parameter");
    m.dim = 2;
    m.g = [](const Vector& x) {
      const double y = x(1);
      DenseMatrix g = DenseMatrix::Zero(2, 2);
      g(0, 0) = 1.0 / (y * y);
      g(1, 1) = 1.0 / (y * y);
      return g;
    };
    m.dg = [](const Vector& x) {
      const double y = x(1);
      std::vector<DenseMatrix> d(2, DenseMatrix::Zero(2, 2));
      d[1](0, 0) = -2.0 / (y * y * y);
      d[1](1, 1) = -2.0 / (y * y * y);
      return d;
    };
    return m;
  }
  throw Error("make_builtin_metric: unknown metric '" + name +
              "' (expected euclidean:n, polar, sphere:r, hyperbolic-halfplane)");
}

}  // namespace riemopt
