#pragma once

// Dense linear-algebra kernels shared by every manifold module: symmetrize,
// sign-fixed QR, compact SVD, symmetric eigen machinery, symmetric matrix
// functions, the SPD Sylvester solver, a general matrix exponential, and the
// plain-text matrix format used by the CLI.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace riemopt {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// X + Delta left the SPD cone (Euclidean exp/retract refuse to clamp)
struct ConeExitError : Error {
  explicit ConeExitError(const std::string& what) : Error(what) {}
};

// metric evaluation produced a non-SPD Gram matrix (chart boundary etc.)
struct DegenerateMetricError : Error {
  explicit DegenerateMetricError(const std::string& what) : Error(what) {}
};

struct NonConvergenceError : Error {
  double best_residual;
  NonConvergenceError(const std::string& what, double r) : Error(what), best_residual(r) {}
};

// Ricci flow left the SPD cone; carries a linear blow-up time estimate
struct SingularityError : Error {
  double blow_up_estimate;
  SingularityError(const std::string& what, double t) : Error(what), blow_up_estimate(t) {}
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(what);
}

inline void require_finite(const DenseMatrix& a, const char* who) {
  if (!a.allFinite()) throw Error(std::string(who) + ": non-finite entries");
}

inline DenseMatrix sym(const DenseMatrix& a) {
  require(a.rows() == a.cols(), "sym: matrix must be square");
  return 0.5 * (a + a.transpose());
}

inline DenseMatrix skew(const DenseMatrix& a) {
  require(a.rows() == a.cols(), "skew: matrix must be square");
  return 0.5 * (a - a.transpose());
}

struct QrResult {
  DenseMatrix q;  // n x d, orthonormal columns
  DenseMatrix r;  // d x d, upper triangular, positive diagonal
};

// QR with the uniqueness convention diag(R) > 0; sign(0) counts as +1.
inline QrResult qr_positive(const DenseMatrix& a) {
  require(a.rows() >= a.cols() && a.cols() >= 1, "qr_positive: need n >= d >= 1");
  require_finite(a, "qr_positive");
  const Eigen::Index n = a.rows(), d = a.cols();
  Eigen::HouseholderQR<DenseMatrix> qr(a);
  DenseMatrix q = qr.householderQ() * DenseMatrix::Identity(n, d);
  DenseMatrix r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < d; ++i) {
    if (r(i, i) < 0.0) {
      q.col(i) = -q.col(i);
      r.row(i) = -r.row(i);
    }
  }
  const double scale = a.norm();
  for (Eigen::Index i = 0; i < d; ++i)
    if (!(r(i, i) > 1e-12 * scale))
      throw Error("qr_positive: rank-deficient input (R diagonal " + std::to_string(r(i, i)) +
                  " vs scale " + std::to_string(scale) + ")");
  return {q, r};
}

struct CompactSvd {
  DenseMatrix u;       // n x d
  Vector sigma;        // d, descending, nonnegative
  DenseMatrix v;       // d x d orthogonal
};

inline CompactSvd compact_svd(const DenseMatrix& a) {
  require(a.rows() >= a.cols(), "compact_svd: need n >= d");
  require_finite(a, "compact_svd");
  Eigen::JacobiSVD<DenseMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

struct SymEigen {
  DenseMatrix vectors;  // orthogonal, columns are eigenvectors
  Vector values;        // ascending
};

inline SymEigen sym_eigen(const DenseMatrix& x) {
  require(x.rows() == x.cols(), "sym_eigen: matrix must be square");
  require_finite(x, "sym_eigen");
  const double asym = (x - x.transpose()).norm();
  require(asym <= 1e-8 * (1.0 + x.norm()), "sym_eigen: input not symmetric");
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(sym(x));
  require(es.info() == Eigen::Success, "sym_eigen: eigensolver failed");
  return {es.eigenvectors(), es.eigenvalues()};
}

inline bool spd_check(const SymEigen& es) {
  const double lmax = es.values(es.values.size() - 1);
  const double lmin = es.values(0);
  return lmax > 0.0 && lmin > 1e-12 * lmax;
}

// U f(Lambda) U^T; positivity demanded for functions defined on (0, inf)
inline DenseMatrix sym_func(const DenseMatrix& x, const std::function<double(double)>& f,
                            bool needs_positive = false) {
  SymEigen es = sym_eigen(x);
  if (needs_positive && !spd_check(es))
    throw Error("sym_func: eigenvalue below positivity threshold (min " +
                std::to_string(es.values(0)) + ", max " +
                std::to_string(es.values(es.values.size() - 1)) + ")");
  Vector fv(es.values.size());
  for (Eigen::Index i = 0; i < fv.size(); ++i) fv(i) = f(es.values(i));
  return sym(es.vectors * fv.asDiagonal() * es.vectors.transpose());
}

inline DenseMatrix sym_exp(const DenseMatrix& x) {
  return sym_func(x, [](double t) { return std::exp(t); });
}
inline DenseMatrix sym_log(const DenseMatrix& x) {
  return sym_func(x, [](double t) { return std::log(t); }, true);
}
inline DenseMatrix sym_sqrt(const DenseMatrix& x) {
  return sym_func(x, [](double t) { return std::sqrt(t); }, true);
}
inline DenseMatrix sym_inv_sqrt(const DenseMatrix& x) {
  return sym_func(x, [](double t) { return 1.0 / std::sqrt(t); }, true);
}

// unique symmetric A with XA + AX = Delta, X SPD: A = U (M .* U^T Delta U) U^T,
// M_ij = 1/(lambda_i + lambda_j)
inline DenseMatrix solve_sylvester_spd(const DenseMatrix& x, const DenseMatrix& delta) {
  require(x.rows() == delta.rows() && x.cols() == delta.cols(), "solve_sylvester_spd: size mismatch");
  SymEigen es = sym_eigen(x);
  require(spd_check(es), "solve_sylvester_spd: X not SPD");
  const double dsym = (delta - delta.transpose()).norm();
  require(dsym <= 1e-8 * (1.0 + delta.norm()), "solve_sylvester_spd: Delta not symmetric");
  DenseMatrix w = es.vectors.transpose() * sym(delta) * es.vectors;
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      w(i, j) /= es.values(i) + es.values(j);
  return sym(es.vectors * w * es.vectors.transpose());
}

// general (non-symmetric) matrix exponential: scaling-and-squaring with the
// degree-13 Pade approximant
inline DenseMatrix expm(const DenseMatrix& a) {
  require(a.rows() == a.cols(), "expm: matrix must be square");
  require_finite(a, "expm");
  const Eigen::Index n = a.rows();
  static const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                             1187353796428800.0,  129060195264000.0,   10559470521600.0,
                             670442572800.0,      33522128640.0,       1323241920.0,
                             40840800.0,          960960.0,            16380.0,
                             182.0,               1.0};
  const double theta13 = 5.371920351148152;
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (norm1 > theta13) s = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
  DenseMatrix as = a / std::pow(2.0, s);
  DenseMatrix id = DenseMatrix::Identity(n, n);
  DenseMatrix a2 = as * as;
  DenseMatrix a4 = a2 * a2;
  DenseMatrix a6 = a4 * a2;
  DenseMatrix u = as * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) +
                        b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  DenseMatrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) +
                  b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
  DenseMatrix f = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < s; ++k) f = f * f;
  return f;
}

// ---- plain-text matrix format: "rows cols" line, then rows of entries ----

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_matrix(std::ostream& os, const DenseMatrix& a) {
  os << a.rows() << ' ' << a.cols() << '\n';
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (j) os << ' ';
      os << fmt17(a(i, j));
    }
    os << '\n';
  }
}

inline DenseMatrix read_matrix(std::istream& is) {
  long rows = 0, cols = 0;
  if (!(is >> rows >> cols)) throw Error("read_matrix: missing 'rows cols' header");
  if (rows < 1 || cols < 1) throw Error("read_matrix: bad dimensions in header");
  DenseMatrix a(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j)
      if (!(is >> a(i, j))) throw Error("read_matrix: truncated entry list");
  require_finite(a, "read_matrix");
  return a;
}

// ---- seeded sampling helpers ----

inline DenseMatrix gaussian_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> dist(0.0, 1.0);
  DenseMatrix a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = dist(rng);
  return a;
}

inline DenseMatrix random_orthonormal(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  return qr_positive(gaussian_matrix(rng, n, d)).q;
}

inline DenseMatrix random_spd(std::mt19937_64& rng, Eigen::Index n, double cond_log = 1.0) {
  DenseMatrix q = random_orthonormal(rng, n, n);
  std::uniform_real_distribution<double> dist(-cond_log, cond_log);
  Vector lam(n);
  for (Eigen::Index i = 0; i < n; ++i) lam(i) = std::exp(dist(rng));
  return sym(q * lam.asDiagonal() * q.transpose());
}

}  // namespace riemopt
