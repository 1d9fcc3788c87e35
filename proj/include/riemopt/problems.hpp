#pragma once

// Benchmark objectives paired with independently computed reference optima
// where a closed form exists: block Rayleigh quotients, orthogonal
// Procrustes fitting, affine-invariant Karcher means, and the log-det
// barrier objective on the SPD cone.

#include <riemopt/solvers.hpp>

#include <memory>
#include <string>
#include <vector>

namespace riemopt {

struct ProblemInstance {
  std::string name;
  std::string manifold;  // default manifold family binding
  Objective objective;
  int n = 0;
  int d = 0;
  DenseMatrix known_optimum;  // empty when no independent solution is available
  std::string optimum_note;
  std::vector<DenseMatrix> data;
};

// f(X) = -tr(X^T A X) for symmetric A; minimized by the span of the top-d
// eigenvectors with value -(lambda_1 + ... + lambda_d)
inline ProblemInstance make_rayleigh(const DenseMatrix& a, int d) {
  require(a.rows() == a.cols() && a.rows() > 0, "rayleigh: matrix must be square");
  require_finite(a, "rayleigh");
  require((a - a.transpose()).norm() <= 1e-10 * (1.0 + a.norm()),
          "rayleigh: matrix must be symmetric");
  require(d >= 1 && d <= a.rows(), "rayleigh: need 1 <= d <= n");
  auto as = std::make_shared<const DenseMatrix>(sym(a));
  ProblemInstance p;
  p.name = "rayleigh";
  p.manifold = "grassmann";
  p.n = static_cast<int>(a.rows());
  p.d = d;
  p.objective.cost = [as](const DenseMatrix& x) { return -(x.transpose() * *as * x).trace(); };
  p.objective.egrad = [as](const DenseMatrix& x) { return DenseMatrix(-2.0 * (*as * x)); };
  p.objective.ehess_vec = [as](const DenseMatrix&, const DenseMatrix& delta) {
    return DenseMatrix(-2.0 * (*as * delta));
  };
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(*as);
  require(eig.info() == Eigen::Success, "rayleigh: eigendecomposition failed");
  p.known_optimum = eig.eigenvectors().rightCols(d);
  p.optimum_note = "top-" + std::to_string(d) + " eigenvector block";
  p.data = {*as};
  return p;
}

// f(X) = 1/2 |A X - B|_F^2.  For square frames (n == d) the minimizer is
// the orthogonal polar factor of A^T B; thin frames keep no closed form.
inline ProblemInstance make_procrustes(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.rows() == b.rows() && a.rows() > 0, "procrustes: A and B need equal row counts");
  require(b.cols() >= 1 && b.cols() <= a.cols(), "procrustes: need 1 <= d <= n");
  require_finite(a, "procrustes");
  require_finite(b, "procrustes");
  auto pa = std::make_shared<const DenseMatrix>(a);
  auto pb = std::make_shared<const DenseMatrix>(b);
  ProblemInstance p;
  p.name = "procrustes";
  p.manifold = "stiefel";
  p.n = static_cast<int>(a.cols());
  p.d = static_cast<int>(b.cols());
  p.objective.cost = [pa, pb](const DenseMatrix& x) {
    return 0.5 * (*pa * x - *pb).squaredNorm();
  };
  p.objective.egrad = [pa, pb](const DenseMatrix& x) {
    return DenseMatrix(pa->transpose() * (*pa * x - *pb));
  };
  p.objective.ehess_vec = [pa](const DenseMatrix&, const DenseMatrix& delta) {
    return DenseMatrix(pa->transpose() * (*pa * delta));
  };
  if (p.n == p.d) {
    Eigen::JacobiSVD<DenseMatrix> svd(pa->transpose() * *pb,
                                      Eigen::ComputeThinU | Eigen::ComputeThinV);
    p.known_optimum = svd.matrixU() * svd.matrixV().transpose();
    p.optimum_note = "orthogonal polar factor of A^T B";
  }
  p.data = {a, b};
  return p;
}

// f(X) = 1/2 sum_i dist_AI(X, A_i)^2 on the SPD cone.  The gradient is
// supplied directly in Riemannian form, -sum_i Log_X(A_i); batch_egrad
// returns the unscaled partial sum over the requested indices, and egrad
// delegates to it over the full natural-order index list.
inline ProblemInstance make_karcher_mean(const std::vector<DenseMatrix>& samples) {
  require(!samples.empty(), "karcher mean: need at least one sample");
  const int n = static_cast<int>(samples.front().rows());
  auto pts = std::make_shared<std::vector<SpdPoint>>();
  pts->reserve(samples.size());
  for (const DenseMatrix& s : samples) {
    require(s.rows() == n && s.cols() == n, "karcher mean: sample size mismatch");
    pts->emplace_back(s);
  }
  ProblemInstance p;
  p.name = "karcher";
  p.manifold = "spd";
  p.n = n;
  p.d = n;
  p.objective.cost = [pts](const DenseMatrix& x) {
    SpdPoint at(x);
    double acc = 0.0;
    for (const SpdPoint& s : *pts) {
      SpdTangent log_xs = spd_log_ai(at, s);
      acc += 0.5 * spd_inner(at, log_xs, log_xs, SpdMetricKind::AffineInvariant);
    }
    return acc;
  };
  p.objective.batch_egrad = [pts](const DenseMatrix& x, const std::vector<int>& idx) {
    SpdPoint at(x);
    DenseMatrix acc = DenseMatrix::Zero(at.n(), at.n());
    for (int i : idx) {
      require(i >= 0 && i < static_cast<int>(pts->size()), "karcher mean: batch index range");
      acc -= spd_log_ai(at, (*pts)[static_cast<std::size_t>(i)]).delta;
    }
    return acc;
  };
  {
    std::vector<int> all(samples.size());
    std::iota(all.begin(), all.end(), 0);
    auto batch = p.objective.batch_egrad;
    p.objective.egrad = [batch, all](const DenseMatrix& x) { return batch(x, all); };
  }
  p.objective.batch_count = static_cast<int>(samples.size());
  p.objective.grad_is_riemannian = true;
  if (samples.size() == 1) {
    p.known_optimum = samples.front();
    p.optimum_note = "single sample is its own mean";
  } else if (samples.size() == 2) {
    const SpdPoint& a = (*pts)[0];
    p.known_optimum =
        sym(a.sqrt_x * sym_sqrt(sym(a.inv_sqrt_x * (*pts)[1].x * a.inv_sqrt_x)) * a.sqrt_x);
    p.optimum_note = "affine-invariant geodesic midpoint";
  }
  p.data = samples;
  return p;
}

// f(X) = tr(X^{-1} A) + log det X for SPD data A; the unique stationary
// point (and geodesically convex minimum) is X = A
inline ProblemInstance make_logdet(const DenseMatrix& a) {
  SpdPoint check(a);
  auto pa = std::make_shared<const DenseMatrix>(check.x);
  ProblemInstance p;
  p.name = "logdet";
  p.manifold = "spd";
  p.n = static_cast<int>(a.rows());
  p.d = p.n;
  p.objective.cost = [pa](const DenseMatrix& x) {
    Eigen::LLT<DenseMatrix> llt(sym(x));
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const double logdet = 2.0 * DenseMatrix(llt.matrixL()).diagonal().array().log().sum();
    return llt.solve(*pa).trace() + logdet;
  };
  p.objective.egrad = [pa](const DenseMatrix& x) {
    SpdPoint at(x);
    return DenseMatrix(sym(-at.inv_x * *pa * at.inv_x + at.inv_x));
  };
  p.objective.ehess_vec = [pa](const DenseMatrix& x, const DenseMatrix& delta) {
    SpdPoint at(x);
    DenseMatrix xdx = at.inv_x * delta * at.inv_x;
    return DenseMatrix(sym(xdx * *pa * at.inv_x + at.inv_x * *pa * xdx - xdx));
  };
  p.known_optimum = check.x;
  p.optimum_note = "stationary point X = A";
  p.data = {check.x};
  return p;
}

// Seeded generators used by the command-line benchmarks; fixed seeds give
// reproducible instances.

inline ProblemInstance make_rayleigh_instance(int n, int d, std::uint64_t seed) {
  require(n >= 1 && d >= 1 && d <= n, "rayleigh instance: need 1 <= d <= n");
  std::mt19937_64 rng(seed);
  DenseMatrix q = random_orthonormal(rng, n, n);
  Vector lam(n);
  for (int i = 0; i < n; ++i) lam(i) = static_cast<double>(n - i);  // unit eigengap
  return make_rayleigh(sym(q * lam.asDiagonal() * q.transpose()), d);
}

inline ProblemInstance make_procrustes_instance(int rows, int n, int d, std::uint64_t seed) {
  require(rows >= n && n >= d && d >= 1, "procrustes instance: need rows >= n >= d >= 1");
  std::mt19937_64 rng(seed);
  DenseMatrix a = gaussian_matrix(rng, rows, n);
  DenseMatrix target = random_orthonormal(rng, n, d);
  ProblemInstance p = make_procrustes(a, a * target);
  p.known_optimum = target;
  p.optimum_note = "constructed target with zero residual";
  return p;
}

inline ProblemInstance make_karcher_instance(int n, int count, std::uint64_t seed,
                                             double spread = 1.0) {
  require(n >= 1 && count >= 1, "karcher instance: need n >= 1 and count >= 1");
  require(spread > 0.0, "karcher instance: spread must be > 0");
  std::mt19937_64 rng(seed);
  std::vector<DenseMatrix> samples;
  samples.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) samples.push_back(random_spd(rng, n, spread));
  return make_karcher_mean(samples);
}

inline ProblemInstance make_logdet_instance(int n, std::uint64_t seed) {
  require(n >= 1, "logdet instance: need n >= 1");
  std::mt19937_64 rng(seed);
  return make_logdet(random_spd(rng, n));
}

}  // namespace riemopt
