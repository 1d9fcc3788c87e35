#pragma once

// Uniform geometry contract consumed by the solvers and diagnostics: every
// adapter exposes point validation, tangent projection, a metric, gradient
// (and optional Hessian) conversion, exp plus a retraction, and a vector
// transport, all over plain DenseMatrix carriers.  Chart points are n-by-1.

#include <riemopt/geodesic.hpp>
#include <riemopt/grassmann.hpp>
#include <riemopt/spd.hpp>
#include <riemopt/stiefel.hpp>

#include <concepts>
#include <random>
#include <string>
#include <vector>

namespace riemopt {

template <class M>
concept ManifoldGeometry = requires(const M& m, const DenseMatrix& x, const DenseMatrix& a,
                                    const DenseMatrix& b, std::mt19937_64& rng) {
  { m.name() } -> std::convertible_to<std::string>;
  { m.dim() } -> std::convertible_to<int>;
  m.validate_point(x);
  { m.project(x, a) } -> std::convertible_to<DenseMatrix>;
  { m.inner(x, a, b) } -> std::convertible_to<double>;
  { m.tangency_error(x, a) } -> std::convertible_to<double>;
  { m.egrad_to_rgrad(x, a) } -> std::convertible_to<DenseMatrix>;
  { m.exp(x, a) } -> std::convertible_to<DenseMatrix>;
  { m.retract(x, a) } -> std::convertible_to<DenseMatrix>;
  { m.transport(x, a, b) } -> std::convertible_to<DenseMatrix>;
  { m.expected_exp_agreement_order() } -> std::convertible_to<double>;
  { m.random_point(rng) } -> std::convertible_to<DenseMatrix>;
  { m.random_tangent(rng, x) } -> std::convertible_to<DenseMatrix>;
};

struct StiefelManifold {
  int n = 0;
  int d = 0;
  StiefelMetricKind metric = StiefelMetricKind::euclidean();
  StRetraction retraction = StRetraction::QR;
  StTransport transport_kind = StTransport::DiffQR;

  std::string name() const {
    return "stiefel(" + std::to_string(n) + "," + std::to_string(d) + ")";
  }
  int dim() const { return st_dim(n, d); }
  // empty strings keep the current kinds; the canonical and alpha metric
  // families are evaluation-only (the gradient conversion is defined for the
  // euclidean metric), so they are rejected here
  void set_kinds(const std::string& retraction_name, const std::string& transport_name,
                 const std::string& metric_name) {
    if (retraction_name == "qr")
      retraction = StRetraction::QR;
    else if (retraction_name == "polar")
      retraction = StRetraction::Polar;
    else
      require(retraction_name.empty(), "stiefel adapter: unknown retraction '" + retraction_name +
                                           "' (expected qr or polar)");
    if (transport_name == "projection")
      transport_kind = StTransport::Projection;
    else if (transport_name == "diff-qr")
      transport_kind = StTransport::DiffQR;
    else if (transport_name == "diff-polar")
      transport_kind = StTransport::DiffPolar;
    else
      require(transport_name.empty(), "stiefel adapter: unknown transport '" + transport_name +
                                          "' (expected projection, diff-qr, or diff-polar)");
    require(metric_name.empty() || metric_name == "euclidean",
            "stiefel adapter: solver metric must be euclidean (got '" + metric_name + "')");
  }
  void validate_point(const DenseMatrix& x) const {
    require(x.rows() == n && x.cols() == d, "stiefel adapter: point has wrong shape");
    st_validate_point(x);
  }
  DenseMatrix project(const DenseMatrix& x, const DenseMatrix& z) const {
    return st_project_tangent(StiefelPoint(x), z).delta;
  }
  double inner(const DenseMatrix& x, const DenseMatrix& a, const DenseMatrix& b) const {
    StiefelPoint p(x);
    return st_inner(p, StiefelTangent(p, a), StiefelTangent(p, b), metric);
  }
  double tangency_error(const DenseMatrix& x, const DenseMatrix& a) const {
    return sym(x.transpose() * a).norm();
  }
  DenseMatrix egrad_to_rgrad(const DenseMatrix& x, const DenseMatrix& g) const {
    return st_egrad_to_rgrad(StiefelPoint(x), g).delta;
  }
  DenseMatrix ehess_to_rhess(const DenseMatrix& x, const DenseMatrix& g, const DenseMatrix& hd,
                             const DenseMatrix& delta) const {
    StiefelPoint p(x);
    return st_ehess_to_rhess(p, g, hd, StiefelTangent(p, delta)).delta;
  }
  DenseMatrix exp(const DenseMatrix& x, const DenseMatrix& delta) const {
    StiefelPoint p(x);
    return st_exp(p, StiefelTangent(p, delta)).x;
  }
  DenseMatrix retract(const DenseMatrix& x, const DenseMatrix& delta) const {
    StiefelPoint p(x);
    return st_retract(p, StiefelTangent(p, delta), retraction).x;
  }
  DenseMatrix transport(const DenseMatrix& x, const DenseMatrix& dir,
                        const DenseMatrix& xi) const {
    StiefelPoint p(x);
    return st_transport(p, StiefelTangent(p, dir), StiefelTangent(p, xi), transport_kind).delta;
  }
  double expected_exp_agreement_order() const { return 1.9; }
  DenseMatrix random_point(std::mt19937_64& rng) const { return random_orthonormal(rng, n, d); }
  DenseMatrix random_tangent(std::mt19937_64& rng, const DenseMatrix& x) const {
    return project(x, gaussian_matrix(rng, n, d));
  }
};

struct GrassmannManifold {
  int n = 0;
  int d = 0;
  GrRetraction retraction = GrRetraction::QR;
  GrTransport transport_kind = GrTransport::Projection;

  std::string name() const {
    return "grassmann(" + std::to_string(n) + "," + std::to_string(d) + ")";
  }
  int dim() const { return gr_dim(n, d); }
  void set_kinds(const std::string& retraction_name, const std::string& transport_name,
                 const std::string& metric_name) {
    if (retraction_name == "qr")
      retraction = GrRetraction::QR;
    else if (retraction_name == "polar")
      retraction = GrRetraction::Polar;
    else
      require(retraction_name.empty(), "grassmann adapter: unknown retraction '" +
                                           retraction_name + "' (expected qr or polar)");
    if (transport_name == "projection")
      transport_kind = GrTransport::Projection;
    else if (transport_name == "diff-qr")
      transport_kind = GrTransport::DiffQR;
    else if (transport_name == "diff-polar")
      transport_kind = GrTransport::DiffPolar;
    else
      require(transport_name.empty(), "grassmann adapter: unknown transport '" + transport_name +
                                          "' (expected projection, diff-qr, or diff-polar)");
    require(metric_name.empty() || metric_name == "euclidean",
            "grassmann adapter: the quotient metric is fixed (got '" + metric_name + "')");
  }
  void validate_point(const DenseMatrix& x) const {
    require(x.rows() == n && x.cols() == d, "grassmann adapter: point has wrong shape");
    st_validate_point(x);
  }
  DenseMatrix project(const DenseMatrix& x, const DenseMatrix& z) const {
    return gr_project_tangent(GrassmannPoint(x), z).delta;
  }
  double inner(const DenseMatrix& x, const DenseMatrix& a, const DenseMatrix& b) const {
    GrassmannPoint p(x);
    return gr_inner(p, GrassmannTangent(p, a), GrassmannTangent(p, b));
  }
  double tangency_error(const DenseMatrix& x, const DenseMatrix& a) const {
    return (x.transpose() * a).norm();
  }
  DenseMatrix egrad_to_rgrad(const DenseMatrix& x, const DenseMatrix& g) const {
    return gr_egrad_to_rgrad(GrassmannPoint(x), g).delta;
  }
  DenseMatrix ehess_to_rhess(const DenseMatrix& x, const DenseMatrix& g, const DenseMatrix& hd,
                             const DenseMatrix& delta) const {
    GrassmannPoint p(x);
    return gr_ehess_to_rhess(p, g, hd, GrassmannTangent(p, delta)).delta;
  }
  DenseMatrix exp(const DenseMatrix& x, const DenseMatrix& delta) const {
    GrassmannPoint p(x);
    return gr_exp(p, GrassmannTangent(p, delta)).x;
  }
  DenseMatrix retract(const DenseMatrix& x, const DenseMatrix& delta) const {
    GrassmannPoint p(x);
    return gr_retract(p, GrassmannTangent(p, delta), retraction).x;
  }
  DenseMatrix transport(const DenseMatrix& x, const DenseMatrix& dir,
                        const DenseMatrix& xi) const {
    GrassmannPoint p(x);
    return gr_transport(p, GrassmannTangent(p, dir), GrassmannTangent(p, xi), transport_kind).delta;
  }
  double expected_exp_agreement_order() const { return 1.9; }
  DenseMatrix random_point(std::mt19937_64& rng) const { return random_orthonormal(rng, n, d); }
  DenseMatrix random_tangent(std::mt19937_64& rng, const DenseMatrix& x) const {
    return project(x, gaussian_matrix(rng, n, d));
  }
};

struct SpdManifold {
  int n = 0;
  SpdGeodesicKind kind = SpdGeodesicKind::AffineInvariant;
  // the affine-invariant second-order retraction is the default step map;
  // switch to the exact exponential with use_exp
  bool use_exp = false;
  SpdTransportKind transport_kind = SpdTransportKind::DiffAI;

  std::string name() const { return "spd(" + std::to_string(n) + ")"; }
  int dim() const { return spd_dim(n); }
  void set_kinds(const std::string& retraction_name, const std::string& transport_name,
                 const std::string& metric_name) {
    if (metric_name == "euclidean")
      kind = SpdGeodesicKind::Euclidean;
    else if (metric_name == "affine-invariant")
      kind = SpdGeodesicKind::AffineInvariant;
    else
      require(metric_name.empty(), "spd adapter: unknown metric '" + metric_name +
                                       "' (expected euclidean or affine-invariant; "
                                       "log-euclidean and bures-wasserstein are evaluation-only)");
    if (retraction_name == "exp")
      use_exp = true;
    else if (retraction_name == "retract")
      use_exp = false;
    else
      require(retraction_name.empty(), "spd adapter: unknown retraction '" + retraction_name +
                                           "' (expected exp or retract)");
    if (transport_name == "euclidean")
      transport_kind = SpdTransportKind::EuclideanIdentity;
    else if (transport_name == "ai-parallel")
      transport_kind = SpdTransportKind::AIParallel;
    else if (transport_name == "diff-euclidean")
      transport_kind = SpdTransportKind::DiffEuclidean;
    else if (transport_name == "diff-ai")
      transport_kind = SpdTransportKind::DiffAI;
    else
      require(transport_name.empty(),
              "spd adapter: unknown transport '" + transport_name +
                  "' (expected euclidean, ai-parallel, diff-euclidean, or diff-ai)");
  }
  SpdMetricKind metric_kind() const {
    return kind == SpdGeodesicKind::Euclidean ? SpdMetricKind::Euclidean
                                              : SpdMetricKind::AffineInvariant;
  }
  void validate_point(const DenseMatrix& x) const {
    require(x.rows() == n && x.cols() == n, "spd adapter: point has wrong shape");
    SpdPoint p(x);
    (void)p;
  }
  DenseMatrix project(const DenseMatrix&, const DenseMatrix& z) const { return sym(z); }
  double inner(const DenseMatrix& x, const DenseMatrix& a, const DenseMatrix& b) const {
    return spd_inner(SpdPoint(x), SpdTangent(a), SpdTangent(b), metric_kind());
  }
  double tangency_error(const DenseMatrix&, const DenseMatrix& a) const {
    return (a - a.transpose()).norm();
  }
  DenseMatrix egrad_to_rgrad(const DenseMatrix& x, const DenseMatrix& g) const {
    return spd_egrad_to_rgrad(SpdPoint(x), g, kind).delta;
  }
  DenseMatrix ehess_to_rhess(const DenseMatrix& x, const DenseMatrix& g, const DenseMatrix& hd,
                             const DenseMatrix& delta) const {
    return spd_ehess_to_rhess(SpdPoint(x), g, hd, SpdTangent(delta), kind).delta;
  }
  DenseMatrix exp(const DenseMatrix& x, const DenseMatrix& delta) const {
    return spd_exp(SpdPoint(x), SpdTangent(delta), kind).x;
  }
  DenseMatrix log(const DenseMatrix& x, const DenseMatrix& y) const {
    if (kind == SpdGeodesicKind::Euclidean) return sym(y) - sym(x);
    return spd_log_ai(SpdPoint(x), SpdPoint(y)).delta;
  }
  DenseMatrix retract(const DenseMatrix& x, const DenseMatrix& delta) const {
    SpdPoint p(x);
    SpdTangent t(delta);
    return use_exp ? spd_exp(p, t, kind).x : spd_retract(p, t, kind).x;
  }
  DenseMatrix transport(const DenseMatrix& x, const DenseMatrix& dir,
                        const DenseMatrix& xi) const {
    return spd_transport(SpdPoint(x), SpdTangent(dir), SpdTangent(xi), transport_kind).delta;
  }
  double expected_exp_agreement_order() const {
    // Euclidean retraction and the exp-backed retraction agree with exp
    // exactly; the AI truncated step is second order
    if (use_exp || kind == SpdGeodesicKind::Euclidean)
      return std::numeric_limits<double>::infinity();
    return 2.9;
  }
  DenseMatrix random_point(std::mt19937_64& rng) const { return random_spd(rng, n); }
  DenseMatrix random_tangent(std::mt19937_64& rng, const DenseMatrix&) const {
    return sym(gaussian_matrix(rng, n, n));
  }
};

enum class ChartRetraction { Additive, SecondOrder, ExpOde };
enum class ChartTransport { Identity, DiffSecondOrder, ParallelOde };

// A coordinate chart as an optimization domain.  Points are dim-by-1
// column matrices; the tangent space at every point is the whole chart.
struct ChartManifold {
  MetricField metric;
  ChartRetraction retraction = ChartRetraction::SecondOrder;
  ChartTransport transport_kind = ChartTransport::DiffSecondOrder;
  Vector sample_lo;  // componentwise box for random_point
  Vector sample_hi;
  double ode_step = 1e-3;

  std::string name() const { return "chart(" + std::to_string(metric.dim) + ")"; }
  int dim() const { return metric.dim; }
  void set_kinds(const std::string& retraction_name, const std::string& transport_name,
                 const std::string& metric_name) {
    if (retraction_name == "additive")
      retraction = ChartRetraction::Additive;
    else if (retraction_name == "second-order")
      retraction = ChartRetraction::SecondOrder;
    else if (retraction_name == "exp-ode")
      retraction = ChartRetraction::ExpOde;
    else
      require(retraction_name.empty(),
              "chart adapter: unknown retraction '" + retraction_name +
                  "' (expected additive, second-order, or exp-ode)");
    if (transport_name == "identity")
      transport_kind = ChartTransport::Identity;
    else if (transport_name == "diff-second-order")
      transport_kind = ChartTransport::DiffSecondOrder;
    else if (transport_name == "parallel-ode")
      transport_kind = ChartTransport::ParallelOde;
    else
      require(transport_name.empty(),
              "chart adapter: unknown transport '" + transport_name +
                  "' (expected identity, diff-second-order, or parallel-ode)");
    require(metric_name.empty(),
            "chart adapter: the metric comes from the chart's metric field");
  }
  void validate_point(const DenseMatrix& x) const {
    require(x.rows() == metric.dim && x.cols() == 1, "chart adapter: point has wrong shape");
    (void)metric_at(metric, x.col(0));
  }
  DenseMatrix project(const DenseMatrix&, const DenseMatrix& z) const { return z; }
  double inner(const DenseMatrix& x, const DenseMatrix& a, const DenseMatrix& b) const {
    return (a.col(0).transpose() * metric_at(metric, x.col(0)) * b.col(0))(0, 0);
  }
  double tangency_error(const DenseMatrix&, const DenseMatrix&) const { return 0.0; }
  DenseMatrix egrad_to_rgrad(const DenseMatrix& x, const DenseMatrix& g) const {
    return riemannian_gradient_coords(metric, x.col(0), g.col(0));
  }
  // rhess(eta)^k = g^{kl} (d2f eta - Gamma-correction)_l with the lower-index
  // covariant Hessian applied to eta; hd must be (d2f)*eta in coordinates
  DenseMatrix ehess_to_rhess(const DenseMatrix& x, const DenseMatrix& g, const DenseMatrix& hd,
                             const DenseMatrix& delta) const {
    ChristoffelAt ch = christoffel(metric, x.col(0));
    Vector corrected = hd.col(0);
    for (int mcomp = 0; mcomp < metric.dim; ++mcomp) {
      double s = 0.0;
      for (int k = 0; k < metric.dim; ++k)
        for (int i = 0; i < metric.dim; ++i)
          s += ch.gamma2(k, mcomp, i) * g(k, 0) * delta(i, 0);
      corrected(mcomp) -= s;
    }
    return metric_inverse(metric, x.col(0)) * corrected;
  }
  DenseMatrix exp(const DenseMatrix& x, const DenseMatrix& delta) const {
    return geodesic_ivp(metric, x.col(0), delta.col(0), 1.0, ode_step).states.back().x;
  }
  DenseMatrix retract(const DenseMatrix& x, const DenseMatrix& delta) const {
    switch (retraction) {
      case ChartRetraction::Additive: {
        Vector y = x.col(0) + delta.col(0);
        (void)metric_at(metric, y);
        return y;
      }
      case ChartRetraction::SecondOrder:
        return exp_power_series(metric, x.col(0), delta.col(0));
      case ChartRetraction::ExpOde:
      default:
        return exp(x, delta);
    }
  }
  DenseMatrix transport(const DenseMatrix& x, const DenseMatrix& dir,
                        const DenseMatrix& xi) const {
    switch (transport_kind) {
      case ChartTransport::Identity:
        return xi;
      case ChartTransport::DiffSecondOrder: {
        // derivative of the second-order retraction: xi^k - Gamma^k_ij dir^i xi^j
        ChristoffelAt ch = christoffel(metric, x.col(0));
        Vector out = xi.col(0);
        for (int k = 0; k < metric.dim; ++k) {
          double s = 0.0;
          for (int i = 0; i < metric.dim; ++i)
            for (int j = 0; j < metric.dim; ++j)
              s += ch.gamma2(k, i, j) * dir(i, 0) * xi(j, 0);
          out(k) -= s;
        }
        return out;
      }
      case ChartTransport::ParallelOde:
      default: {
        GeodesicSolution geo = geodesic_ivp(metric, x.col(0), dir.col(0), 1.0, ode_step);
        return parallel_transport_ode(metric, geo, xi.col(0)).vectors.back();
      }
    }
  }
  double expected_exp_agreement_order() const {
    switch (retraction) {
      case ChartRetraction::Additive:
        return 1.9;
      case ChartRetraction::SecondOrder:
        return 2.9;
      case ChartRetraction::ExpOde:
      default:
        return std::numeric_limits<double>::infinity();
    }
  }
  DenseMatrix random_point(std::mt19937_64& rng) const {
    require(sample_lo.size() == metric.dim && sample_hi.size() == metric.dim,
            "chart adapter: sampling box not configured");
    Vector x(metric.dim);
    for (int i = 0; i < metric.dim; ++i) {
      std::uniform_real_distribution<double> u(sample_lo(i), sample_hi(i));
      x(i) = u(rng);
    }
    return x;
  }
  DenseMatrix random_tangent(std::mt19937_64& rng, const DenseMatrix&) const {
    return gaussian_matrix(rng, metric.dim, 1);
  }
};

static_assert(ManifoldGeometry<StiefelManifold>);
static_assert(ManifoldGeometry<GrassmannManifold>);
static_assert(ManifoldGeometry<SpdManifold>);
static_assert(ManifoldGeometry<ChartManifold>);

// Metric-orthonormal basis of the tangent space at x, built by projecting
// the ambient canonical basis and running modified Gram-Schmidt twice.  The
// quasi-Newton solvers rebuild this at every iterate.
template <ManifoldGeometry M>
std::vector<DenseMatrix> tangent_basis(const M& m, const DenseMatrix& x) {
  std::vector<DenseMatrix> basis;
  const int k = m.dim();
  basis.reserve(k);
  for (int c = 0; c < x.cols() && static_cast<int>(basis.size()) < k; ++c)
    for (int r = 0; r < x.rows() && static_cast<int>(basis.size()) < k; ++r) {
      DenseMatrix e = DenseMatrix::Zero(x.rows(), x.cols());
      e(r, c) = 1.0;
      DenseMatrix v = m.project(x, e);
      for (int pass = 0; pass < 2; ++pass)
        for (const DenseMatrix& b : basis) v -= m.inner(x, b, v) * b;
      const double nrm = std::sqrt(std::max(m.inner(x, v, v), 0.0));
      if (nrm <= 1e-8) continue;
      basis.push_back(v / nrm);
    }
  require(static_cast<int>(basis.size()) == k,
          "tangent_basis: projected ambient basis did not span the tangent space");
  return basis;
}

}  // namespace riemopt
