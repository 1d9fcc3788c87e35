#pragma once

// Finite-difference validation of manifold/objective pairings: directional
// derivative against the claimed gradient, Taylor order of the claimed
// Hessian, retraction axioms, and a conformance suite over the whole
// geometry contract.  Every check is deterministic under its seed.

#include <riemopt/solvers.hpp>

#include <array>
#include <iomanip>
#include <ostream>
#include <vector>

namespace riemopt {

struct CheckReport {
  std::string name;
  int samples = 0;
  double max_error = 0.0;
  double fitted_order = 0.0;  // 0 when not applicable; +inf when all residuals sit at noise
  double threshold = 0.0;
  double min_order = 0.0;  // 0 when no order requirement applies
  bool pass = false;
};

namespace detail {

inline const std::array<double, 7>& check_ladder() {
  static const std::array<double, 7> t = {1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
  return t;
}

// least-squares slope of log(residual) against log(t), ignoring residuals
// below the supplied noise floor; +inf when fewer than two points survive.
// The largest one or two t values may sit outside the asymptotic regime
// (higher-order terms bending the line), so the best fit over the full
// ladder and its two leading truncations is reported.  A genuinely
// low-order residual dominates as t shrinks, so faults still flag.
inline double fit_order(const std::vector<double>& ts, const std::vector<double>& errs,
                        double floor_level) {
  auto fit_from = [&](std::size_t first, int& kept) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    kept = 0;
    for (std::size_t i = first; i < ts.size(); ++i) {
      if (!(errs[i] > floor_level)) continue;
      const double lx = std::log(ts[i]);
      const double ly = std::log(errs[i]);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++kept;
    }
    if (kept < 2) return std::numeric_limits<double>::quiet_NaN();
    return (kept * sxy - sx * sy) / (kept * sxx - sx * sx);
  };
  int kept = 0;
  const double full = fit_from(0, kept);
  if (kept < 2) return std::numeric_limits<double>::infinity();
  double best = full;
  for (std::size_t first = 1; first <= 2 && first < ts.size(); ++first) {
    const double trimmed = fit_from(first, kept);
    if (kept >= 3 && trimmed > best) best = trimmed;
  }
  return best;
}

template <ManifoldGeometry M>
DenseMatrix unit_tangent(const M& m, const DenseMatrix& x, std::mt19937_64& rng) {
  for (int attempt = 0; attempt < 32; ++attempt) {
    DenseMatrix t = m.random_tangent(rng, x);
    const double nrm = std::sqrt(std::max(m.inner(x, t, t), 0.0));
    if (nrm > 1e-8) return DenseMatrix(t / nrm);
  }
  throw Error("diagnostics: could not sample a unit tangent direction");
}

// second-order-accurate point map for Taylor probes: the exact exponential
// where a closed form exists, and the quadratic geodesic correction on
// charts (polynomial, so free of ODE integration noise)
template <ManifoldGeometry M>
DenseMatrix second_order_probe(const M& m, const DenseMatrix& x, const DenseMatrix& delta) {
  if constexpr (std::is_same_v<M, ChartManifold>)
    return exp_power_series(m.metric, x.col(0), delta.col(0));
  else
    return m.exp(x, delta);
}

}  // namespace detail

// Compares the central difference of t |-> f(Ret_X(t delta)) at t = 0 with
// the metric pairing g(rgrad, delta); the relative error is measured against
// the finite-difference value so a gradient scaled by c reports |c - 1|.
template <ManifoldGeometry M>
CheckReport check_gradient(const Objective& obj, const M& m, const DenseMatrix& x, int n_dirs,
                           std::uint64_t seed = 0) {
  require(n_dirs >= 1, "check_gradient: need at least one direction");
  std::mt19937_64 rng(seed);
  const double f0 = obj.cost(x);
  const double h = 1e-5;
  const double floor_level = 1e-8 * (1.0 + std::abs(f0));
  DenseMatrix g = riemannian_gradient(obj, m, x);
  CheckReport rep;
  rep.name = "gradient";
  rep.samples = n_dirs;
  rep.threshold = 1e-6;
  for (int k = 0; k < n_dirs; ++k) {
    DenseMatrix xi = detail::unit_tangent(m, x, rng);
    const double paired = m.inner(x, g, xi);
    const double fd =
        (obj.cost(m.retract(x, h * xi)) - obj.cost(m.retract(x, -h * xi))) / (2.0 * h);
    const double rel = std::abs(paired - fd) / std::max(std::abs(fd), floor_level);
    rep.max_error = std::max(rep.max_error, rel);
  }
  rep.pass = rep.max_error <= rep.threshold;
  return rep;
}

// Two properties of the claimed Hessian: the second-order Taylor residual
// along exact-enough geodesics decays with order >= 2.9 on the t-ladder, and
// the operator is self-adjoint in the active metric within 1e-8 relative.
template <ManifoldGeometry M>
CheckReport check_hessian(const Objective& obj, const M& m, const DenseMatrix& x, int n_dirs,
                          std::uint64_t seed = 0) {
  require(n_dirs >= 1, "check_hessian: need at least one direction");
  require(static_cast<bool>(obj.ehess_vec), "check_hessian: objective provides no ehess_vec");
  std::mt19937_64 rng(seed);
  const double f0 = obj.cost(x);
  const double noise = 100.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f0));
  DenseMatrix eg = obj.egrad(x);
  DenseMatrix g = obj.grad_is_riemannian ? m.project(x, eg) : m.egrad_to_rgrad(x, eg);
  auto rhess = [&](const DenseMatrix& v) {
    return m.ehess_to_rhess(x, eg, obj.ehess_vec(x, v), v);
  };
  CheckReport rep;
  rep.name = "hessian";
  rep.samples = n_dirs;
  rep.threshold = 1e-8;
  rep.min_order = 2.9;
  rep.fitted_order = std::numeric_limits<double>::infinity();
  const auto& ladder = detail::check_ladder();
  for (int k = 0; k < n_dirs; ++k) {
    DenseMatrix xi = detail::unit_tangent(m, x, rng);
    DenseMatrix eta = detail::unit_tangent(m, x, rng);
    DenseMatrix hxi = rhess(xi);
    DenseMatrix heta = rhess(eta);
    const double cross_a = m.inner(x, hxi, eta);
    const double cross_b = m.inner(x, xi, heta);
    const double sa = std::abs(cross_a - cross_b) /
                      (1.0 + std::max(std::abs(cross_a), std::abs(cross_b)));
    rep.max_error = std::max(rep.max_error, sa);

    const double slope1 = m.inner(x, g, xi);
    const double curv = m.inner(x, hxi, xi);
    std::vector<double> ts(ladder.begin(), ladder.end());
    std::vector<double> errs;
    errs.reserve(ts.size());
    for (double t : ts) {
      const double ft = obj.cost(detail::second_order_probe(m, x, DenseMatrix(t * xi)));
      errs.push_back(std::abs(ft - f0 - t * slope1 - 0.5 * t * t * curv));
    }
    rep.fitted_order = std::min(rep.fitted_order, detail::fit_order(ts, errs, noise));
  }
  rep.pass = rep.max_error <= rep.threshold && rep.fitted_order >= rep.min_order;
  return rep;
}

// Retraction axioms: Ret_X(0) returns X, the curve matches X + t delta to
// second order (local rigidity), and every output lands on the manifold.
template <ManifoldGeometry M>
CheckReport check_retraction(const M& m, const DenseMatrix& x, int n_dirs,
                             std::uint64_t seed = 0) {
  require(n_dirs >= 1, "check_retraction: need at least one direction");
  std::mt19937_64 rng(seed);
  CheckReport rep;
  rep.name = "retraction";
  rep.samples = n_dirs;
  rep.threshold = 1e-12;
  rep.min_order = 1.9;
  rep.fitted_order = std::numeric_limits<double>::infinity();
  const double scale = 1.0 + x.norm();
  const double noise = 100.0 * std::numeric_limits<double>::epsilon() * scale;
  rep.max_error = (m.retract(x, DenseMatrix::Zero(x.rows(), x.cols())) - x).norm() / scale;
  const auto& ladder = detail::check_ladder();
  bool valid = true;
  for (int k = 0; k < n_dirs; ++k) {
    DenseMatrix xi = detail::unit_tangent(m, x, rng);
    std::vector<double> ts(ladder.begin(), ladder.end());
    std::vector<double> errs;
    errs.reserve(ts.size());
    for (double t : ts) {
      DenseMatrix y = m.retract(x, DenseMatrix(t * xi));
      try {
        m.validate_point(y);
      } catch (const Error&) {
        valid = false;
      }
      errs.push_back((y - x - t * xi).norm());
    }
    rep.fitted_order = std::min(rep.fitted_order, detail::fit_order(ts, errs, noise));
  }
  rep.pass = valid && rep.max_error <= rep.threshold && rep.fitted_order >= rep.min_order;
  if (!valid) rep.max_error = std::numeric_limits<double>::infinity();
  return rep;
}

// Conformance suite over the full geometry contract.  Where the adapter has
// a logarithm the exp/log round-trip is included; the exp-vs-retraction
// order requirement comes from the adapter's declared agreement order.
template <ManifoldGeometry M>
std::vector<CheckReport> check_manifold_suite(const M& m, std::uint64_t seed, int samples = 100) {
  require(samples >= 1, "check_manifold_suite: need at least one sample");
  std::mt19937_64 rng(seed);
  std::vector<CheckReport> out;

  CheckReport projection;
  projection.name = "projection";
  projection.samples = samples;
  projection.threshold = 1e-10;
  CheckReport metric;
  metric.name = "metric";
  metric.samples = samples;
  metric.threshold = 1e-10;
  CheckReport transport;
  transport.name = "transport";
  transport.samples = samples;
  transport.threshold = 1e-9;
  for (int k = 0; k < samples; ++k) {
    DenseMatrix x = m.random_point(rng);
    DenseMatrix z = gaussian_matrix(rng, x.rows(), x.cols());
    DenseMatrix p = m.project(x, z);
    const double scale_p = 1.0 + p.norm();
    projection.max_error = std::max(projection.max_error,
                                    (m.project(x, p) - p).norm() / scale_p);
    projection.max_error = std::max(projection.max_error, m.tangency_error(x, p) / scale_p);

    DenseMatrix a = m.random_tangent(rng, x);
    DenseMatrix b = m.random_tangent(rng, x);
    const double ab = m.inner(x, a, b);
    metric.max_error = std::max(metric.max_error,
                                std::abs(ab - m.inner(x, b, a)) / (1.0 + std::abs(ab)));
    const double aa = m.inner(x, a, a);
    if (a.norm() > 1e-10 && !(aa > 0.0))
      metric.max_error = std::numeric_limits<double>::infinity();

    DenseMatrix dir = m.random_tangent(rng, x);
    DenseMatrix lin = m.transport(x, dir, DenseMatrix(a + 2.0 * b)) -
                      m.transport(x, dir, a) - 2.0 * m.transport(x, dir, b);
    transport.max_error = std::max(transport.max_error, lin.norm() / (1.0 + a.norm() + b.norm()));
    DenseMatrix zero_dir = DenseMatrix::Zero(x.rows(), x.cols());
    transport.max_error = std::max(transport.max_error,
                                   (m.transport(x, zero_dir, a) - a).norm() / (1.0 + a.norm()));
    DenseMatrix y = m.retract(x, dir);
    DenseMatrix ta = m.transport(x, dir, a);
    transport.max_error = std::max(transport.max_error,
                                   m.tangency_error(y, ta) / (1.0 + ta.norm()));
  }
  projection.pass = projection.max_error <= projection.threshold;
  metric.pass = metric.max_error <= metric.threshold;
  transport.pass = transport.max_error <= transport.threshold;
  out.push_back(projection);
  out.push_back(metric);
  out.push_back(transport);

  CheckReport agreement;
  agreement.name = "exp-vs-retraction";
  agreement.samples = samples;
  agreement.min_order = m.expected_exp_agreement_order();
  agreement.fitted_order = std::numeric_limits<double>::infinity();
  const auto& ladder = detail::check_ladder();
  for (int k = 0; k < samples; ++k) {
    DenseMatrix x = m.random_point(rng);
    DenseMatrix xi = detail::unit_tangent(m, x, rng);
    // wider floor than the taylor checks: an ODE-backed exponential carries
    // summation roundoff across its integration steps, not just 100 eps
    const double noise = 1e-12 * (1.0 + x.norm());
    std::vector<double> ts(ladder.begin(), ladder.end());
    std::vector<double> errs;
    errs.reserve(ts.size());
    for (double t : ts)
      errs.push_back((m.exp(x, DenseMatrix(t * xi)) - m.retract(x, DenseMatrix(t * xi))).norm());
    agreement.fitted_order = std::min(agreement.fitted_order, detail::fit_order(ts, errs, noise));
  }
  agreement.pass = agreement.fitted_order >= agreement.min_order;
  out.push_back(agreement);

  if constexpr (requires(const M& mm, const DenseMatrix& u, const DenseMatrix& v) {
                  mm.log(u, v);
                }) {
    CheckReport round_trip;
    round_trip.name = "exp-log round-trip";
    round_trip.samples = samples;
    round_trip.threshold = 1e-9;
    for (int k = 0; k < samples; ++k) {
      DenseMatrix x = m.random_point(rng);
      DenseMatrix y = m.random_point(rng);
      DenseMatrix back = m.exp(x, m.log(x, y));
      round_trip.max_error = std::max(round_trip.max_error,
                                      (back - y).norm() / (1.0 + y.norm()));
    }
    round_trip.pass = round_trip.max_error <= round_trip.threshold;
    out.push_back(round_trip);
  }
  return out;
}

inline bool all_pass(const std::vector<CheckReport>& reports) {
  for (const CheckReport& r : reports)
    if (!r.pass) return false;
  return true;
}

inline void render_reports_table(std::ostream& os, const std::vector<CheckReport>& reports) {
  os << std::left << std::setw(22) << "check" << std::right << std::setw(9) << "samples"
     << std::setw(14) << "max_error" << std::setw(14) << "order" << std::setw(12) << "threshold"
     << std::setw(11) << "min_order" << std::setw(8) << "status" << '\n';
  os << std::string(90, '-') << '\n';
  for (const CheckReport& r : reports) {
    os << std::left << std::setw(22) << r.name << std::right << std::setw(9) << r.samples
       << std::setw(14) << std::scientific << std::setprecision(3) << r.max_error;
    os << std::setw(14);
    if (r.min_order > 0.0)
      os << std::fixed << std::setprecision(3) << r.fitted_order;
    else
      os << "-";
    os << std::setw(12) << std::scientific << std::setprecision(1) << r.threshold;
    os << std::setw(11);
    if (r.min_order > 0.0)
      os << std::fixed << std::setprecision(2) << r.min_order;
    else
      os << "-";
    os << std::setw(8) << (r.pass ? "pass" : "FAIL") << '\n';
  }
  os.unsetf(std::ios::floatfield);
  os << std::setprecision(6);
}

inline void render_reports_csv(std::ostream& os, const std::vector<CheckReport>& reports) {
  os << "check,samples,max_error,fitted_order,threshold,min_order,pass\n";
  for (const CheckReport& r : reports)
    os << r.name << ',' << r.samples << ',' << fmt17(r.max_error) << ',' << fmt17(r.fitted_order)
       << ',' << fmt17(r.threshold) << ',' << fmt17(r.min_order) << ','
       << (r.pass ? "true" : "false") << '\n';
}

}  // namespace riemopt
