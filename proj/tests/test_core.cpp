#include <riemopt/core.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

using namespace riemopt;

namespace {

// independent exponential oracle: Taylor series after heavy scaling, then
// repeated squaring; deliberately a different algorithm from expm's Pade path
DenseMatrix expm_series_oracle(const DenseMatrix& a) {
  // scale only as much as the norm requires: every squaring costs accuracy
  int scale_pow = 0;
  double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  if (norm1 > 0.25) scale_pow = static_cast<int>(std::ceil(std::log2(norm1 / 0.25)));
  DenseMatrix as = a / std::pow(2.0, scale_pow);
  DenseMatrix term = DenseMatrix::Identity(a.rows(), a.cols());
  DenseMatrix sum = term;
  for (int k = 1; k <= 30; ++k) {
    term = term * as / double(k);
    sum += term;
  }
  for (int k = 0; k < scale_pow; ++k) sum = sum * sum;
  return sum;
}

}  // namespace

TEST_CASE("sym and skew basics", "[core]") {
  DenseMatrix id = DenseMatrix::Identity(3, 3);
  REQUIRE((sym(id) - id).norm() == 0.0);

  DenseMatrix a(2, 2);
  a << 0, 1, 0, 0;
  DenseMatrix expect(2, 2);
  expect << 0, 0.5, 0.5, 0;
  REQUIRE((sym(a) - expect).norm() == 0.0);

  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    DenseMatrix m = gaussian_matrix(rng, 4, 4);
    DenseMatrix sk = skew(m);
    REQUIRE((sk.transpose() + sk).norm() <= 1e-14 * (1.0 + m.norm()));
    REQUIRE((sym(m) + sk - m).norm() <= 1e-14 * (1.0 + m.norm()));
    REQUIRE((sym(sym(m)) - sym(m)).norm() <= 1e-15 * (1.0 + m.norm()));
  }

  DenseMatrix rect(2, 3);
  REQUIRE_THROWS_AS(sym(rect), Error);
}

TEST_CASE("qr_positive convention and reconstruction", "[core]") {
  DenseMatrix id = DenseMatrix::Identity(3, 3);
  auto [q0, r0] = qr_positive(id);
  REQUIRE((q0 - id).norm() <= 1e-14);
  REQUIRE((r0 - id).norm() <= 1e-14);

  auto [q1, r1] = qr_positive(2.0 * id);
  REQUIRE((q1 - id).norm() <= 1e-14);
  REQUIRE((r1 - 2.0 * id).norm() <= 1e-14);

  std::mt19937_64 rng(42);
  DenseMatrix a = gaussian_matrix(rng, 6, 3);
  auto [q, r] = qr_positive(a);
  REQUIRE((q * r - a).norm() <= 1e-13 * a.norm());
  REQUIRE((q.transpose() * q - DenseMatrix::Identity(3, 3)).norm() <= 1e-13);
  for (int i = 0; i < 3; ++i) REQUIRE(r(i, i) > 0.0);
  for (int i = 1; i < 3; ++i)
    for (int j = 0; j < i; ++j) REQUIRE(r(i, j) == 0.0);

  // deterministic: identical input, identical factors
  auto [q2, r2] = qr_positive(a);
  REQUIRE((q - q2).norm() == 0.0);
  REQUIRE((r - r2).norm() == 0.0);

  DenseMatrix rank1(4, 2);
  rank1.col(0) = Vector::Ones(4);
  rank1.col(1) = 2.0 * Vector::Ones(4);
  REQUIRE_THROWS_AS(qr_positive(rank1), Error);
}

TEST_CASE("compact_svd reconstruction", "[core]") {
  CompactSvd z = compact_svd(DenseMatrix::Zero(4, 2));
  REQUIRE(z.sigma.norm() == 0.0);

  CompactSvd si = compact_svd(DenseMatrix::Identity(3, 3));
  REQUIRE((si.sigma - Vector::Ones(3)).norm() <= 1e-14);

  std::mt19937_64 rng(7);
  DenseMatrix a = gaussian_matrix(rng, 5, 2);
  CompactSvd s = compact_svd(a);
  REQUIRE((s.u * s.sigma.asDiagonal() * s.v.transpose() - a).norm() <= 1e-12 * a.norm());
  REQUIRE((s.u.transpose() * s.u - DenseMatrix::Identity(2, 2)).norm() <= 1e-13);
  REQUIRE((s.v.transpose() * s.v - DenseMatrix::Identity(2, 2)).norm() <= 1e-13);
  REQUIRE(s.sigma(0) >= s.sigma(1));
  REQUIRE(s.sigma(1) >= 0.0);
}

TEST_CASE("sym_func exp/log/sqrt round-trips", "[core]") {
  REQUIRE((sym_exp(DenseMatrix::Zero(3, 3)) - DenseMatrix::Identity(3, 3)).norm() <= 1e-15);

  std::mt19937_64 rng(11);
  DenseMatrix s = sym(gaussian_matrix(rng, 4, 4));
  REQUIRE((sym_log(sym_exp(s)) - s).norm() <= 1e-9 * (1.0 + s.norm()));

  DenseMatrix x = random_spd(rng, 4);
  DenseMatrix rt = sym_sqrt(x);
  REQUIRE((rt * rt - x).norm() <= 1e-10 * (1.0 + x.norm()));
  REQUIRE((sym_inv_sqrt(x) * rt - DenseMatrix::Identity(4, 4)).norm() <= 1e-10);

  // exp of symmetric is SPD
  SymEigen es = sym_eigen(sym_exp(s));
  REQUIRE(es.values(0) > 0.0);

  DenseMatrix indef = DenseMatrix::Identity(3, 3);
  indef(2, 2) = -1.0;
  REQUIRE_THROWS_AS(sym_log(indef), Error);
  REQUIRE_THROWS_AS(sym_sqrt(indef), Error);
}

TEST_CASE("solve_sylvester_spd closed form", "[core]") {
  std::mt19937_64 rng(3);
  DenseMatrix d = sym(gaussian_matrix(rng, 4, 4));
  DenseMatrix a = solve_sylvester_spd(DenseMatrix::Identity(4, 4), d);
  REQUIRE((a - 0.5 * d).norm() <= 1e-13 * (1.0 + d.norm()));

  DenseMatrix x = random_spd(rng, 5);
  REQUIRE(solve_sylvester_spd(x, DenseMatrix::Zero(5, 5)).norm() == 0.0);

  DenseMatrix dd = sym(gaussian_matrix(rng, 5, 5));
  DenseMatrix aa = solve_sylvester_spd(x, dd);
  REQUIRE((x * aa + aa * x - dd).norm() <= 1e-10 * (1.0 + dd.norm()));
  REQUIRE((aa - aa.transpose()).norm() <= 1e-14 * (1.0 + aa.norm()));

  // linearity in Delta
  DenseMatrix d1 = sym(gaussian_matrix(rng, 5, 5));
  DenseMatrix d2 = sym(gaussian_matrix(rng, 5, 5));
  DenseMatrix lhs = solve_sylvester_spd(x, 2.0 * d1 - 3.0 * d2);
  DenseMatrix rhs = 2.0 * solve_sylvester_spd(x, d1) - 3.0 * solve_sylvester_spd(x, d2);
  REQUIRE((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));

  DenseMatrix notspd = DenseMatrix::Identity(4, 4);
  notspd(0, 0) = -1.0;
  REQUIRE_THROWS_AS(solve_sylvester_spd(notspd, DenseMatrix::Zero(4, 4)), Error);
}

TEST_CASE("expm against closed forms and series oracle", "[core]") {
  REQUIRE((expm(DenseMatrix::Zero(4, 4)) - DenseMatrix::Identity(4, 4)).norm() <= 1e-15);

  Vector diag(3);
  diag << -1.0, 0.5, 2.0;
  DenseMatrix ed = expm(DenseMatrix(diag.asDiagonal()));
  for (int i = 0; i < 3; ++i) REQUIRE(ed(i, i) == Catch::Approx(std::exp(diag(i))).epsilon(1e-14));

  // planar rotation generator
  double th = 0.7;
  DenseMatrix g(2, 2);
  g << 0, -th, th, 0;
  DenseMatrix rot = expm(g);
  REQUIRE(rot(0, 0) == Catch::Approx(std::cos(th)).margin(1e-14));
  REQUIRE(rot(1, 0) == Catch::Approx(std::sin(th)).margin(1e-14));

  DenseMatrix nil(2, 2);
  nil << 0, 1, 0, 0;
  REQUIRE((expm(nil) - (DenseMatrix::Identity(2, 2) + nil)).norm() <= 1e-15);

  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 5; ++trial) {
    DenseMatrix a = gaussian_matrix(rng, 6, 6);
    DenseMatrix e1 = expm(a);
    DenseMatrix e2 = expm_series_oracle(a);
    REQUIRE((e1 - e2).norm() <= 1e-11 * (1.0 + e2.norm()));
  }

  DenseMatrix s = sym(gaussian_matrix(rng, 5, 5));
  REQUIRE((expm(s) - sym_exp(s)).norm() <= 1e-12 * (1.0 + sym_exp(s).norm()));
}

TEST_CASE("matrix text format round-trips at full precision", "[core]") {
  std::mt19937_64 rng(23);
  DenseMatrix a = gaussian_matrix(rng, 4, 3);
  a(0, 0) = 1.0 / 3.0;
  a(1, 2) = -1e-17;
  std::ostringstream os;
  write_matrix(os, a);
  std::istringstream is(os.str());
  DenseMatrix b = read_matrix(is);
  REQUIRE(b.rows() == a.rows());
  REQUIRE(b.cols() == a.cols());
  REQUIRE((a - b).norm() == 0.0);  // %.17g round-trips doubles exactly

  std::istringstream bad1("junk");
  REQUIRE_THROWS_AS(read_matrix(bad1), Error);
  std::istringstream bad2("2 2\n1 2 3");
  REQUIRE_THROWS_AS(read_matrix(bad2), Error);
}
