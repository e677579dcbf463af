#include <catch2/catch_amalgamated.hpp>

#include <Eigen/SVD>

#include "bfly/linalg.hpp"

using namespace bfly;
using Catch::Approx;

namespace {

using cplx = std::complex<double>;

template <typename Scalar>
Matrix<Scalar> exact_rank_matrix(Index m, Index n, Index r, std::uint64_t seed) {
  Matrix<Scalar> left = gaussian_matrix<Scalar>(m, r, seed);
  Matrix<Scalar> right = gaussian_matrix<Scalar>(r, n, seed + 1);
  Eigen::HouseholderQR<Matrix<Scalar>> qr(left);
  Matrix<Scalar> q = qr.householderQ() * Matrix<Scalar>::Identity(m, r);
  return q * right;
}

template <typename Scalar>
MatrixProduct<Scalar> multiplier(const Matrix<Scalar>& a) {
  return [a](const Matrix<Scalar>& x) { return Matrix<Scalar>(a * x); };
}

}  // namespace

TEST_CASE("gaussian_matrix is deterministic and seed-sensitive") {
  auto a = gaussian_matrix<double>(3, 2, 7);
  auto b = gaussian_matrix<double>(3, 2, 7);
  REQUIRE(a == b);

  auto c = gaussian_matrix<double>(4, 4, 1);
  auto d = gaussian_matrix<double>(4, 4, 2);
  REQUIRE((c - d).cwiseAbs().maxCoeff() > 0.0);

  auto z1 = gaussian_matrix<cplx>(3, 3, 11);
  auto z2 = gaussian_matrix<cplx>(3, 3, 11);
  REQUIRE(z1 == z2);

  REQUIRE_THROWS_AS(gaussian_matrix<double>(0, 2, 1), precondition_error);
}

TEST_CASE("gaussian_matrix samples match normal moments") {
  auto g = gaussian_matrix<double>(2048, 1, 42);
  double mean = g.mean();
  double var = (g.array() - mean).square().sum() / double(g.size() - 1);
  REQUIRE(std::abs(mean) < 0.1);
  REQUIRE(std::abs(var - 1.0) < 0.15);
}

TEST_CASE("pivoted_qr_truncate on identity and rank-1 input") {
  Matrix<double> eye = Matrix<double>::Identity(4, 4);
  auto basis = pivoted_qr_truncate(eye, 1e-6);
  REQUIRE(basis.rank() == 4);
  REQUIRE(basis.orthogonality_defect() < 1e-12 * 2.0);

  Vector<double> u = gaussian_matrix<double>(8, 1, 3);
  Vector<double> v = gaussian_matrix<double>(8, 1, 4);
  u.normalize();
  v.normalize();
  Matrix<double> w = u * v.transpose();
  auto b1 = pivoted_qr_truncate(w, 1e-10);
  REQUIRE(b1.rank() == 1);
  REQUIRE((w - b1.q * (b1.q.adjoint() * w)).norm() <= 1e-12 * w.norm());
}

TEST_CASE("pivoted_qr_truncate residual tracks the SVD truncation oracle") {
  Matrix<double> w = gaussian_matrix<double>(16, 16, 9);
  // Impose a known spectrum so the tolerance actually truncates.
  Eigen::JacobiSVD<Matrix<double>> svd(w, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vector<double> sv(16);
  for (Index i = 0; i < 16; ++i) sv(i) = std::pow(10.0, -0.5 * double(i));
  w = svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();

  double eps = 1e-3;
  auto basis = pivoted_qr_truncate(w, eps);
  double resid = (w - basis.q * (basis.q.adjoint() * w)).norm();
  // SVD oracle: optimal residual at the same relative cutoff.
  double oracle = 0.0;
  for (Index i = 0; i < 16; ++i)
    if (sv(i) <= eps * sv(0)) oracle += sv(i) * sv(i);
  oracle = std::sqrt(oracle);
  REQUIRE(resid <= 4.0 * eps * w.norm());  // sqrt(16) slack on the tolerance
  REQUIRE(resid <= 10.0 * std::max(oracle, 1e-15 * w.norm()) + eps * w.norm());
}

TEST_CASE("pivoted_qr_truncate flags all-zero input and is span-idempotent") {
  Matrix<double> z = Matrix<double>::Zero(5, 3);
  auto basis = pivoted_qr_truncate(z, 1e-8);
  REQUIRE(basis.zero_input);
  REQUIRE(basis.rank() == 0);

  Matrix<double> w = gaussian_matrix<double>(12, 5, 17);
  auto b1 = pivoted_qr_truncate(w, 1e-10);
  auto b2 = pivoted_qr_truncate(b1.q, 1e-10);
  REQUIRE(b2.rank() == b1.rank());
  // Principal angles via the singular values of Q1^H Q2.
  Eigen::JacobiSVD<Matrix<double>> svd(Matrix<double>(b1.q.adjoint() * b2.q));
  REQUIRE(svd.singularValues().minCoeff() > 1.0 - 1e-10);
}

TEST_CASE("randomized_range captures exact-rank ranges") {
  SECTION("zero operator") {
    RangeFinderConfig cfg;
    cfg.rank_guess = 3;
    cfg.oversampling = 2;
    cfg.tolerance = 1e-8;
    auto zero = [](const Matrix<double>& x) { return Matrix<double>(Matrix<double>::Zero(6, x.cols())); };
    auto basis = randomized_range<double>(zero, 10, cfg);
    REQUIRE(basis.rank() == 0);
  }
  SECTION("exact rank r") {
    Index r = 5;
    auto a = exact_rank_matrix<double>(20, 15, r, 21);
    RangeFinderConfig cfg;
    cfg.rank_guess = r;
    cfg.oversampling = 2;
    cfg.tolerance = 1e-10;
    cfg.seed = 5;
    auto basis = randomized_range<double>(multiplier(a), 15, cfg);
    REQUIRE((a - basis.q * (basis.q.adjoint() * a)).norm() <= 1e-10 * a.norm());
  }
  SECTION("graded spectrum stays near the SVD oracle") {
    Matrix<double> g = gaussian_matrix<double>(20, 20, 33);
    Eigen::JacobiSVD<Matrix<double>> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vector<double> sv = Vector<double>::Zero(20);
    for (Index i = 0; i < 10; ++i) sv(i) = std::pow(10.0, -double(i));
    Matrix<double> a = svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
    RangeFinderConfig cfg;
    cfg.rank_guess = 5;
    cfg.oversampling = 2;
    cfg.tolerance = 1e-4;
    cfg.seed = 5;
    auto basis = randomized_range<double>(multiplier(a), 20, cfg);
    REQUIRE(basis.rank() >= 4);
    REQUIRE(basis.rank() <= 7);
    double optimal5 = 0.0;
    for (Index i = 5; i < 20; ++i) optimal5 += sv(i) * sv(i);
    double resid = (a - basis.q * (basis.q.adjoint() * a)).norm();
    REQUIRE(resid <= 10.0 * std::sqrt(optimal5));
  }
  SECTION("callback returning wrong width is rejected") {
    RangeFinderConfig cfg;
    cfg.rank_guess = 2;
    auto bad = [](const Matrix<double>& x) { return Matrix<double>(Matrix<double>::Zero(6, x.cols() + 1)); };
    REQUIRE_THROWS_AS(randomized_range<double>(bad, 8, cfg), dimension_error);
  }
}

TEST_CASE("adaptive_range doubles until the revealed rank is strictly exceeded") {
  auto a = exact_rank_matrix<double>(40, 40, 8, 50);
  SECTION("r0 below the rank triggers doubling") {
    auto basis = adaptive_range<double>(multiplier(a), 40, 4, 2, 1e-10, 13);
    REQUIRE(basis.rank() == 8);
    REQUIRE(basis.rounds == 2);  // 4 -> 8 -> 16, converging at the r=16 probe
    REQUIRE_FALSE(basis.capped);
  }
  SECTION("zero operator terminates immediately") {
    auto zero = [](const Matrix<double>& x) { return Matrix<double>(Matrix<double>::Zero(40, x.cols())); };
    auto basis = adaptive_range<double>(zero, 40, 4, 2, 1e-10, 13);
    REQUIRE(basis.rank() == 0);
    REQUIRE(basis.rounds == 0);
  }
  SECTION("generous initial guess needs one probe") {
    auto basis = adaptive_range<double>(multiplier(a), 40, 32, 2, 1e-10, 13);
    REQUIRE(basis.rank() == 8);
    REQUIRE(basis.rounds == 0);
  }
  SECTION("hard cap sets the degraded flag") {
    Matrix<double> full = gaussian_matrix<double>(16, 16, 60);
    auto basis = adaptive_range<double>(multiplier(full), 16, 4, 0, 1e-12, 13, 16);
    REQUIRE(basis.capped);
    REQUIRE(basis.rank() == 16);
  }
}

TEST_CASE("pinv_solve matches analytic and normal-equation oracles") {
  Matrix<double> eye = Matrix<double>::Identity(3, 3);
  REQUIRE((pinv_solve(eye) - eye).norm() < 1e-14);

  Matrix<double> d = Matrix<double>::Zero(2, 2);
  d(0, 0) = 2.0;
  Matrix<double> dp = pinv_solve(d);
  REQUIRE(dp(0, 0) == Approx(0.5).margin(1e-14));
  REQUIRE(dp(1, 1) == Approx(0.0).margin(1e-14));

  Matrix<double> m = gaussian_matrix<double>(6, 4, 77);
  Matrix<double> mp = pinv_solve(m);
  REQUIRE((mp * m - Matrix<double>::Identity(4, 4)).norm() < 1e-10);
  Matrix<double> oracle = (m.transpose() * m).inverse() * m.transpose();
  REQUIRE((mp - oracle).norm() < 1e-10 * oracle.norm());
  REQUIRE((m * mp * m - m).norm() < 1e-10 * m.norm());

  Matrix<cplx> mc = gaussian_matrix<cplx>(5, 3, 78);
  Matrix<cplx> mcp = pinv_solve(mc);
  REQUIRE((mc * mcp * mc - mc).norm() < 1e-10 * mc.norm());
}

TEST_CASE("complex bases satisfy the orthonormality invariant") {
  Matrix<cplx> w = gaussian_matrix<cplx>(12, 6, 90);
  auto basis = pivoted_qr_truncate(w, 1e-12);
  REQUIRE(basis.rank() == 6);
  REQUIRE(basis.orthogonality_defect() <= 1e-12 * std::sqrt(6.0));
}
