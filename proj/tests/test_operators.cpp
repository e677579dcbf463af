#include <catch2/catch_amalgamated.hpp>

#include <Eigen/SVD>

#include "bfly/operators.hpp"

using namespace bfly;
using Catch::Approx;
using cplx = std::complex<double>;

namespace {

// Reference J0/Y0 values frozen from an independent high-precision
// evaluation before the implementation was written.
struct BesselRef {
  double x, j0, y0;
};
constexpr BesselRef kBesselTable[] = {
    {0.5, 9.3846980724081297e-01, -4.4451873350670662e-01},
    {1.0, 7.6519768655796649e-01, 8.8256964215676970e-02},
    {2.0, 2.2389077914123562e-01, 5.1037567264974515e-01},
    {5.0, -1.7759677131433829e-01, -3.0851762524903303e-01},
    {8.0, 1.7165080713755390e-01, 2.2352148938756622e-01},
    {12.0, 4.7689310796833348e-02, -2.2523731263436150e-01},
    {12.4, 1.2956102651750251e-01, -1.8577661526724326e-01},
    {12.6, 1.6260727174551079e-01, -1.5506412381725587e-01},
    {20.0, 1.6702466434058322e-01, 6.2640596809383692e-02},
    {100.0, 1.9985850304223330e-02, -7.7244313365083098e-02},
    {1000.0, 2.4786686152420030e-02, 4.7159179776235863e-03},
    {10000.0, -7.0961603533868422e-03, 3.6478055589904191e-03},
};

template <typename Scalar>
void check_adjoint_consistency(const BlackBoxOperator<Scalar>& op, std::uint64_t seed) {
  for (int trial = 0; trial < 8; ++trial) {
    Matrix<Scalar> x = gaussian_matrix<Scalar>(op.cols(), 1, seed + 2 * trial);
    Matrix<Scalar> y = gaussian_matrix<Scalar>(op.rows(), 1, seed + 2 * trial + 1);
    Matrix<Scalar> ax = op.apply(x);
    Matrix<Scalar> aty = op.apply_transpose(y);
    Scalar lhs = (y.transpose() * ax)(0, 0);
    Scalar rhs = (aty.transpose() * x)(0, 0);
    REQUIRE(std::abs(lhs - rhs) <= 1e-12 * y.norm() * ax.norm() + 1e-14);
  }
}

}  // namespace

TEST_CASE("hankel function matches the frozen reference table") {
  for (const auto& ref : kBesselTable) {
    cplx h = hankel_h0_second_kind(ref.x);
    INFO("x = " << ref.x);
    REQUIRE(h.real() == Approx(ref.j0).margin(1e-10));
    REQUIRE(-h.imag() == Approx(ref.y0).margin(1e-10));
  }
}

TEST_CASE("hankel function edge behavior") {
  REQUIRE(std::abs(hankel_h0_second_kind(1e-8)) > 10.0);  // Y0 log singularity
  double amp = std::abs(hankel_h0_second_kind(1000.0));
  double expect = std::sqrt(2.0 / (M_PI * 1000.0));
  REQUIRE(amp / expect > 0.99);
  REQUIRE(amp / expect < 1.01);
  REQUIRE_THROWS_AS(hankel_h0_second_kind(0.0), precondition_error);
  REQUIRE_THROWS_AS(hankel_h0_second_kind(-1.0), precondition_error);
}

TEST_CASE("dense operator counts multiplied columns") {
  DenseOperator<double> op(gaussian_matrix<double>(10, 6, 4));
  REQUIRE(op.total_columns() == 0);
  op.apply(Matrix<double>::Zero(6, 3));
  REQUIRE(op.forward_columns() == 3);
  op.apply_transpose(Matrix<double>::Zero(10, 5));
  REQUIRE(op.transpose_columns() == 5);
  REQUIRE(op.total_columns() == 8);
  op.reset_counters();
  REQUIRE(op.total_columns() == 0);
  REQUIRE_THROWS_AS(op.apply(Matrix<double>::Zero(5, 1)), dimension_error);
  check_adjoint_consistency(op, 99);

  DenseOperator<cplx> copc(gaussian_matrix<cplx>(7, 7, 5));
  check_adjoint_consistency(copc, 101);
  // apply_adjoint is K^H through the plain-transpose black box.
  Matrix<cplx> y = gaussian_matrix<cplx>(7, 2, 6);
  REQUIRE((apply_adjoint(copc, y) - copc.matrix().adjoint() * y).norm() < 1e-13);
}

TEST_CASE("synthetic butterfly operator") {
  SECTION("sizing rule") {
    SyntheticButterflySpec spec;
    spec.levels = 6;
    spec.rank = 8;
    REQUIRE(spec.size() == 512);
    spec.levels = 3;
    spec.rank = 2;
    auto bf = synth_butterfly<double>(spec);
    REQUIRE(bf.cols() == 64);
    REQUIRE(bf.to_dense().allFinite());
  }
  SECTION("rank above the leaf height is rejected") {
    SyntheticButterflySpec spec;
    spec.rank = 9;
    REQUIRE_THROWS_AS(synth_butterfly<double>(spec), precondition_error);
  }
  SECTION("deterministic for a fixed seed") {
    SyntheticButterflySpec spec;
    spec.levels = 4;
    spec.rank = 3;
    spec.seed = 17;
    auto a = synth_butterfly<double>(spec).to_dense();
    auto b = synth_butterfly<double>(spec).to_dense();
    REQUIRE((a - b).norm() == 0.0);
    REQUIRE(a.norm() > 0.0);
  }
  SECTION("center blocks have full rank r") {
    SyntheticButterflySpec spec;
    spec.levels = 4;
    spec.rank = 4;
    auto bf = synth_butterfly<double>(spec);
    Matrix<double> dense = bf.to_dense();
    // Extract one center-level block in tree coordinates and check sigma_r.
    Matrix<double> kt(dense.rows(), dense.cols());
    for (Index i = 0; i < dense.rows(); ++i)
      for (Index j = 0; j < dense.cols(); ++j)
        kt(i, j) = dense(bf.row_tree.to_original(i), bf.col_tree.to_original(j));
    auto [rb, re] = bf.row_tree.node_range(bf.center, 0);
    auto [cb, ce] = bf.col_tree.node_range(bf.levels - bf.center, 0);
    Eigen::JacobiSVD<Matrix<double>> svd(kt.block(rb, cb, re - rb, ce - cb));
    const auto& sv = svd.singularValues();
    REQUIRE(sv(3) > 1e-8 * sv(0));
  }
  SECTION("adjoint probes and counters") {
    SyntheticButterflySpec spec;
    spec.levels = 3;
    spec.rank = 2;
    auto op = synth_butterfly_operator<cplx>(spec);
    check_adjoint_consistency(*op, 7);
  }
}

TEST_CASE("2D scattering operator") {
  Scattering2DConfig cfg;
  cfg.n = 64;
  Scattering2DOperator op(cfg);
  REQUIRE(op.rows() == 64);
  REQUIRE(op.cols() == 64);
  SECTION("black box equals the densified matrix column by column") {
    Matrix<cplx> dense = densify<cplx>(op);
    for (Index j = 0; j < 64; j += 13) {
      Matrix<cplx> ej = Matrix<cplx>::Zero(64, 1);
      ej(j, 0) = 1.0;
      REQUIRE((op.apply(ej) - dense.col(j)).norm() <= 1e-12 * dense.norm());
    }
  }
  SECTION("adjoint consistency") { check_adjoint_consistency<cplx>(op, 23); }
  SECTION("smooth kernel at long wavelength is numerically low-rank") {
    Scattering2DConfig low;
    low.n = 32;
    low.wavenumber = 0.1;   // lines much shorter than the wavelength
    low.segment = 0.05;     // fixed geometry so k0 * distance stays small
    low.separation = 50.0;  // far apart relative to the 1.6-long lines
    Scattering2DOperator smooth(low);
    Eigen::JacobiSVD<Matrix<cplx>> svd(densify<cplx>(smooth));
    const auto& sv = svd.singularValues();
    Index rank = 0;
    while (rank < sv.size() && sv(rank) > 1e-8 * sv(0)) ++rank;
    REQUIRE(rank <= 3);
  }
  SECTION("geometry accessors expose segment centers") {
    PointSet src = op.sources();
    REQUIRE(src.size() == 64);
    REQUIRE(src.dim == 2);
    double h = cfg.segment_length();
    REQUIRE(src.coords[0][0] == Approx(0.5 * h));
  }
}

TEST_CASE("hemisphere point clouds") {
  PointSet a = semisphere_cloud(200, 1, 3);
  PointSet b = semisphere_cloud(200, 2, 3);
  for (const auto& c : a.coords) {
    double rad = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
    REQUIRE(rad == Approx(1.0).margin(1e-12));
    REQUIRE(c[0] <= 0.0);
  }
  for (const auto& c : b.coords) {
    double dx = c[0] - 2.0;
    double rad = std::sqrt(dx * dx + c[1] * c[1] + c[2] * c[2]);
    REQUIRE(rad == Approx(1.0).margin(1e-12));
    REQUIRE(c[0] >= 2.0);
  }
  double min_cross = 1e9;
  for (const auto& p : a.coords)
    for (const auto& q : b.coords) {
      double d = std::sqrt((p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]) +
                           (p[2] - q[2]) * (p[2] - q[2]));
      min_cross = std::min(min_cross, d);
    }
  REQUIRE(min_cross > 0.0);
  // Quasi-uniformity: nearest-neighbor spacing near the area-per-point scale.
  double expect = std::sqrt(2.0 * M_PI / 200.0);
  for (std::size_t i = 0; i < a.coords.size(); ++i) {
    double nn = 1e9;
    for (std::size_t j = 0; j < a.coords.size(); ++j) {
      if (i == j) continue;
      const auto& p = a.coords[i];
      const auto& q = a.coords[j];
      double d = std::sqrt((p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]) +
                           (p[2] - q[2]) * (p[2] - q[2]));
      nn = std::min(nn, d);
    }
    REQUIRE(nn > expect / 2.0 * 0.25);  // generous floor away from clustering
    REQUIRE(nn < expect * 2.0);
  }
  REQUIRE_THROWS_AS(semisphere_cloud(2, 1, 0), precondition_error);
  REQUIRE_THROWS_AS(semisphere_cloud(16, 3, 0), precondition_error);
}

TEST_CASE("3D Helmholtz kernel operator") {
  Helmholtz3DConfig cfg;
  cfg.n = 128;
  SECTION("zero wavenumber gives the real Coulomb kernel") {
    Helmholtz3DConfig c0 = cfg;
    c0.wavenumber = 0.0;
    Helmholtz3DOperator op(c0);
    const auto& m = op.matrix();
    REQUIRE(m.imag().norm() == 0.0);
    REQUIRE(m.real().minCoeff() > 0.0);
  }
  SECTION("unimodular phase: |A_ij| = 1/|rho_i - rho_j|") {
    Helmholtz3DOperator op(cfg);
    const auto& t = op.targets();
    const auto& s = op.sources();
    for (Index i = 0; i < 5; ++i)
      for (Index j = 0; j < 5; ++j) {
        const auto& p = t.coords[static_cast<std::size_t>(i)];
        const auto& q = s.coords[static_cast<std::size_t>(j)];
        double d = std::sqrt((p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]) +
                             (p[2] - q[2]) * (p[2] - q[2]));
        REQUIRE(std::abs(op.matrix()(i, j)) == Approx(1.0 / d).margin(1e-12));
      }
  }
  SECTION("auto wavenumber keeps ten points per wavelength") {
    REQUIRE(cfg.kappa() == Approx(std::sqrt(128.0 * M_PI / 50.0)));
  }
  SECTION("adjoint consistency and counters") {
    Helmholtz3DOperator op(cfg);
    check_adjoint_consistency<cplx>(op, 55);
    op.reset_counters();
    op.apply(Matrix<cplx>::Zero(128, 4));
    REQUIRE(op.forward_columns() == 4);
  }
}
