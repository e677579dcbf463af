#ifndef BFLY_LINALG_HPP
#define BFLY_LINALG_HPP

#include <Eigen/QR>
#include <Eigen/SVD>

#include <functional>

#include "bfly/core.hpp"

namespace bfly {

// Gaussian random matrix with i.i.d. N(0,1) entries; for complex scalars
// real and imaginary parts are each N(0,1). Column-major fill order, fully
// determined by the seed.
template <typename Scalar>
Matrix<Scalar> gaussian_matrix(Index rows, Index cols, std::uint64_t seed) {
  if (rows < 1 || cols < 1)
    throw precondition_error("gaussian_matrix: dimensions must be positive");
  gaussian_stream g(seed_mix(seed, 0x6d617472ULL));
  Matrix<Scalar> m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = draw_gaussian<Scalar>(g);
  return m;
}

// Orthonormal column basis Q with ||Q^H Q - I||_F <= tol_orth * sqrt(k).
template <typename Scalar>
struct OrthonormalBasis {
  Matrix<Scalar> q;
  bool zero_input = false;     // set when the factored matrix was all zero
  bool capped = false;         // set when adaptive search hit the hard cap
  int rounds = 0;              // doubling rounds used by the adaptive driver

  Index rank() const { return q.cols(); }

  double orthogonality_defect() const {
    if (q.cols() == 0) return 0.0;
    Matrix<Scalar> gram = q.adjoint() * q;
    gram.diagonal().array() -= Scalar(1);
    return gram.norm();
  }
};

struct RangeFinderConfig {
  Index rank_guess = 1;        // r
  Index oversampling = 0;      // p
  double tolerance = 1e-6;     // epsilon
  std::uint64_t seed = 0;

  void validate() const {
    if (rank_guess < 1) throw precondition_error("RangeFinderConfig: rank_guess >= 1 required");
    if (oversampling < 0) throw precondition_error("RangeFinderConfig: oversampling >= 0 required");
    if (!(tolerance > 0.0 && tolerance < 1.0))
      throw precondition_error("RangeFinderConfig: tolerance must lie in (0,1)");
  }
};

// Truncated column-pivoted QR: WP = QR, keep columns while
// |R(k,k)| > eps * |R(1,1)|. An all-zero input yields a rank-0 basis with
// zero_input set.
template <typename Scalar>
OrthonormalBasis<Scalar> pivoted_qr_truncate(const Matrix<Scalar>& w, double eps) {
  if (w.rows() == 0 || w.cols() == 0)
    throw precondition_error("pivoted_qr_truncate: empty input");
  OrthonormalBasis<Scalar> basis;
  if (w.norm() == 0.0) {
    basis.q = Matrix<Scalar>(w.rows(), 0);
    basis.zero_input = true;
    return basis;
  }
  Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(w);
  const auto& r = qr.matrixR();
  Index kmax = std::min(w.rows(), w.cols());
  double head = std::abs(r(0, 0));
  Index k = 0;
  while (k < kmax && std::abs(r(k, k)) > eps * head) ++k;
  basis.q = Matrix<Scalar>(qr.householderQ() * Matrix<Scalar>::Identity(w.rows(), k));
  return basis;
}

template <typename Scalar>
using MatrixProduct = std::function<Matrix<Scalar>(const Matrix<Scalar>&)>;

// Range finder: Omega = gaussian(n, r+p), W = A*Omega, Q from truncated
// pivoted QR of W. Returned rank is at most r+p.
template <typename Scalar>
OrthonormalBasis<Scalar> randomized_range(const MatrixProduct<Scalar>& apply_a, Index n,
                                          const RangeFinderConfig& cfg) {
  cfg.validate();
  Index width = cfg.rank_guess + cfg.oversampling;
  Matrix<Scalar> omega = gaussian_matrix<Scalar>(n, width, cfg.seed);
  Matrix<Scalar> w = apply_a(omega);
  if (w.cols() != width)
    throw dimension_error("randomized_range: callback returned wrong column count");
  return pivoted_qr_truncate(w, cfg.tolerance);
}

// Doubles the rank guess until the revealed rank is strictly exceeded.
// Gives up at hard_cap (default: the probe height n) and returns the last
// basis with the capped flag set.
template <typename Scalar>
OrthonormalBasis<Scalar> adaptive_range(const MatrixProduct<Scalar>& apply_a, Index n, Index r0,
                                        Index p, double eps, std::uint64_t seed,
                                        Index hard_cap = -1) {
  if (r0 < 1) throw precondition_error("adaptive_range: r0 >= 1 required");
  if (hard_cap < 0) hard_cap = n;
  Index r = r0;
  for (int round = 0;; ++round) {
    RangeFinderConfig cfg;
    cfg.rank_guess = r;
    cfg.oversampling = p;
    cfg.tolerance = eps;
    cfg.seed = seed_mix(seed, static_cast<std::uint64_t>(round));
    OrthonormalBasis<Scalar> basis = randomized_range<Scalar>(apply_a, n, cfg);
    basis.rounds = round;
    if (r > basis.rank()) return basis;
    if (r >= hard_cap) {
      basis.capped = true;
      return basis;
    }
    r = std::min<Index>(2 * r, hard_cap);
  }
}

// Moore-Penrose pseudo-inverse; singular values below tol * sigma_max are
// dropped.
template <typename Scalar>
Matrix<Scalar> pinv_solve(const Matrix<Scalar>& m, double tol = 1e-12) {
  if (m.rows() == 0 || m.cols() == 0)
    throw precondition_error("pinv_solve: empty input");
  Eigen::JacobiSVD<Matrix<Scalar>> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  double cutoff = tol * (sv.size() > 0 ? sv(0) : 0.0);
  Vector<Scalar> inv_sv(sv.size());
  for (Index i = 0; i < sv.size(); ++i)
    inv_sv(i) = sv(i) > cutoff ? Scalar(1.0 / sv(i)) : Scalar(0);
  return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().adjoint();
}

}  // namespace bfly

#endif  // BFLY_LINALG_HPP
