#ifndef BFLY_OPERATORS_HPP
#define BFLY_OPERATORS_HPP

#include <Eigen/LU>

#include <memory>

#include "bfly/butterfly.hpp"

namespace bfly {

// ---------------------------------------------------------------------------
// Black-box operator interface. The reconstruction engine touches the matrix
// only through apply / apply_transpose; both sides count the number of
// columns multiplied.
// ---------------------------------------------------------------------------
template <typename Scalar>
class BlackBoxOperator {
 public:
  using Mat = Matrix<Scalar>;

  virtual ~BlackBoxOperator() = default;

  virtual Index rows() const = 0;
  virtual Index cols() const = 0;

  Mat apply(const Mat& x) const {
    if (x.rows() != cols()) throw dimension_error("BlackBoxOperator::apply: X row count != n");
    forward_cols_ += x.cols();
    return do_apply(x);
  }

  // Plain (conjugate-free) transpose product.
  Mat apply_transpose(const Mat& y) const {
    if (y.rows() != rows())
      throw dimension_error("BlackBoxOperator::apply_transpose: Y row count != m");
    transpose_cols_ += y.cols();
    return do_apply_transpose(y);
  }

  std::int64_t forward_columns() const { return forward_cols_.load(); }
  std::int64_t transpose_columns() const { return transpose_cols_.load(); }
  std::int64_t total_columns() const { return forward_columns() + transpose_columns(); }
  void reset_counters() const {
    forward_cols_ = 0;
    transpose_cols_ = 0;
  }

 protected:
  virtual Mat do_apply(const Mat& x) const = 0;
  virtual Mat do_apply_transpose(const Mat& y) const = 0;

 private:
  mutable std::atomic<std::int64_t> forward_cols_{0};
  mutable std::atomic<std::int64_t> transpose_cols_{0};
};

// K^H Y computed through the plain-transpose black box.
template <typename Scalar>
Matrix<Scalar> apply_adjoint(const BlackBoxOperator<Scalar>& op, const Matrix<Scalar>& y) {
  if constexpr (scalar_traits<Scalar>::is_complex) {
    return op.apply_transpose(y.conjugate()).conjugate();
  } else {
    return op.apply_transpose(y);
  }
}

template <typename Scalar>
class DenseOperator : public BlackBoxOperator<Scalar> {
 public:
  using Mat = Matrix<Scalar>;

  explicit DenseOperator(Mat a) : a_(std::move(a)) {}

  Index rows() const override { return a_.rows(); }
  Index cols() const override { return a_.cols(); }
  const Mat& matrix() const { return a_; }

 protected:
  Mat do_apply(const Mat& x) const override { return a_ * x; }
  Mat do_apply_transpose(const Mat& y) const override { return a_.transpose() * y; }

 private:
  Mat a_;
};

// Densify a small operator by applying it to the identity (counts columns).
template <typename Scalar>
Matrix<Scalar> densify(const BlackBoxOperator<Scalar>& op) {
  return op.apply(Matrix<Scalar>::Identity(op.cols(), op.cols()));
}

// ---------------------------------------------------------------------------
// Synthetic exact butterfly: leaf blocks 8 x r, transfer blocks 2r x r with
// random orthonormal columns, core blocks r x r i.i.d. normal. n = 2^(L+3).
// ---------------------------------------------------------------------------
struct SyntheticButterflySpec {
  int levels = 4;
  Index rank = 4;
  std::uint64_t seed = 0;

  Index size() const { return Index(1) << (levels + 3); }
};

template <typename Scalar>
class ButterflyOperator : public BlackBoxOperator<Scalar> {
 public:
  using Mat = Matrix<Scalar>;

  explicit ButterflyOperator(HybridButterfly<Scalar> bf) : bf_(std::move(bf)) {}

  Index rows() const override { return bf_.rows(); }
  Index cols() const override { return bf_.cols(); }
  const HybridButterfly<Scalar>& butterfly() const { return bf_; }

 protected:
  Mat do_apply(const Mat& x) const override { return bf_.apply(x); }
  Mat do_apply_transpose(const Mat& y) const override { return bf_.apply_transpose(y); }

 private:
  HybridButterfly<Scalar> bf_;
};

template <typename Scalar>
Matrix<Scalar> random_orthonormal(Index rows, Index cols, std::uint64_t seed) {
  Matrix<Scalar> g = gaussian_matrix<Scalar>(rows, cols, seed);
  Eigen::HouseholderQR<Matrix<Scalar>> qr(g);
  return Matrix<Scalar>(qr.householderQ() * Matrix<Scalar>::Identity(rows, cols));
}

template <typename Scalar>
HybridButterfly<Scalar> synth_butterfly(const SyntheticButterflySpec& spec) {
  if (spec.rank < 1 || spec.rank > 8)
    throw precondition_error("synth_butterfly: rank must lie in [1, 8] (leaf blocks are 8 x r)");
  if (spec.levels < 2) throw precondition_error("synth_butterfly: at least 2 levels required");
  Index n = spec.size();
  HybridButterfly<Scalar> bf;
  bf.levels = spec.levels;
  bf.center = spec.levels / 2;
  bf.row_tree = build_tree(PointSet::line(n), spec.levels);
  bf.col_tree = build_tree(PointSet::line(n), spec.levels);
  Index nb = Index(1) << spec.levels;
  const Index r = spec.rank;
  auto mix = [&](std::uint64_t kind, std::uint64_t level, std::uint64_t idx) {
    return seed_mix(spec.seed, static_cast<std::uint64_t>(probe_phase::synthetic), kind, level,
                    idx);
  };
  bf.u_leaf.resize(static_cast<std::size_t>(nb));
  bf.v_leaf.resize(static_cast<std::size_t>(nb));
  for (Index i = 0; i < nb; ++i) {
    bf.u_leaf[static_cast<std::size_t>(i)] =
        random_orthonormal<Scalar>(8, r, mix(1, 0, static_cast<std::uint64_t>(i)));
    bf.v_leaf[static_cast<std::size_t>(i)] =
        random_orthonormal<Scalar>(8, r, mix(2, 0, static_cast<std::uint64_t>(i)));
  }
  bf.r_blocks.resize(static_cast<std::size_t>(spec.levels - bf.center));
  for (int l = bf.center; l < spec.levels; ++l) {
    auto& lvl = bf.r_blocks[static_cast<std::size_t>(l - bf.center)];
    lvl.resize(static_cast<std::size_t>(nb));
    for (Index i = 0; i < nb; ++i)
      lvl[static_cast<std::size_t>(i)] = random_orthonormal<Scalar>(
          2 * r, r, mix(3, static_cast<std::uint64_t>(l), static_cast<std::uint64_t>(i)));
  }
  bf.w_blocks.resize(static_cast<std::size_t>(bf.center));
  for (int l = 1; l <= bf.center; ++l) {
    auto& lvl = bf.w_blocks[static_cast<std::size_t>(l - 1)];
    lvl.resize(static_cast<std::size_t>(nb));
    for (Index i = 0; i < nb; ++i)
      lvl[static_cast<std::size_t>(i)] = random_orthonormal<Scalar>(
          2 * r, r, mix(4, static_cast<std::uint64_t>(l), static_cast<std::uint64_t>(i)));
  }
  bf.b_blocks.resize(static_cast<std::size_t>(nb));
  for (Index i = 0; i < nb; ++i)
    bf.b_blocks[static_cast<std::size_t>(i)] =
        gaussian_matrix<Scalar>(r, r, mix(5, 0, static_cast<std::uint64_t>(i)));
  bf.validate();
  return bf;
}

template <typename Scalar>
std::unique_ptr<ButterflyOperator<Scalar>> synth_butterfly_operator(
    const SyntheticButterflySpec& spec) {
  return std::make_unique<ButterflyOperator<Scalar>>(synth_butterfly<Scalar>(spec));
}

// ---------------------------------------------------------------------------
// Bessel / Hankel functions.
// ---------------------------------------------------------------------------
namespace special {

constexpr double kEulerGamma = 0.57721566490153286;

// J0 and Y0 by ascending series, accurate for small and moderate arguments.
inline void bessel_j0y0_series(double x, double& j0, double& y0) {
  double q = 0.25 * x * x;
  double term = 1.0;
  double j = 1.0;
  double h = 0.0;     // harmonic number H_k
  double ysum = 0.0;  // sum (-1)^(k+1) H_k q^k / (k!)^2
  for (int k = 1; k <= 60; ++k) {
    term *= -q / (double(k) * double(k));
    j += term;
    h += 1.0 / double(k);
    ysum -= term * h;
    if (std::abs(term) < 1e-20 && k > 4) break;
  }
  j0 = j;
  y0 = (2.0 / M_PI) * ((std::log(0.5 * x) + kEulerGamma) * j + ysum);
}

// Stokes asymptotic expansion for large arguments.
inline void bessel_j0y0_asymptotic(double x, double& j0, double& y0) {
  // P ~ sum (-1)^k a_{2k} / x^{2k}, Q ~ sum (-1)^k a_{2k+1} / x^{2k+1} with
  // a_k = prod_{j=1..k} (2j-1)^2 / (k! 8^k); truncated at the smallest term.
  double p = 1.0, q = 0.0;
  double ak = 1.0;
  double last = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 40; ++k) {
    double odd = 2.0 * k - 1.0;
    ak *= odd * odd / (8.0 * double(k));
    double mag = ak / std::pow(x, double(k));
    if (mag > last) break;  // divergence point of the asymptotic series
    last = mag;
    double sign = ((k / 2) % 2 == 0) ? 1.0 : -1.0;
    if (k % 2 == 0)
      p += sign * mag;
    else
      q += -sign * mag;  // leading Q term is -1/(8x)
    if (mag < 1e-19) break;
  }
  double w = x - 0.25 * M_PI;
  double amp = std::sqrt(2.0 / (M_PI * x));
  j0 = amp * (p * std::cos(w) - q * std::sin(w));
  y0 = amp * (p * std::sin(w) + q * std::cos(w));
}

inline double bessel_j0(double x) {
  double j, y;
  if (x <= 12.5)
    bessel_j0y0_series(x, j, y);
  else
    bessel_j0y0_asymptotic(x, j, y);
  return j;
}

inline double bessel_y0(double x) {
  double j, y;
  if (x <= 12.5)
    bessel_j0y0_series(x, j, y);
  else
    bessel_j0y0_asymptotic(x, j, y);
  return y;
}

}  // namespace special

// Zeroth-order Hankel function of the second kind, H0^(2)(x) = J0(x) - i Y0(x).
inline std::complex<double> hankel_h0_second_kind(double x) {
  if (!(x > 0.0)) throw precondition_error("hankel_h0_second_kind: argument must be positive");
  double j, y;
  if (x <= 12.5)
    special::bessel_j0y0_series(x, j, y);
  else
    special::bessel_j0y0_asymptotic(x, j, y);
  return {j, -y};
}

// ---------------------------------------------------------------------------
// 2D scattering matrix A = Z21 * inv(Z11) between two parallel lines,
// assembled from Hankel-kernel segment integrals and a dense LU at desk
// scale.
// ---------------------------------------------------------------------------
struct Scattering2DConfig {
  double wavenumber = 2.0 * M_PI;  // k0 (wavelength 1)
  Index n = 256;                   // segments on C1
  Index m = 0;                     // segments on C2; 0 means m = n
  Index dense_cap = 4096;
  double segment = -1.0;     // explicit segment length; negative derives 0.05 * wavelength
  double separation = -1.0;  // line distance; negative matches the line length

  double wavelength() const { return 2.0 * M_PI / wavenumber; }
  double segment_length() const { return segment > 0.0 ? segment : 0.05 * wavelength(); }
  double line_distance() const {
    return separation > 0.0 ? separation : double(n) * segment_length();
  }
  Index m_or_n() const { return m > 0 ? m : n; }

  void validate() const {
    if (!(wavenumber > 0)) throw precondition_error("Scattering2DConfig: k0 > 0 required");
    if (n < 1) throw precondition_error("Scattering2DConfig: n >= 1 required");
    if (n > dense_cap)
      throw precondition_error("Scattering2DConfig: n exceeds the dense factorization cap");
  }
};

class Scattering2DOperator : public BlackBoxOperator<std::complex<double>> {
 public:
  using Scalar = std::complex<double>;
  using Mat = Matrix<Scalar>;

  explicit Scattering2DOperator(const Scattering2DConfig& cfg) : cfg_(cfg) {
    cfg.validate();
    const double h = cfg.segment_length();
    const double k0 = cfg.wavenumber;
    const Index n = cfg.n;
    const Index m = cfg.m_or_n();
    const double sep = cfg.line_distance();  // default: length-L lines, distance L apart
    // One-point midpoint quadrature: integral ~ h * H0^(2)(k0 |rho_i - rho_c|).
    Mat z11(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) {
        if (i == j) {
          z11(i, j) = self_term(k0, h);
        } else {
          double d = std::abs(double(i) - double(j)) * h;
          z11(i, j) = h * hankel_h0_second_kind(k0 * d);
        }
      }
    z21_.resize(m, n);
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < n; ++j) {
        double dx = (double(i) + 0.5) * h - (double(j) + 0.5) * h;
        double d = std::sqrt(dx * dx + sep * sep);
        z21_(i, j) = h * hankel_h0_second_kind(k0 * d);
      }
    lu_.compute(z11);
    double pivot_min = lu_.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (pivot_min < 1e-14 * z11.norm())
      throw conditioning_error("Scattering2DOperator: Z11 numerically singular");
  }

  Index rows() const override { return z21_.rows(); }
  Index cols() const override { return z21_.cols(); }

  // Segment centers, usable as partition-tree point sets.
  PointSet targets() const { return line_points(rows(), cfg_.segment_length(), cfg_.line_distance()); }
  PointSet sources() const { return line_points(cols(), cfg_.segment_length(), 0.0); }

 protected:
  Mat do_apply(const Mat& x) const override { return z21_ * lu_.solve(x); }
  Mat do_apply_transpose(const Mat& y) const override {
    // A^T = inv(Z11)^T Z21^T; Z11 is symmetric but we solve the transposed
    // system explicitly.
    return lu_.transpose().solve(z21_.transpose() * y);
  }

 private:
  static PointSet line_points(Index count, double h, double yoff) {
    PointSet ps;
    ps.dim = 2;
    ps.coords.resize(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i)
      ps.coords[static_cast<std::size_t>(i)] = {(double(i) + 0.5) * h, yoff, 0.0};
    return ps;
  }

  // 2 * int_0^(h/2) H0^(2)(k0 s) ds, two leading small-argument terms.
  static Scalar self_term(double k0, double h) {
    double a = 0.5 * h;
    double re = 2.0 * a;
    double im = -(2.0 / M_PI) * 2.0 * a * (std::log(0.5 * k0 * a) + special::kEulerGamma - 1.0);
    return {re, im};
  }

  Scattering2DConfig cfg_;
  Mat z21_;
  Eigen::PartialPivLU<Mat> lu_;
};

// ---------------------------------------------------------------------------
// 3D Helmholtz kernel between two unit-radius hemisphere clouds.
// ---------------------------------------------------------------------------
struct Helmholtz3DConfig {
  double wavenumber = -1.0;  // kappa; negative means derive from n
  Index n = 512;             // points per surface
  std::uint64_t seed = 0;
  Index dense_cap = 4096;

  double kappa() const {
    if (wavenumber >= 0) return wavenumber;
    return std::sqrt(double(n) * M_PI / 50.0);  // ~10 points per wavelength
  }

  void validate() const {
    if (n < 4) throw precondition_error("Helmholtz3DConfig: n >= 4 required");
    if (n > dense_cap)
      throw precondition_error("Helmholtz3DConfig: n exceeds the dense assembly cap");
  }
};

// Fibonacci lattice on a unit hemisphere. which = 1: dome opening toward +x
// around center (0,0,0); which = 2: mirrored dome around center (2,0,0).
// The flat equatorial sides face each other, so the clouds are adjacent but
// disjoint.
inline PointSet semisphere_cloud(Index n, int which, std::uint64_t seed) {
  if (n < 4) throw precondition_error("semisphere_cloud: n >= 4 required");
  if (which != 1 && which != 2) throw precondition_error("semisphere_cloud: which must be 1 or 2");
  PointSet ps;
  ps.dim = 3;
  ps.coords.resize(static_cast<std::size_t>(n));
  const double golden_angle = M_PI * (3.0 - std::sqrt(5.0));
  // Deterministic seed-derived rotation of the spiral start.
  std::uint64_t s = seed_mix(seed, static_cast<std::uint64_t>(which));
  double phase = 2.0 * M_PI * (double(s >> 11) * 0x1p-53);
  for (Index i = 0; i < n; ++i) {
    double axial = (double(i) + 0.5) / double(n);  // in (0,1): cosine of polar angle
    double sin_pol = std::sqrt(std::max(0.0, 1.0 - axial * axial));
    double az = phase + double(i) * golden_angle;
    double u = sin_pol * std::cos(az);
    double v = sin_pol * std::sin(az);
    if (which == 1)
      ps.coords[static_cast<std::size_t>(i)] = {-axial, u, v};
    else
      ps.coords[static_cast<std::size_t>(i)] = {2.0 + axial, u, v};
  }
  return ps;
}

class Helmholtz3DOperator : public BlackBoxOperator<std::complex<double>> {
 public:
  using Scalar = std::complex<double>;
  using Mat = Matrix<Scalar>;

  explicit Helmholtz3DOperator(const Helmholtz3DConfig& cfg) : cfg_(cfg) {
    cfg.validate();
    targets_ = semisphere_cloud(cfg.n, 1, cfg.seed);
    sources_ = semisphere_cloud(cfg.n, 2, cfg.seed);
    const double kappa = cfg.kappa();
    a_.resize(cfg.n, cfg.n);
    for (Index i = 0; i < cfg.n; ++i)
      for (Index j = 0; j < cfg.n; ++j) {
        const auto& ti = targets_.coords[static_cast<std::size_t>(i)];
        const auto& sj = sources_.coords[static_cast<std::size_t>(j)];
        double dx = ti[0] - sj[0], dy = ti[1] - sj[1], dz = ti[2] - sj[2];
        double d = std::sqrt(dx * dx + dy * dy + dz * dz);
        if (d == 0.0) throw precondition_error("Helmholtz3DOperator: coincident points");
        double ph = 2.0 * M_PI * kappa * d;
        a_(i, j) = Scalar(std::cos(ph) / d, std::sin(ph) / d);
      }
  }

  Index rows() const override { return a_.rows(); }
  Index cols() const override { return a_.cols(); }
  const Mat& matrix() const { return a_; }
  const PointSet& targets() const { return targets_; }
  const PointSet& sources() const { return sources_; }

 protected:
  Mat do_apply(const Mat& x) const override { return a_ * x; }
  Mat do_apply_transpose(const Mat& y) const override { return a_.transpose() * y; }

 private:
  Helmholtz3DConfig cfg_;
  PointSet targets_, sources_;
  Mat a_;
};

}  // namespace bfly

#endif  // BFLY_OPERATORS_HPP
