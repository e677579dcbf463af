#ifndef BFLY_RECONSTRUCT_HPP
#define BFLY_RECONSTRUCT_HPP

#include <chrono>

#include "bfly/operators.hpp"

namespace bfly {

struct ReconstructionConfig {
  double tolerance = 1e-6;   // epsilon
  Index oversampling = 2;    // p
  Index rank_guess = 4;      // r0 for the adaptive leaf phases
  int levels = 4;            // L
  int center = -1;           // l_m; -1 means floor(L/2)
  std::uint64_t seed = 0;
  Index hard_cap = -1;       // adaptive rank ceiling; -1 means min(m, n)
  int threads = 1;
  // Reproduces the conjugate-free transpose fit of the core blocks instead
  // of the least-squares pseudo-inverse. Comparison only; the pseudo-inverse
  // is the minimizer.
  bool literal_transpose_core = false;

  int center_level() const { return center < 0 ? levels / 2 : center; }

  void validate() const {
    if (!(tolerance > 0.0 && tolerance < 1.0))
      throw precondition_error("ReconstructionConfig: tolerance must lie in (0,1)");
    if (oversampling < 0) throw precondition_error("ReconstructionConfig: oversampling >= 0");
    if (rank_guess < 1) throw precondition_error("ReconstructionConfig: rank_guess >= 1");
    if (levels < 1) throw precondition_error("ReconstructionConfig: levels >= 1");
    if (center > levels)
      throw precondition_error("ReconstructionConfig: center level must not exceed levels");
    if (threads < 1) throw precondition_error("ReconstructionConfig: threads >= 1");
  }
};

// Random probe whose nonzero rows sit on a single tree node. The dense core
// is stored in tree (node-range) order; padding to full height happens when
// the probe is applied.
template <typename Scalar>
struct StructuredProbe {
  enum class side { column, row };  // column: forward product; row: adjoint

  side which = side::column;
  int level = 0;
  Index node = 0;
  Matrix<Scalar> core;  // |node| x width, rows in tree order

  Index width() const { return core.cols(); }

  static StructuredProbe column_probe(const PartitionTree& tree, int level, Index node,
                                      Index width, std::uint64_t seed) {
    StructuredProbe pr;
    pr.which = side::column;
    pr.level = level;
    pr.node = node;
    pr.core = gaussian_matrix<Scalar>(tree.node_size(level, node), width, seed);
    return pr;
  }
  static StructuredProbe row_probe(const PartitionTree& tree, int level, Index node, Index width,
                                   std::uint64_t seed) {
    StructuredProbe pr = column_probe(tree, level, node, width, seed);
    pr.which = side::row;
    return pr;
  }
};

// Pads the probe to full height in the original point ordering and runs one
// black-box product: K * Omega for column probes, K^H * Gamma for row
// probes. The full-height result stays in the original ordering.
template <typename Scalar>
Matrix<Scalar> probe_with(const BlackBoxOperator<Scalar>& op, const PartitionTree& tree,
                          const StructuredProbe<Scalar>& probe) {
  auto [b, e] = tree.node_range(probe.level, probe.node);
  if (probe.core.rows() != e - b)
    throw dimension_error("probe_with: core height does not match the owner node");
  Index height = tree.size();
  bool forward = probe.which == StructuredProbe<Scalar>::side::column;
  Index expect = forward ? op.cols() : op.rows();
  if (height != expect) throw dimension_error("probe_with: tree size does not match the operator");
  Matrix<Scalar> padded = Matrix<Scalar>::Zero(height, probe.width());
  for (Index i = b; i < e; ++i) padded.row(tree.to_original(i)) = probe.core.row(i - b);
  return forward ? op.apply(padded) : apply_adjoint(op, padded);
}

struct PhaseStat {
  std::string name;
  std::int64_t forward_columns = 0;
  std::int64_t transpose_columns = 0;
  double seconds = 0.0;
  int rounds = 0;        // doubling rounds (leaf phases)
  Index probe_width = 0;  // widest probe used in the phase
};

struct FactorizationLog {
  std::vector<PhaseStat> phases;
  std::uint64_t peak_probe_bytes = 0;
  Index peak_concurrent_probes = 0;
  bool rank_capped = false;
  double total_seconds = 0.0;

  std::int64_t forward_columns() const {
    std::int64_t s = 0;
    for (const auto& p : phases) s += p.forward_columns;
    return s;
  }
  std::int64_t transpose_columns() const {
    std::int64_t s = 0;
    for (const auto& p : phases) s += p.transpose_columns;
    return s;
  }
  std::int64_t total_columns() const { return forward_columns() + transpose_columns(); }

  const PhaseStat* phase(const std::string& name) const {
    for (const auto& p : phases)
      if (p.name == name) return &p;
    return nullptr;
  }
};

// Least-squares core fit B = U^H (K Omega) (V^H Omega)^+ . The coefficient
// matrix must have at least as many columns as rows, otherwise the fit is
// underdetermined and a wider probe is required.
template <typename Scalar>
Matrix<Scalar> core_block(const Matrix<Scalar>& k_omega, const Matrix<Scalar>& u,
                          const Matrix<Scalar>& v_coeff, bool literal_transpose = false) {
  if (u.rows() != k_omega.rows()) throw dimension_error("core_block: U height mismatch");
  if (v_coeff.cols() != k_omega.cols())
    throw dimension_error("core_block: probe width mismatch between sides");
  if (v_coeff.cols() < v_coeff.rows())
    throw precondition_error(
        "core_block: underdetermined fit; the probe needs at least as many columns as the V rank");
  Matrix<Scalar> projected = u.adjoint() * k_omega;
  if (v_coeff.rows() == 0) return Matrix<Scalar>(projected.rows(), 0);
  if (literal_transpose) return projected * v_coeff.transpose();
  return projected * pinv_solve(v_coeff);
}

// ---------------------------------------------------------------------------
// Algorithm driver. Phases must run in order: leaf_row_bases (V leaves),
// leaf_col_bases (U leaves), transfer W levels 1..l_m ascending, transfer R
// levels L-1..l_m descending (the last one also fits the core blocks).
// ---------------------------------------------------------------------------
template <typename Scalar>
class Factorizer {
 public:
  using Mat = Matrix<Scalar>;

  Factorizer(const BlackBoxOperator<Scalar>& op, PartitionTree row_tree, PartitionTree col_tree,
             ReconstructionConfig cfg)
      : op_(op), cfg_(std::move(cfg)) {
    cfg_.validate();
    if (row_tree.levels() != cfg_.levels || col_tree.levels() != cfg_.levels)
      throw precondition_error("Factorizer: tree depth must equal the configured level count");
    if (row_tree.size() != op.rows() || col_tree.size() != op.cols())
      throw dimension_error("Factorizer: tree sizes must match the operator dimensions");
    bf_.levels = cfg_.levels;
    bf_.center = cfg_.center_level();
    bf_.row_tree = std::move(row_tree);
    bf_.col_tree = std::move(col_tree);
    Index nb = Index(1) << bf_.levels;
    bf_.u_leaf.resize(static_cast<std::size_t>(nb));
    bf_.v_leaf.resize(static_cast<std::size_t>(nb));
    bf_.b_blocks.resize(static_cast<std::size_t>(nb));
    bf_.r_blocks.resize(static_cast<std::size_t>(bf_.levels - bf_.center));
    for (auto& lvl : bf_.r_blocks) lvl.resize(static_cast<std::size_t>(nb));
    bf_.w_blocks.resize(static_cast<std::size_t>(bf_.center));
    for (auto& lvl : bf_.w_blocks) lvl.resize(static_cast<std::size_t>(nb));
    next_r_ = bf_.levels - 1;
  }

  // V_{t,nu} for every leaf nu of the column tree, from adjoint products
  // against full-height Gaussian probes with doubling rank.
  void leaf_row_bases() {
    if (v_leaves_done_) throw sequencing_error("Factorizer: leaf_row_bases already ran");
    PhaseStat stat = run_leaf_phase("leaf_v", /*row_side=*/true);
    v_leaves_done_ = true;
    log_.phases.push_back(std::move(stat));
  }

  // U_{tau,s} for every leaf tau of the row tree, from forward products.
  void leaf_col_bases() {
    if (!v_leaves_done_) throw sequencing_error("Factorizer: leaf_row_bases must run first");
    if (u_leaves_done_) throw sequencing_error("Factorizer: leaf_col_bases already ran");
    PhaseStat stat = run_leaf_phase("leaf_u", /*row_side=*/false);
    u_leaves_done_ = true;
    log_.phases.push_back(std::move(stat));
  }

  // W blocks at level l (1 <= l <= l_m). One structured row probe per tau;
  // width follows the child-rank-sum rule, no adaptation.
  void transfer_level_w(int l) {
    if (!u_leaves_done_) throw sequencing_error("Factorizer: leaf phases must run first");
    if (l != next_w_) throw sequencing_error("Factorizer: W levels must run in order 1..l_m");
    auto t0 = clock_now();
    std::int64_t f0 = op_.forward_columns(), t0c = op_.transpose_columns();
    PhaseStat stat;
    stat.name = "transfer_w_" + std::to_string(l);

    Index ntau = Index(1) << l;
    Index nnu = Index(1) << (bf_.levels - l);
    for (Index tau = 0; tau < ntau; ++tau) {
      Index rank_bound = 0;
      for (Index nu = 0; nu < nnu; ++nu)
        rank_bound = std::max(rank_bound, bf_.v_rank(l - 1, tau / 2, 2 * nu) +
                                              bf_.v_rank(l - 1, tau / 2, 2 * nu + 1));
      if (rank_bound == 0) {
        // All child bases empty: every W block at this tau is 0 x 0.
        for (Index nu = 0; nu < nnu; ++nu)
          bf_.w_blocks[static_cast<std::size_t>(l - 1)]
                      [static_cast<std::size_t>(bf_.bidx(l, tau, nu))] = Mat(0, 0);
        continue;
      }
      Index width = rank_bound + cfg_.oversampling;
      stat.probe_width = std::max(stat.probe_width, width);
      auto probe = StructuredProbe<Scalar>::row_probe(
          bf_.row_tree, l, tau, width,
          seed_mix(cfg_.seed, static_cast<std::uint64_t>(probe_phase::transfer_w),
                   static_cast<std::uint64_t>(l), static_cast<std::uint64_t>(tau)));
      Mat x = probe_with(op_, bf_.row_tree, probe);
      note_probe_bytes(probe.core.size() + x.size());
      Mat xt = bf_.col_tree.gather_rows(x);
      parallel_for(nnu, cfg_.threads, [&](Index nu) {
        auto [b1, e1] = bf_.col_tree.node_range(bf_.levels - l + 1, 2 * nu);
        auto [b2, e2] = bf_.col_tree.node_range(bf_.levels - l + 1, 2 * nu + 1);
        Mat top = bf_.v_chain_coefficients(l - 1, tau / 2, 2 * nu, xt.middleRows(b1, e1 - b1));
        Mat bot = bf_.v_chain_coefficients(l - 1, tau / 2, 2 * nu + 1, xt.middleRows(b2, e2 - b2));
        Mat z(top.rows() + bot.rows(), width);
        z << top, bot;
        bf_.w_blocks[static_cast<std::size_t>(l - 1)]
                    [static_cast<std::size_t>(bf_.bidx(l, tau, nu))] = truncate_basis(z);
      });
    }
    stat.forward_columns = op_.forward_columns() - f0;
    stat.transpose_columns = op_.transpose_columns() - t0c;
    stat.seconds = seconds_since(t0);
    log_.phases.push_back(std::move(stat));
    ++next_w_;
  }

  // R blocks at level l (L-1 >= l >= l_m). One structured column probe per
  // nu, shared across every tau at the level. At l = l_m the same probes
  // feed the core fit B = U^H (K Omega)(V^H Omega)^+.
  void transfer_level_r(int l) {
    if (next_w_ <= bf_.center) throw sequencing_error("Factorizer: W levels must finish first");
    if (l != next_r_) throw sequencing_error("Factorizer: R levels must run in order L-1..l_m");
    auto t0 = clock_now();
    std::int64_t f0 = op_.forward_columns(), t0c = op_.transpose_columns();
    PhaseStat stat;
    stat.name = "transfer_r_" + std::to_string(l);

    const bool at_center = (l == bf_.center);
    Index ntau = Index(1) << l;
    Index nnu = Index(1) << (bf_.levels - l);
    for (Index nu = 0; nu < nnu; ++nu) {
      Index rank_bound = 0;
      for (Index tau = 0; tau < ntau; ++tau)
        rank_bound = std::max(rank_bound, bf_.u_rank(l + 1, 2 * tau, nu / 2) +
                                              bf_.u_rank(l + 1, 2 * tau + 1, nu / 2));
      if (rank_bound == 0) {
        for (Index tau = 0; tau < ntau; ++tau) {
          bf_.r_blocks[static_cast<std::size_t>(l - bf_.center)]
                      [static_cast<std::size_t>(bf_.bidx(l, tau, nu))] = Mat(0, 0);
          if (at_center)
            bf_.b_blocks[static_cast<std::size_t>(bf_.bidx(l, tau, nu))] =
                Mat(0, bf_.v_rank(bf_.center, tau, nu));
        }
        continue;
      }
      Index width = rank_bound + cfg_.oversampling;
      stat.probe_width = std::max(stat.probe_width, width);
      auto probe = StructuredProbe<Scalar>::column_probe(
          bf_.col_tree, bf_.levels - l, nu, width,
          seed_mix(cfg_.seed, static_cast<std::uint64_t>(probe_phase::transfer_r),
                   static_cast<std::uint64_t>(l), static_cast<std::uint64_t>(nu)));
      Mat y = probe_with(op_, bf_.col_tree, probe);
      note_probe_bytes(probe.core.size() + y.size());
      Mat yt = bf_.row_tree.gather_rows(y);
      parallel_for(ntau, cfg_.threads, [&](Index tau) {
        auto [b1, e1] = bf_.row_tree.node_range(l + 1, 2 * tau);
        auto [b2, e2] = bf_.row_tree.node_range(l + 1, 2 * tau + 1);
        Mat top = bf_.u_chain_coefficients(l + 1, 2 * tau, nu / 2, yt.middleRows(b1, e1 - b1));
        Mat bot = bf_.u_chain_coefficients(l + 1, 2 * tau + 1, nu / 2, yt.middleRows(b2, e2 - b2));
        Mat z(top.rows() + bot.rows(), width);
        z << top, bot;
        Mat r = truncate_basis(z);
        if (at_center) {
          // V^H Omega through the W/V chain; the probe core is already in
          // tree order on S_nu.
          Mat coeff = bf_.v_chain_coefficients(bf_.center, tau, nu, probe.core);
          bf_.b_blocks[static_cast<std::size_t>(bf_.bidx(l, tau, nu))] =
              core_block<Scalar>(z, r, coeff, cfg_.literal_transpose_core);
        }
        bf_.r_blocks[static_cast<std::size_t>(l - bf_.center)]
                    [static_cast<std::size_t>(bf_.bidx(l, tau, nu))] = std::move(r);
      });
    }
    stat.forward_columns = op_.forward_columns() - f0;
    stat.transpose_columns = op_.transpose_columns() - t0c;
    stat.seconds = seconds_since(t0);
    log_.phases.push_back(std::move(stat));
    --next_r_;
    if (next_r_ < bf_.center) core_done_ = true;
  }

  // Runs every phase in order and returns the finished factorization.
  std::pair<HybridButterfly<Scalar>, FactorizationLog> run() {
    auto t0 = clock_now();
    leaf_row_bases();
    leaf_col_bases();
    for (int l = 1; l <= bf_.center; ++l) transfer_level_w(l);
    for (int l = bf_.levels - 1; l >= bf_.center; --l) transfer_level_r(l);
    log_.total_seconds = seconds_since(t0);
    bf_.validate();
    return {std::move(bf_), std::move(log_)};
  }

  const HybridButterfly<Scalar>& butterfly() const { return bf_; }
  const FactorizationLog& log() const { return log_; }
  bool complete() const { return core_done_; }

 private:
  static std::chrono::steady_clock::time_point clock_now() {
    return std::chrono::steady_clock::now();
  }
  static double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(clock_now() - t0).count();
  }

  void note_probe_bytes(Index scalars) {
    std::uint64_t bytes = static_cast<std::uint64_t>(scalars) * sizeof(Scalar);
    log_.peak_probe_bytes = std::max(log_.peak_probe_bytes, bytes);
    log_.peak_concurrent_probes = std::max<Index>(log_.peak_concurrent_probes, 1);
  }

  // The level-wise error bounds charge every truncation in a chain against
  // the same epsilon budget; the diagonal QR test and the randomized probes
  // both leak a little past their nominal tolerance, so truncate a factor
  // below the requested accuracy to keep the summed residuals inside the
  // advertised constants.
  static constexpr double kTruncationSafety = 0.25;

  Mat truncate_basis(const Mat& z) const {
    if (z.rows() == 0 || z.cols() == 0) return Mat(z.rows(), 0);
    if (z.norm() == 0.0) return Mat(z.rows(), 0);
    return pivoted_qr_truncate(z, kTruncationSafety * cfg_.tolerance).q;
  }

  // Shared adaptive leaf phase. row_side = true computes the V leaves from
  // adjoint products; false computes the U leaves from forward products.
  PhaseStat run_leaf_phase(const char* name, bool row_side) {
    auto t0 = clock_now();
    std::int64_t f0 = op_.forward_columns(), t0c = op_.transpose_columns();
    PhaseStat stat;
    stat.name = name;

    const PartitionTree& slice_tree = row_side ? bf_.col_tree : bf_.row_tree;
    Index probe_height = row_side ? op_.rows() : op_.cols();
    Index hard_cap = cfg_.hard_cap > 0 ? cfg_.hard_cap : std::min(op_.rows(), op_.cols());
    Index nb = Index(1) << bf_.levels;
    auto& out = row_side ? bf_.v_leaf : bf_.u_leaf;
    std::uint64_t phase_tag =
        static_cast<std::uint64_t>(row_side ? probe_phase::leaf_row : probe_phase::leaf_col);

    Index r = cfg_.rank_guess;
    for (int round = 0;; ++round) {
      Index width = r + cfg_.oversampling;
      stat.probe_width = std::max(stat.probe_width, width);
      Mat omega = gaussian_matrix<Scalar>(
          probe_height, width,
          seed_mix(cfg_.seed, phase_tag, static_cast<std::uint64_t>(round)));
      Mat product = row_side ? apply_adjoint(op_, omega) : op_.apply(omega);
      note_probe_bytes(omega.size() + product.size());
      Mat pt = slice_tree.gather_rows(product);
      std::atomic<Index> max_rank{0};
      parallel_for(nb, cfg_.threads, [&](Index leaf) {
        auto [b, e] = slice_tree.node_range(bf_.levels, leaf);
        Mat w = pt.middleRows(b, e - b);
        Mat q = truncate_basis(w);
        Index k = q.cols();
        Index seen = max_rank.load();
        while (k > seen && !max_rank.compare_exchange_weak(seen, k)) {
        }
        out[static_cast<std::size_t>(leaf)] = std::move(q);
      });
      stat.rounds = round;
      if (r > max_rank.load()) break;
      if (r >= hard_cap) {
        log_.rank_capped = true;  // degraded result, reported in the log
        break;
      }
      r = std::min<Index>(2 * r, hard_cap);
    }
    stat.forward_columns = op_.forward_columns() - f0;
    stat.transpose_columns = op_.transpose_columns() - t0c;
    stat.seconds = seconds_since(t0);
    return stat;
  }

  const BlackBoxOperator<Scalar>& op_;
  ReconstructionConfig cfg_;
  HybridButterfly<Scalar> bf_;
  FactorizationLog log_;
  bool v_leaves_done_ = false;
  bool u_leaves_done_ = false;
  int next_w_ = 1;
  int next_r_ = 0;  // set in the constructor to L-1
  bool core_done_ = false;
};

template <typename Scalar>
std::pair<HybridButterfly<Scalar>, FactorizationLog> factorize(const BlackBoxOperator<Scalar>& op,
                                                               const PartitionTree& row_tree,
                                                               const PartitionTree& col_tree,
                                                               const ReconstructionConfig& cfg) {
  Factorizer<Scalar> f(op, row_tree, col_tree, cfg);
  return f.run();
}

// Relative error || A Omega - bf Omega ||_F / || A Omega ||_F on a Gaussian
// test block.
template <typename Scalar>
double estimate_error(const BlackBoxOperator<Scalar>& op, const HybridButterfly<Scalar>& bf,
                      Index k = 16, std::uint64_t seed = 0) {
  if (k < 1) throw precondition_error("estimate_error: k >= 1 required");
  Matrix<Scalar> omega = gaussian_matrix<Scalar>(
      op.cols(), k, seed_mix(seed, static_cast<std::uint64_t>(probe_phase::error_probe)));
  Matrix<Scalar> exact = op.apply(omega);
  double denom = exact.norm();
  if (denom == 0.0)
    throw conditioning_error("estimate_error: ||A Omega||_F is zero, relative error undefined");
  return (exact - bf.apply(omega)).norm() / denom;
}

// ---------------------------------------------------------------------------
// Residual sums for the level-wise error bounds, evaluated by explicit block
// extraction against a dense copy of the operator (desk scale only).
// dense is in the original point ordering.
// ---------------------------------------------------------------------------

// Sum over (tau, nu) at row level l of || K_b - U U^H K_b ||_F^2.
template <typename Scalar>
double u_side_residual(const Matrix<Scalar>& dense, const HybridButterfly<Scalar>& bf, int l) {
  if (l < bf.center || l > bf.levels)
    throw precondition_error("u_side_residual: level must lie in [l_m, L]");
  Matrix<Scalar> kt(dense.rows(), dense.cols());
  for (Index i = 0; i < dense.rows(); ++i)
    for (Index j = 0; j < dense.cols(); ++j)
      kt(i, j) = dense(bf.row_tree.to_original(i), bf.col_tree.to_original(j));
  double sum = 0.0;
  for (Index tau = 0; tau < (Index(1) << l); ++tau)
    for (Index nu = 0; nu < (Index(1) << (bf.levels - l)); ++nu) {
      auto [rb, re] = bf.row_tree.node_range(l, tau);
      auto [cb, ce] = bf.col_tree.node_range(bf.levels - l, nu);
      Matrix<Scalar> kb = kt.block(rb, cb, re - rb, ce - cb);
      Matrix<Scalar> u = bf.expand_u(l, tau, nu);
      sum += (kb - u * (u.adjoint() * kb)).squaredNorm();
    }
  return sum;
}

// Sum over (tau, nu) with nu at column level L-l of || K_b - K_b V V^H ||_F^2.
template <typename Scalar>
double v_side_residual(const Matrix<Scalar>& dense, const HybridButterfly<Scalar>& bf, int l) {
  if (l < 0 || l > bf.center)
    throw precondition_error("v_side_residual: level must lie in [0, l_m]");
  Matrix<Scalar> kt(dense.rows(), dense.cols());
  for (Index i = 0; i < dense.rows(); ++i)
    for (Index j = 0; j < dense.cols(); ++j)
      kt(i, j) = dense(bf.row_tree.to_original(i), bf.col_tree.to_original(j));
  double sum = 0.0;
  for (Index tau = 0; tau < (Index(1) << l); ++tau)
    for (Index nu = 0; nu < (Index(1) << (bf.levels - l)); ++nu) {
      auto [rb, re] = bf.row_tree.node_range(l, tau);
      auto [cb, ce] = bf.col_tree.node_range(bf.levels - l, nu);
      Matrix<Scalar> kb = kt.block(rb, cb, re - rb, ce - cb);
      Matrix<Scalar> v = bf.expand_v(l, tau, nu);
      sum += (kb - (kb * v) * v.adjoint()).squaredNorm();
    }
  return sum;
}

// Combined two-sided residual at the center level.
template <typename Scalar>
double center_residual(const Matrix<Scalar>& dense, const HybridButterfly<Scalar>& bf) {
  int l = bf.center;
  Matrix<Scalar> kt(dense.rows(), dense.cols());
  for (Index i = 0; i < dense.rows(); ++i)
    for (Index j = 0; j < dense.cols(); ++j)
      kt(i, j) = dense(bf.row_tree.to_original(i), bf.col_tree.to_original(j));
  double sum = 0.0;
  for (Index tau = 0; tau < (Index(1) << l); ++tau)
    for (Index nu = 0; nu < (Index(1) << (bf.levels - l)); ++nu) {
      auto [rb, re] = bf.row_tree.node_range(l, tau);
      auto [cb, ce] = bf.col_tree.node_range(bf.levels - l, nu);
      Matrix<Scalar> kb = kt.block(rb, cb, re - rb, ce - cb);
      Matrix<Scalar> u = bf.expand_u(l, tau, nu);
      Matrix<Scalar> v = bf.expand_v(l, tau, nu);
      sum += (kb - u * (u.adjoint() * kb * v) * v.adjoint()).squaredNorm();
    }
  return sum;
}

}  // namespace bfly

#endif  // BFLY_RECONSTRUCT_HPP
