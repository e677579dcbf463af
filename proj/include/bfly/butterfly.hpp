#ifndef BFLY_BUTTERFLY_HPP
#define BFLY_BUTTERFLY_HPP

#include <map>
#include <optional>

#include "bfly/linalg.hpp"
#include "bfly/tree.hpp"

namespace bfly {

// Hybrid butterfly factorization
//
//   K ~ (U^L R^{L-1} ... R^{lm}) B^{lm} (W^{lm} ... W^1 V^0)
//
// Blocks are stored per (level, tau, nu) pair in flat per-level vectors,
// indexed tau * 2^(L-l) + nu with tau at level l of the row tree and nu at
// level L-l of the column tree. For complex scalars the chain reads
// U B V^H; the projections use the Hermitian adjoint throughout.
template <typename Scalar>
struct HybridButterfly {
  using Mat = Matrix<Scalar>;

  PartitionTree row_tree;  // T_T, depth L over m target points
  PartitionTree col_tree;  // T_S, depth L over n source points
  int levels = 0;          // L
  int center = 0;          // l_m

  std::vector<Mat> u_leaf;               // 2^L blocks, |T_tau| x r_{tau,s}
  std::vector<Mat> v_leaf;               // 2^L blocks, |S_nu| x r_{t,nu}
  std::vector<std::vector<Mat>> r_blocks;  // r_blocks[l - center], l in [center, L-1]
  std::vector<std::vector<Mat>> w_blocks;  // w_blocks[l - 1], l in [1, center]
  std::vector<Mat> b_blocks;             // 2^L blocks at the center level

  Index rows() const { return row_tree.size(); }
  Index cols() const { return col_tree.size(); }

  static Index block_index(int levels, int level, Index tau, Index nu) {
    return tau * (Index(1) << (levels - level)) + nu;
  }
  Index bidx(int level, Index tau, Index nu) const {
    return block_index(levels, level, tau, nu);
  }

  const Mat& r_block(int level, Index tau, Index nu) const {
    return r_blocks[static_cast<std::size_t>(level - center)]
                   [static_cast<std::size_t>(bidx(level, tau, nu))];
  }
  const Mat& w_block(int level, Index tau, Index nu) const {
    return w_blocks[static_cast<std::size_t>(level - 1)]
                   [static_cast<std::size_t>(bidx(level, tau, nu))];
  }
  const Mat& b_block(Index tau, Index nu) const {
    return b_blocks[static_cast<std::size_t>(bidx(center, tau, nu))];
  }

  // r_{tau,nu} on the U side: tau at `level` of the row tree, nu at L-level.
  Index u_rank(int level, Index tau, Index nu) const {
    if (level == levels) return u_leaf[static_cast<std::size_t>(tau)].cols();
    return r_block(level, tau, nu).cols();
  }
  // r_{tau,nu} on the V side: tau at `level` of the row tree, nu at L-level.
  Index v_rank(int level, Index tau, Index nu) const {
    if (level == 0) return v_leaf[static_cast<std::size_t>(nu)].cols();
    return w_block(level, tau, nu).cols();
  }

  // ---------------------------------------------------------------------
  // Fast apply. X is n x k in the original point ordering.
  // ---------------------------------------------------------------------
  Mat apply(const Mat& x) const {
    if (x.rows() != cols()) throw dimension_error("HybridButterfly::apply: X row count != n");
    Index k = x.cols();
    Mat xt = col_tree.gather_rows(x);

    // V side: coefficients c_{tau,nu} = V_{tau,nu}^H x_{S_nu}.
    std::vector<Mat> coef = v_coefficients_full(xt);

    // Core.
    Index nb = Index(1) << levels;
    std::vector<Mat> g(static_cast<std::size_t>(nb));
    for (Index i = 0; i < nb; ++i)
      g[static_cast<std::size_t>(i)] =
          b_blocks[static_cast<std::size_t>(i)] * coef[static_cast<std::size_t>(i)];

    // U side: climb from the center level to the leaves, accumulating the
    // sibling-nu contributions.
    for (int l = center; l < levels; ++l) {
      Index wide = Index(1) << (levels - l - 1);
      std::vector<Mat> next(static_cast<std::size_t>(nb));
      for (Index tau = 0; tau < (Index(1) << (l + 1)); ++tau)
        for (Index nu = 0; nu < wide; ++nu) {
          Index rank = u_rank(l + 1, tau, nu);
          next[static_cast<std::size_t>(block_index(levels, l + 1, tau, nu))] =
              Mat::Zero(rank, k);
        }
      for (Index tau = 0; tau < (Index(1) << l); ++tau)
        for (Index nu = 0; nu < (Index(1) << (levels - l)); ++nu) {
          const Mat& r = r_block(l, tau, nu);
          Mat h = r * g[static_cast<std::size_t>(bidx(l, tau, nu))];
          Index pnu = nu / 2;
          Index top = u_rank(l + 1, 2 * tau, pnu);
          next[static_cast<std::size_t>(block_index(levels, l + 1, 2 * tau, pnu))] +=
              h.topRows(top);
          next[static_cast<std::size_t>(block_index(levels, l + 1, 2 * tau + 1, pnu))] +=
              h.bottomRows(h.rows() - top);
        }
      g = std::move(next);
    }

    Mat yt(rows(), k);
    for (Index tau = 0; tau < (Index(1) << levels); ++tau) {
      auto [b, e] = row_tree.node_range(levels, tau);
      yt.middleRows(b, e - b) =
          u_leaf[static_cast<std::size_t>(tau)] * g[static_cast<std::size_t>(tau)];
    }
    return row_tree.scatter_rows(yt);
  }

  // Conjugate-transpose apply: returns K^H y for complex scalars (plain
  // transpose for real ones).
  Mat apply_adjoint(const Mat& y) const {
    if (y.rows() != rows())
      throw dimension_error("HybridButterfly::apply_adjoint: Y row count != m");
    Index k = y.cols();
    Mat yt = row_tree.gather_rows(y);

    Index nb = Index(1) << levels;
    std::vector<Mat> a(static_cast<std::size_t>(nb));
    for (Index tau = 0; tau < nb; ++tau) {
      auto [b, e] = row_tree.node_range(levels, tau);
      a[static_cast<std::size_t>(tau)] =
          u_leaf[static_cast<std::size_t>(tau)].adjoint() * yt.middleRows(b, e - b);
    }
    for (int l = levels - 1; l >= center; --l) {
      std::vector<Mat> cur(static_cast<std::size_t>(nb));
      for (Index tau = 0; tau < (Index(1) << l); ++tau)
        for (Index nu = 0; nu < (Index(1) << (levels - l)); ++nu) {
          Index pnu = nu / 2;
          const Mat& stacked_top =
              a[static_cast<std::size_t>(block_index(levels, l + 1, 2 * tau, pnu))];
          const Mat& stacked_bot =
              a[static_cast<std::size_t>(block_index(levels, l + 1, 2 * tau + 1, pnu))];
          Mat stacked(stacked_top.rows() + stacked_bot.rows(), k);
          stacked << stacked_top, stacked_bot;
          cur[static_cast<std::size_t>(bidx(l, tau, nu))] =
              r_block(l, tau, nu).adjoint() * stacked;
        }
      a = std::move(cur);
    }
    for (Index i = 0; i < nb; ++i)
      a[static_cast<std::size_t>(i)] =
          b_blocks[static_cast<std::size_t>(i)].adjoint() * a[static_cast<std::size_t>(i)];

    // V side downward: x_{S_nu} = V_{t,nu} c accumulated over tau.
    for (int l = center; l >= 1; --l) {
      Index nb_prev = Index(1) << levels;
      std::vector<Mat> prev(static_cast<std::size_t>(nb_prev));
      for (Index tau = 0; tau < (Index(1) << (l - 1)); ++tau)
        for (Index nu = 0; nu < (Index(1) << (levels - l + 1)); ++nu) {
          Index rank = v_rank(l - 1, tau, nu);
          prev[static_cast<std::size_t>(block_index(levels, l - 1, tau, nu))] =
              Mat::Zero(rank, k);
        }
      for (Index tau = 0; tau < (Index(1) << l); ++tau)
        for (Index nu = 0; nu < (Index(1) << (levels - l)); ++nu) {
          Mat expanded = w_block(l, tau, nu) * a[static_cast<std::size_t>(bidx(l, tau, nu))];
          Index ptau = tau / 2;
          Index top = v_rank(l - 1, ptau, 2 * nu);
          prev[static_cast<std::size_t>(block_index(levels, l - 1, ptau, 2 * nu))] +=
              expanded.topRows(top);
          prev[static_cast<std::size_t>(block_index(levels, l - 1, ptau, 2 * nu + 1))] +=
              expanded.bottomRows(expanded.rows() - top);
        }
      a = std::move(prev);
    }
    Mat xt(cols(), k);
    for (Index nu = 0; nu < nb; ++nu) {
      auto [b, e] = col_tree.node_range(levels, nu);
      xt.middleRows(b, e - b) =
          v_leaf[static_cast<std::size_t>(nu)] * a[static_cast<std::size_t>(nu)];
    }
    return col_tree.scatter_rows(xt);
  }

  // Plain-transpose apply, matching the black-box transpose semantics.
  Mat apply_transpose(const Mat& y) const {
    if constexpr (scalar_traits<Scalar>::is_complex) {
      return apply_adjoint(y.conjugate()).conjugate();
    } else {
      return apply_adjoint(y);
    }
  }

  // ---------------------------------------------------------------------
  // Dense expansion (independent of the level-sweep apply): assembles
  // U_{tau,nu} B_{tau,nu} V_{tau,nu}^H per center-level block.
  // ---------------------------------------------------------------------
  Mat to_dense(Index cap = Index(4096) * Index(4096)) const {
    if (rows() * cols() > cap)
      throw precondition_error("HybridButterfly::to_dense: m*n exceeds the dense cap");
    Mat dense = Mat::Zero(rows(), cols());
    for (Index tau = 0; tau < (Index(1) << center); ++tau)
      for (Index nu = 0; nu < (Index(1) << (levels - center)); ++nu) {
        Mat u = expand_u(center, tau, nu);
        Mat v = expand_v(center, tau, nu);
        auto [rb, re] = row_tree.node_range(center, tau);
        auto [cb, ce] = col_tree.node_range(levels - center, nu);
        dense.block(rb, cb, re - rb, ce - cb) = u * b_block(tau, nu) * v.adjoint();
      }
    // Undo the tree permutations.
    Mat out(rows(), cols());
    for (Index i = 0; i < rows(); ++i)
      for (Index j = 0; j < cols(); ++j)
        out(row_tree.to_original(i), col_tree.to_original(j)) = dense(i, j);
    return out;
  }

  // Dense nested column basis U_{tau,nu}, tau at `level` of the row tree.
  Mat expand_u(int level, Index tau, Index nu) const {
    if (level == levels) return u_leaf[static_cast<std::size_t>(tau)];
    Mat top = expand_u(level + 1, 2 * tau, nu / 2);
    Mat bot = expand_u(level + 1, 2 * tau + 1, nu / 2);
    const Mat& r = r_block(level, tau, nu);
    Mat out(top.rows() + bot.rows(), r.cols());
    out.topRows(top.rows()) = top * r.topRows(top.cols());
    out.bottomRows(bot.rows()) = bot * r.bottomRows(bot.cols());
    return out;
  }

  // Dense nested row basis V_{tau,nu}, nu at level L-`level` of the column
  // tree.
  Mat expand_v(int level, Index tau, Index nu) const {
    if (level == 0) return v_leaf[static_cast<std::size_t>(nu)];
    Mat top = expand_v(level - 1, tau / 2, 2 * nu);
    Mat bot = expand_v(level - 1, tau / 2, 2 * nu + 1);
    const Mat& w = w_block(level, tau, nu);
    Mat out(top.rows() + bot.rows(), w.cols());
    out.topRows(top.rows()) = top * w.topRows(top.cols());
    out.bottomRows(bot.rows()) = bot * w.bottomRows(bot.cols());
    return out;
  }

  // ---------------------------------------------------------------------
  // Accounting.
  // ---------------------------------------------------------------------
  struct MemoryReport {
    std::uint64_t nnz = 0;
    std::uint64_t bytes = 0;
    std::vector<std::pair<std::string, std::uint64_t>> per_factor;  // name -> nnz
  };

  MemoryReport memory_report() const {
    MemoryReport rep;
    auto add = [&](const std::string& name, const std::vector<Mat>& blocks) {
      std::uint64_t nnz = 0;
      for (const Mat& b : blocks) nnz += static_cast<std::uint64_t>(b.size());
      rep.per_factor.emplace_back(name, nnz);
      rep.nnz += nnz;
      // per-block shape descriptor overhead
      rep.bytes += blocks.size() * 2 * sizeof(std::uint64_t);
    };
    add("U^" + std::to_string(levels), u_leaf);
    for (int l = levels - 1; l >= center; --l)
      add("R^" + std::to_string(l), r_blocks[static_cast<std::size_t>(l - center)]);
    add("B^" + std::to_string(center), b_blocks);
    for (int l = center; l >= 1; --l)
      add("W^" + std::to_string(l), w_blocks[static_cast<std::size_t>(l - 1)]);
    add("V^0", v_leaf);
    rep.bytes += rep.nnz * sizeof(Scalar);
    return rep;
  }

  // Flop count of one apply column; proportional to nnz.
  std::uint64_t apply_flops_per_column() const { return 2 * memory_report().nnz; }

  // Largest block rank over all factors.
  Index max_rank() const {
    Index r = 0;
    for (const auto& b : u_leaf) r = std::max(r, b.cols());
    for (const auto& b : v_leaf) r = std::max(r, b.cols());
    for (const auto& lvl : r_blocks)
      for (const auto& b : lvl) r = std::max(r, b.cols());
    for (const auto& lvl : w_blocks)
      for (const auto& b : lvl) r = std::max(r, b.cols());
    return r;
  }

  // Structural validation: dimension chaining and block counts.
  void validate() const {
    Index nb = Index(1) << levels;
    if (center < 0 || center > levels)
      throw dimension_error("HybridButterfly: center level out of range");
    if (static_cast<Index>(u_leaf.size()) != nb || static_cast<Index>(v_leaf.size()) != nb ||
        static_cast<Index>(b_blocks.size()) != nb)
      throw dimension_error("HybridButterfly: leaf/core block count mismatch");
    if (static_cast<int>(r_blocks.size()) != levels - center ||
        static_cast<int>(w_blocks.size()) != center)
      throw dimension_error("HybridButterfly: factor level count mismatch");
    for (Index tau = 0; tau < nb; ++tau)
      if (u_leaf[static_cast<std::size_t>(tau)].rows() != row_tree.node_size(levels, tau))
        throw dimension_error("HybridButterfly: U leaf height mismatch");
    for (Index nu = 0; nu < nb; ++nu)
      if (v_leaf[static_cast<std::size_t>(nu)].rows() != col_tree.node_size(levels, nu))
        throw dimension_error("HybridButterfly: V leaf height mismatch");
    for (int l = center; l < levels; ++l)
      for (Index tau = 0; tau < (Index(1) << l); ++tau)
        for (Index nu = 0; nu < (Index(1) << (levels - l)); ++nu) {
          Index expect = u_rank(l + 1, 2 * tau, nu / 2) + u_rank(l + 1, 2 * tau + 1, nu / 2);
          if (r_block(l, tau, nu).rows() != expect)
            throw dimension_error("HybridButterfly: R block height mismatch");
        }
    for (int l = 1; l <= center; ++l)
      for (Index tau = 0; tau < (Index(1) << l); ++tau)
        for (Index nu = 0; nu < (Index(1) << (levels - l)); ++nu) {
          Index expect = v_rank(l - 1, tau / 2, 2 * nu) + v_rank(l - 1, tau / 2, 2 * nu + 1);
          if (w_block(l, tau, nu).rows() != expect)
            throw dimension_error("HybridButterfly: W block height mismatch");
        }
    for (Index tau = 0; tau < (Index(1) << center); ++tau)
      for (Index nu = 0; nu < (Index(1) << (levels - center)); ++nu) {
        const Mat& b = b_block(tau, nu);
        if (b.rows() != u_rank(center, tau, nu) || b.cols() != v_rank(center, tau, nu))
          throw dimension_error("HybridButterfly: B block shape mismatch");
      }
  }

  // V_{tau,nu}^H x_sub evaluated through the W/V chain without forming the
  // nested basis. x_sub holds the tree-ordered rows of S_nu.
  Mat v_chain_coefficients(int level, Index tau, Index nu, const Mat& x_sub) const {
    if (level == 0) return v_leaf[static_cast<std::size_t>(nu)].adjoint() * x_sub;
    auto [b1, e1] = col_tree.node_range(levels - level + 1, 2 * nu);
    Index top = e1 - b1;
    Mat a = v_chain_coefficients(level - 1, tau / 2, 2 * nu, x_sub.topRows(top));
    Mat b = v_chain_coefficients(level - 1, tau / 2, 2 * nu + 1,
                                 x_sub.bottomRows(x_sub.rows() - top));
    Mat stacked(a.rows() + b.rows(), x_sub.cols());
    stacked << a, b;
    return w_block(level, tau, nu).adjoint() * stacked;
  }

  // U_{tau,nu}^H x_sub through the U/R chain; x_sub holds the tree-ordered
  // rows of T_tau.
  Mat u_chain_coefficients(int level, Index tau, Index nu, const Mat& x_sub) const {
    if (level == levels) return u_leaf[static_cast<std::size_t>(tau)].adjoint() * x_sub;
    auto [b1, e1] = row_tree.node_range(level + 1, 2 * tau);
    Index top = e1 - b1;
    Mat a = u_chain_coefficients(level + 1, 2 * tau, nu / 2, x_sub.topRows(top));
    Mat b = u_chain_coefficients(level + 1, 2 * tau + 1, nu / 2,
                                 x_sub.bottomRows(x_sub.rows() - top));
    Mat stacked(a.rows() + b.rows(), x_sub.cols());
    stacked << a, b;
    return r_block(level, tau, nu).adjoint() * stacked;
  }

 private:
  // All V-side coefficients at the center level for a tree-ordered input.
  std::vector<Mat> v_coefficients_full(const Mat& xt) const {
    Index nb = Index(1) << levels;
    Index k = xt.cols();
    std::vector<Mat> coef(static_cast<std::size_t>(nb));
    for (Index nu = 0; nu < nb; ++nu) {
      auto [b, e] = col_tree.node_range(levels, nu);
      coef[static_cast<std::size_t>(nu)] =
          v_leaf[static_cast<std::size_t>(nu)].adjoint() * xt.middleRows(b, e - b);
    }
    for (int l = 1; l <= center; ++l) {
      std::vector<Mat> next(static_cast<std::size_t>(nb));
      for (Index tau = 0; tau < (Index(1) << l); ++tau)
        for (Index nu = 0; nu < (Index(1) << (levels - l)); ++nu) {
          const Mat& top = coef[static_cast<std::size_t>(block_index(levels, l - 1, tau / 2, 2 * nu))];
          const Mat& bot =
              coef[static_cast<std::size_t>(block_index(levels, l - 1, tau / 2, 2 * nu + 1))];
          Mat stacked(top.rows() + bot.rows(), k);
          stacked << top, bot;
          next[static_cast<std::size_t>(bidx(l, tau, nu))] =
              w_block(l, tau, nu).adjoint() * stacked;
        }
      coef = std::move(next);
    }
    return coef;
  }
};

}  // namespace bfly

#endif  // BFLY_BUTTERFLY_HPP
