#ifndef BFLY_LAYOUT_HPP
#define BFLY_LAYOUT_HPP

#include "bfly/butterfly.hpp"

namespace bfly {

enum class layout_kind { column, row, hybrid };

inline const char* layout_name(layout_kind k) {
  switch (k) {
    case layout_kind::column: return "column";
    case layout_kind::row: return "row";
    case layout_kind::hybrid: return "hybrid";
  }
  return "?";
}

inline layout_kind layout_from_name(const std::string& s) {
  if (s == "column") return layout_kind::column;
  if (s == "row") return layout_kind::row;
  if (s == "hybrid") return layout_kind::hybrid;
  throw precondition_error("unknown layout kind: " + s);
}

// Virtual-process layout description. The cost model assumes a constant
// block rank r and n = r * 2^L.
struct LayoutSpec {
  layout_kind kind = layout_kind::hybrid;
  int levels = 4;        // L
  Index rank = 8;        // r used by the closed-form model
  Index processes = 1;   // p, a power of two <= 2^L

  int log_p() const {
    int g = 0;
    while ((Index(1) << (g + 1)) <= processes) ++g;
    return g;
  }

  void validate() const {
    if (levels < 1) throw precondition_error("LayoutSpec: levels >= 1 required");
    if (rank < 1) throw precondition_error("LayoutSpec: rank >= 1 required");
    if (processes < 1 || (processes & (processes - 1)) != 0)
      throw precondition_error("LayoutSpec: process count must be a power of two");
    if (processes > (Index(1) << levels))
      throw precondition_error("LayoutSpec: process count must not exceed 2^L");
  }
};

// Per-process communication tallies for one matrix-vector multiplication.
// Volumes are in scalars; self-copies during the all-to-all relayout count
// toward volume but not toward the message count.
struct CommCostReport {
  double exchange_volume = 0.0;
  std::int64_t exchange_msgs = 0;
  double alltoall_volume = 0.0;
  std::int64_t alltoall_msgs = 0;

  // alpha-beta estimate: latency per message plus inverse bandwidth per
  // scalar. No wall-clock claim; for comparing layouts only.
  double model_time(double alpha, double beta) const {
    return alpha * double(exchange_msgs + alltoall_msgs) +
           beta * (exchange_volume + alltoall_volume);
  }
};

// Closed-form model. Column/row layouts exchange at every one of the
// log2(p) owner bits; the hybrid layout only exchanges for the bits not
// covered by either half of the level range.
inline CommCostReport comm_cost(const LayoutSpec& spec) {
  spec.validate();
  CommCostReport rep;
  double state = double(spec.rank) * double(Index(1) << spec.levels);  // r * 2^L
  double per_proc = state / double(spec.processes);
  int g = spec.log_p();
  std::int64_t exch;
  if (spec.kind == layout_kind::hybrid)
    exch = std::max<std::int64_t>(0, 2 * std::int64_t(g) - spec.levels);
  else
    exch = g;
  rep.exchange_msgs = exch;
  rep.exchange_volume = per_proc * double(exch);
  rep.alltoall_volume = per_proc;
  rep.alltoall_msgs = std::min<std::int64_t>((Index(1) << spec.levels) / spec.processes,
                                             spec.processes - 1);
  return rep;
}

namespace detail {

inline Index bit_reverse(Index v, int bits) {
  Index out = 0;
  for (int i = 0; i < bits; ++i) out |= ((v >> i) & 1) << (bits - 1 - i);
  return out;
}

// Column-wise addressing: the L-bit block label is tau's bits followed by
// nu's bits reversed; the owner is the top log2(p) bits. Row-wise addressing
// mirrors the two trees.
inline int column_owner(int levels, int g, int level, Index tau, Index nu) {
  Index label = (tau << (levels - level)) | bit_reverse(nu, levels - level);
  return static_cast<int>(label >> (levels - g));
}
inline int row_owner(int levels, int g, int level, Index tau, Index nu) {
  Index label = (nu << level) | bit_reverse(tau, level);
  return static_cast<int>(label >> (levels - g));
}

}  // namespace detail

// Owning process for every factor block, indexed like the butterfly's own
// flat block storage.
struct OwnershipMap {
  int processes = 1;
  int levels = 0;
  int center = 0;
  std::vector<int> u_leaf;                // by tau
  std::vector<int> v_leaf;                // by nu
  std::vector<std::vector<int>> r_owner;  // [l - center][block index]
  std::vector<std::vector<int>> w_owner;  // [l - 1][block index]
  std::vector<int> b_owner;               // by block index at the center

  int r_at(int level, Index tau, Index nu) const {
    return r_owner[static_cast<std::size_t>(level - center)][static_cast<std::size_t>(
        HybridButterfly<double>::block_index(levels, level, tau, nu))];
  }
  int w_at(int level, Index tau, Index nu) const {
    return w_owner[static_cast<std::size_t>(level - 1)][static_cast<std::size_t>(
        HybridButterfly<double>::block_index(levels, level, tau, nu))];
  }
  int b_at(Index tau, Index nu) const {
    return b_owner[static_cast<std::size_t>(
        HybridButterfly<double>::block_index(levels, center, tau, nu))];
  }
};

// The hybrid layout keeps the U-side factors column-addressed and the
// V-side factors row-addressed; the core blocks live with their W blocks.
template <typename Scalar>
OwnershipMap assign_ownership(const HybridButterfly<Scalar>& bf, const LayoutSpec& spec) {
  spec.validate();
  if (spec.levels != bf.levels)
    throw dimension_error("assign_ownership: spec level count does not match the butterfly");
  bf.validate();
  const int L = bf.levels;
  const int g = spec.log_p();
  const Index nb = Index(1) << L;
  bool u_col = spec.kind != layout_kind::row;      // column or hybrid
  bool v_row = spec.kind != layout_kind::column;   // row or hybrid

  OwnershipMap map;
  map.processes = static_cast<int>(spec.processes);
  map.levels = L;
  map.center = bf.center;
  map.u_leaf.resize(static_cast<std::size_t>(nb));
  map.v_leaf.resize(static_cast<std::size_t>(nb));
  for (Index tau = 0; tau < nb; ++tau)
    map.u_leaf[static_cast<std::size_t>(tau)] =
        u_col ? detail::column_owner(L, g, L, tau, 0) : detail::row_owner(L, g, L, tau, 0);
  for (Index nu = 0; nu < nb; ++nu)
    map.v_leaf[static_cast<std::size_t>(nu)] =
        v_row ? detail::row_owner(L, g, 0, 0, nu) : detail::column_owner(L, g, 0, 0, nu);
  map.r_owner.resize(static_cast<std::size_t>(L - bf.center));
  for (int l = bf.center; l < L; ++l) {
    auto& lvl = map.r_owner[static_cast<std::size_t>(l - bf.center)];
    lvl.resize(static_cast<std::size_t>(nb));
    for (Index tau = 0; tau < (Index(1) << l); ++tau)
      for (Index nu = 0; nu < (Index(1) << (L - l)); ++nu)
        lvl[static_cast<std::size_t>(bf.bidx(l, tau, nu))] =
            u_col ? detail::column_owner(L, g, l, tau, nu) : detail::row_owner(L, g, l, tau, nu);
  }
  map.w_owner.resize(static_cast<std::size_t>(bf.center));
  for (int l = 1; l <= bf.center; ++l) {
    auto& lvl = map.w_owner[static_cast<std::size_t>(l - 1)];
    lvl.resize(static_cast<std::size_t>(nb));
    for (Index tau = 0; tau < (Index(1) << l); ++tau)
      for (Index nu = 0; nu < (Index(1) << (L - l)); ++nu)
        lvl[static_cast<std::size_t>(bf.bidx(l, tau, nu))] =
            v_row ? detail::row_owner(L, g, l, tau, nu) : detail::column_owner(L, g, l, tau, nu);
  }
  map.b_owner.resize(static_cast<std::size_t>(nb));
  for (Index tau = 0; tau < (Index(1) << bf.center); ++tau)
    for (Index nu = 0; nu < (Index(1) << (L - bf.center)); ++nu)
      map.b_owner[static_cast<std::size_t>(bf.bidx(bf.center, tau, nu))] =
          v_row ? detail::row_owner(L, g, bf.center, tau, nu)
                : detail::column_owner(L, g, bf.center, tau, nu);
  return map;
}

// Runs the apply sweep over the ownership map, tallying one message per
// process for every level transition whose producer and consumer blocks
// live on different processes, plus the single all-to-all relayout (at the
// input for column, the output for row, the center handoff for hybrid).
// Volumes are per input column; the numerical result is the plain apply.
template <typename Scalar>
std::pair<Matrix<Scalar>, CommCostReport> simulated_parallel_apply(
    const HybridButterfly<Scalar>& bf, const Matrix<Scalar>& x, const LayoutSpec& spec) {
  OwnershipMap map = assign_ownership(bf, spec);
  const int L = bf.levels;
  const Index nb = Index(1) << L;
  const double p = double(spec.processes);
  CommCostReport rep;

  auto v_state = [&](int l) {
    double s = 0;
    for (Index tau = 0; tau < (Index(1) << l); ++tau)
      for (Index nu = 0; nu < (Index(1) << (L - l)); ++nu) s += double(bf.v_rank(l, tau, nu));
    return s;
  };
  auto u_state = [&](int l) {
    double s = 0;
    for (Index tau = 0; tau < (Index(1) << l); ++tau)
      for (Index nu = 0; nu < (Index(1) << (L - l)); ++nu) s += double(bf.u_rank(l, tau, nu));
    return s;
  };
  auto v_coef_owner = [&](int l, Index tau, Index nu) {
    return l == 0 ? map.v_leaf[static_cast<std::size_t>(nu)] : map.w_at(l, tau, nu);
  };

  // V side: level l-1 coefficients feed the W blocks at level l.
  for (int l = 1; l <= bf.center; ++l) {
    bool moved = false;
    for (Index tau = 0; tau < (Index(1) << l) && !moved; ++tau)
      for (Index nu = 0; nu < (Index(1) << (L - l)) && !moved; ++nu) {
        int consumer = map.w_at(l, tau, nu);
        moved = v_coef_owner(l - 1, tau / 2, 2 * nu) != consumer ||
                v_coef_owner(l - 1, tau / 2, 2 * nu + 1) != consumer;
      }
    if (moved) {
      rep.exchange_msgs += 1;
      rep.exchange_volume += v_state(l - 1) / p;
    }
  }

  // U side: R blocks at level l reduce into the level l+1 consumers.
  for (int l = bf.center; l < L; ++l) {
    bool moved = false;
    for (Index tau = 0; tau < (Index(1) << (l + 1)) && !moved; ++tau)
      for (Index nu = 0; nu < (Index(1) << (L - l - 1)) && !moved; ++nu) {
        int consumer = (l + 1 == L) ? map.u_leaf[static_cast<std::size_t>(tau)]
                                    : map.r_at(l + 1, tau, nu);
        moved = map.r_at(l, tau / 2, 2 * nu) != consumer ||
                map.r_at(l, tau / 2, 2 * nu + 1) != consumer;
      }
    if (moved) {
      rep.exchange_msgs += 1;
      rep.exchange_volume += u_state(l) / p;
    }
  }

  // One all-to-all relayout per multiply.
  switch (spec.kind) {
    case layout_kind::column:
      rep.alltoall_volume = double(bf.cols()) / p;
      break;
    case layout_kind::row:
      rep.alltoall_volume = double(bf.rows()) / p;
      break;
    case layout_kind::hybrid:
      rep.alltoall_volume = u_state(bf.center) / p;
      break;
  }
  rep.alltoall_msgs = std::min<std::int64_t>(nb / spec.processes, spec.processes - 1);

  return {bf.apply(x), rep};
}

}  // namespace bfly

#endif  // BFLY_LAYOUT_HPP
