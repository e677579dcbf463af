#ifndef BFLY_TREE_HPP
#define BFLY_TREE_HPP

#include <algorithm>
#include <array>
#include <fstream>
#include <numeric>
#include <sstream>

#include "bfly/core.hpp"

namespace bfly {

// A set of n points in 1, 2 or 3 dimensions.
struct PointSet {
  int dim = 1;
  std::vector<std::array<double, 3>> coords;  // unused trailing axes are 0

  Index size() const { return static_cast<Index>(coords.size()); }

  void validate() const {
    if (dim < 1 || dim > 3) throw precondition_error("PointSet: dim must be 1..3");
    if (coords.empty()) throw precondition_error("PointSet: at least one point required");
    for (const auto& c : coords)
      for (int a = 0; a < dim; ++a)
        if (!std::isfinite(c[a])) throw precondition_error("PointSet: non-finite coordinate");
  }

  static PointSet line(Index n) {
    PointSet ps;
    ps.dim = 1;
    ps.coords.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) ps.coords[static_cast<std::size_t>(i)] = {double(i), 0.0, 0.0};
    return ps;
  }

  // One point per line, dim whitespace- or comma-separated columns.
  static PointSet from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error("PointSet: cannot open " + path);
    PointSet ps;
    ps.dim = 0;
    std::string line;
    while (std::getline(in, line)) {
      for (char& c : line)
        if (c == ',') c = ' ';
      std::istringstream ls(line);
      std::array<double, 3> pt{0.0, 0.0, 0.0};
      int d = 0;
      double v;
      while (d < 3 && (ls >> v)) pt[static_cast<std::size_t>(d++)] = v;
      if (d == 0) continue;  // blank line
      if (ps.dim == 0) ps.dim = d;
      if (d != ps.dim) throw format_error("PointSet: inconsistent column count in " + path);
      ps.coords.push_back(pt);
    }
    if (ps.dim == 0) throw format_error("PointSet: no points in " + path);
    ps.validate();
    return ps;
  }
};

struct NodeRef {
  int level = 0;
  Index pos = 0;
};

// Complete binary partition tree over a point set, built by recursive
// bisection. Node (l, j) owns a contiguous half-open range of the permuted
// ordering; to_original maps tree slot -> original point index.
class PartitionTree {
 public:
  PartitionTree() = default;

  static PartitionTree build(const PointSet& points, int levels) {
    points.validate();
    Index n = points.size();
    if (levels < 0 || (Index(1) << levels) > n)
      throw precondition_error("PartitionTree: 2^L must not exceed the point count");
    PartitionTree t;
    t.levels_ = levels;
    t.n_ = n;
    t.to_original_.resize(static_cast<std::size_t>(n));
    std::iota(t.to_original_.begin(), t.to_original_.end(), Index(0));
    t.range_begin_.resize(static_cast<std::size_t>(levels) + 1);
    t.range_begin_[0] = {0, n};
    for (int l = 0; l < levels; ++l) {
      const auto& cur = t.range_begin_[static_cast<std::size_t>(l)];
      std::vector<Index> next;
      next.reserve(cur.size() * 2 - 1);
      for (std::size_t j = 0; j + 1 < cur.size(); ++j) {
        Index begin = cur[j], end = cur[j + 1];
        Index mid = t.split(points, begin, end);
        next.push_back(begin);
        next.push_back(mid);
      }
      next.push_back(n);
      t.range_begin_[static_cast<std::size_t>(l) + 1] = std::move(next);
    }
    return t;
  }

  int levels() const { return levels_; }
  Index size() const { return n_; }

  Index nodes_at(int level) const { return Index(1) << level; }

  std::pair<Index, Index> node_range(int level, Index pos) const {
    check_node(level, pos);
    const auto& b = range_begin_[static_cast<std::size_t>(level)];
    return {b[static_cast<std::size_t>(pos)], b[static_cast<std::size_t>(pos) + 1]};
  }

  Index node_size(int level, Index pos) const {
    auto [b, e] = node_range(level, pos);
    return e - b;
  }

  std::pair<NodeRef, NodeRef> children(NodeRef node) const {
    check_node(node.level, node.pos);
    if (node.level >= levels_) throw precondition_error("PartitionTree: leaf has no children");
    return {NodeRef{node.level + 1, 2 * node.pos}, NodeRef{node.level + 1, 2 * node.pos + 1}};
  }

  NodeRef parent(NodeRef node) const {
    check_node(node.level, node.pos);
    if (node.level <= 0) throw precondition_error("PartitionTree: root has no parent");
    return NodeRef{node.level - 1, node.pos / 2};
  }

  // Tree slot -> original index.
  Index to_original(Index slot) const { return to_original_[static_cast<std::size_t>(slot)]; }
  const std::vector<Index>& permutation() const { return to_original_; }

  // Gathers the tree-ordered rows of an original-order matrix.
  template <typename Scalar>
  Matrix<Scalar> gather_rows(const Matrix<Scalar>& x) const {
    if (x.rows() != n_) throw dimension_error("PartitionTree: row count mismatch in gather");
    Matrix<Scalar> out(n_, x.cols());
    for (Index i = 0; i < n_; ++i) out.row(i) = x.row(to_original_[static_cast<std::size_t>(i)]);
    return out;
  }

  // Scatters tree-ordered rows back to the original ordering.
  template <typename Scalar>
  Matrix<Scalar> scatter_rows(const Matrix<Scalar>& x) const {
    if (x.rows() != n_) throw dimension_error("PartitionTree: row count mismatch in scatter");
    Matrix<Scalar> out(n_, x.cols());
    for (Index i = 0; i < n_; ++i) out.row(to_original_[static_cast<std::size_t>(i)]) = x.row(i);
    return out;
  }

  void set_permutation(std::vector<Index> perm, std::vector<std::vector<Index>> range_begin,
                       int levels, Index n) {
    to_original_ = std::move(perm);
    range_begin_ = std::move(range_begin);
    levels_ = levels;
    n_ = n;
  }
  const std::vector<std::vector<Index>>& range_table() const { return range_begin_; }

  // Default depth: leaf sizes land in [leaf_cap, 2*leaf_cap).
  static int depth_for(Index n, Index leaf_cap) {
    if (leaf_cap < 1) throw precondition_error("depth_for: leaf_cap >= 1 required");
    int levels = 0;
    while ((n >> (levels + 1)) >= leaf_cap) ++levels;
    return levels;
  }

 private:
  void check_node(int level, Index pos) const {
    if (level < 0 || level > levels_ || pos < 0 || pos >= (Index(1) << level))
      throw precondition_error("PartitionTree: node out of range");
  }

  // Sorts [begin, end) of the working permutation along the longest
  // bounding-box axis and splits it into two size-balanced halves.
  Index split(const PointSet& points, Index begin, Index end) {
    double lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
    for (int a = 0; a < points.dim; ++a) {
      lo[a] = std::numeric_limits<double>::infinity();
      hi[a] = -std::numeric_limits<double>::infinity();
    }
    for (Index i = begin; i < end; ++i) {
      const auto& c = points.coords[static_cast<std::size_t>(to_original_[static_cast<std::size_t>(i)])];
      for (int a = 0; a < points.dim; ++a) {
        lo[a] = std::min(lo[a], c[a]);
        hi[a] = std::max(hi[a], c[a]);
      }
    }
    int axis = 0;
    for (int a = 1; a < points.dim; ++a)
      if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;
    auto first = to_original_.begin() + begin;
    auto last = to_original_.begin() + end;
    std::stable_sort(first, last, [&](Index a, Index b) {
      return points.coords[static_cast<std::size_t>(a)][axis] <
             points.coords[static_cast<std::size_t>(b)][axis];
    });
    return begin + (end - begin + 1) / 2;
  }

  int levels_ = 0;
  Index n_ = 0;
  std::vector<Index> to_original_;
  // range_begin_[l] has 2^l + 1 entries; node (l, j) spans
  // [range_begin_[l][j], range_begin_[l][j+1]).
  std::vector<std::vector<Index>> range_begin_;
};

inline PartitionTree build_tree(const PointSet& points, int levels) {
  return PartitionTree::build(points, levels);
}

}  // namespace bfly

#endif  // BFLY_TREE_HPP
