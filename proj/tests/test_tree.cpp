#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "bfly/linalg.hpp"
#include "bfly/tree.hpp"

using namespace bfly;

TEST_CASE("bisection of an equispaced line") {
  PointSet line = PointSet::line(8);
  SECTION("full depth gives singleton leaves in sorted order") {
    auto t = build_tree(line, 3);
    for (Index j = 0; j < 8; ++j) {
      REQUIRE(t.node_size(3, j) == 1);
      REQUIRE(t.to_original(j) == j);
    }
  }
  SECTION("one level splits in half") {
    auto t = build_tree(line, 1);
    REQUIRE(t.node_range(1, 0) == std::pair<Index, Index>{0, 4});
    REQUIRE(t.node_range(1, 1) == std::pair<Index, Index>{4, 8});
  }
  SECTION("too deep is rejected") {
    REQUIRE_THROWS_AS(build_tree(line, 4), precondition_error);
  }
}

TEST_CASE("circle points split into equal leaves") {
  PointSet ps;
  ps.dim = 2;
  for (int i = 0; i < 64; ++i) {
    double a = 2.0 * M_PI * double(i) / 64.0;
    ps.coords.push_back({std::cos(a), std::sin(a), 0.0});
  }
  auto t = build_tree(ps, 4);
  for (Index j = 0; j < 16; ++j) REQUIRE(t.node_size(4, j) == 4);
}

TEST_CASE("parent and child indexing") {
  auto t = build_tree(PointSet::line(64), 5);
  auto [c1, c2] = t.children({1, 1});
  REQUIRE(c1.level == 2);
  REQUIRE(c1.pos == 2);
  REQUIRE(c2.pos == 3);
  NodeRef p = t.parent({2, 3});
  REQUIRE(p.level == 1);
  REQUIRE(p.pos == 1);
  // Round trip over every non-leaf node.
  for (int l = 0; l < 5; ++l)
    for (Index j = 0; j < (Index(1) << l); ++j) {
      auto [a, b] = t.children({l, j});
      REQUIRE(t.parent(a).pos == j);
      REQUIRE(t.parent(b).pos == j);
      REQUIRE(t.parent(a).level == l);
    }
  REQUIRE_THROWS_AS(t.children({5, 0}), precondition_error);
  REQUIRE_THROWS_AS(t.parent({0, 0}), precondition_error);
}

TEST_CASE("level ranges tile the index space and balance") {
  PointSet ps;
  ps.dim = 1;
  for (int i = 0; i < 37; ++i) ps.coords.push_back({std::sin(double(i) * 1.7), 0.0, 0.0});
  auto t = build_tree(ps, 3);
  for (int l = 0; l <= 3; ++l) {
    Index covered = 0;
    Index prev_end = 0;
    for (Index j = 0; j < (Index(1) << l); ++j) {
      auto [b, e] = t.node_range(l, j);
      REQUIRE(b == prev_end);
      prev_end = e;
      covered += e - b;
    }
    REQUIRE(covered == 37);
  }
  Index mn = 37, mx = 0;
  for (Index j = 0; j < 8; ++j) {
    mn = std::min(mn, t.node_size(3, j));
    mx = std::max(mx, t.node_size(3, j));
  }
  REQUIRE(mx - mn <= 1);
}

TEST_CASE("building on tree-ordered points yields the identity permutation") {
  PointSet ps;
  ps.dim = 2;
  for (int i = 0; i < 32; ++i)
    ps.coords.push_back({std::cos(double(i) * 2.3), std::sin(double(i) * 0.9), 0.0});
  auto t = build_tree(ps, 3);
  PointSet permuted;
  permuted.dim = 2;
  for (Index i = 0; i < 32; ++i)
    permuted.coords.push_back(ps.coords[static_cast<std::size_t>(t.to_original(i))]);
  auto t2 = build_tree(permuted, 3);
  for (Index i = 0; i < 32; ++i) REQUIRE(t2.to_original(i) == i);
}

TEST_CASE("gather and scatter are inverse row permutations") {
  auto t = build_tree(PointSet::line(16), 2);
  Matrix<double> x = gaussian_matrix<double>(16, 3, 5);
  REQUIRE((t.scatter_rows(t.gather_rows(x)) - x).norm() == 0.0);
}

TEST_CASE("point sets load from delimited text") {
  std::string path = "test_points_tmp.csv";
  {
    std::ofstream out(path);
    out << "0.0, 1.0\n2.5, -1.0\n\n3.0 4.0\n";
  }
  PointSet ps = PointSet::from_csv(path);
  std::remove(path.c_str());
  REQUIRE(ps.dim == 2);
  REQUIRE(ps.size() == 3);
  REQUIRE(ps.coords[1][0] == 2.5);
  REQUIRE(ps.coords[2][1] == 4.0);

  std::string bad = "test_points_bad_tmp.csv";
  {
    std::ofstream out(bad);
    out << "1.0 2.0\n1.0\n";
  }
  REQUIRE_THROWS_AS(PointSet::from_csv(bad), format_error);
  std::remove(bad.c_str());
}

TEST_CASE("default depth keeps leaves in the prescribed band") {
  REQUIRE(PartitionTree::depth_for(1024, 16) == 6);   // leaves of 16
  REQUIRE(PartitionTree::depth_for(1000, 16) == 5);  // leaves in [16, 32)
}
