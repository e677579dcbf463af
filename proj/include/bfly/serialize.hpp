#ifndef BFLY_SERIALIZE_HPP
#define BFLY_SERIALIZE_HPP

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "bfly/butterfly.hpp"

namespace bfly {

static_assert(std::endian::native == std::endian::little,
              "container format is little-endian; big-endian hosts unsupported");

namespace detail {

constexpr std::uint32_t kMagic = 0x31484642u;  // "BFH1"
constexpr std::uint32_t kVersion = 1;

inline void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void put_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline std::uint32_t get_u32(std::istream& is, const char* section) {
  std::uint32_t v;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v))
    throw format_error(std::string("container truncated in section ") + section + " at offset " +
                       std::to_string(is.tellg()));
  return v;
}
inline std::uint64_t get_u64(std::istream& is, const char* section) {
  std::uint64_t v;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v))
    throw format_error(std::string("container truncated in section ") + section + " at offset " +
                       std::to_string(is.tellg()));
  return v;
}

template <typename Scalar>
void put_block(std::ostream& os, const Matrix<Scalar>& m) {
  put_u64(os, static_cast<std::uint64_t>(m.rows()));
  put_u64(os, static_cast<std::uint64_t>(m.cols()));
  os.write(reinterpret_cast<const char*>(m.data()),
           static_cast<std::streamsize>(sizeof(Scalar) * static_cast<std::size_t>(m.size())));
}

template <typename Scalar>
Matrix<Scalar> get_block(std::istream& is, const char* section) {
  std::uint64_t rows = get_u64(is, section);
  std::uint64_t cols = get_u64(is, section);
  Matrix<Scalar> m(static_cast<Index>(rows), static_cast<Index>(cols));
  std::streamsize bytes = static_cast<std::streamsize>(sizeof(Scalar) * rows * cols);
  if (!is.read(reinterpret_cast<char*>(m.data()), bytes))
    throw format_error(std::string("container truncated in section ") + section + " at offset " +
                       std::to_string(is.tellg()));
  return m;
}

inline void put_tree(std::ostream& os, const PartitionTree& t) {
  put_u64(os, static_cast<std::uint64_t>(t.size()));
  put_u32(os, static_cast<std::uint32_t>(t.levels()));
  for (Index i = 0; i < t.size(); ++i) put_u64(os, static_cast<std::uint64_t>(t.to_original(i)));
  for (const auto& level : t.range_table()) {
    for (Index b : level) put_u64(os, static_cast<std::uint64_t>(b));
  }
}

inline PartitionTree get_tree(std::istream& is, const char* section) {
  std::uint64_t n = get_u64(is, section);
  std::uint32_t levels = get_u32(is, section);
  std::vector<Index> perm(n);
  for (auto& v : perm) v = static_cast<Index>(get_u64(is, section));
  std::vector<std::vector<Index>> ranges(levels + 1);
  for (std::uint32_t l = 0; l <= levels; ++l) {
    ranges[l].resize((std::size_t(1) << l) + 1);
    for (auto& v : ranges[l]) v = static_cast<Index>(get_u64(is, section));
  }
  PartitionTree t;
  t.set_permutation(std::move(perm), std::move(ranges), static_cast<int>(levels),
                    static_cast<Index>(n));
  return t;
}

}  // namespace detail

// Summary readable from the container header without loading blocks.
struct ContainerInfo {
  std::uint32_t version = 0;
  std::uint8_t scalar_tag = 0;  // 0 = real64, 1 = complex128
  int levels = 0;
  int center = 0;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  std::uint64_t nnz = 0;
  std::uint64_t max_rank = 0;
};

template <typename Scalar>
void serialize(const HybridButterfly<Scalar>& bf, std::ostream& os) {
  using detail::put_u32;
  using detail::put_u64;
  put_u32(os, detail::kMagic);
  put_u32(os, detail::kVersion);
  os.put(scalar_traits<Scalar>::is_complex ? 1 : 0);
  put_u32(os, static_cast<std::uint32_t>(bf.levels));
  put_u32(os, static_cast<std::uint32_t>(bf.center));
  put_u64(os, static_cast<std::uint64_t>(bf.rows()));
  put_u64(os, static_cast<std::uint64_t>(bf.cols()));
  auto rep = bf.memory_report();
  put_u64(os, rep.nnz);
  put_u64(os, static_cast<std::uint64_t>(bf.max_rank()));
  detail::put_tree(os, bf.row_tree);
  detail::put_tree(os, bf.col_tree);
  // Factor blocks in deterministic (level, tau, nu) order.
  for (const auto& b : bf.u_leaf) detail::put_block(os, b);
  for (const auto& lvl : bf.r_blocks)
    for (const auto& b : lvl) detail::put_block(os, b);
  for (const auto& b : bf.b_blocks) detail::put_block(os, b);
  for (const auto& lvl : bf.w_blocks)
    for (const auto& b : lvl) detail::put_block(os, b);
  for (const auto& b : bf.v_leaf) detail::put_block(os, b);
}

inline ContainerInfo read_header(std::istream& is) {
  ContainerInfo info;
  std::uint32_t magic = detail::get_u32(is, "header");
  if (magic != detail::kMagic) throw format_error("bad container magic");
  info.version = detail::get_u32(is, "header");
  if (info.version != detail::kVersion)
    throw format_error("unsupported container version " + std::to_string(info.version));
  int tag = is.get();
  if (tag < 0) throw format_error("container truncated in section header");
  info.scalar_tag = static_cast<std::uint8_t>(tag);
  info.levels = static_cast<int>(detail::get_u32(is, "header"));
  info.center = static_cast<int>(detail::get_u32(is, "header"));
  info.rows = detail::get_u64(is, "header");
  info.cols = detail::get_u64(is, "header");
  info.nnz = detail::get_u64(is, "header");
  info.max_rank = detail::get_u64(is, "header");
  return info;
}

template <typename Scalar>
HybridButterfly<Scalar> deserialize(std::istream& is) {
  ContainerInfo info = read_header(is);
  if (info.scalar_tag != (scalar_traits<Scalar>::is_complex ? 1 : 0))
    throw format_error("container scalar type does not match the requested type");
  HybridButterfly<Scalar> bf;
  bf.levels = info.levels;
  bf.center = info.center;
  bf.row_tree = detail::get_tree(is, "row_tree");
  bf.col_tree = detail::get_tree(is, "col_tree");
  Index nb = Index(1) << bf.levels;
  bf.u_leaf.resize(static_cast<std::size_t>(nb));
  for (auto& b : bf.u_leaf) b = detail::get_block<Scalar>(is, "U");
  bf.r_blocks.resize(static_cast<std::size_t>(bf.levels - bf.center));
  for (auto& lvl : bf.r_blocks) {
    lvl.resize(static_cast<std::size_t>(nb));
    for (auto& b : lvl) b = detail::get_block<Scalar>(is, "R");
  }
  bf.b_blocks.resize(static_cast<std::size_t>(nb));
  for (auto& b : bf.b_blocks) b = detail::get_block<Scalar>(is, "B");
  bf.w_blocks.resize(static_cast<std::size_t>(bf.center));
  for (auto& lvl : bf.w_blocks) {
    lvl.resize(static_cast<std::size_t>(nb));
    for (auto& b : lvl) b = detail::get_block<Scalar>(is, "W");
  }
  bf.v_leaf.resize(static_cast<std::size_t>(nb));
  for (auto& b : bf.v_leaf) b = detail::get_block<Scalar>(is, "V");
  bf.validate();
  return bf;
}

template <typename Scalar>
void save_container(const HybridButterfly<Scalar>& bf, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw error("cannot open " + path + " for writing");
  serialize(bf, os);
}

template <typename Scalar>
HybridButterfly<Scalar> load_container(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw error("cannot open " + path);
  return deserialize<Scalar>(is);
}

inline ContainerInfo inspect_container(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw error("cannot open " + path);
  return read_header(is);
}

template <typename Scalar>
std::string serialize_to_string(const HybridButterfly<Scalar>& bf) {
  std::ostringstream os(std::ios::binary);
  serialize(bf, os);
  return os.str();
}

}  // namespace bfly

#endif  // BFLY_SERIALIZE_HPP
