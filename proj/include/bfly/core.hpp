#ifndef BFLY_CORE_HPP
#define BFLY_CORE_HPP

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <future>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace bfly {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using RealMatrix = Matrix<double>;
using ComplexMatrix = Matrix<std::complex<double>>;

template <typename Scalar>
struct scalar_traits {
  static constexpr bool is_complex = false;
  static constexpr const char* name = "real64";
};

template <>
struct scalar_traits<std::complex<double>> {
  static constexpr bool is_complex = true;
  static constexpr const char* name = "complex128";
};

// Error hierarchy. Structural errors are contract violations (dimensions,
// sequencing); format errors come from the serialization layer.
struct error : std::runtime_error {
  explicit error(const std::string& msg) : std::runtime_error(msg) {}
};
struct precondition_error : error {
  explicit precondition_error(const std::string& msg) : error(msg) {}
};
struct dimension_error : error {
  explicit dimension_error(const std::string& msg) : error(msg) {}
};
struct sequencing_error : error {
  explicit sequencing_error(const std::string& msg) : error(msg) {}
};
struct format_error : error {
  explicit format_error(const std::string& msg) : error(msg) {}
};
struct conditioning_error : error {
  explicit conditioning_error(const std::string& msg) : error(msg) {}
};

// ---------------------------------------------------------------------------
// Deterministic, splittable random number generation.
//
// Every random draw in the library is derived from a user seed through
// seed_mix, so per-node probes are reproducible regardless of the order in
// which nodes are processed.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t seed_mix(std::uint64_t seed) {
  std::uint64_t s = seed;
  return splitmix64(s);
}

template <typename... Rest>
std::uint64_t seed_mix(std::uint64_t seed, std::uint64_t word, Rest... rest) {
  std::uint64_t s = seed;
  std::uint64_t h = splitmix64(s) ^ (word + 0x9e3779b97f4a7c15ULL);
  return seed_mix(h, rest...);
}

// Phase tags used when deriving per-node probe seeds.
enum class probe_phase : std::uint64_t {
  leaf_row = 1,
  leaf_col = 2,
  transfer_w = 3,
  transfer_r = 4,
  error_probe = 5,
  synthetic = 6,
};

// Stream of N(0,1) doubles via Box-Muller on splitmix64 output. Hand rolled
// so that the byte stream is identical across standard library versions.
class gaussian_stream {
 public:
  explicit gaussian_stream(std::uint64_t seed) : state_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  double uniform01() {
    // (0,1]: never returns 0, so log() above is safe.
    std::uint64_t bits = splitmix64(state_);
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1p-53;
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

template <typename Scalar>
Scalar draw_gaussian(gaussian_stream& g) {
  if constexpr (scalar_traits<Scalar>::is_complex) {
    double re = g.next();
    double im = g.next();
    return Scalar(re, im);
  } else {
    return g.next();
  }
}

// Runs fn(i) for i in [0, count). Items are independent; the caller is
// responsible for making per-item work write to disjoint data.
inline void parallel_for(Index count, int threads, const std::function<void(Index)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{0};
  auto worker = [&] {
    for (;;) {
      Index i = next.fetch_add(1);
      if (i >= count) return;
      fn(i);
    }
  };
  int nw = static_cast<int>(std::min<Index>(threads, count));
  std::vector<std::thread> pool;
  pool.reserve(nw);
  for (int t = 0; t < nw; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace bfly

#endif  // BFLY_CORE_HPP
