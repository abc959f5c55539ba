#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace mistp {

/// SplitMix64 finalizer. Used to fan one master seed out into independent
/// stream seeds; changing one input bit changes about half the output bits.
constexpr std::uint64_t mix_seed(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  return mix_seed(mix_seed(seed) ^ mix_seed(tag + 0x632BE59BD9B4E019ULL));
}

/// Stream tags for `mix_seed(seed, tag)`.
namespace stream_tag {
inline constexpr std::uint64_t directions = 0xD1;
inline constexpr std::uint64_t batches = 0xB2;
inline constexpr std::uint64_t start_point = 0x50;
inline constexpr std::uint64_t data = 0xDA;
}  // namespace stream_tag

/// A seeded pseudo-random stream. Two streams built from equal seeds produce
/// identical sequences.
class RngStream {
 public:
  using engine_type = std::mt19937_64;

  explicit RngStream(std::uint64_t seed = 0) : engine_(seed), seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  double normal() { return normal_(engine_); }

  double uniform01() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  /// Uniform integer on [0, n). Requires n >= 1.
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  Eigen::VectorXd normal_vector(Eigen::Index d) {
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = normal();
    return v;
  }

  engine_type& engine() noexcept { return engine_; }

  friend bool operator==(const RngStream& a, const RngStream& b) {
    return a.engine_ == b.engine_ && a.normal_ == b.normal_;
  }

 private:
  engine_type engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uint64_t seed_;
};

}  // namespace mistp
