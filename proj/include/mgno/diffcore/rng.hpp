/// @file rng.hpp
/// @brief Counter-based, splittable random number generator (Philox4x32-10).
///
/// Every draw is a pure function of (seed, stream, counter), so sequences are
/// reproducible across runs and platforms. Independent streams are obtained
/// with split(); they never overlap because the stream id occupies the upper
/// half of the Philox counter block.

#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace mgno::diff {

class SeededRng {
 public:
  static constexpr std::string_view kAlgorithm = "philox4x32-10";

  explicit SeededRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Raw Philox block for a given counter; exposed for the cross-platform test.
  static std::array<std::uint32_t, 4> philox_block(std::uint64_t seed, std::uint64_t stream,
                                                   std::uint64_t counter);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller (second variate cached).
  double normal();
  /// Unbiased integer on [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

  /// Fresh generator on the same seed, different stream.
  SeededRng split(std::uint64_t stream) const { return SeededRng(seed_, stream); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int block_pos_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace mgno::diff
