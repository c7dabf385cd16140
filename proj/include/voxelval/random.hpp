#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace voxelval {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Output is a
/// pure function of (counter, key), so streams keyed by (seed, draw index)
/// are identical regardless of evaluation order or thread count.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }
};

/// Random bits for one (seed, stream) pair, addressed by block index.
class KeyedStream {
 public:
  KeyedStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  /// 128 bits for block `block` of this stream.
  Philox4x32::Counter block(std::uint64_t block) const {
    return Philox4x32::generate({static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32),
                                 static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)},
                                {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
  }

  /// Two uniforms in (0, 1) with 53-bit resolution from block `block`.
  std::array<double, 2> uniform_pair(std::uint64_t block) const {
    const auto r = this->block(block);
    const std::uint64_t a = (std::uint64_t{r[0]} << 32) | r[1];
    const std::uint64_t b = (std::uint64_t{r[2]} << 32) | r[3];
    return {to_open_unit(a), to_open_unit(b)};
  }

  /// Standard normal deviate (Box-Muller, first branch) from block `block`.
  double normal(std::uint64_t block) const {
    const auto [u1, u2] = uniform_pair(block);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  static double to_open_unit(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
};

}  // namespace voxelval
