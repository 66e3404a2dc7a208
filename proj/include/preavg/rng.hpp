#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace preavg {

// Philox 4x32-10 counter-based generator (Salmon et al., SC 2011).
// Stateless: a block is a pure function of (counter, key), which is what
// makes replication-indexed substreams independent of thread scheduling.
struct philox4x32 {
  static constexpr std::uint32_t w32a = 0x9E3779B9u;
  static constexpr std::uint32_t w32b = 0xBB67AE85u;
  static constexpr std::uint32_t m4x32a = 0xD2511F53u;
  static constexpr std::uint32_t m4x32b = 0xCD9E8D57u;

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) {
    for (int round = 0;; ++round) {
      const std::uint64_t p0 = std::uint64_t(m4x32a) * ctr[0];
      const std::uint64_t p1 = std::uint64_t(m4x32b) * ctr[2];
      ctr = {std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0], std::uint32_t(p1),
             std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1], std::uint32_t(p0)};
      if (round == 9) return ctr;
      key[0] += w32a;
      key[1] += w32b;
    }
  }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Streams are keyed by (master seed, replication id, role); the Brownian and
// noise substreams of one replication never overlap.
enum class stream_role : std::uint32_t { brownian = 1, noise = 2 };

struct path_seed {
  std::uint64_t master = 0;
  std::uint32_t replication = 0;
  path_seed() = default;
  path_seed(std::uint64_t m, std::uint32_t rep = 0) : master(m), replication(rep) {}
};

// Standard normal substream: draw i is a deterministic function of
// (master seed, replication, role, i). Box-Muller on one Philox block
// yields two variates per block.
class normal_stream {
 public:
  normal_stream(path_seed seed, stream_role role)
      : key_{std::uint32_t(seed.master), std::uint32_t(seed.master >> 32)},
        rep_(seed.replication),
        role_(std::uint32_t(role)) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const auto r = philox4x32::block(
        {std::uint32_t(block_), std::uint32_t(block_ >> 32), rep_, role_}, key_);
    ++block_;
    const double u1 = to_unit(r[0], r[1]);
    const double u2 = to_unit(r[2], r[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  static double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t x = (std::uint64_t(hi) << 32) | lo;
    return (double(x >> 11) + 0.5) * 0x1.0p-53;  // strictly inside (0,1)
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t rep_;
  std::uint32_t role_;
  std::uint64_t block_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace preavg
