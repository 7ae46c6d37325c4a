#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace onoffcov::sim {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kBump0 = 0x9E3779B9u;
  static constexpr std::uint32_t kBump1 = 0xBB67AE85u;

  static constexpr Counter round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = std::uint64_t{kMul0} * c[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * c[2];
    return {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
            static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
  }

  static constexpr Counter apply(Counter c, Key k) {
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        k[0] += kBump0;
        k[1] += kBump1;
      }
      c = round(c, k);
    }
    return c;
  }
};

inline constexpr Philox4x32::Key philox_key(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

/// What a stream is used for; occupies the last counter word.
enum class Purpose : std::uint32_t {
  bs_placement = 1,
  user_placement = 2,
  fading = 3,
  onoff_uniform = 4,
  probe_placement = 5,
};

/// Counter layout (index, stream, trial, purpose). Distinct (stream, trial,
/// purpose) triples never share a block.
inline Philox4x32::Counter make_counter(std::uint32_t index, std::uint32_t stream, std::uint32_t trial,
                                        Purpose purpose) {
  return {index, stream, trial, static_cast<std::uint32_t>(purpose)};
}

/// Open-interval uniform from one 32-bit word.
inline double u01_open(std::uint32_t w) { return (static_cast<double>(w) + 0.5) * 0x1p-32; }

/// [0, 1) uniform with 53 bits from two words.
inline double u01_53(std::uint32_t hi, std::uint32_t lo) {
  return static_cast<double>(((std::uint64_t{hi} << 32) | lo) >> 11) * 0x1p-53;
}

/// Sequential UniformRandomBitGenerator over one Philox stream: the first
/// counter word walks, the other three are fixed.
class PhiloxEngine {
 public:
  using result_type = std::uint32_t;

  PhiloxEngine(std::uint64_t seed, std::uint32_t stream, std::uint32_t trial, Purpose purpose)
      : key_(philox_key(seed)), counter_(make_counter(0, stream, trial, purpose)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (used_ == 4) {
      block_ = Philox4x32::apply(counter_, key_);
      ++counter_[0];
      used_ = 0;
    }
    return block_[used_++];
  }

  double uniform() {
    const std::uint32_t hi = (*this)();
    return u01_53(hi, (*this)());
  }

 private:
  Philox4x32::Key key_;
  Philox4x32::Counter counter_;
  Philox4x32::Counter block_{};
  int used_ = 4;
};

}  // namespace onoffcov::sim
