#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace rangecap {

/// Philox4x32-10 counter-based block function (Salmon et al., Random123).
/// Maps a 128-bit counter and a 64-bit key to 128 pseudo-random bits.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter apply(Counter ctr, Key key) noexcept {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }
};

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Folds a path of integers (replica index, purpose tag, ...) into a stream id.
inline std::uint64_t derive_stream(std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = 0x243F6A8885A308D3ull;
  for (auto v : path) h = splitmix64(h ^ splitmix64(v));
  return h;
}

/// Stream tags. Values are part of the reproducibility contract; never renumber.
enum class StreamTag : std::uint64_t {
  kWalk = 1,
  kSecondWalk = 2,
  kThirdWalk = 3,
  kEscape = 10,
  kSiteSample = 11,
  kRepresentation = 12,
  kTruncatedGreen = 20,
  kRandomSet = 30,
  kBootstrap = 40,
};

/// One independent random stream: key = master seed, counter = (block, stream id).
/// Satisfies UniformRandomBitGenerator with 64-bit output.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  StreamRng() : StreamRng(0, 0) {}
  StreamRng(std::uint64_t master_seed, std::uint64_t stream_id) noexcept
      : key_{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32)},
        stream_(stream_id) {}

  static StreamRng for_path(std::uint64_t master_seed, std::initializer_list<std::uint64_t> path) {
    return StreamRng(master_seed, derive_stream(path));
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  std::uint32_t next_u32() noexcept {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  result_type operator()() noexcept {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  /// Uniform integer in [0, bound), bound in [1, 2^32). Lemire's rejection method, exact.
  std::uint32_t below(std::uint32_t bound) noexcept {
    std::uint64_t m = std::uint64_t{next_u32()} * bound;
    auto low = static_cast<std::uint32_t>(m);
    if (low < bound) {
      const std::uint32_t threshold = static_cast<std::uint32_t>(-bound) % bound;
      while (low < threshold) {
        m = std::uint64_t{next_u32()} * bound;
        low = static_cast<std::uint32_t>(m);
      }
    }
    return static_cast<std::uint32_t>(m >> 32);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  std::uint64_t stream_id() const noexcept { return stream_; }

 private:
  void refill() noexcept {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                  static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    buf_ = Philox4x32::apply(ctr, key_);
    ++block_;
    pos_ = 0;
  }

  Philox4x32::Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Philox4x32::Counter buf_{};
  int pos_ = 4;
};

/// Stream `tag` of replica `replica`.
inline StreamRng replica_stream(std::uint64_t master_seed, std::uint64_t replica, StreamTag tag) {
  return StreamRng::for_path(master_seed, {replica, static_cast<std::uint64_t>(tag)});
}

}  // namespace rangecap
