#pragma once

// Counter-based random streams. Every replicate of every experiment draws from
// its own Philox4x32-10 stream: the key is derived from (master seed, family)
// and the upper half of the 128-bit counter is the replicate index, so streams
// never overlap and can be generated in any order.

#include <array>
#include <cstdint>
#include <limits>
#include <random>

namespace radwalk {

/// Philox4x32 with 10 rounds (Salmon et al., "Parallel random numbers: as easy
/// as 1, 2, 3").
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeylA;
        key[1] += kWeylB;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMulA) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMulB) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMulA = 0xD2511F53;
  static constexpr std::uint32_t kMulB = 0xCD9E8D57;
  static constexpr std::uint32_t kWeylA = 0x9E3779B9;
  static constexpr std::uint32_t kWeylB = 0xBB67AE85;
};

/// SplitMix64 finalizer; used to hash seeds into stream keys.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// A single random stream: uniform bits plus the continuous variates the
/// samplers need. Not thread safe; each worker owns its own stream.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t key, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() {
    if (next_ >= 4) refill();
    const std::uint64_t lo = buffer_[next_];
    const std::uint64_t hi = buffer_[next_ + 1];
    next_ += 2;
    return (hi << 32) | lo;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  /// Uniform on the open interval (0, 1).
  double uniform_open() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }
  double normal() { return normal_(*this); }
  /// Gamma(shape, scale).
  double gamma(double shape, double scale = 1.0) {
    return gamma_(*this, std::gamma_distribution<double>::param_type(shape, scale));
  }
  double chi_squared(double dof) { return gamma(0.5 * dof, 2.0); }

  std::uint64_t key() const { return key_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void refill();

  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int next_ = 4;
  std::normal_distribution<double> normal_;
  std::gamma_distribution<double> gamma_;
};

/// Deterministic family of streams; stream(i) is the stream of replicate i.
class StreamFamily {
 public:
  StreamFamily(std::uint64_t master_seed, std::uint64_t family)
      : master_seed_(master_seed), family_(family), key_(mix64(master_seed ^ mix64(family + 0x5bd1e995ull))) {}

  RandomStream stream(std::uint64_t index) const { return RandomStream(key_, index); }
  /// A sub-family, e.g. one per grid point of an experiment.
  StreamFamily child(std::uint64_t tag) const { return StreamFamily(key_, tag); }

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t family() const { return family_; }
  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t master_seed_;
  std::uint64_t family_;
  std::uint64_t key_;
};

}  // namespace radwalk
