#pragma once

// Counter-derived random number streams.
//
// Every particle owns an independent stream keyed by (master seed, slot,
// generation); the coordinator (resampling draws) owns its own stream.  Keys
// expand to xoshiro256++ state through splitmix64, so streams created from
// different keys are statistically independent and a stream is reconstructible
// from its serialized state alone.  This is what makes runs bit-reproducible
// across worker counts and across checkpoint/resume.

#include <array>
#include <cmath>
#include <cstdint>

namespace fekl {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Mix an arbitrary list of 64-bit words into one key.
inline std::uint64_t derive_key(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x6a09e667f3bcc908ull;  // arbitrary non-zero start
  for (std::uint64_t w : words) {
    std::uint64_t s = h ^ w;
    h = splitmix64_next(s);
  }
  return h;
}

// xoshiro256++ with explicit, serializable state.
class RngStream {
 public:
  RngStream() : state_{1, 2, 3, 4} {}

  explicit RngStream(std::uint64_t key) { reseed(key); }

  void reseed(std::uint64_t key) {
    std::uint64_t s = key;
    for (auto& word : state_) word = splitmix64_next(s);
    // All-zero state is invalid for xoshiro; splitmix cannot emit four zero
    // words in a row, so nothing to guard here beyond paranoia.
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller.  Deliberately no spare-value caching:
  // the stream state alone then determines all future draws, which keeps
  // checkpointed state minimal and resume exact.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

  const std::array<std::uint64_t, 4>& state() const { return state_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { state_ = s; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_;
};

}  // namespace fekl
