#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace ktreg {

// Philox 4x64 with 10 rounds (Salmon et al., "Parallel random numbers: as
// easy as 1, 2, 3"). Counter-based: every output block is a pure function of
// (counter, key), so independent streams can be split without coordination
// and results do not depend on evaluation order.
namespace philox {

inline constexpr uint64_t kMult0 = 0xD2E7470EE14C6C93ULL;
inline constexpr uint64_t kMult1 = 0xCA5A826395121157ULL;
inline constexpr uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
inline constexpr uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

using Counter = std::array<uint64_t, 4>;
using Key = std::array<uint64_t, 2>;

inline Counter block(Counter ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    const auto p0 = static_cast<unsigned __int128>(kMult0) * ctr[0];
    const auto p1 = static_cast<unsigned __int128>(kMult1) * ctr[2];
    ctr = {static_cast<uint64_t>(p1 >> 64) ^ ctr[1] ^ key[0],
           static_cast<uint64_t>(p1),
           static_cast<uint64_t>(p0 >> 64) ^ ctr[3] ^ key[1],
           static_cast<uint64_t>(p0)};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

}  // namespace philox

// One reproducible random stream. Draws advance a 256-bit counter
// (increment-before-generate, matching NumPy's Philox bit generator).
// Child streams are derived from the key alone, so a stream's own draw
// count never affects its children and siblings never affect each other.
class RngStream {
 public:
  explicit RngStream(uint64_t seed, uint64_t stream = 0)
      : key_{seed, stream ^ kStreamSalt} {}

  uint64_t next_u64() {
    if (buf_pos_ == 4) {
      for (auto& word : ctr_) {
        if (++word != 0) break;
      }
      buf_ = philox::block(ctr_, key_);
      buf_pos_ = 0;
    }
    return buf_[static_cast<size_t>(buf_pos_++)];
  }

  // Uniform on [0,1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1]; safe to pass through log().
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (cosine branch only; two draws per call).
  double normal() {
    const double u = uniform_pos();
    const double v = uniform();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(kTwoPi * v);
  }

  // Uniform integer in [0, n) by 128-bit multiply-shift; n must be > 0.
  uint64_t below(uint64_t n) {
    return static_cast<uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Independent stream addressed by tag. Depends only on this stream's key,
  // never on how many draws it has made.
  RngStream child(uint64_t tag) const {
    const philox::Counter out = philox::block({tag, kChildSalt, 0, 0}, key_);
    RngStream c(out[0]);
    c.key_ = {out[0], out[1]};
    return c;
  }

 private:
  static constexpr uint64_t kStreamSalt = 0x85A308D313198A2EULL;
  static constexpr uint64_t kChildSalt = 0xC4CEB9FE1A85EC53ULL;
  static constexpr double kTwoPi = 6.283185307179586476925286766559;

  philox::Key key_;
  philox::Counter ctr_{0, 0, 0, 0};
  std::array<uint64_t, 4> buf_{};
  int buf_pos_ = 4;
};

// Deterministic sub-seed for composing seeded APIs. Uses a counter-space
// disjoint from both stream draws and child derivation.
inline uint64_t derive_seed(uint64_t seed, uint64_t tag0, uint64_t tag1 = 0,
                            uint64_t tag2 = 0) {
  return philox::block({tag0, tag1, tag2, 0x243F6A8885A308D3ULL},
                       {seed, 0x13198A2E03707344ULL})[0];
}

}  // namespace ktreg
