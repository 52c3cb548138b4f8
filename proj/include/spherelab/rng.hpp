#pragma once

#include <array>
#include <cstdint>

namespace spherelab {

// Philox4x32-10 counter-based generator. Every draw is a pure function of
// (key, counter), so independent substreams are cheap and replay is exact:
// the same seed always yields the same sequence regardless of how many other
// streams were consumed elsewhere.

struct philox_block {
  std::array<std::uint32_t, 4> x;
};

// One application of the 10-round Philox4x32 bijection.
philox_block philox4x32(const std::array<std::uint32_t, 4>& counter,
                        const std::array<std::uint32_t, 2>& key);

// A stream addresses one logical substream of a seed. The 64-bit substream id
// is split as (tag << 48) | index so that different subsystems (sampling,
// slicing, noise, ...) can never collide as long as tags differ.
class rng_stream {
 public:
  rng_stream(std::uint64_t seed, std::uint64_t substream);

  // Named substream helper: tag identifies the consumer, index the unit of
  // work (row, repetition, step, ...). index must stay below 2^48.
  static rng_stream of(std::uint64_t seed, std::uint32_t tag, std::uint64_t index);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform on [0,1) with 53 random bits.
  double uniform01();
  // Uniform on (0,1], safe as a log() argument.
  double uniform01_open();

  // Standard normal via Box-Muller; one value cached between calls.
  double normal();

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 2> substream_;
  std::uint64_t block_ = 0;
  philox_block buf_{};
  int pos_ = 4;  // forces refill on first draw
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace spherelab
