#include "spherelab/rng.hpp"

#include <cmath>

namespace spherelab {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;  // golden ratio
constexpr std::uint32_t kW1 = 0xBB67AE85u;  // sqrt(3) - 1

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

philox_block philox4x32(const std::array<std::uint32_t, 4>& counter,
                        const std::array<std::uint32_t, 2>& key) {
  std::array<std::uint32_t, 4> c = counter;
  std::array<std::uint32_t, 2> k = key;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, c[0], hi0, lo0);
    mulhilo(kM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kW0;
    k[1] += kW1;
  }
  return philox_block{c};
}

rng_stream::rng_stream(std::uint64_t seed, std::uint64_t substream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      substream_{static_cast<std::uint32_t>(substream),
                 static_cast<std::uint32_t>(substream >> 32)} {}

rng_stream rng_stream::of(std::uint64_t seed, std::uint32_t tag, std::uint64_t index) {
  return rng_stream(seed, (static_cast<std::uint64_t>(tag) << 48) | index);
}

void rng_stream::refill() {
  std::array<std::uint32_t, 4> counter = {static_cast<std::uint32_t>(block_),
                                          static_cast<std::uint32_t>(block_ >> 32),
                                          substream_[0], substream_[1]};
  buf_ = philox4x32(counter, key_);
  ++block_;
  pos_ = 0;
}

std::uint32_t rng_stream::next_u32() {
  if (pos_ >= 4) refill();
  return buf_.x[pos_++];
}

std::uint64_t rng_stream::next_u64() {
  std::uint64_t lo = next_u32();
  std::uint64_t hi = next_u32();
  return (hi << 32) | lo;
}

double rng_stream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double rng_stream::uniform01_open() {
  return 1.0 - uniform01();
}

double rng_stream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  double u1 = uniform01_open();
  double u2 = uniform01();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_normal_ = true;
  return r * std::cos(theta);
}

}  // namespace spherelab
