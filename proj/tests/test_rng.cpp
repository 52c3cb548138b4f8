#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "spherelab/rng.hpp"

using namespace spherelab;

TEST_SUITE("rng") {

// Known-answer vectors for the 10-round Philox4x32 bijection, from the
// reference implementation (including the pi-digits vector).
TEST_CASE("philox4x32 known answers") {
  struct kat {
    std::array<std::uint32_t, 4> ctr;
    std::array<std::uint32_t, 2> key;
    std::array<std::uint32_t, 4> out;
  };
  const kat table[] = {
      {{0x00000000u, 0x00000000u, 0x00000000u, 0x00000000u},
       {0x00000000u, 0x00000000u},
       {0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}},
      {{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
       {0xffffffffu, 0xffffffffu},
       {0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}},
      {{0x00000001u, 0x00000000u, 0x00000000u, 0x00000000u},
       {0x00000000u, 0x00000000u},
       {0xf8e4cca4u, 0x5cb200dbu, 0xb1a574ebu, 0x097eff67u}},
      {{0x00000000u, 0x00000000u, 0x00000000u, 0x00000000u},
       {0x00000001u, 0x00000000u},
       {0xe3e80670u, 0xe50a0ebcu, 0x95f222c0u, 0xb615aa27u}},
      {{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
       {0xa4093822u, 0x299f31d0u},
       {0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}},
      {{0x00000007u, 0x00000000u, 0x0000002au, 0x00000000u},
       {0xdeadbeefu, 0xcafef00du},
       {0x25389008u, 0xd0f6827fu, 0x5a218b37u, 0xe1e3ab06u}},
  };
  for (const kat& v : table) {
    philox_block b = philox4x32(v.ctr, v.key);
    CHECK(b.x == v.out);
  }
}

TEST_CASE("streams replay exactly") {
  rng_stream a = rng_stream::of(42, 0x11, 3);
  rng_stream b = rng_stream::of(42, 0x11, 3);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct substreams differ") {
  rng_stream a = rng_stream::of(42, 0x11, 0);
  rng_stream b = rng_stream::of(42, 0x11, 1);
  rng_stream c = rng_stream::of(42, 0x12, 0);
  rng_stream d = rng_stream::of(43, 0x11, 0);
  std::set<std::uint64_t> first = {a.next_u64(), b.next_u64(), c.next_u64(), d.next_u64()};
  CHECK(first.size() == 4);
}

TEST_CASE("stream draws are independent of interleaving") {
  rng_stream a = rng_stream::of(7, 0x21, 5);
  std::vector<std::uint32_t> direct;
  for (int i = 0; i < 10; ++i) direct.push_back(a.next_u32());

  rng_stream b = rng_stream::of(7, 0x21, 5);
  rng_stream other = rng_stream::of(7, 0x22, 5);
  for (int i = 0; i < 10; ++i) {
    CHECK(b.next_u32() == direct[static_cast<std::size_t>(i)]);
    (void)other.next_u32();
  }
}

TEST_CASE("uniform01 range and moments") {
  rng_stream r(123, 0);
  double sum = 0.0, sumsq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double u = r.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sumsq += u * u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.005);
  CHECK(std::abs(sumsq / n - 1.0 / 3.0) < 0.005);
}

TEST_CASE("uniform01_open never returns zero") {
  rng_stream r(99, 0);
  for (int i = 0; i < 100000; ++i) {
    double u = r.uniform01_open();
    CHECK(u > 0.0);
    CHECK(u <= 1.0);
  }
}

TEST_CASE("normal moments") {
  rng_stream r(7, 0);
  const int n = 200000;
  double m1 = 0.0, m2 = 0.0, m4 = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = r.normal();
    m1 += x;
    m2 += x * x;
    m4 += x * x * x * x;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  CHECK(std::abs(m1) < 0.01);
  CHECK(std::abs(m2 - 1.0) < 0.02);
  CHECK(std::abs(m4 - 3.0) < 0.1);
}

}
