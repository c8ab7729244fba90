#pragma once

// Counter-based random streams.
//
// Every random quantity in the library is drawn from a Philox4x32-10 stream
// whose key is a pure function of the logical coordinates of the draw
// (seed, design, G, replication, ...). Output therefore does not depend on
// which thread evaluates a replication or in which order.

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace ccf::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

// One Philox4x32 block with 10 rounds.
Counter philox4x32(Counter ctr, Key key);

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Order-sensitive hash of a tuple of 64-bit words into a stream key.
std::uint64_t derive_key(std::initializer_list<std::uint64_t> parts);

// A 64-bit UniformRandomBitGenerator over one Philox substream.
// The 128-bit counter is (block index : 64 bits, stream id : 64 bits).
class CounterStream {
 public:
  using result_type = std::uint64_t;

  CounterStream(std::uint64_t key, std::uint64_t stream_id = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (lo, hi) via lo + (hi - lo) * U.
  double uniform(double lo, double hi);
  // Exponential(rate 1) by inversion: -log(1 - U).
  double exponential();
  // Unbiased integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t key() const { return key_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  void refill();

  std::uint64_t key_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  Counter buffer_{};
  int used_ = 4;  // 32-bit words consumed from buffer_
};

}  // namespace ccf::rng
