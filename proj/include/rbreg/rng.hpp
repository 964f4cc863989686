#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>

namespace rbreg {

// A reproducible random stream identified by (seed, stream-id).
//
// The engine is a 64-bit Mersenne twister whose full state is expanded from
// both identifiers through std::seed_seq, so distinct stream ids give
// unrelated sequences. Child streams for nested work (replications, fits,
// folds) come from derive(), which mixes a path of integers into a new id.
class RngStream {
 public:
  using engine_type = std::mt19937_64;
  using result_type = engine_type::result_type;

  explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Stream (seed, mix(stream, path...)); does not touch this stream's state.
  RngStream derive(std::initializer_list<std::uint64_t> path) const;

  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double exponential(double rate);

  engine_type& engine() { return engine_; }

  // UniformRandomBitGenerator interface, so the stream can feed <random>.
  static constexpr result_type min() { return engine_type::min(); }
  static constexpr result_type max() { return engine_type::max(); }
  result_type operator()() { return engine_(); }

  // Text snapshot of the engine and cached-normal state, for checkpoints.
  std::string save_state() const;
  void restore_state(const std::string& snapshot);

  friend bool operator==(const RngStream& a, const RngStream& b);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  engine_type engine_;
  std::normal_distribution<double> normal_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace rbreg
