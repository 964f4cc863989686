#include "rbreg/rng.hpp"

#include <cmath>
#include <sstream>

#include "rbreg/errors.hpp"

namespace rbreg {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(stream), hi(stream), 0x72627265u};
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

RngStream RngStream::derive(std::initializer_list<std::uint64_t> path) const {
  std::uint64_t id = splitmix64(stream_ ^ 0x6a09e667f3bcc909ULL);
  for (std::uint64_t step : path) id = splitmix64(id ^ splitmix64(step));
  return RngStream(seed_, id);
}

double RngStream::uniform() {
  // 53 random bits, shifted off zero: the result lies in (0, 1).
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() { return normal_(engine_); }

double RngStream::exponential(double rate) { return -std::log(uniform()) / rate; }

std::string RngStream::save_state() const {
  std::ostringstream os;
  os << seed_ << ' ' << stream_ << ' ' << engine_ << ' ' << normal_;
  return os.str();
}

void RngStream::restore_state(const std::string& snapshot) {
  std::istringstream is(snapshot);
  is >> seed_ >> stream_ >> engine_ >> normal_;
  if (!is) throw IoError("corrupt RNG state snapshot");
}

bool operator==(const RngStream& a, const RngStream& b) {
  return a.seed_ == b.seed_ && a.stream_ == b.stream_ && a.engine_ == b.engine_ &&
         a.normal_ == b.normal_;
}

}  // namespace rbreg
