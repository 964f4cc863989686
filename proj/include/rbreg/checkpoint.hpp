#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rbreg/model.hpp"

namespace rbreg {

// Binary GibbsState encoding: little-endian sizes and IEEE doubles, so a
// round trip is bit-exact.
void write_state(std::ostream& os, const GibbsState& state);
GibbsState read_state(std::istream& is);

namespace gibbs {

// Chain snapshot. File layout: magic "RBCHKPT\0", u32 version, config,
// hyperparameters, completed sweep count, RNG snapshot, current state,
// retained states.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  GibbsConfig config;
  PriorHyperparams hyper;
  int completed_iterations = 0;
  std::string rng_state;
  GibbsState state;
  std::vector<GibbsState> retained;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gibbs
}  // namespace rbreg
