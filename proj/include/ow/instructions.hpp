#pragma once
// The instruction array tau and the firing operator.
//
// tau is never materialized. Every draw is a Philox4x32-10 block evaluated at
//
//   key     = (seed & 0xffffffff, seed >> 32)
//   counter = (label(x), j & 0xffffffff, (stream << 24) | ((j >> 32) & 0xffffff), run)
//
// where j is the 0-based use index at vertex x. Word 0 of the block picks the
// oil destination and word 1 the water destination, each reduced to a neighbor
// index by (word * degree) >> 32. Ghost steps use stream 1 and word 0; initial
// configuration sampling uses stream 2 (see particle_config.hpp). Distinct
// (stream, run) pairs therefore address disjoint counter spaces under one key.

#include <array>
#include <cstdint>
#include <vector>

#include "ow/graph.hpp"

namespace ow {

class ParticleConfig;

using PhiloxBlock = std::array<std::uint32_t, 4>;

// Philox4x32 with 10 rounds (Salmon et al., SC'11).
PhiloxBlock philox4x32_10(PhiloxBlock counter, std::array<std::uint32_t, 2> key);

enum class Stream : std::uint32_t { pair = 0, ghost = 1, sampling = 2 };

struct InstructionPair {
  std::uint32_t oil = 0;    // neighbor index of the oil destination
  std::uint32_t water = 0;  // neighbor index of the water destination
};

class InstructionArray {
 public:
  explicit InstructionArray(std::uint64_t seed, std::uint32_t run = 0) : seed_(seed), run_(run) {}

  std::uint64_t seed() const { return seed_; }
  std::uint32_t run() const { return run_; }

  PhiloxBlock block(Stream stream, std::uint32_t label, std::uint64_t index) const;

  // tau^{x,index}: the pair of instructions used by the index-th firing of x.
  InstructionPair pair_at(std::uint32_t label, std::uint64_t index, std::uint32_t degree) const {
    const auto b = block(Stream::pair, label, index);
    return {reduce(b[0], degree), reduce(b[1], degree)};
  }

  // Neighbor index for the index-th ghost step taken from a vertex.
  std::uint32_t ghost_step(std::uint32_t label, std::uint64_t index, std::uint32_t degree) const {
    return reduce(block(Stream::ghost, label, index)[0], degree);
  }

  static std::uint32_t reduce(std::uint32_t word, std::uint32_t n) {
    return static_cast<std::uint32_t>((std::uint64_t{word} * n) >> 32);
  }

 private:
  std::uint64_t seed_;
  std::uint32_t run_;
};

struct FiringCounter {
  std::vector<std::uint64_t> h;
  explicit FiringCounter(std::size_t n = 0) : h(n, 0) {}
};

struct FireOutcome {
  Vertex oil_to = 0;
  Vertex water_to = 0;
};

// Phi_x: moves one oil and one water out of x using tau^{x,h(x)} and bumps h(x).
// Throws IllegalOperation if x is a sink or stable.
FireOutcome fire(const Graph& g, ParticleConfig& c, FiringCounter& h, const InstructionArray& tau, Vertex x);

}  // namespace ow
