#include "ow/instructions.hpp"

#include <string>

#include "ow/error.hpp"
#include "ow/particle_config.hpp"

namespace ow {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t p = std::uint64_t{a} * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

}  // namespace

PhiloxBlock philox4x32_10(PhiloxBlock c, std::array<std::uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kMul0, c[0], lo0, hi0);
    mulhilo(kMul1, c[2], lo1, hi1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
  return c;
}

PhiloxBlock InstructionArray::block(Stream stream, std::uint32_t label, std::uint64_t index) const {
  const PhiloxBlock counter = {
      label, static_cast<std::uint32_t>(index),
      (static_cast<std::uint32_t>(stream) << 24) | static_cast<std::uint32_t>((index >> 32) & 0xFFFFFFu), run_};
  return philox4x32_10(counter, {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
}

FireOutcome fire(const Graph& g, ParticleConfig& c, FiringCounter& h, const InstructionArray& tau, Vertex x) {
  if (!g.contains(x) || !g.is_active(x)) {
    throw IllegalOperation("fire: vertex " + std::to_string(x) + " is not active");
  }
  if (c.is_stable(x)) throw IllegalOperation("fire: vertex " + std::to_string(x) + " is stable");

  const auto nbrs = g.neighbors(x);
  const auto instr = tau.pair_at(g.label(x), h.h[x], g.degree());
  const FireOutcome out{nbrs[instr.oil], nbrs[instr.water]};
  --c.oil[x];
  --c.water[x];
  ++c.oil[out.oil_to];
  ++c.water[out.water_to];
  ++h.h[x];
  return out;
}

}  // namespace ow
