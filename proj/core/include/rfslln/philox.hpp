#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11) and the
// keying scheme that turns (seed, replicate, cell) into uniform variates.
//
// Keying: the 64-bit key is splitmix64(seed ^ splitmix64(replicate)); the
// 128-bit counter holds the cell coordinates, each biased by 2^31 and
// truncated to 32 bits, for d <= 4 (unused words carry a dimension tag);
// for d > 4 the coordinates are folded through splitmix64 into the four
// words. One block yields two 53-bit uniforms in the open interval (0, 1).

#include <array>
#include <cstdint>
#include <span>

namespace rfslln {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Ten rounds of Philox4x32 on `counter` under `key`.
PhiloxCounter philox4x32(PhiloxCounter counter, PhiloxKey key) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Two independent uniforms in (0, 1) for the given cell of the given
/// replicate. A pure function of its arguments.
struct UniformPair {
  double u1;
  double u2;
};
UniformPair cell_uniforms(std::uint64_t seed, std::uint64_t replicate,
                          std::span<const std::int64_t> coords) noexcept;

}  // namespace rfslln
