#include "rfslln/philox.hpp"

namespace rfslln {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53;
constexpr std::uint32_t kMul1 = 0xCD9E8D57;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline double to_open_unit(std::uint64_t bits) {
  // (k + 0.5) / 2^53 for the top 53 bits: never exactly 0 or 1.
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

UniformPair cell_uniforms(std::uint64_t seed, std::uint64_t replicate,
                          std::span<const std::int64_t> coords) noexcept {
  const std::uint64_t k = splitmix64(seed ^ splitmix64(replicate));
  const PhiloxKey key{static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};

  PhiloxCounter ctr{};
  const auto dim = coords.size();
  if (dim <= 4) {
    const std::uint32_t tag = 0xA5A5A5A5u ^ static_cast<std::uint32_t>(dim);
    for (std::size_t i = 0; i < 4; ++i) {
      ctr[i] = i < dim ? static_cast<std::uint32_t>(static_cast<std::uint64_t>(coords[i]) + 0x80000000ULL)
                       : tag;
    }
  } else {
    std::uint64_t h0 = 0x243F6A8885A308D3ULL ^ dim;
    std::uint64_t h1 = 0x13198A2E03707344ULL ^ dim;
    for (auto c : coords) {
      h0 = splitmix64(h0 ^ static_cast<std::uint64_t>(c));
      h1 = splitmix64(h1 + static_cast<std::uint64_t>(c) * 0x9E3779B97F4A7C15ULL);
    }
    ctr = {static_cast<std::uint32_t>(h0), static_cast<std::uint32_t>(h0 >> 32),
           static_cast<std::uint32_t>(h1), static_cast<std::uint32_t>(h1 >> 32)};
  }
  const auto out = philox4x32(ctr, key);
  const std::uint64_t w0 = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  const std::uint64_t w1 = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
  return {to_open_unit(w0), to_open_unit(w1)};
}

}  // namespace rfslln
