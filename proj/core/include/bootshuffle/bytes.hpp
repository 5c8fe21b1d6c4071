#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bootshuffle {

using Byte = std::uint8_t;
using Bytes = std::vector<Byte>;
using Address = std::uint32_t;

inline constexpr std::size_t kBlockSize = 16;

/// One AES block. Also used for 128-bit keys, nonces and counters.
using Block = std::array<Byte, kBlockSize>;
using Key = Block;
using Digest = std::array<Byte, 32>;

std::string to_hex(std::span<const Byte> bytes);

/// Accepts an optional "0x" prefix; throws Error(InvalidArgument) on odd
/// length or non-hex characters.
Bytes from_hex(std::string_view text);

/// Exactly-16-byte variant of from_hex.
Block block_from_hex(std::string_view text);

Digest digest_from_hex(std::string_view text);

inline std::uint32_t load_le32(std::span<const Byte> p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

inline void store_le32(std::span<Byte> p, std::uint32_t v) {
  p[0] = static_cast<Byte>(v);
  p[1] = static_cast<Byte>(v >> 8);
  p[2] = static_cast<Byte>(v >> 16);
  p[3] = static_cast<Byte>(v >> 24);
}

inline void append_le32(Bytes& out, std::uint32_t v) {
  const std::size_t at = out.size();
  out.resize(at + 4);
  store_le32(std::span<Byte>(out).subspan(at, 4), v);
}

template <std::size_t N>
std::array<Byte, N> to_array(std::span<const Byte> bytes) {
  std::array<Byte, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = bytes[i];
  return out;
}

inline Block xor_blocks(const Block& a, const Block& b) {
  Block out;
  for (std::size_t i = 0; i < kBlockSize; ++i) out[i] = a[i] ^ b[i];
  return out;
}

/// Block whose 16 bytes all equal `value`.
inline Block filled_block(Byte value) {
  Block b;
  b.fill(value);
  return b;
}

}  // namespace bootshuffle
