#pragma once

// Just enough of the ARM (A32) encoding to follow a wrong-key entry word:
// unconditional B, the canonical NOP, and nothing else.

#include "bootshuffle/bytes.hpp"

#include <cstdint>
#include <variant>

namespace bootshuffle::arm {

inline constexpr std::uint32_t kNopWord = 0xE1A00000;  // MOV r0, r0
inline constexpr std::uint32_t kBranchOpcodeByte = 0xEA;  // cond=AL, 101, L=0

struct Branch {
  Address target = 0;
  bool operator==(const Branch&) const = default;
};
struct Nop {
  bool operator==(const Nop&) const = default;
};
struct Undecodable {
  std::uint32_t word = 0;
  bool operator==(const Undecodable&) const = default;
};

using Instruction = std::variant<Branch, Nop, Undecodable>;

constexpr bool is_branch(std::uint32_t word) noexcept { return (word >> 24) == kBranchOpcodeByte; }

/// pc + 8 + sign_extend(imm24) * 4, modulo 2^32.
constexpr Address branch_target(std::uint32_t word, Address pc) noexcept {
  const std::int32_t imm24 = static_cast<std::int32_t>(word << 8) >> 8;
  return pc + 8 + (static_cast<std::uint32_t>(imm24) << 2);
}

/// Total: anything that is not an AL branch or the NOP is Undecodable.
Instruction decode_instruction(std::uint32_t word, Address pc) noexcept;

/// Throws Error(BadAlignment) for unaligned pc/target and
/// Error(DisplacementOutOfRange) when (target - pc - 8) / 4 does not fit in
/// a signed 24-bit field.
std::uint32_t encode_branch(Address pc, Address target);

}  // namespace bootshuffle::arm
