#include "bootshuffle/arm.hpp"

#include "bootshuffle/error.hpp"

#include <cstdio>

namespace bootshuffle::arm {

Instruction decode_instruction(std::uint32_t word, Address pc) noexcept {
  if (is_branch(word)) return Branch{branch_target(word, pc)};
  if (word == kNopWord) return Nop{};
  return Undecodable{word};
}

std::uint32_t encode_branch(Address pc, Address target) {
  if (pc % 4 != 0 || target % 4 != 0) throw Error(Errc::BadAlignment, "branch endpoints must be word aligned");
  const std::int64_t delta = (static_cast<std::int64_t>(target) - static_cast<std::int64_t>(pc) - 8) / 4;
  constexpr std::int64_t kMin = -(std::int64_t{1} << 23);
  constexpr std::int64_t kMax = (std::int64_t{1} << 23) - 1;
  if (delta < kMin || delta > kMax) {
    char buf[80];
    std::snprintf(buf, sizeof buf, "0x%08X -> 0x%08X", pc, target);
    throw Error(Errc::DisplacementOutOfRange, buf);
  }
  return (kBranchOpcodeByte << 24) | (static_cast<std::uint32_t>(delta) & 0x00FFFFFF);
}

}  // namespace bootshuffle::arm
