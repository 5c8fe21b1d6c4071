#include "bootshuffle/arm.hpp"
#include "bootshuffle/error.hpp"

#include "oracle/reference.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace bootshuffle;
using arm::Branch;

TEST(ArmDecode, KnownWords) {
  EXPECT_EQ(arm::decode_instruction(0xEAFFFFFE, 0x08000000), arm::Instruction(Branch{0x08000000}));
  EXPECT_EQ(arm::decode_instruction(0xE1A00000, 0x12345678), arm::Instruction(arm::Nop{}));
  EXPECT_EQ(arm::decode_instruction(0xEA03F3FC, 0x08000100), arm::Instruction(Branch{0x080FD0F8}));
  EXPECT_EQ(arm::decode_instruction(0, 0x08000000), arm::Instruction(arm::Undecodable{0}));
  // Conditional and linked branches are not followed.
  EXPECT_EQ(arm::decode_instruction(0x0A000000, 0), arm::Instruction(arm::Undecodable{0x0A000000}));
  EXPECT_EQ(arm::decode_instruction(0xEB000000, 0), arm::Instruction(arm::Undecodable{0xEB000000}));
}

TEST(ArmDecode, AgreesWithBitFormulaOracle) {
  std::mt19937_64 rng(51);
  int branches = 0;
  for (int i = 0; i < 200000; ++i) {
    const std::uint32_t word = (i % 4 == 0) ? (0xEA000000u | (static_cast<std::uint32_t>(rng()) & 0xFFFFFF))
                                            : static_cast<std::uint32_t>(rng());
    const std::uint32_t pc = static_cast<std::uint32_t>(rng()) & ~3u;
    const oracle::RefBranch ref = oracle::ref_decode_branch(word, pc);
    const arm::Instruction insn = arm::decode_instruction(word, pc);
    if (ref.is_al_branch) {
      ++branches;
      ASSERT_EQ(insn, arm::Instruction(Branch{ref.target})) << std::hex << word;
    } else if (word == arm::kNopWord) {
      ASSERT_EQ(insn, arm::Instruction(arm::Nop{}));
    } else {
      ASSERT_EQ(insn, arm::Instruction(arm::Undecodable{word}));
    }
  }
  EXPECT_GT(branches, 50000);
}

TEST(ArmEncode, ZeroDisplacement) { EXPECT_EQ(arm::encode_branch(0x08000000, 0x08000008), 0xEA000000u); }

TEST(ArmEncode, RoundTripOverRandomTargets) {
  std::mt19937_64 rng(52);
  for (int i = 0; i < 1000; ++i) {
    const Address pc = 0x08000000 + ((static_cast<std::uint32_t>(rng()) % 0x180000) & ~3u);
    const std::int64_t disp = static_cast<std::int64_t>(rng() % (1u << 24)) - (1 << 23);
    const Address target = static_cast<Address>(std::int64_t{pc} + 8 + disp * 4);
    const std::uint32_t word = arm::encode_branch(pc, target);
    ASSERT_TRUE(arm::is_branch(word));
    ASSERT_EQ(arm::branch_target(word, pc), target);
    ASSERT_EQ(arm::decode_instruction(word, pc), arm::Instruction(Branch{target}));
  }
}

TEST(ArmEncode, Limits) {
  const Address pc = 0x08000000;
  EXPECT_NO_THROW(arm::encode_branch(pc, pc + 8 + 4 * 0x7FFFFF));
  EXPECT_NO_THROW(arm::encode_branch(pc, pc + 8 - 4 * 0x800000));
  auto code = [](auto f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::InvalidArgument;
  };
  EXPECT_EQ(code([&] { arm::encode_branch(pc, pc + 8 + 4 * 0x800000); }), Errc::DisplacementOutOfRange);
  EXPECT_EQ(code([&] { arm::encode_branch(pc, pc + 8 - 4 * 0x800001); }), Errc::DisplacementOutOfRange);
  EXPECT_EQ(code([&] { arm::encode_branch(pc, pc + 2); }), Errc::BadAlignment);
  EXPECT_EQ(code([&] { arm::encode_branch(pc + 1, pc + 8); }), Errc::BadAlignment);
}
