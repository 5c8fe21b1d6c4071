#pragma once

// Security-relevant hardware of the simulated console: the OTP region and its
// lockout register, the write-only AES keyslot engine, the SHA engine with its
// sticky output register, and ARM9 RAM.

#include "bootshuffle/bytes.hpp"
#include "bootshuffle/crypto.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace bootshuffle {

inline constexpr std::size_t kOtpSize = 0x100;
inline constexpr std::size_t kItcmOtpSize = 0x90;

using OtpBytes = std::array<Byte, kOtpSize>;

class OtpRegion {
 public:
  explicit OtpRegion(const OtpBytes& data) : data_(data) {}

  /// Throws Error(OtpLocked) once CFG_SYSPROT9 has been set this boot.
  OtpBytes read() const;

  /// Sets CFG_SYSPROT9. Idempotent; only a reset clears it.
  void lock() noexcept { locked_ = true; }
  bool locked() const noexcept { return locked_; }
  void reset() noexcept { locked_ = false; }

  /// Hardware-internal access for key derivation paths that never surface to
  /// software (boot ROM ITCM copy, NAND crypto key).
  const OtpBytes& raw_for_hardware() const noexcept { return data_; }

 private:
  OtpBytes data_;
  bool locked_ = false;
};

namespace keyslot {
inline constexpr unsigned kNand = 0x06;
inline constexpr unsigned kLoader = 0x11;
inline constexpr unsigned kSubkeyFirst = 0x18;
inline constexpr unsigned kSubkeyLast = 0x1F;
}  // namespace keyslot

/// Write-only keyslot bank. There is deliberately no accessor for stored key
/// material: callers can only load, clear, derive, and run data through it.
class AesEngine {
 public:
  static constexpr unsigned kSlotCount = 64;

  void set_keyslot(unsigned slot, const Key& key);
  /// Sets the slot to the all-zero key.
  void clear_keyslot(unsigned slot);
  /// Back to the power-on state: every slot empty.
  void reset() noexcept;

  bool slot_loaded(unsigned slot) const;

  /// For each n in [first, last]: slot n = AES-ECB(src key, block of byte n).
  void derive_subkeys(unsigned src_slot, unsigned first, unsigned last);

  bool verify_keyslot(unsigned slot, const Block& test_vector, const Block& expected) const;

  Bytes ecb(unsigned slot, crypto::Direction dir, std::span<const Byte> data) const;
  Block ecb_block(unsigned slot, crypto::Direction dir, const Block& block) const;

  Bytes ctr(unsigned slot, const Block& nonce, std::span<const Byte> data, std::uint64_t first_block = 0) const;
  void ctr_inplace(unsigned slot, const Block& nonce, std::span<Byte> data, std::uint64_t first_block = 0) const;

 private:
  const crypto::Aes128& cipher(unsigned slot) const;
  static void check_slot(unsigned slot);

  std::array<std::optional<crypto::Aes128>, kSlotCount> slots_;
};

class ShaEngine {
 public:
  /// SHA-256 of `data`, also latched into the SHA_HASH register.
  Digest compute_and_latch(std::span<const Byte> data);

  /// Throws Error(EmptyLatch) when nothing is latched. Non-destructive.
  Digest read_latch() const;
  void clear_latch() noexcept { latch_.reset(); }

  const std::optional<Digest>& latch() const noexcept { return latch_; }
  void restore_latch(std::optional<Digest> value) noexcept { latch_ = value; }

 private:
  std::optional<Digest> latch_;
};

/// Identifies a host-side routine standing in for privileged ARM9 code.
using HostCallId = std::uint32_t;

struct MemoryHook {
  Address begin = 0;
  Address end = 0;  // exclusive
  HostCallId callback = 0;

  bool contains(Address a) const noexcept { return a >= begin && a < end; }
  bool operator==(const MemoryHook&) const = default;
};

class MemoryMap {
 public:
  static constexpr Address kDefaultBase = 0x08000000;
  static constexpr std::uint32_t kDefaultSize = 0x00180000;

  MemoryMap() : MemoryMap(kDefaultBase, kDefaultSize) {}
  MemoryMap(Address base, std::uint32_t size);

  Address base() const noexcept { return base_; }
  std::uint32_t size() const noexcept { return static_cast<std::uint32_t>(contents_.size()); }
  Address end() const noexcept { return base_ + size(); }

  bool contains(Address addr, std::uint64_t len = 1) const noexcept;

  Bytes read(Address addr, std::size_t len) const;
  void write(Address addr, std::span<const Byte> data);
  std::uint32_t read_word(Address addr) const;
  void write_word(Address addr, std::uint32_t value);
  void fill(Address addr, std::size_t len, Byte value);

  /// Direct window into RAM for in-place crypto. Bounds-checked.
  std::span<Byte> view(Address addr, std::size_t len);
  std::span<const Byte> view(Address addr, std::size_t len) const;

  std::span<Byte> itcm() noexcept { return itcm_; }
  std::span<const Byte> itcm() const noexcept { return itcm_; }

  void add_hook(const MemoryHook& hook);
  std::optional<MemoryHook> hook_at(Address addr) const;
  const std::vector<MemoryHook>& hooks() const noexcept { return hooks_; }
  void clear_hooks() noexcept { hooks_.clear(); }

  /// Cold-boot semantics: RAM, ITCM and hooks all cleared.
  void zero() noexcept;

  std::span<const Byte> contents() const noexcept { return contents_; }

 private:
  void check(Address addr, std::uint64_t len) const;

  Address base_;
  Bytes contents_;
  std::array<Byte, kItcmOtpSize> itcm_{};
  std::vector<MemoryHook> hooks_;
};

}  // namespace bootshuffle
