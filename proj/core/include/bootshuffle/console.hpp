#pragma once

#include "bootshuffle/crypto.hpp"
#include "bootshuffle/hw.hpp"
#include "bootshuffle/nand.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>

namespace bootshuffle {

enum class RebootMode { Warm, Cold };

struct BootRomConfig {
  /// Burned-in vendor key the boot ROM checks FIRM signatures against.
  crypto::RsaPublicKey vendor_key;
  /// Bytes past the end of the active FIRM that the loader scribbles over
  /// before jumping (stand-in for the unidentified stack/bss clobber).
  std::uint32_t clobber_len = 0;
  std::uint64_t step_limit = 1'000'000;
};

/// Host-call trap: `SVC #0x123456` followed by a call-id word. The same
/// convention ARM semihosting uses; it lets synthetic firmware and payloads
/// reach host routines without a full CPU model.
namespace host_call {
inline constexpr std::uint32_t kTrapWord = 0xEF123456;
/// Genuine firmware entry (the boot reached Process9).
inline constexpr HostCallId kFirmwareEntry = 0x454D5246;  // "FRME"
/// Copies the SHA_HASH register out.
inline constexpr HostCallId kDumpShaLatch = 0x48414853;  // "SHAH"
/// Returns the `len` bytes that follow: [trap][id][len][data...].
inline constexpr HostCallId kInlinePayload = 0x4C594150;  // "PAYL"
}  // namespace host_call

struct HostCallResult {
  Bytes captured;
};

class Console;
using HostCallback = std::function<HostCallResult(Console&, Address pc)>;

/// keyslot 0x11 during ARM9Loader: first 16 bytes of SHA-256(OTP).
Key derive_loader_key(const Digest& otp_hash);
/// keyslot 0x06: first 16 bytes of SHA-256(0x06 || ITCM OTP copy).
Key derive_nand_key(std::span<const Byte> itcm_otp);

/// Base counter for NAND partition CTR; block counter = base + byte_offset/16.
inline constexpr Block kNandCtrBase = {0x4E, 0x41, 0x4E, 0x44, 0x2D, 0x43, 0x54, 0x52,
                                       0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00};

/// One synthetic device. Move-only: the keyslot engine is not copyable.
class Console {
 public:
  Console(const OtpBytes& otp, NandImage nand, BootRomConfig config, MemoryMap memory = {});

  OtpRegion& otp() noexcept { return otp_; }
  const OtpRegion& otp() const noexcept { return otp_; }
  AesEngine& aes() noexcept { return aes_; }
  const AesEngine& aes() const noexcept { return aes_; }
  ShaEngine& sha() noexcept { return sha_; }
  const ShaEngine& sha() const noexcept { return sha_; }
  MemoryMap& memory() noexcept { return memory_; }
  const MemoryMap& memory() const noexcept { return memory_; }
  NandImage& nand() noexcept { return nand_; }
  const NandImage& nand() const noexcept { return nand_; }
  BootRomConfig& boot_config() noexcept { return config_; }
  const BootRomConfig& boot_config() const noexcept { return config_; }

  /// Throws Error(OtpLocked) after set_sysprot9 until the next reboot.
  OtpBytes otp_read() const { return otp_.read(); }
  void set_sysprot9() noexcept { otp_.lock(); }

  /// Lock cleared, keyslots emptied, SHA latch kept. Warm keeps RAM and
  /// hooks; cold zeroes both.
  void reboot(RebootMode mode);

  /// Encrypts a serialized FIRM container under the console NAND key and
  /// writes it to the partition, as privileged ARM9 code can post-boot.
  void install_firm(FirmSlot slot, std::span<const Byte> container);
  /// Plaintext view of a FIRM partition's first `len` bytes.
  Bytes read_firm(FirmSlot slot, std::size_t len);

  void register_host_call(HostCallId id, HostCallback callback);
  /// nullopt when no routine is registered under `id`.
  std::optional<HostCallResult> invoke_host_call(HostCallId id, Address pc);

 private:
  void load_nand_key();

  OtpRegion otp_;
  AesEngine aes_;
  ShaEngine sha_;
  MemoryMap memory_;
  NandImage nand_;
  BootRomConfig config_;
  std::map<HostCallId, HostCallback> host_calls_;
};

}  // namespace bootshuffle
