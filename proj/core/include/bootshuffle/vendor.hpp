#pragma once

// The synthetic vendor: owner of the signing key, the keysector plaintext
// shared by every console, and the firmware releases. Everything is derived
// from a seed so fixtures and CLI runs are reproducible.

#include "bootshuffle/console.hpp"
#include "bootshuffle/firm.hpp"
#include "bootshuffle/nand.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace bootshuffle {

inline constexpr std::uint64_t kDefaultVendorSeed = 0x3D5'0B00'7C4A'1115ULL;

struct ReleaseInfo {
  std::string_view version_label;
  std::uint32_t section_size;
};

/// Section sizes of the fixture releases. 8.1.0 is the largest, 10.2.0 the
/// smallest; the persistence layout depends only on that ordering.
inline constexpr ReleaseInfo kReleases[] = {
    {"8.1.0", 0x60000}, {"9.5.0", 0x58000}, {"10.0.0", 0x50000}, {"10.2.0", 0x40000}, {"11.0.0", 0x48000},
};

/// Section size of a fixture release; nullopt for unknown labels.
std::optional<std::uint32_t> release_section_size(std::string_view version_label);

/// Release installed on freshly provisioned consoles.
inline constexpr std::string_view kFactoryRelease = "11.0.0";

struct ReleaseOptions {
  std::string version_label;
  std::uint32_t section_size = 0;
  std::optional<LoaderVariant> loader_variant;  // default: from the version
  std::optional<Block> ctr_nonce;               // default: release_nonce(label)
  std::uint32_t entry_offset = 0;
  std::optional<bool> clear_after_decrypt;  // default: from the version
  /// Replaces the synthetic code; section_size is then taken from it.
  std::optional<Bytes> code;
};

class VendorWorld {
 public:
  static VendorWorld generate(std::uint64_t seed = kDefaultVendorSeed);

  std::uint64_t seed() const noexcept { return seed_; }
  const crypto::RsaKeyPair& signer() const noexcept { return signer_; }
  crypto::RsaPublicKey public_key() const { return signer_.public_key(); }

  /// Keysector plaintext, identical on every console. Key #N at index N-1.
  const KeysectorBlocks& keysector_plaintext() const noexcept { return keysector_; }
  const Key& key(unsigned key_number) const;
  const Key& rodata_key() const noexcept { return rodata_key_; }
  /// AES(Key #1, zero block), embedded in every loader image.
  Block key1_check() const;

  /// v1 builds decrypt with keyslot 0x11 (Key #1); v2 builds with Key #2.
  FirmImage build_release(const ReleaseOptions& options) const;
  /// Fixture release by label with its table section size.
  FirmImage build_release(std::string_view version_label) const;

 private:
  VendorWorld(std::uint64_t seed, crypto::RsaKeyPair signer) : seed_(seed), signer_(std::move(signer)) {}

  std::uint64_t seed_;
  crypto::RsaKeyPair signer_;
  KeysectorBlocks keysector_{};
  Key rodata_key_{};
};

/// Per-version CTR counter: different for every release.
Block release_nonce(std::string_view version_label);

/// Deterministic filler code for a release, with the firmware-entry host
/// call planted at `entry_offset`.
Bytes synthetic_code(std::string_view version_label, std::uint32_t size, std::uint32_t entry_offset = 0);

OtpBytes generate_otp(std::uint64_t console_seed);

/// ECB-encrypts the vendor keysector plaintext under the console's loader key.
KeysectorBlocks encrypt_keysector(const KeysectorBlocks& plaintext, const Digest& otp_hash);

struct ProvisionOptions {
  std::string firmware = std::string(kFactoryRelease);
  BootRomConfig boot{};  // vendor_key is filled in from the world
};

/// New console: random OTP from `console_seed`, console-unique keysector
/// ciphertext, and the factory firmware in both FIRM partitions.
Console provision_console(const VendorWorld& world, std::uint64_t console_seed, const ProvisionOptions& options = {});

}  // namespace bootshuffle
