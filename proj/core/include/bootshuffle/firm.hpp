#pragma once

// The simulator's FIRM container: one header, one CTR-encrypted ARM9 code
// section, and an RSA-2048 signature over header || section ciphertext.
//
// Serialized layout (little-endian):
//   0x00  magic "FIRM"
//   0x04  version label, 8 bytes ASCII, NUL padded
//   0x0C  loader variant (1 or 2)
//   0x0D  flags (bit 0: clear keyslot 0x11 after decrypting, v1 only)
//   0x0E  reserved, zero
//   0x10  entrypoint
//   0x14  section load address
//   0x18  section size
//   0x1C  CTR nonce, 16 bytes
//   0x2C  keysector key number used for the section (u8) + 3 reserved
//   0x30  Key #1 check value: AES(Key #1, zero block)
//   0x40  loader read-only-data key, XOR-masked
//   0x50  section ciphertext
//   ...   signature, 256 bytes
// Anything after the signature is ignored by parse and verification.

#include "bootshuffle/bytes.hpp"
#include "bootshuffle/crypto.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace bootshuffle {

enum class LoaderVariant : std::uint8_t { V1 = 1, V2 = 2 };

std::string_view loader_variant_name(LoaderVariant v) noexcept;

inline constexpr Address kFirmLoadBase = 0x08006000;
inline constexpr std::size_t kFirmHeaderSize = 0x50;
inline constexpr std::size_t kFirmSignatureSize = crypto::RsaKeyPair::kModulusBytes;
inline constexpr std::size_t kVersionLabelSize = 8;
inline constexpr Address kDefaultSectionLoadAddr = kFirmLoadBase + kFirmHeaderSize;

/// Mask applied to the loader's read-only-data key in the header.
inline constexpr Block kLoaderRodataMask = {0x5A, 0x17, 0xC3, 0x9E, 0x02, 0x6B, 0xF1, 0x48,
                                            0xAD, 0x30, 0x7C, 0xE5, 0x94, 0x1F, 0x66, 0xB8};

struct FirmHeader {
  std::string version_label;
  LoaderVariant loader_variant = LoaderVariant::V2;
  bool clear_after_decrypt = false;
  Address entrypoint = 0;
  Address section_load_addr = kDefaultSectionLoadAddr;
  std::uint32_t section_size = 0;
  Block ctr_nonce{};
  std::uint8_t firmware_key_index = 2;
  Block key1_check{};
  Block rodata_key_masked{};

  std::uint32_t entry_offset() const noexcept { return entrypoint - section_load_addr; }
  /// Header + section + signature.
  std::size_t container_size() const noexcept { return kFirmHeaderSize + section_size + kFirmSignatureSize; }

  bool operator==(const FirmHeader&) const = default;
};

struct FirmImage {
  FirmHeader header;
  Bytes section_ciphertext;
  Bytes signature;

  bool operator==(const FirmImage&) const = default;
};

Bytes serialize_header(const FirmHeader& header);
/// Throws BadMagic or TruncatedImage.
FirmHeader parse_header(std::span<const Byte> bytes);

Bytes serialize_firm(const FirmImage& image);
/// Trailing bytes after the signature are tolerated and dropped.
FirmImage parse_firm(std::span<const Byte> bytes);

/// header || section ciphertext: exactly the bytes the signature covers.
Bytes signed_region(const FirmImage& image);

bool verify_signature(const FirmImage& image, const crypto::RsaPublicKey& vendor_key);
/// Parses first; malformed input verifies as false.
bool verify_signature(std::span<const Byte> serialized, const crypto::RsaPublicKey& vendor_key);

/// AES-128-CTR with an explicit key, for build tooling that sits outside the
/// keyslot engine. Same counter semantics as AesEngine::ctr.
Bytes firm_ctr_crypt(const Key& key, const Block& nonce, std::span<const Byte> data, std::uint64_t first_block = 0);

struct FirmBuildParams {
  std::string version_label;
  LoaderVariant loader_variant = LoaderVariant::V2;
  bool clear_after_decrypt = false;
  Bytes code_plaintext;
  Address entrypoint = kDefaultSectionLoadAddr;
  Address section_load_addr = kDefaultSectionLoadAddr;
  Key firmware_key{};
  std::uint8_t firmware_key_index = 2;
  Block ctr_nonce{};
  Block key1_check{};
  Key rodata_key{};
};

/// Throws BadAlignment (code length or entrypoint not word aligned),
/// BadEntrypoint (entry outside the section) or InvalidArgument (label).
FirmImage build_firm(const FirmBuildParams& params, const crypto::RsaKeyPair& signer);

/// Versions up to 9.5.0 shipped loader v1, 9.6.0 onward v2.
LoaderVariant loader_for_version(std::string_view version_label);
/// 9.5.0 is the v1 release that clears keyslot 0x11 after decrypting.
bool clears_after_decrypt_for_version(std::string_view version_label);

}  // namespace bootshuffle
