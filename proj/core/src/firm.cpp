#include "bootshuffle/firm.hpp"

#include "bootshuffle/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>

namespace bootshuffle {

namespace {

constexpr std::array<Byte, 4> kMagic = {'F', 'I', 'R', 'M'};

std::array<int, 3> parse_version(std::string_view label) {
  std::array<int, 3> parts{};
  std::size_t i = 0;
  for (int& part : parts) {
    const auto* first = label.data() + i;
    const auto* last = label.data() + label.size();
    const auto [ptr, ec] = std::from_chars(first, last, part);
    if (ec != std::errc{}) throw Error(Errc::InvalidArgument, "bad version label '" + std::string(label) + "'");
    i = static_cast<std::size_t>(ptr - label.data());
    if (i < label.size() && label[i] == '.') ++i;
  }
  return parts;
}

}  // namespace

std::string_view loader_variant_name(LoaderVariant v) noexcept { return v == LoaderVariant::V1 ? "v1" : "v2"; }

LoaderVariant loader_for_version(std::string_view version_label) {
  return parse_version(version_label) <= std::array<int, 3>{9, 5, 0} ? LoaderVariant::V1 : LoaderVariant::V2;
}

bool clears_after_decrypt_for_version(std::string_view version_label) {
  return parse_version(version_label) == std::array<int, 3>{9, 5, 0};
}

Bytes serialize_header(const FirmHeader& h) {
  if (h.version_label.size() > kVersionLabelSize)
    throw Error(Errc::InvalidArgument, "version label longer than 8 bytes");
  Bytes out(kFirmHeaderSize, 0);
  std::ranges::copy(kMagic, out.begin());
  std::ranges::copy(h.version_label, out.begin() + 0x04);
  out[0x0C] = static_cast<Byte>(h.loader_variant);
  out[0x0D] = h.clear_after_decrypt ? 0x01 : 0x00;
  const std::span<Byte> s(out);
  store_le32(s.subspan(0x10), h.entrypoint);
  store_le32(s.subspan(0x14), h.section_load_addr);
  store_le32(s.subspan(0x18), h.section_size);
  std::ranges::copy(h.ctr_nonce, out.begin() + 0x1C);
  out[0x2C] = h.firmware_key_index;
  std::ranges::copy(h.key1_check, out.begin() + 0x30);
  std::ranges::copy(h.rodata_key_masked, out.begin() + 0x40);
  return out;
}

FirmHeader parse_header(std::span<const Byte> bytes) {
  if (bytes.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
    throw Error(Errc::BadMagic, "not a FIRM container");
  if (bytes.size() < kFirmHeaderSize) throw Error(Errc::TruncatedImage, "header truncated");
  FirmHeader h;
  const auto label = bytes.subspan(0x04, kVersionLabelSize);
  const auto nul = std::ranges::find(label, Byte{0});
  h.version_label.assign(label.begin(), nul);
  if (bytes[0x0C] != 1 && bytes[0x0C] != 2) throw Error(Errc::CorruptImage, "unknown loader variant");
  h.loader_variant = static_cast<LoaderVariant>(bytes[0x0C]);
  h.clear_after_decrypt = (bytes[0x0D] & 0x01) != 0;
  h.entrypoint = load_le32(bytes.subspan(0x10));
  h.section_load_addr = load_le32(bytes.subspan(0x14));
  h.section_size = load_le32(bytes.subspan(0x18));
  h.ctr_nonce = to_array<kBlockSize>(bytes.subspan(0x1C));
  h.firmware_key_index = bytes[0x2C];
  h.key1_check = to_array<kBlockSize>(bytes.subspan(0x30));
  h.rodata_key_masked = to_array<kBlockSize>(bytes.subspan(0x40));
  return h;
}

Bytes serialize_firm(const FirmImage& image) {
  Bytes out = serialize_header(image.header);
  out.insert(out.end(), image.section_ciphertext.begin(), image.section_ciphertext.end());
  out.insert(out.end(), image.signature.begin(), image.signature.end());
  return out;
}

FirmImage parse_firm(std::span<const Byte> bytes) {
  FirmImage image;
  image.header = parse_header(bytes);
  if (bytes.size() < image.header.container_size()) throw Error(Errc::TruncatedImage, "container shorter than header claims");
  const auto section = bytes.subspan(kFirmHeaderSize, image.header.section_size);
  const auto sig = bytes.subspan(kFirmHeaderSize + image.header.section_size, kFirmSignatureSize);
  image.section_ciphertext.assign(section.begin(), section.end());
  image.signature.assign(sig.begin(), sig.end());
  return image;
}

Bytes signed_region(const FirmImage& image) {
  Bytes out = serialize_header(image.header);
  out.insert(out.end(), image.section_ciphertext.begin(), image.section_ciphertext.end());
  return out;
}

bool verify_signature(const FirmImage& image, const crypto::RsaPublicKey& vendor_key) {
  if (image.section_ciphertext.size() != image.header.section_size) return false;
  if (image.signature.size() != kFirmSignatureSize) return false;
  if (image.header.version_label.size() > kVersionLabelSize) return false;
  return vendor_key.verify(signed_region(image), image.signature);
}

bool verify_signature(std::span<const Byte> serialized, const crypto::RsaPublicKey& vendor_key) {
  try {
    const FirmImage image = parse_firm(serialized);
    // Verify the bytes as they sit, not a re-serialization: reserved fields
    // that parse drops are still covered by the signature.
    const auto region = serialized.first(kFirmHeaderSize + image.header.section_size);
    return vendor_key.verify(region, image.signature);
  } catch (const Error&) {
    return false;
  }
}

Bytes firm_ctr_crypt(const Key& key, const Block& nonce, std::span<const Byte> data, std::uint64_t first_block) {
  return crypto::ctr(key, nonce, data, first_block);
}

FirmImage build_firm(const FirmBuildParams& p, const crypto::RsaKeyPair& signer) {
  if (p.version_label.empty() || p.version_label.size() > kVersionLabelSize)
    throw Error(Errc::InvalidArgument, "version label must be 1..8 bytes");
  if (p.code_plaintext.size() % 4 != 0) throw Error(Errc::BadAlignment, "code length not a multiple of 4");
  if (p.entrypoint % 4 != 0 || p.section_load_addr % 4 != 0) throw Error(Errc::BadAlignment, "entrypoint not word aligned");
  const std::uint64_t section_end = std::uint64_t{p.section_load_addr} + p.code_plaintext.size();
  if (p.entrypoint < p.section_load_addr || p.entrypoint >= section_end)
    throw Error(Errc::BadEntrypoint, "entrypoint outside the code section");
  if (p.firmware_key_index < 1 || p.firmware_key_index > 32)
    throw Error(Errc::InvalidArgument, "firmware key index must be 1..32");

  FirmImage image;
  FirmHeader& h = image.header;
  h.version_label = p.version_label;
  h.loader_variant = p.loader_variant;
  h.clear_after_decrypt = p.clear_after_decrypt;
  h.entrypoint = p.entrypoint;
  h.section_load_addr = p.section_load_addr;
  h.section_size = static_cast<std::uint32_t>(p.code_plaintext.size());
  h.ctr_nonce = p.ctr_nonce;
  h.firmware_key_index = p.firmware_key_index;
  h.key1_check = p.key1_check;
  h.rodata_key_masked = xor_blocks(p.rodata_key, kLoaderRodataMask);
  image.section_ciphertext = firm_ctr_crypt(p.firmware_key, p.ctr_nonce, p.code_plaintext);
  image.signature = signer.sign(signed_region(image));
  return image;
}

}  // namespace bootshuffle
