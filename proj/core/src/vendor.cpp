#include "bootshuffle/vendor.hpp"

#include "bootshuffle/error.hpp"

#include <random>
#include <string>

namespace bootshuffle {

namespace {

Block label_block(std::string_view domain, std::string_view label) {
  Bytes input(domain.begin(), domain.end());
  input.push_back(0);
  input.insert(input.end(), label.begin(), label.end());
  return to_array<kBlockSize>(crypto::sha256(input));
}

void fill_random(std::mt19937_64& rng, std::span<Byte> out) {
  for (std::size_t i = 0; i < out.size(); i += 8) {
    const std::uint64_t v = rng();
    for (std::size_t j = 0; j < 8 && i + j < out.size(); ++j) out[i + j] = static_cast<Byte>(v >> (8 * j));
  }
}

}  // namespace

std::optional<std::uint32_t> release_section_size(std::string_view version_label) {
  for (const ReleaseInfo& r : kReleases)
    if (r.version_label == version_label) return r.section_size;
  return std::nullopt;
}

VendorWorld VendorWorld::generate(std::uint64_t seed) {
  VendorWorld world(seed, crypto::RsaKeyPair::generate_deterministic(seed));
  std::mt19937_64 rng(seed ^ 0x6B65797365637472ULL);
  for (Key& k : world.keysector_) fill_random(rng, k);
  fill_random(rng, world.rodata_key_);
  return world;
}

const Key& VendorWorld::key(unsigned key_number) const {
  if (key_number < 1 || key_number > kKeysectorKeyCount)
    throw Error(Errc::KeyIndexOutOfRange, "key #" + std::to_string(key_number));
  return keysector_[key_number - 1];
}

Block VendorWorld::key1_check() const { return crypto::Aes128(key(1)).encrypt_block(Block{}); }

FirmImage VendorWorld::build_release(const ReleaseOptions& o) const {
  const LoaderVariant variant = o.loader_variant.value_or(loader_for_version(o.version_label));
  FirmBuildParams p;
  p.version_label = o.version_label;
  p.loader_variant = variant;
  p.clear_after_decrypt = variant == LoaderVariant::V1 &&
                          o.clear_after_decrypt.value_or(clears_after_decrypt_for_version(o.version_label));
  p.code_plaintext = o.code ? *o.code : synthetic_code(o.version_label, o.section_size, o.entry_offset);
  p.section_load_addr = kDefaultSectionLoadAddr;
  p.entrypoint = kDefaultSectionLoadAddr + o.entry_offset;
  p.firmware_key_index = variant == LoaderVariant::V1 ? 1 : 2;
  p.firmware_key = key(p.firmware_key_index);
  p.ctr_nonce = o.ctr_nonce.value_or(release_nonce(o.version_label));
  p.key1_check = key1_check();
  p.rodata_key = rodata_key_;
  return build_firm(p, signer_);
}

FirmImage VendorWorld::build_release(std::string_view version_label) const {
  const auto size = release_section_size(version_label);
  if (!size) throw Error(Errc::InvalidArgument, "unknown fixture release '" + std::string(version_label) + "'");
  ReleaseOptions o;
  o.version_label = std::string(version_label);
  o.section_size = *size;
  return build_release(o);
}

Block release_nonce(std::string_view version_label) { return label_block("firm-ctr", version_label); }

Bytes synthetic_code(std::string_view version_label, std::uint32_t size, std::uint32_t entry_offset) {
  if (size % 4 != 0 || entry_offset % 4 != 0) throw Error(Errc::BadAlignment, "code size and entry must be word aligned");
  if (std::uint64_t{entry_offset} + 8 > size) throw Error(Errc::BadEntrypoint, "entry stub does not fit in the section");
  const Block s = label_block("firm-code", version_label);
  std::seed_seq seq(s.begin(), s.end());
  std::mt19937_64 rng(seq);
  Bytes code(size);
  fill_random(rng, code);
  store_le32(std::span<Byte>(code).subspan(entry_offset), host_call::kTrapWord);
  store_le32(std::span<Byte>(code).subspan(entry_offset + 4), host_call::kFirmwareEntry);
  return code;
}

OtpBytes generate_otp(std::uint64_t console_seed) {
  std::mt19937_64 rng(console_seed ^ 0x4F54502D4F54502DULL);
  OtpBytes otp;
  fill_random(rng, otp);
  return otp;
}

KeysectorBlocks encrypt_keysector(const KeysectorBlocks& plaintext, const Digest& otp_hash) {
  crypto::Aes128 aes(derive_loader_key(otp_hash));
  KeysectorBlocks out;
  for (unsigned i = 0; i < kKeysectorKeyCount; ++i) out[i] = aes.encrypt_block(plaintext[i]);
  return out;
}

Console provision_console(const VendorWorld& world, std::uint64_t console_seed, const ProvisionOptions& options) {
  const OtpBytes otp = generate_otp(console_seed);
  NandImage nand;
  nand.set_keysector(encrypt_keysector(world.keysector_plaintext(), crypto::sha256(otp)));

  BootRomConfig boot = options.boot;
  boot.vendor_key = world.public_key();
  Console console(otp, std::move(nand), std::move(boot));

  const Bytes firm = serialize_firm(world.build_release(options.firmware));
  console.install_firm(FirmSlot::Firm0, firm);
  console.install_firm(FirmSlot::Firm1, firm);
  console.reboot(RebootMode::Cold);
  return console;
}

}  // namespace bootshuffle
