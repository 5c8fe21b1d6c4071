#include "bootshuffle/error.hpp"
#include "bootshuffle/firm.hpp"
#include "bootshuffle/vendor.hpp"

#include "oracle/reference.hpp"
#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace bootshuffle;

namespace {

template <class F>
Errc error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no bootshuffle::Error thrown";
  return Errc::InvalidArgument;
}

FirmBuildParams small_params(std::mt19937_64& rng) {
  FirmBuildParams p;
  p.version_label = "test";
  p.code_plaintext = fixtures::random_bytes(rng, 0x400);
  p.firmware_key = fixtures::random_block(rng);
  p.ctr_nonce = fixtures::random_block(rng);
  p.entrypoint = kDefaultSectionLoadAddr + 0x20;
  return p;
}

}  // namespace

TEST(FirmFormat, SerializeParseRoundTrip) {
  const FirmImage img = fixtures::world().build_release("10.2.0");
  const Bytes bytes = serialize_firm(img);
  EXPECT_EQ(bytes.size(), img.header.container_size());
  EXPECT_EQ(parse_firm(bytes), img);
  EXPECT_EQ(parse_header(serialize_header(img.header)), img.header);
}

TEST(FirmFormat, HeaderFieldOffsets) {
  const FirmImage img = fixtures::world().build_release("9.5.0");
  const Bytes h = serialize_header(img.header);
  ASSERT_EQ(h.size(), kFirmHeaderSize);
  EXPECT_EQ(std::string(h.begin(), h.begin() + 4), "FIRM");
  EXPECT_EQ(std::string(reinterpret_cast<const char*>(&h[4])), "9.5.0");
  EXPECT_EQ(h[0x0C], 1);  // loader v1
  EXPECT_EQ(h[0x0D] & 1, 1);  // 9.5.0 clears keyslot 0x11
  EXPECT_EQ(load_le32(std::span(h).subspan(0x10, 4)), img.header.entrypoint);
  EXPECT_EQ(load_le32(std::span(h).subspan(0x18, 4)), 0x58000u);
  EXPECT_EQ(h[0x2C], 1);
}

TEST(FirmFormat, BadMagicAndTruncation) {
  Bytes bytes = serialize_firm(fixtures::world().build_release("10.2.0"));
  Bytes wrong = bytes;
  wrong[0] = 'X';
  EXPECT_EQ(error_of([&] { parse_firm(wrong); }), Errc::BadMagic);
  EXPECT_EQ(error_of([&] { parse_firm(std::span(bytes).first(0x20)); }), Errc::TruncatedImage);
  EXPECT_EQ(error_of([&] { parse_firm(std::span(bytes).first(bytes.size() - 1)); }), Errc::TruncatedImage);
  Bytes bad_variant = bytes;
  bad_variant[0x0C] = 7;
  EXPECT_EQ(error_of([&] { parse_firm(bad_variant); }), Errc::CorruptImage);
}

TEST(FirmFormat, TrailingPayloadIsIgnored) {
  const FirmImage img = fixtures::world().build_release("10.2.0");
  Bytes bytes = serialize_firm(img);
  const Bytes plain = bytes;
  bytes.resize(bytes.size() + 0x400, 0xA5);
  EXPECT_EQ(parse_firm(bytes), parse_firm(plain));
}

TEST(FirmSignature, ValidTamperedAndAppended) {
  const auto pk = fixtures::world().public_key();
  const FirmImage img = fixtures::world().build_release("10.2.0");
  EXPECT_TRUE(verify_signature(img, pk));

  FirmImage flipped = img;
  flipped.section_ciphertext[0x1234] ^= 1;
  EXPECT_FALSE(verify_signature(flipped, pk));

  FirmImage header_flip = img;
  header_flip.header.entrypoint += 4;
  EXPECT_FALSE(verify_signature(header_flip, pk));

  Bytes appended = serialize_firm(img);
  appended.resize(appended.size() + 0x190, 0);
  appended.insert(appended.end(), {0xDE, 0xAD, 0xBE, 0xEF});
  EXPECT_TRUE(verify_signature(appended, pk));

  EXPECT_FALSE(verify_signature(Bytes{1, 2, 3}, pk));
}

TEST(FirmBuild, CorrectKeyRecoversCodeWrongKeyDoesNot) {
  std::mt19937_64 rng(41);
  const FirmBuildParams p = small_params(rng);
  const FirmImage img = build_firm(p, fixtures::world().signer());
  EXPECT_EQ(firm_ctr_crypt(p.firmware_key, p.ctr_nonce, img.section_ciphertext), p.code_plaintext);
  EXPECT_EQ(img.section_ciphertext, oracle::ref_ctr(p.firmware_key, p.ctr_nonce, p.code_plaintext));

  const Key other = fixtures::random_block(rng);
  const Bytes wrong = firm_ctr_crypt(other, p.ctr_nonce, img.section_ciphertext);
  // Oracle: wrong = pt ^ ks_right ^ ks_other.
  const auto ks_right = oracle::RefAes128(p.firmware_key).encrypt(p.ctr_nonce);
  const auto ks_other = oracle::RefAes128(other).encrypt(p.ctr_nonce);
  for (int i = 0; i < 16; ++i) EXPECT_EQ(wrong[i], p.code_plaintext[i] ^ ks_right[i] ^ ks_other[i]);
  EXPECT_NE(load_le32(std::span(wrong).first(4)), load_le32(std::span(p.code_plaintext).first(4)));
}

TEST(FirmBuild, Preconditions) {
  std::mt19937_64 rng(42);
  FirmBuildParams p = small_params(rng);
  p.entrypoint = kDefaultSectionLoadAddr + 0x400;
  EXPECT_EQ(error_of([&] { build_firm(p, fixtures::world().signer()); }), Errc::BadEntrypoint);
  p.entrypoint = kDefaultSectionLoadAddr - 4;
  EXPECT_EQ(error_of([&] { build_firm(p, fixtures::world().signer()); }), Errc::BadEntrypoint);
  p = small_params(rng);
  p.code_plaintext.pop_back();
  EXPECT_EQ(error_of([&] { build_firm(p, fixtures::world().signer()); }), Errc::BadAlignment);
  p = small_params(rng);
  p.version_label = "123456789";
  EXPECT_EQ(error_of([&] { build_firm(p, fixtures::world().signer()); }), Errc::InvalidArgument);
}

TEST(FirmCtr, MatchesEngineAndIsAnInvolution) {
  std::mt19937_64 rng(43);
  const Key key = fixtures::random_block(rng);
  const Block n1 = fixtures::random_block(rng), n2 = fixtures::random_block(rng);
  const Bytes data = fixtures::random_bytes(rng, 999);
  AesEngine aes;
  aes.set_keyslot(0x11, key);
  EXPECT_EQ(firm_ctr_crypt(key, n1, data, 3), aes.ctr(0x11, n1, data, 3));
  EXPECT_EQ(firm_ctr_crypt(key, n1, firm_ctr_crypt(key, n1, data)), data);
  const Bytes z(16);
  EXPECT_NE(firm_ctr_crypt(key, n1, z), firm_ctr_crypt(key, n2, z));
}

TEST(Releases, VersionMapping) {
  EXPECT_EQ(loader_for_version("8.1.0"), LoaderVariant::V1);
  EXPECT_EQ(loader_for_version("9.5.0"), LoaderVariant::V1);
  EXPECT_EQ(loader_for_version("9.6.0"), LoaderVariant::V2);
  EXPECT_EQ(loader_for_version("10.2.0"), LoaderVariant::V2);
  EXPECT_TRUE(clears_after_decrypt_for_version("9.5.0"));
  EXPECT_FALSE(clears_after_decrypt_for_version("8.1.0"));
  EXPECT_GT(*release_section_size("8.1.0"), *release_section_size("10.2.0"));
  for (const ReleaseInfo& r : kReleases) {
    EXPECT_LE(*release_section_size(r.version_label), *release_section_size("8.1.0"));
    EXPECT_GE(*release_section_size(r.version_label), *release_section_size("10.2.0"));
  }
}

TEST(Releases, NoncesDifferPerVersion) {
  EXPECT_NE(release_nonce("10.0.0"), release_nonce("10.2.0"));
  EXPECT_EQ(fixtures::world().build_release("10.0.0").header.ctr_nonce, release_nonce("10.0.0"));
}
