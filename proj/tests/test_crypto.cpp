#include "bootshuffle/crypto.hpp"
#include "bootshuffle/error.hpp"

#include "oracle/reference.hpp"
#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <random>
#include <string>

using namespace bootshuffle;

namespace {

Bytes ascii(std::string_view s) { return Bytes(s.begin(), s.end()); }

}  // namespace

TEST(ReferenceOracle, Fips197AppendixC1) {
  const oracle::Block key = block_from_hex("000102030405060708090a0b0c0d0e0f");
  const oracle::Block pt = block_from_hex("00112233445566778899aabbccddeeff");
  EXPECT_EQ(to_hex(oracle::RefAes128(key).encrypt(pt)), "69c4e0d86a7b0430d8cdb78070b4c55a");
}

TEST(ReferenceOracle, Sha256Abc) {
  EXPECT_EQ(to_hex(oracle::ref_sha256(ascii("abc"))),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(to_hex(oracle::ref_sha256({})), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Aes128, Fips197Vector) {
  const Key key = block_from_hex("000102030405060708090a0b0c0d0e0f");
  const Block pt = block_from_hex("00112233445566778899aabbccddeeff");
  crypto::Aes128 aes(key);
  EXPECT_EQ(to_hex(aes.encrypt_block(pt)), "69c4e0d86a7b0430d8cdb78070b4c55a");
  EXPECT_EQ(aes.decrypt_block(aes.encrypt_block(pt)), pt);
}

TEST(Aes128, MatchesReferenceOnRandomInputs) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const Key key = fixtures::random_block(rng);
    const Block pt = fixtures::random_block(rng);
    EXPECT_EQ(crypto::Aes128(key).encrypt_block(pt), oracle::RefAes128(key).encrypt(pt));
  }
}

TEST(Aes128, RekeyChangesCipher) {
  const Key a = filled_block(1), b = filled_block(2);
  crypto::Aes128 aes(a);
  const Block before = aes.encrypt_block(Block{});
  aes.rekey(b);
  EXPECT_NE(aes.encrypt_block(Block{}), before);
  EXPECT_EQ(aes.encrypt_block(Block{}), oracle::RefAes128(b).encrypt(Block{}));
}

TEST(Ecb, RoundTripAndEqualBlocks) {
  std::mt19937_64 rng(3);
  const Key key = fixtures::random_block(rng);
  Bytes data = fixtures::random_bytes(rng, 64);
  std::copy_n(data.begin(), 16, data.begin() + 16);
  const Bytes ct = crypto::ecb(key, crypto::Direction::Encrypt, data);
  EXPECT_TRUE(std::equal(ct.begin(), ct.begin() + 16, ct.begin() + 16));
  EXPECT_EQ(crypto::ecb(key, crypto::Direction::Decrypt, ct), data);
}

TEST(Ecb, RejectsPartialBlocks) {
  try {
    crypto::ecb(Key{}, crypto::Direction::Encrypt, Bytes(15));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BadLength);
  }
}

TEST(CounterAdd, CarriesAcrossAll128Bits) {
  Block c{};
  c.fill(0xFF);
  EXPECT_EQ(crypto::counter_add(c, 1), Block{});
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const Block b = fixtures::random_block(rng);
    const std::uint64_t n = rng();
    EXPECT_EQ(crypto::counter_add(b, n), oracle::counter_plus(b, n));
  }
}

TEST(Ctr, MatchesReferenceIncludingOffsets) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 20; ++i) {
    const Key key = fixtures::random_block(rng);
    const Block nonce = fixtures::random_block(rng);
    const Bytes data = fixtures::random_bytes(rng, 1 + rng() % 5000);
    const std::uint64_t first = rng() % 1000;
    EXPECT_EQ(crypto::ctr(key, nonce, data, first), oracle::ref_ctr(key, nonce, data, first));
  }
}

TEST(Ctr, InvolutionEmptyAndNonceSensitivity) {
  std::mt19937_64 rng(9);
  const Key key = fixtures::random_block(rng);
  const Block n1 = fixtures::random_block(rng), n2 = fixtures::random_block(rng);
  const Bytes data = fixtures::random_bytes(rng, 100);
  EXPECT_EQ(crypto::ctr(key, n1, crypto::ctr(key, n1, data)), data);
  EXPECT_TRUE(crypto::ctr(key, n1, {}).empty());
  EXPECT_NE(crypto::ctr(key, n1, data), crypto::ctr(key, n2, data));
}

TEST(Ctr, SuffixProcessedAloneMatchesWholeStream) {
  std::mt19937_64 rng(10);
  const Key key = fixtures::random_block(rng);
  const Block nonce = fixtures::random_block(rng);
  const Bytes data = fixtures::random_bytes(rng, 16 * 40);
  const Bytes whole = crypto::ctr(key, nonce, data);
  const Bytes tail = crypto::ctr(key, nonce, std::span(data).subspan(16 * 13), 13);
  EXPECT_TRUE(std::equal(tail.begin(), tail.end(), whole.begin() + 16 * 13));
}

TEST(Sha256, MatchesStandardAndReference) {
  EXPECT_EQ(to_hex(crypto::sha256(ascii("abc"))),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(to_hex(crypto::sha256(ascii("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"))),
            "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
  std::mt19937_64 rng(12);
  for (std::size_t n : {0u, 1u, 55u, 56u, 63u, 64u, 65u, 1000u}) {
    const Bytes data = fixtures::random_bytes(rng, n);
    EXPECT_EQ(crypto::sha256(data), oracle::ref_sha256(data)) << n;
  }
}

TEST(Rsa, SignVerifyAndTamper) {
  const auto& signer = fixtures::world().signer();
  const Bytes msg = ascii("signed region");
  const Bytes sig = signer.sign(msg);
  ASSERT_EQ(sig.size(), crypto::RsaKeyPair::kModulusBytes);
  const crypto::RsaPublicKey pk = signer.public_key();
  EXPECT_TRUE(pk.verify(msg, sig));
  Bytes bad = msg;
  bad[0] ^= 1;
  EXPECT_FALSE(pk.verify(bad, sig));
  Bytes bad_sig = sig;
  bad_sig[100] ^= 0x80;
  EXPECT_FALSE(pk.verify(msg, bad_sig));
  EXPECT_FALSE(pk.verify(msg, Bytes(3)));
}

TEST(Rsa, DeterministicFromSeedAndDerRoundTrip) {
  const crypto::RsaPublicKey a = fixtures::world().public_key();
  const crypto::RsaPublicKey b = crypto::RsaKeyPair::generate_deterministic(fixtures::world().seed()).public_key();
  EXPECT_EQ(a.to_der(), b.to_der());
  const crypto::RsaPublicKey c = crypto::RsaPublicKey::from_der(a.to_der());
  const Bytes msg = ascii("x");
  EXPECT_TRUE(c.verify(msg, fixtures::world().signer().sign(msg)));
  const crypto::RsaPublicKey other = crypto::RsaKeyPair::generate_deterministic(99).public_key();
  EXPECT_NE(other.to_der(), a.to_der());
  EXPECT_FALSE(other.verify(msg, fixtures::world().signer().sign(msg)));
}

TEST(Hex, RoundTripAndRejectsGarbage) {
  std::mt19937_64 rng(1);
  const Bytes b = fixtures::random_bytes(rng, 33);
  EXPECT_EQ(from_hex(to_hex(b)), b);
  EXPECT_THROW(from_hex("abc"), Error);
  EXPECT_THROW(from_hex("zz"), Error);
  EXPECT_THROW(block_from_hex("00"), Error);
}
