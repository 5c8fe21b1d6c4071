#include "bootshuffle/crypto.hpp"

#include "bootshuffle/error.hpp"

#include <openssl/bn.h>
#include <openssl/core_names.h>
#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/param_build.h>
#include <openssl/sha.h>
#include <openssl/x509.h>

#include <algorithm>
#include <limits>

namespace bootshuffle::crypto {

namespace {

[[noreturn]] void fail(const char* what) { throw Error(Errc::CryptoFailure, what); }

void init_ecb(evp_cipher_ctx_st* ctx, const Key& key, bool encrypt) {
  if (EVP_CipherInit_ex(ctx, EVP_aes_128_ecb(), nullptr, key.data(), nullptr, encrypt ? 1 : 0) != 1)
    fail("EVP_CipherInit_ex");
  EVP_CIPHER_CTX_set_padding(ctx, 0);
}

void run_ecb(evp_cipher_ctx_st* ctx, std::span<const Byte> in, std::span<Byte> out) {
  if (in.size() != out.size() || in.size() % kBlockSize != 0)
    throw Error(Errc::BadLength, "ECB data must be a multiple of 16 bytes");
  // EVP_CipherUpdate takes an int length; feed large buffers in pieces.
  constexpr std::size_t kChunk = std::size_t{1} << 30;
  for (std::size_t off = 0; off < in.size(); off += kChunk) {
    const std::size_t n = std::min(kChunk, in.size() - off);
    int produced = 0;
    if (EVP_CipherUpdate(ctx, out.data() + off, &produced, in.data() + off, static_cast<int>(n)) != 1)
      fail("EVP_CipherUpdate");
  }
}

}  // namespace

void Aes128::CtxDeleter::operator()(evp_cipher_ctx_st* ctx) const noexcept { EVP_CIPHER_CTX_free(ctx); }

Aes128::Aes128(const Key& key) : key_(key), enc_(EVP_CIPHER_CTX_new()) {
  if (!enc_) fail("EVP_CIPHER_CTX_new");
  init_ecb(enc_.get(), key_, true);
}

Aes128::Aes128(Aes128&&) noexcept = default;
Aes128& Aes128::operator=(Aes128&&) noexcept = default;

Aes128::~Aes128() { secure_zero(key_); }

void Aes128::rekey(const Key& key) {
  key_ = key;
  if (EVP_CipherInit_ex(enc_.get(), nullptr, nullptr, key_.data(), nullptr, 1) != 1)
    fail("EVP_CipherInit_ex");
  if (dec_) init_ecb(dec_.get(), key_, false);
}

void Aes128::ensure_decrypt() const {
  if (dec_) return;
  dec_.reset(EVP_CIPHER_CTX_new());
  if (!dec_) fail("EVP_CIPHER_CTX_new");
  init_ecb(dec_.get(), key_, false);
}

Block Aes128::encrypt_block(const Block& in) const {
  Block out;
  run_ecb(enc_.get(), in, out);
  return out;
}

Block Aes128::decrypt_block(const Block& in) const {
  ensure_decrypt();
  Block out;
  run_ecb(dec_.get(), in, out);
  return out;
}

void Aes128::encrypt(std::span<const Byte> in, std::span<Byte> out) const { run_ecb(enc_.get(), in, out); }

void Aes128::decrypt(std::span<const Byte> in, std::span<Byte> out) const {
  ensure_decrypt();
  run_ecb(dec_.get(), in, out);
}

Bytes ecb(const Key& key, Direction dir, std::span<const Byte> data) {
  if (data.size() % kBlockSize != 0) throw Error(Errc::BadLength, "ECB data must be a multiple of 16 bytes");
  Aes128 aes(key);
  Bytes out(data.size());
  if (dir == Direction::Encrypt)
    aes.encrypt(data, out);
  else
    aes.decrypt(data, out);
  return out;
}

Block counter_add(Block counter, std::uint64_t blocks) {
  unsigned carry = 0;
  for (int i = 15; i >= 0; --i) {
    const unsigned add = i >= 8 ? static_cast<unsigned>((blocks >> (8 * (15 - i))) & 0xFF) : 0;
    const unsigned sum = counter[static_cast<std::size_t>(i)] + add + carry;
    counter[static_cast<std::size_t>(i)] = static_cast<Byte>(sum);
    carry = sum >> 8;
  }
  return counter;
}

void ctr_xor(const Aes128& aes, const Block& nonce, std::span<Byte> data, std::uint64_t first_block) {
  constexpr std::size_t kBatchBlocks = 1024;
  Bytes counters(kBatchBlocks * kBlockSize);
  Bytes stream(counters.size());
  Block counter = counter_add(nonce, first_block);
  for (std::size_t off = 0; off < data.size(); off += counters.size()) {
    const std::size_t n = std::min(counters.size(), data.size() - off);
    const std::size_t blocks = (n + kBlockSize - 1) / kBlockSize;
    for (std::size_t b = 0; b < blocks; ++b) {
      std::copy(counter.begin(), counter.end(), counters.begin() + static_cast<std::ptrdiff_t>(b * kBlockSize));
      counter = counter_add(counter, 1);
    }
    const std::span<Byte> ks(stream.data(), blocks * kBlockSize);
    aes.encrypt(std::span<const Byte>(counters.data(), ks.size()), ks);
    for (std::size_t i = 0; i < n; ++i) data[off + i] ^= ks[i];
  }
  secure_zero(stream);
}

Bytes ctr(const Key& key, const Block& nonce, std::span<const Byte> data, std::uint64_t first_block) {
  Bytes out(data.begin(), data.end());
  ctr_xor(Aes128(key), nonce, out, first_block);
  return out;
}

Digest sha256(std::span<const Byte> data) {
  Digest out;
  SHA256(data.data(), data.size(), out.data());
  return out;
}

void secure_zero(std::span<Byte> data) noexcept {
  if (!data.empty()) OPENSSL_cleanse(data.data(), data.size());
}

// --- RSA --------------------------------------------------------------------

namespace {

struct BnDeleter {
  void operator()(BIGNUM* bn) const noexcept { BN_clear_free(bn); }
};
using BnPtr = std::unique_ptr<BIGNUM, BnDeleter>;

struct BnCtxDeleter {
  void operator()(BN_CTX* ctx) const noexcept { BN_CTX_free(ctx); }
};

BnPtr new_bn() {
  BnPtr bn(BN_new());
  if (!bn) fail("BN_new");
  return bn;
}

std::shared_ptr<evp_pkey_st> wrap_pkey(EVP_PKEY* pkey) {
  return std::shared_ptr<evp_pkey_st>(pkey, [](EVP_PKEY* p) { EVP_PKEY_free(p); });
}

// SHA-256 in counter mode over the seed; only used to pick prime search
// starting points, so it needs to be deterministic rather than secret.
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t seed) : seed_(seed) {}

  void fill(std::span<Byte> out) {
    std::size_t off = 0;
    while (off < out.size()) {
      Bytes input(17);
      input[0] = 'R';
      for (int i = 0; i < 8; ++i) input[1 + i] = static_cast<Byte>(seed_ >> (8 * i));
      for (int i = 0; i < 8; ++i) input[9 + i] = static_cast<Byte>(counter_ >> (8 * i));
      ++counter_;
      const Digest d = sha256(input);
      const std::size_t n = std::min(d.size(), out.size() - off);
      std::copy_n(d.begin(), n, out.begin() + static_cast<std::ptrdiff_t>(off));
      off += n;
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

BnPtr search_prime(SeedStream& stream, const BIGNUM* e, BN_CTX* ctx) {
  Bytes raw(RsaKeyPair::kModulusBytes / 2);
  stream.fill(raw);
  raw.front() |= 0xC0;  // keeps p*q at full 2048 bits
  raw.back() |= 0x01;
  BnPtr p(BN_bin2bn(raw.data(), static_cast<int>(raw.size()), nullptr));
  if (!p) fail("BN_bin2bn");
  BnPtr pm1 = new_bn();
  BnPtr g = new_bn();
  for (;;) {
    if (BN_check_prime(p.get(), ctx, nullptr) == 1) {
      BN_copy(pm1.get(), p.get());
      BN_sub_word(pm1.get(), 1);
      BN_gcd(g.get(), pm1.get(), e, ctx);
      if (BN_is_one(g.get())) return p;
    }
    BN_add_word(p.get(), 2);
  }
}

}  // namespace

RsaKeyPair RsaKeyPair::generate_deterministic(std::uint64_t seed) {
  std::unique_ptr<BN_CTX, BnCtxDeleter> ctx(BN_CTX_new());
  if (!ctx) fail("BN_CTX_new");
  BnPtr e = new_bn();
  BN_set_word(e.get(), 65537);

  SeedStream stream(seed);
  BnPtr p = search_prime(stream, e.get(), ctx.get());
  BnPtr q = search_prime(stream, e.get(), ctx.get());
  while (BN_cmp(p.get(), q.get()) == 0) q = search_prime(stream, e.get(), ctx.get());
  if (BN_cmp(p.get(), q.get()) < 0) std::swap(p, q);

  BnPtr n = new_bn(), pm1 = new_bn(), qm1 = new_bn(), phi = new_bn(), g = new_bn(), lambda = new_bn(),
        rem = new_bn();
  BN_mul(n.get(), p.get(), q.get(), ctx.get());
  BN_copy(pm1.get(), p.get());
  BN_sub_word(pm1.get(), 1);
  BN_copy(qm1.get(), q.get());
  BN_sub_word(qm1.get(), 1);
  BN_mul(phi.get(), pm1.get(), qm1.get(), ctx.get());
  BN_gcd(g.get(), pm1.get(), qm1.get(), ctx.get());
  BN_div(lambda.get(), rem.get(), phi.get(), g.get(), ctx.get());

  BnPtr d(BN_mod_inverse(nullptr, e.get(), lambda.get(), ctx.get()));
  if (!d) fail("BN_mod_inverse(d)");
  BnPtr dmp1 = new_bn(), dmq1 = new_bn();
  BN_mod(dmp1.get(), d.get(), pm1.get(), ctx.get());
  BN_mod(dmq1.get(), d.get(), qm1.get(), ctx.get());
  BnPtr iqmp(BN_mod_inverse(nullptr, q.get(), p.get(), ctx.get()));
  if (!iqmp) fail("BN_mod_inverse(iqmp)");

  std::unique_ptr<OSSL_PARAM_BLD, decltype(&OSSL_PARAM_BLD_free)> bld(OSSL_PARAM_BLD_new(), &OSSL_PARAM_BLD_free);
  if (!bld) fail("OSSL_PARAM_BLD_new");
  const bool pushed = OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_N, n.get()) &&
                      OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_E, e.get()) &&
                      OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_D, d.get()) &&
                      OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_FACTOR1, p.get()) &&
                      OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_FACTOR2, q.get()) &&
                      OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_EXPONENT1, dmp1.get()) &&
                      OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_EXPONENT2, dmq1.get()) &&
                      OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_COEFFICIENT1, iqmp.get());
  if (!pushed) fail("OSSL_PARAM_BLD_push_BN");
  std::unique_ptr<OSSL_PARAM, decltype(&OSSL_PARAM_free)> params(OSSL_PARAM_BLD_to_param(bld.get()),
                                                                 &OSSL_PARAM_free);
  if (!params) fail("OSSL_PARAM_BLD_to_param");

  std::unique_ptr<EVP_PKEY_CTX, decltype(&EVP_PKEY_CTX_free)> pctx(EVP_PKEY_CTX_new_from_name(nullptr, "RSA", nullptr),
                                                                   &EVP_PKEY_CTX_free);
  EVP_PKEY* pkey = nullptr;
  if (!pctx || EVP_PKEY_fromdata_init(pctx.get()) != 1 ||
      EVP_PKEY_fromdata(pctx.get(), &pkey, EVP_PKEY_KEYPAIR, params.get()) != 1)
    fail("EVP_PKEY_fromdata");
  return RsaKeyPair(wrap_pkey(pkey));
}

Bytes RsaKeyPair::sign(std::span<const Byte> message) const {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> md(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!md || EVP_DigestSignInit(md.get(), nullptr, EVP_sha256(), nullptr, pkey_.get()) != 1)
    fail("EVP_DigestSignInit");
  std::size_t len = 0;
  if (EVP_DigestSign(md.get(), nullptr, &len, message.data(), message.size()) != 1) fail("EVP_DigestSign");
  Bytes sig(len);
  if (EVP_DigestSign(md.get(), sig.data(), &len, message.data(), message.size()) != 1) fail("EVP_DigestSign");
  sig.resize(len);
  return sig;
}

RsaPublicKey RsaKeyPair::public_key() const {
  RsaPublicKey tmp(pkey_);
  return RsaPublicKey::from_der(tmp.to_der());
}

RsaPublicKey RsaPublicKey::from_der(std::span<const Byte> der) {
  const unsigned char* p = der.data();
  EVP_PKEY* pkey = d2i_PUBKEY(nullptr, &p, static_cast<long>(der.size()));
  if (!pkey) throw Error(Errc::CryptoFailure, "malformed public key DER");
  return RsaPublicKey(wrap_pkey(pkey));
}

Bytes RsaPublicKey::to_der() const {
  if (!pkey_) throw Error(Errc::CryptoFailure, "empty public key");
  const int len = i2d_PUBKEY(pkey_.get(), nullptr);
  if (len <= 0) fail("i2d_PUBKEY");
  Bytes out(static_cast<std::size_t>(len));
  unsigned char* p = out.data();
  i2d_PUBKEY(pkey_.get(), &p);
  return out;
}

bool RsaPublicKey::verify(std::span<const Byte> message, std::span<const Byte> signature) const {
  if (!pkey_) return false;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> md(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!md || EVP_DigestVerifyInit(md.get(), nullptr, EVP_sha256(), nullptr, pkey_.get()) != 1) return false;
  return EVP_DigestVerify(md.get(), signature.data(), signature.size(), message.data(), message.size()) == 1;
}

}  // namespace bootshuffle::crypto
