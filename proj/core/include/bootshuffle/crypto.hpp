#pragma once

// Thin RAII layer over OpenSSL libcrypto. Nothing here is simulator-specific;
// the hardware model and the attack tooling both build on it.

#include "bootshuffle/bytes.hpp"

#include <cstdint>
#include <memory>
#include <span>

struct evp_cipher_ctx_st;
struct evp_pkey_st;

namespace bootshuffle::crypto {

enum class Direction { Encrypt, Decrypt };

/// AES-128 in raw block (ECB) mode. Not thread-safe; give each thread its own.
class Aes128 {
 public:
  explicit Aes128(const Key& key);
  Aes128(Aes128&&) noexcept;
  Aes128& operator=(Aes128&&) noexcept;
  ~Aes128();

  void rekey(const Key& key);

  Block encrypt_block(const Block& in) const;
  Block decrypt_block(const Block& in) const;

  /// `in` and `out` must be the same length, a multiple of 16. May alias.
  void encrypt(std::span<const Byte> in, std::span<Byte> out) const;
  void decrypt(std::span<const Byte> in, std::span<Byte> out) const;

 private:
  struct CtxDeleter {
    void operator()(evp_cipher_ctx_st* ctx) const noexcept;
  };
  using CtxPtr = std::unique_ptr<evp_cipher_ctx_st, CtxDeleter>;

  void ensure_decrypt() const;

  Key key_;
  CtxPtr enc_;
  mutable CtxPtr dec_;
};

/// Blockwise AES-128-ECB. Throws Error(BadLength) unless size % 16 == 0.
Bytes ecb(const Key& key, Direction dir, std::span<const Byte> data);

/// 128-bit big-endian addition of `blocks` to a counter block.
Block counter_add(Block counter, std::uint64_t blocks);

/// AES-128-CTR keystream XOR. `first_block` offsets the counter so that a
/// suffix of a stream can be processed on its own.
void ctr_xor(const Aes128& aes, const Block& nonce, std::span<Byte> data,
             std::uint64_t first_block = 0);
Bytes ctr(const Key& key, const Block& nonce, std::span<const Byte> data,
          std::uint64_t first_block = 0);

Digest sha256(std::span<const Byte> data);

/// Wipes memory in a way the optimizer may not elide.
void secure_zero(std::span<Byte> data) noexcept;

class RsaPublicKey {
 public:
  RsaPublicKey() = default;

  /// SubjectPublicKeyInfo DER.
  static RsaPublicKey from_der(std::span<const Byte> der);
  Bytes to_der() const;

  bool empty() const noexcept { return !pkey_; }

  /// RSASSA-PKCS1-v1_5 with SHA-256. Malformed input yields false.
  bool verify(std::span<const Byte> message, std::span<const Byte> signature) const;

 private:
  friend class RsaKeyPair;
  explicit RsaPublicKey(std::shared_ptr<evp_pkey_st> pkey) : pkey_(std::move(pkey)) {}
  std::shared_ptr<evp_pkey_st> pkey_;
};

/// RSA-2048 keypair, e = 65537.
class RsaKeyPair {
 public:
  static constexpr std::size_t kModulusBytes = 256;

  /// Deterministic: the primes are searched from a stream seeded by `seed`,
  /// so the same seed always produces the same keypair.
  static RsaKeyPair generate_deterministic(std::uint64_t seed);

  Bytes sign(std::span<const Byte> message) const;
  RsaPublicKey public_key() const;

 private:
  explicit RsaKeyPair(std::shared_ptr<evp_pkey_st> pkey) : pkey_(std::move(pkey)) {}
  std::shared_ptr<evp_pkey_st> pkey_;
};

}  // namespace bootshuffle::crypto
