#pragma once

#include "bootshuffle/console.hpp"
#include "bootshuffle/vendor.hpp"

#include "../oracle/reference.hpp"

#include <random>

namespace fixtures {

/// One vendor world per test process; RSA key generation is the slow part.
inline const bootshuffle::VendorWorld& world() {
  static const bootshuffle::VendorWorld w = bootshuffle::VendorWorld::generate();
  return w;
}

inline bootshuffle::Console console(std::uint64_t seed, const bootshuffle::ProvisionOptions& options = {}) {
  return bootshuffle::provision_console(world(), seed, options);
}

inline bootshuffle::Block random_block(std::mt19937_64& rng) {
  bootshuffle::Block b{};
  for (auto& x : b) x = static_cast<bootshuffle::Byte>(rng());
  return b;
}

inline bootshuffle::Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
  bootshuffle::Bytes b(n);
  for (auto& x : b) x = static_cast<bootshuffle::Byte>(rng());
  return b;
}

inline oracle::Digest otp_hash_oracle(const bootshuffle::OtpBytes& otp) { return oracle::ref_sha256(otp); }

}  // namespace fixtures
