#pragma once

// JSON reports for the CLI and golden tests. Output is deterministic: keys
// keep insertion order and numbers/hex strings have fixed formatting.
// OTP bytes and plaintext keysector keys appear only when a Secrets value is
// passed in.

#include "bootshuffle/attacks.hpp"
#include "bootshuffle/bootchain.hpp"

#include <optional>
#include <string>

namespace bootshuffle::report {

struct Secrets {
  OtpBytes otp{};
  KeysectorBlocks keysector_plaintext{};
};

std::string boot_json(const boot::BootReport& boot);

std::string scan_json(const attacks::ScanReport& scan, std::string_view mode);

std::string stage1_json(const attacks::Stage1Result& result, const attacks::NonceSearchResult& fixture,
                        const std::optional<Secrets>& secrets = std::nullopt);

std::string persist_json(const attacks::PersistPlan& plan, const std::vector<boot::BootReport>& verification_boots,
                         const std::optional<Secrets>& secrets = std::nullopt);

std::string hex32(std::uint32_t value);

}  // namespace bootshuffle::report
